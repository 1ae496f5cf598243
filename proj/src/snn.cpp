#include "nase/snn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include <json.hpp>

#include "nase/error.hpp"
#include "nase/report.hpp"
#include "nase/seed.hpp"

namespace nase {

void validate_lif_params(const LifParams& p) {
  if (!(p.beta > 0.0 && p.beta < 1.0)) {
    throw ConfigError("beta must be in (0, 1), got " + std::to_string(p.beta));
  }
  if (!(p.threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (p.t_steps < 1) throw ConfigError("t_steps must be >= 1");
  if (!(p.surrogate_slope > 0.0)) throw ConfigError("surrogate_slope must be positive");
}

LifStep lif_step(double v, double current, const LifParams& p) {
  const double u = p.beta * v + current;
  const double spike = u >= p.threshold ? 1.0 : 0.0;
  const double v_next =
      p.reset == LifParams::Reset::kSubtract ? u - p.threshold * spike : u * (1.0 - spike);
  return {v_next, spike};
}

double spike_rate(const SpikeTrace& trace) {
  if (!(trace.duration_s > 0.0)) throw DomainError("spike_rate: duration must be positive");
  return trace.total_spikes / trace.duration_s;
}

SpikingNet make_net(std::vector<int> layer_sizes, const LifParams& lif, uint64_t seed) {
  validate_lif_params(lif);
  if (layer_sizes.empty()) throw ConfigError("layer_sizes must not be empty");
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("every layer size must be >= 1");
  }

  SpikingNet net;
  net.layer_sizes = std::move(layer_sizes);
  net.lif = lif;
  net.init_seed = seed;
  net.input_scale = 0.5 * lif.threshold;  // unit-magnitude bin drives half threshold
  net.output_scale = 1.0;
  net.weights.reserve(net.layer_sizes.size() - 1);
  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int rows = net.layer_sizes[l + 1];
    const int cols = net.layer_sizes[l];
    std::mt19937_64 rng(derive_seed(seed, l));
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / cols));
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = gauss(rng);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

void validate_net(const SpikingNet& net) {
  validate_lif_params(net.lif);
  if (net.layer_sizes.empty()) throw ConfigError("net has no layers");
  if (net.weights.size() + 1 != net.layer_sizes.size()) {
    throw ShapeError("net has " + std::to_string(net.weights.size()) + " weight blocks for " +
                     std::to_string(net.layer_sizes.size()) + " layers");
  }
  for (size_t l = 0; l < net.weights.size(); ++l) {
    if (net.weights[l].rows() != net.layer_sizes[l + 1] ||
        net.weights[l].cols() != net.layer_sizes[l]) {
      throw ShapeError("weight block " + std::to_string(l) + " has wrong shape");
    }
    if (!net.weights[l].allFinite()) throw DomainError("weights contain non-finite values");
  }
  if (!(net.input_scale > 0.0) || !(net.output_scale > 0.0)) {
    throw ConfigError("input/output scales must be positive");
  }
}

SpikeTrain encode_rate(const Eigen::VectorXd& mag_frame, const SpikingNet& net,
                       double duration_s) {
  validate_lif_params(net.lif);
  if (!(duration_s > 0.0)) throw DomainError("encode_rate: duration must be positive");
  if (!mag_frame.allFinite() || (mag_frame.array() < 0.0).any()) {
    throw DomainError("encode_rate: magnitudes must be finite and nonnegative");
  }
  const LifParams& p = net.lif;
  SpikeTrain train;
  train.duration_s = duration_s;
  train.spikes.resize(p.t_steps, mag_frame.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mag_frame.size());
  const Eigen::VectorXd current = net.input_scale * mag_frame;
  for (int t = 0; t < p.t_steps; ++t) {
    const Eigen::ArrayXd u = p.beta * v.array() + current.array();
    const Eigen::ArrayXd s = (u >= p.threshold).cast<double>();
    v = (p.reset == LifParams::Reset::kSubtract ? u - p.threshold * s : u * (1.0 - s)).matrix();
    train.spikes.row(t) = s.transpose();
  }
  return train;
}

namespace {

struct BatchResult {
  Eigen::MatrixXd output;             // out_bins x batch
  std::vector<long> layer_counts;
};

// Hard binary-spike dynamics over a batch of frames (columns).
BatchResult hard_forward_batch(const SpikingNet& net, const Eigen::MatrixXd& frames) {
  validate_net(net);
  if (frames.rows() != net.layer_sizes.front()) {
    throw ShapeError("forward: frame has " + std::to_string(frames.rows()) +
                     " bins, net expects " + std::to_string(net.layer_sizes.front()));
  }
  if (!frames.allFinite() || (frames.array() < 0.0).any()) {
    throw DomainError("forward: magnitudes must be finite and nonnegative");
  }

  const LifParams& p = net.lif;
  const size_t num_layers = net.layer_sizes.size();
  const Eigen::Index batch = frames.cols();

  std::vector<Eigen::MatrixXd> v(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    v[l] = Eigen::MatrixXd::Zero(net.layer_sizes[l], batch);
  }
  std::vector<double> counts(num_layers, 0.0);
  Eigen::MatrixXd out_counts = Eigen::MatrixXd::Zero(net.layer_sizes.back(), batch);

  const Eigen::MatrixXd drive = net.input_scale * frames;
  Eigen::MatrixXd spikes;
  for (int t = 0; t < p.t_steps; ++t) {
    for (size_t l = 0; l < num_layers; ++l) {
      const Eigen::MatrixXd current = l == 0 ? drive : net.weights[l - 1] * spikes;
      const Eigen::ArrayXXd u = p.beta * v[l].array() + current.array();
      const Eigen::ArrayXXd s = (u >= p.threshold).cast<double>();
      v[l] = (p.reset == LifParams::Reset::kSubtract ? u - p.threshold * s : u * (1.0 - s))
                 .matrix();
      spikes = s.matrix();
      counts[l] += s.sum();
    }
    out_counts += spikes;
  }

  BatchResult result;
  result.output = (net.output_scale / p.t_steps) * out_counts;
  result.layer_counts.reserve(num_layers);
  for (double c : counts) result.layer_counts.push_back(std::llround(c));
  return result;
}

SpikeTrace trace_from_counts(const std::vector<long>& counts, double duration_s) {
  SpikeTrace trace;
  trace.per_layer_counts = counts;
  trace.total_spikes = std::accumulate(counts.begin(), counts.end(), 0L);
  trace.duration_s = duration_s;
  return trace;
}

// z/(1+|z|) smoothing of the spike threshold; the antiderivative of the
// surrogate below.
Eigen::ArrayXXd relaxed_activation(const Eigen::ArrayXXd& u, const LifParams& p) {
  const Eigen::ArrayXXd z = p.surrogate_slope * (u - p.threshold);
  return 0.5 + z / (1.0 + z.abs());
}

// slope / (1 + slope*|u - threshold|)^2
Eigen::ArrayXXd surrogate_derivative(const Eigen::ArrayXXd& u, const LifParams& p) {
  const Eigen::ArrayXXd denom = 1.0 + p.surrogate_slope * (u - p.threshold).abs();
  return p.surrogate_slope / denom.square();
}

struct RelaxedTape {
  // u[l][t]: membrane drive of layer l at step t, layer_sizes[l] x batch
  std::vector<std::vector<Eigen::ArrayXXd>> u;
  Eigen::MatrixXd output;
};

RelaxedTape relaxed_forward_tape(const SpikingNet& net, const Eigen::MatrixXd& frames,
                                 bool keep_tape) {
  validate_net(net);
  if (frames.rows() != net.layer_sizes.front()) {
    throw ShapeError("forward_relaxed: frame size does not match the input layer");
  }
  if (!frames.allFinite()) throw DomainError("forward_relaxed: non-finite input");

  const LifParams& p = net.lif;
  const size_t num_layers = net.layer_sizes.size();
  const Eigen::Index batch = frames.cols();

  RelaxedTape tape;
  if (keep_tape) {
    tape.u.resize(num_layers);
    for (auto& layer : tape.u) layer.resize(p.t_steps);
  }

  std::vector<Eigen::ArrayXXd> v(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    v[l] = Eigen::ArrayXXd::Zero(net.layer_sizes[l], batch);
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(net.layer_sizes.back(), batch);

  const Eigen::MatrixXd drive = net.input_scale * frames;
  Eigen::MatrixXd act;
  for (int t = 0; t < p.t_steps; ++t) {
    for (size_t l = 0; l < num_layers; ++l) {
      const Eigen::MatrixXd current = l == 0 ? drive : net.weights[l - 1] * act;
      const Eigen::ArrayXXd u = p.beta * v[l] + current.array();
      const Eigen::ArrayXXd a = relaxed_activation(u, p);
      v[l] = p.reset == LifParams::Reset::kSubtract ? u - p.threshold * a : u * (1.0 - a);
      act = a.matrix();
      if (keep_tape) tape.u[l][t] = u;
    }
    acc += act;
  }
  tape.output = (net.output_scale / p.t_steps) * acc;
  return tape;
}

struct Gradients {
  Eigen::MatrixXd input;                 // d(loss_j)/d(frame_j), per column
  std::vector<Eigen::MatrixXd> weights;  // d(mean loss)/dW
  double mean_loss = 0.0;
};

// Reverse sweep through the relaxed dynamics. Each column's loss is the mean
// squared error of that column; weight gradients are for the batch mean.
Gradients relaxed_backprop(const SpikingNet& net, const Eigen::MatrixXd& frames,
                           const Eigen::MatrixXd& targets, bool want_input,
                           bool want_weights) {
  if (targets.rows() != net.layer_sizes.back() || targets.cols() != frames.cols()) {
    throw ShapeError("gradient: target shape does not match the output layer");
  }
  if (!targets.allFinite()) throw DomainError("gradient: non-finite target");

  const LifParams& p = net.lif;
  const size_t num_layers = net.layer_sizes.size();
  const Eigen::Index batch = frames.cols();
  const int out_bins = net.layer_sizes.back();

  RelaxedTape tape = relaxed_forward_tape(net, frames, /*keep_tape=*/true);

  Gradients grads;
  const Eigen::MatrixXd residual = tape.output - targets;
  grads.mean_loss = residual.squaredNorm() / static_cast<double>(out_bins * batch);
  if (want_weights) {
    grads.weights.resize(net.weights.size());
    for (size_t l = 0; l < net.weights.size(); ++l) {
      grads.weights[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
    }
  }

  // dL_j/da(last,t) is constant over t
  const Eigen::MatrixXd d_output =
      (2.0 / out_bins) * (net.output_scale / p.t_steps) * residual;

  std::vector<Eigen::MatrixXd> dc_upper;  // d loss / d current of layer l+1, per step
  for (size_t li = num_layers; li-- > 0;) {
    Eigen::ArrayXXd lambda = Eigen::ArrayXXd::Zero(net.layer_sizes[li], batch);
    std::vector<Eigen::MatrixXd> dc(p.t_steps);
    for (int t = p.t_steps - 1; t >= 0; --t) {
      const Eigen::ArrayXXd& u = tape.u[li][t];
      const Eigen::ArrayXXd sg = surrogate_derivative(u, p);
      const Eigen::ArrayXXd ga = (li + 1 == num_layers)
                                     ? d_output.array()
                                     : (net.weights[li].transpose() * dc_upper[t]).array();
      Eigen::ArrayXXd du;
      if (p.reset == LifParams::Reset::kSubtract) {
        du = ga * sg + lambda * (1.0 - p.threshold * sg);
      } else {
        const Eigen::ArrayXXd a = relaxed_activation(u, p);
        du = ga * sg + lambda * ((1.0 - a) - u * sg);
      }
      dc[t] = du.matrix();
      lambda = p.beta * du;
    }

    if (li > 0) {
      if (want_weights) {
        Eigen::MatrixXd& dw = grads.weights[li - 1];
        for (int t = 0; t < p.t_steps; ++t) {
          dw.noalias() += dc[t] * relaxed_activation(tape.u[li - 1][t], p).matrix().transpose();
        }
        dw /= static_cast<double>(batch);  // batch-mean loss
      }
      dc_upper = std::move(dc);
    } else if (want_input) {
      grads.input = Eigen::MatrixXd::Zero(frames.rows(), batch);
      for (int t = 0; t < p.t_steps; ++t) grads.input += dc[t];
      grads.input *= net.input_scale;
    }
  }
  return grads;
}

}  // namespace

ForwardResult forward(const SpikingNet& net, const Eigen::VectorXd& mag_frame,
                      double frame_duration_s) {
  const BatchResult batch = hard_forward_batch(net, mag_frame);
  return {batch.output.col(0), trace_from_counts(batch.layer_counts, frame_duration_s)};
}

GridForwardResult forward_grid(const SpikingNet& net, const MagnitudeGrid& mag,
                               double frame_duration_s) {
  BatchResult batch = hard_forward_batch(net, mag.mags);
  GridForwardResult result;
  result.denoised = mag;
  result.denoised.mags = std::move(batch.output);
  result.trace = trace_from_counts(batch.layer_counts,
                                   frame_duration_s * std::max<Eigen::Index>(1, mag.num_frames()));
  return result;
}

Eigen::MatrixXd forward_relaxed(const SpikingNet& net, const Eigen::MatrixXd& frames) {
  return relaxed_forward_tape(net, frames, /*keep_tape=*/false).output;
}

Eigen::MatrixXd input_gradient_grid(const SpikingNet& net, const Eigen::MatrixXd& frames,
                                    const Eigen::MatrixXd& targets) {
  return relaxed_backprop(net, frames, targets, /*want_input=*/true, /*want_weights=*/false)
      .input;
}

Eigen::VectorXd input_gradient(const SpikingNet& net, const Eigen::VectorXd& mag_frame,
                               const Eigen::VectorXd& target_frame) {
  return input_gradient_grid(net, mag_frame, target_frame).col(0);
}

double relaxed_loss(const SpikingNet& net, const Eigen::MatrixXd& frames,
                    const Eigen::MatrixXd& targets) {
  if (targets.rows() != net.layer_sizes.back() || targets.cols() != frames.cols()) {
    throw ShapeError("loss: target shape does not match the output layer");
  }
  const Eigen::MatrixXd out = forward_relaxed(net, frames);
  return (out - targets).squaredNorm() / static_cast<double>(out.size());
}

namespace {

// Noisy/clean magnitude frames of the whole corpus, stacked as columns.
void corpus_frames(const Corpus& corpus, const StftParams& params, Eigen::MatrixXd& noisy,
                   Eigen::MatrixXd& clean) {
  if (corpus.pairs.empty()) throw ConfigError("corpus is empty");
  std::vector<Eigen::MatrixXd> noisy_grids, clean_grids;
  Eigen::Index total = 0;
  for (const ClipPair& pair : corpus.pairs) {
    auto [nm, np] = split(stft(pair.noisy, params));
    auto [cm, cp] = split(stft(pair.clean, params));
    total += nm.mags.cols();
    noisy_grids.push_back(std::move(nm.mags));
    clean_grids.push_back(std::move(cm.mags));
  }
  const Eigen::Index bins = noisy_grids.front().rows();
  noisy.resize(bins, total);
  clean.resize(bins, total);
  Eigen::Index at = 0;
  for (size_t i = 0; i < noisy_grids.size(); ++i) {
    noisy.middleCols(at, noisy_grids[i].cols()) = noisy_grids[i];
    clean.middleCols(at, clean_grids[i].cols()) = clean_grids[i];
    at += noisy_grids[i].cols();
  }
}

// Deterministic strided subset for loss reporting on large frame sets.
Eigen::MatrixXd subsample_cols(const Eigen::MatrixXd& m, Eigen::Index limit) {
  if (m.cols() <= limit) return m;
  const Eigen::Index stride = (m.cols() + limit - 1) / limit;
  Eigen::MatrixXd out(m.rows(), (m.cols() + stride - 1) / stride);
  Eigen::Index at = 0;
  for (Eigen::Index c = 0; c < m.cols(); c += stride) out.col(at++) = m.col(c);
  return out;
}

}  // namespace

TrainResult train(const SpikingNet& net, const Corpus& corpus, const StftParams& stft_params,
                  const TrainHyper& hyper) {
  validate_net(net);
  if (hyper.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (hyper.batch < 1) throw ConfigError("batch must be >= 1");
  if (!(hyper.lr > 0.0)) throw ConfigError("lr must be positive");

  TrainResult result;
  result.net = net;

  Eigen::MatrixXd noisy, clean;
  corpus_frames(corpus, stft_params, noisy, clean);
  if (noisy.rows() != net.layer_sizes.front() || clean.rows() != net.layer_sizes.back()) {
    throw ShapeError("train: corpus bins do not match the net topology");
  }

  if (hyper.epochs == 0) {
    const Eigen::MatrixXd xs = subsample_cols(noisy, 2048);
    const Eigen::MatrixXd ts = subsample_cols(clean, 2048);
    result.initial_loss = result.final_loss = relaxed_loss(result.net, xs, ts);
    return result;
  }

  // one-time scale calibration: average bin drives half threshold, mid
  // output rate maps to the average clean magnitude
  result.net.input_scale =
      0.5 * net.lif.threshold / std::max(noisy.mean(), 1e-12);
  result.net.output_scale = std::max(2.0 * clean.mean(), 1e-12);

  const Eigen::MatrixXd eval_x = subsample_cols(noisy, 2048);
  const Eigen::MatrixXd eval_t = subsample_cols(clean, 2048);
  result.initial_loss = relaxed_loss(result.net, eval_x, eval_t);

  std::vector<Eigen::Index> order(noisy.cols());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(hyper.seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(order.size());
         start += hyper.batch) {
      const Eigen::Index count =
          std::min<Eigen::Index>(hyper.batch, order.size() - start);
      Eigen::MatrixXd xb(noisy.rows(), count), tb(clean.rows(), count);
      for (Eigen::Index j = 0; j < count; ++j) {
        xb.col(j) = noisy.col(order[start + j]);
        tb.col(j) = clean.col(order[start + j]);
      }
      Gradients grads =
          relaxed_backprop(result.net, xb, tb, /*want_input=*/false, /*want_weights=*/true);
      if (!std::isfinite(grads.mean_loss)) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch));
      }
      for (size_t l = 0; l < result.net.weights.size(); ++l) {
        result.net.weights[l] -= hyper.lr * grads.weights[l];
      }
      result.frames_seen += count;
    }
  }

  result.final_loss = relaxed_loss(result.net, eval_x, eval_t);
  if (!std::isfinite(result.final_loss)) throw TrainingError("final loss is not finite");
  return result;
}

MagnitudeGrid spectral_subtract(const MagnitudeGrid& mag, const Eigen::VectorXd& noise_floor,
                                double alpha) {
  if (noise_floor.size() != mag.mags.rows()) {
    throw ShapeError("spectral_subtract: noise floor has " +
                     std::to_string(noise_floor.size()) + " bins, grid has " +
                     std::to_string(mag.mags.rows()));
  }
  if (alpha < 0.0) throw DomainError("spectral_subtract: alpha must be >= 0");
  MagnitudeGrid out = mag;
  out.mags = (mag.mags.colwise() - alpha * noise_floor).cwiseMax(0.0);
  return out;
}

Eigen::VectorXd noise_floor_estimate(const MagnitudeGrid& mag, int window) {
  if (window < 1) throw ConfigError("noise floor window must be >= 1");
  const Eigen::Index num_frames = mag.mags.cols();
  const Eigen::Index w = std::min<Eigen::Index>(window, num_frames);
  Eigen::VectorXd floor_mag(mag.mags.rows());
  for (Eigen::Index k = 0; k < mag.mags.rows(); ++k) {
    double acc = mag.mags.row(k).head(w).sum();
    double best = acc;
    for (Eigen::Index t = w; t < num_frames; ++t) {
      acc += mag.mags(k, t) - mag.mags(k, t - w);
      best = std::min(best, acc);
    }
    floor_mag[k] = best / w;
  }
  return floor_mag;
}

void save_checkpoint(const SpikingNet& net, const std::string& path) {
  validate_net(net);
  nlohmann::ordered_json header;
  header["layer_sizes"] = net.layer_sizes;
  header["lif"] = to_json(net.lif);
  header["input_scale"] = net.input_scale;
  header["output_scale"] = net.output_scale;
  header["seed"] = net.init_seed;
  const std::string header_str = header.dump();

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open for writing: " + path);
  file.write("SNN1", 4);
  const uint32_t header_len = static_cast<uint32_t>(header_str.size());
  file.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  file.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const Eigen::MatrixXd& w : net.weights) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double value = w(r, c);
        file.write(reinterpret_cast<const char*>(&value), sizeof(value));
      }
    }
  }
  if (!file.good()) throw IoError("write failed: " + path);
}

SpikingNet load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open: " + path);
  char magic[4];
  file.read(magic, 4);
  if (!file.good() || std::string_view(magic, 4) != "SNN1") {
    throw FormatError("not a checkpoint: " + path);
  }
  uint32_t header_len = 0;
  file.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!file.good() || header_len == 0 || header_len > (1u << 20)) {
    throw FormatError("bad checkpoint header length: " + path);
  }
  std::string header_str(header_len, '\0');
  file.read(header_str.data(), header_len);
  if (!file.good()) throw FormatError("truncated checkpoint header: " + path);

  SpikingNet net;
  try {
    const nlohmann::json header = nlohmann::json::parse(header_str);
    net.layer_sizes = header.at("layer_sizes").get<std::vector<int>>();
    net.lif = lif_params_from_json(header.at("lif"));
    net.input_scale = header.at("input_scale").get<double>();
    net.output_scale = header.at("output_scale").get<double>();
    net.init_seed = header.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }

  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    Eigen::MatrixXd w(net.layer_sizes[l + 1], net.layer_sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        double value = 0.0;
        file.read(reinterpret_cast<char*>(&value), sizeof(value));
        w(r, c) = value;
      }
    }
    if (!file.good()) throw FormatError("truncated checkpoint weights: " + path);
    net.weights.push_back(std::move(w));
  }
  validate_net(net);
  return net;
}

}  // namespace nase
