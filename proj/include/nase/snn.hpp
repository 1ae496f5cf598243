#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "nase/stft.hpp"
#include "nase/synth.hpp"

namespace nase {

// Discrete-time leaky integrate-and-fire neuron with a configurable reset.
struct LifParams {
  enum class Reset { kSubtract, kZero };

  double beta = 0.9;        // leak factor in (0, 1)
  double threshold = 1.0;   // firing threshold, > 0
  Reset reset = Reset::kSubtract;
  int t_steps = 25;         // simulation steps per frame
  double surrogate_slope = 5.0;

  bool operator==(const LifParams&) const = default;
};

void validate_lif_params(const LifParams& p);

// One membrane update: u = beta*v + current; spike = [u >= threshold];
// v_next = u - threshold*spike (subtract) or u*(1 - spike) (zero).
struct LifStep {
  double v_next = 0.0;
  double spike = 0.0;  // 0 or 1
};
LifStep lif_step(double v, double current, const LifParams& p);

// Binary spike raster for one population: t_steps rows, one column per
// neuron. duration_s is the real-time span the raster stands for.
struct SpikeTrain {
  Eigen::MatrixXd spikes;  // entries in {0, 1}
  double duration_s = 1.0;
};

struct SpikeTrace {
  long total_spikes = 0;
  double duration_s = 1.0;
  std::vector<long> per_layer_counts;
};

double spike_rate(const SpikeTrace& trace);

// Feedforward LIF network over magnitude frames. layer_sizes runs
// [input_bins, hidden..., output_bins]; weights[l] maps layer l spikes to
// layer l+1 drive currents and has shape layer_sizes[l+1] x layer_sizes[l].
// input_scale turns magnitudes into drive currents; output_scale maps output
// spike rates back to magnitudes.
struct SpikingNet {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  LifParams lif;
  double input_scale = 0.5;
  double output_scale = 1.0;
  uint64_t init_seed = 0;
};

// Seeded He-style initialization.
SpikingNet make_net(std::vector<int> layer_sizes, const LifParams& lif, uint64_t seed);

void validate_net(const SpikingNet& net);

// Deterministic rate coding: neuron k integrates the constant current
// input_scale*mag[k] for t_steps. Spike counts are monotone in the drive.
// Throws DomainError on negative magnitudes.
SpikeTrain encode_rate(const Eigen::VectorXd& mag_frame, const SpikingNet& net,
                       double duration_s = 1.0);

// Hard (binary-spike) inference on one frame. The denoised magnitude is
// output_scale * spike_count / t_steps per output neuron.
struct ForwardResult {
  Eigen::VectorXd denoised;
  SpikeTrace trace;
};
ForwardResult forward(const SpikingNet& net, const Eigen::VectorXd& mag_frame,
                      double frame_duration_s = 1.0);

// Batched hard inference: column t of `mag` is processed as an independent
// frame; the trace aggregates spike counts over all frames.
struct GridForwardResult {
  MagnitudeGrid denoised;
  SpikeTrace trace;
};
GridForwardResult forward_grid(const SpikingNet& net, const MagnitudeGrid& mag,
                               double frame_duration_s = 1.0);

// Smoothed network used for every gradient: the spike nonlinearity is
// replaced by the fast-sigmoid primitive a(u) = 0.5 + z/(1+|z|) with
// z = slope*(u - threshold), whose derivative is the surrogate
// slope / (1 + slope*|u - threshold|)^2.
Eigen::MatrixXd forward_relaxed(const SpikingNet& net, const Eigen::MatrixXd& frames);

// d/dx of mean squared error(forward_relaxed(x), target), per frame:
// column j of the result is the gradient of column j's own loss. Computed by
// backprop through time on the relaxed network.
Eigen::MatrixXd input_gradient_grid(const SpikingNet& net, const Eigen::MatrixXd& frames,
                                    const Eigen::MatrixXd& targets);
Eigen::VectorXd input_gradient(const SpikingNet& net, const Eigen::VectorXd& mag_frame,
                               const Eigen::VectorXd& target_frame);

// Mean over frames of the relaxed per-frame MSE; the objective train()
// minimizes.
double relaxed_loss(const SpikingNet& net, const Eigen::MatrixXd& frames,
                    const Eigen::MatrixXd& targets);

struct TrainHyper {
  double lr = 0.05;
  int epochs = 2;
  int batch = 32;
  uint64_t seed = 0;
};

struct TrainResult {
  SpikingNet net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  long frames_seen = 0;
};

// Surrogate-gradient SGD on frame MSE between the denoised noisy magnitude
// and the clean magnitude. Calibrates input/output scales once (skipped when
// epochs == 0, which returns the net unchanged). Deterministic in hyper.seed.
// Throws TrainingError if the loss stops being finite.
TrainResult train(const SpikingNet& net, const Corpus& corpus,
                  const StftParams& stft_params, const TrainHyper& hyper);

// Gradient-free baseline denoiser: out[k][t] = max(mag[k][t] -
// alpha*noise_floor[k], 0).
MagnitudeGrid spectral_subtract(const MagnitudeGrid& mag,
                                const Eigen::VectorXd& noise_floor, double alpha);

// Per-bin noise floor from minimum statistics: the minimum over frames of a
// `window`-frame moving average of the magnitude.
Eigen::VectorXd noise_floor_estimate(const MagnitudeGrid& mag, int window);

// Checkpoint container: magic "SNN1", little-endian uint32 header length,
// JSON header (layer sizes, LIF parameters, scales, seed), then the weight
// matrices as row-major little-endian 64-bit floats.
void save_checkpoint(const SpikingNet& net, const std::string& path);
SpikingNet load_checkpoint(const std::string& path);

}  // namespace nase
