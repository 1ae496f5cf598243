#include "nase/attack.hpp"

#include <cmath>
#include <random>

#include "nase/error.hpp"
#include "nase/seed.hpp"

namespace nase {

void validate_attack_spec(const AttackSpec& spec) {
  if (spec.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  if (spec.kind == AttackSpec::Kind::kPgd) {
    if (spec.epsilon > 0.0 && !(spec.effective_alpha() > 0.0)) {
      throw ConfigError("pgd requires a positive step size");
    }
    if (spec.steps < 1) throw ConfigError("pgd requires steps >= 1");
  }
}

Eigen::MatrixXd project_linf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x0,
                             double epsilon) {
  if (x.rows() != x0.rows() || x.cols() != x0.cols()) {
    throw ShapeError("project_linf: shape mismatch");
  }
  return x.array().max(x0.array() - epsilon).min(x0.array() + epsilon).matrix();
}

Eigen::MatrixXd signed_ascent(const GradientFn& grad, const Eigen::MatrixXd& x0,
                              double epsilon, double alpha, int steps, bool random_start,
                              uint64_t seed) {
  if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (epsilon == 0.0) return Eigen::MatrixXd::Zero(x0.rows(), x0.cols());

  Eigen::MatrixXd x = x0;
  if (random_start && epsilon > 0.0) {
    // per-frame engines so frame batching never changes the draw
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      std::mt19937_64 rng(derive_seed(seed, c));
      std::uniform_real_distribution<double> ball(-epsilon, epsilon);
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) += ball(rng);
    }
    x = project_linf(x, x0, epsilon).cwiseMax(0.0);
  }

  for (int step = 0; step < steps; ++step) {
    const Eigen::MatrixXd g = grad(x);
    if (g.rows() != x.rows() || g.cols() != x.cols()) {
      throw ShapeError("signed_ascent: gradient shape mismatch");
    }
    const Eigen::MatrixXd direction = g.unaryExpr([](double v) {
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);  // sign(0) = 0
    });
    x = project_linf(x + alpha * direction, x0, epsilon).cwiseMax(0.0);
  }
  return x - x0;
}

namespace {

void check_grids(const MagnitudeGrid& noisy, const MagnitudeGrid& clean) {
  if (noisy.mags.rows() != clean.mags.rows() || noisy.mags.cols() != clean.mags.cols()) {
    throw ShapeError("attack: noisy and clean grids differ in shape");
  }
}

GradientFn denoiser_mse_gradient(const SpikingNet& net, const Eigen::MatrixXd& clean) {
  return [&net, clean](const Eigen::MatrixXd& x) {
    return input_gradient_grid(net, x, clean);
  };
}

}  // namespace

Perturbation fgsm(const SpikingNet& net, const MagnitudeGrid& noisy_mag,
                  const MagnitudeGrid& clean_mag, const AttackSpec& spec) {
  if (spec.kind != AttackSpec::Kind::kFgsm) throw ConfigError("fgsm: spec.kind mismatch");
  validate_attack_spec(spec);
  check_grids(noisy_mag, clean_mag);
  Perturbation pert;
  pert.spec = spec;
  pert.delta = signed_ascent(denoiser_mse_gradient(net, clean_mag.mags), noisy_mag.mags,
                             spec.epsilon, spec.epsilon, 1, false, 0);
  return pert;
}

Perturbation pgd(const SpikingNet& net, const MagnitudeGrid& noisy_mag,
                 const MagnitudeGrid& clean_mag, const AttackSpec& spec) {
  if (spec.kind != AttackSpec::Kind::kPgd) throw ConfigError("pgd: spec.kind mismatch");
  validate_attack_spec(spec);
  check_grids(noisy_mag, clean_mag);
  Perturbation pert;
  pert.spec = spec;
  pert.delta = signed_ascent(denoiser_mse_gradient(net, clean_mag.mags), noisy_mag.mags,
                             spec.epsilon, spec.effective_alpha(), spec.steps,
                             spec.random_start, spec.seed);
  return pert;
}

MagnitudeGrid apply(const MagnitudeGrid& noisy_mag, const Perturbation& pert) {
  if (pert.delta.rows() != noisy_mag.mags.rows() ||
      pert.delta.cols() != noisy_mag.mags.cols()) {
    throw ShapeError("apply: perturbation shape mismatch");
  }
  MagnitudeGrid out = noisy_mag;
  out.mags = (noisy_mag.mags + pert.delta).cwiseMax(0.0);
  return out;
}

}  // namespace nase
