#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "nase/snn.hpp"
#include "nase/stft.hpp"

namespace nase {

struct AttackSpec {
  enum class Kind { kNone, kFgsm, kPgd };

  Kind kind = Kind::kNone;
  double epsilon = 0.05;  // L-inf budget on magnitudes
  double alpha = 0.0;     // PGD step size; <= 0 means epsilon / 4
  int steps = 10;         // PGD iterations
  bool random_start = false;
  uint64_t seed = 0;      // PGD random start; per-frame seeds derive from it

  double effective_alpha() const { return alpha > 0.0 ? alpha : epsilon / 4.0; }
  bool operator==(const AttackSpec&) const = default;
};

void validate_attack_spec(const AttackSpec& spec);

// Bounded magnitude-domain delta: |delta|_inf <= epsilon + 1e-12 and
// original + delta stays entrywise nonnegative.
struct Perturbation {
  Eigen::MatrixXd delta;  // num_bins x num_frames
  AttackSpec spec;
};

// Entrywise clamp of x into [x0 - epsilon, x0 + epsilon].
Eigen::MatrixXd project_linf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x0,
                             double epsilon);

// Signed-gradient ascent core shared by fgsm and pgd, exposed so stub loss
// models can drive it directly: iterate
//   x <- max(project_linf(x + alpha*sign(grad(x)), x0, epsilon), 0)
// for `steps` iterations, optionally from a seeded uniform start in the
// epsilon-ball. sign(0) is 0. Returns x - x0.
using GradientFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
Eigen::MatrixXd signed_ascent(const GradientFn& grad, const Eigen::MatrixXd& x0,
                              double epsilon, double alpha, int steps,
                              bool random_start, uint64_t seed);

// Single signed-gradient step of size epsilon on the denoiser MSE against
// clean_mag, clipped so noisy_mag + delta >= 0.
Perturbation fgsm(const SpikingNet& net, const MagnitudeGrid& noisy_mag,
                  const MagnitudeGrid& clean_mag, const AttackSpec& spec);

// Projected signed-gradient iteration; with steps=1, no random start and
// alpha=epsilon it reduces to fgsm exactly.
Perturbation pgd(const SpikingNet& net, const MagnitudeGrid& noisy_mag,
                 const MagnitudeGrid& clean_mag, const AttackSpec& spec);

// noisy + delta with a final nonnegativity clamp.
MagnitudeGrid apply(const MagnitudeGrid& noisy_mag, const Perturbation& pert);

}  // namespace nase
