#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "chain/random.hpp"

namespace chain {

/// Outcome of one executable property check.
///
/// `worst_margin` is the smallest signed slack seen over every inequality the
/// verifier evaluated (negative means violated), recorded on pass as well.
struct VerificationReport {
  std::string theorem;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  // Named measurements (Monte-Carlo means, standard errors, sample counts).
  std::vector<std::pair<std::string, double>> values;

  bool passed() const noexcept { return failures == 0; }
  double value(const std::string& name) const;  // throws if absent
};

std::string format_report_line(const VerificationReport& report);

// ---------------------------------------------------------------------------
// Centering drives the expected pairwise cosine to zero.

// Equal-weight support points; must be closed under p -> 2*center - p.
struct SymmetricPointSet {
  std::vector<std::vector<double>> points;
  std::vector<double> center;
};

// Two-point supports {v, 2mu - v} drawn per trial on a dyadic grid, so the
// enumeration runs in exact arithmetic.
struct RandomTwoPoint {
  std::size_t dim = 8;
};

struct GaussianCentering {
  std::size_t dim = 16;
  double offset = 5.0;  // mean is offset * e_1
  double noise_sd = 1.0;
  std::size_t pairs = 100000;
};

using CenteringDistribution = std::variant<SymmetricPointSet, RandomTwoPoint, GaussianCentering>;

VerificationReport verify_centering_cosine(const CenteringDistribution& dist,
                                           std::size_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Lipschitz constant of the scaling step, and of LC-RMSNorm.

using SigmaSampler = std::function<std::vector<double>(Rng&)>;

// Log-normal sigma vectors of random length in [1, 16], floored at sqrt(eps).
SigmaSampler log_normal_sigma_sampler(double eps = 1e-5);

VerificationReport verify_scaling_lipschitz(const SigmaSampler& sampler, std::size_t trials,
                                            std::uint64_t seed,
                                            std::size_t lcrms_pairs = 10000);

// ---------------------------------------------------------------------------
// CHAIN gradient bounds (expected-mask backward).

struct GradBoundShapes {
  std::size_t min_batch = 2, max_batch = 16;
  std::size_t min_channels = 1, max_channels = 8;
  std::size_t min_inputs = 1, max_inputs = 8;
  double eps = 1e-5;
};

// Gradient w.r.t. one channel's pre-normalization features given the gradient
// w.r.t. the interpolated output, with the mask replaced by its mean p.
std::vector<double> expected_arms_backward(const std::vector<double>& grad_out,
                                           const std::vector<double>& y_check, double p,
                                           double psi_c, double psi_min);

VerificationReport verify_chain_grad_bound(std::size_t trials, const GradBoundShapes& shapes,
                                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stochastic mask decorrelates channels.

struct DecorrelationSetup {
  double rho = 0.8;          // correlation of the raw channels
  double psi_ratio = 0.3;    // psi_min / psi_i of the larger channel
  std::vector<double> p_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t mc_samples = 100000;
};

VerificationReport verify_decorrelation(std::size_t trials, const DecorrelationSetup& setup,
                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Running statistics agree with batch statistics at decay 0 and converge
// geometrically otherwise.

struct RunningConsistencySetup {
  std::size_t repeats = 200;  // identical batches for the convergence check
  double decay = 0.9;
};

VerificationReport verify_running_consistency(std::size_t trials,
                                              const RunningConsistencySetup& setup,
                                              std::uint64_t seed);

// All five verifiers with the default sizes, in a fixed order.
std::vector<VerificationReport> run_theorem_suite(std::uint64_t seed);

}  // namespace chain
