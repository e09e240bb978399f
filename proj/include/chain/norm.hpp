#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chain/autodiff.hpp"
#include "chain/random.hpp"
#include "chain/tensor.hpp"

namespace chain {

// Normalization variants. `chain` is the full method with running statistics;
// the others are its ablations plus the batch-norm baselines.
enum class Variant {
  chain,        // ARMS + 0MR, running cumulative statistics
  chain_batch,  // ARMS + 0MR, batch statistics
  chain_dtm,    // deterministic interpolation weight p instead of the mask
  plus_0c,      // batch centering before ARMS
  minus_lc,     // ARMS without the psi_min factor
  minus_0mr,    // no zero-mean regularizer
  minus_arms,   // identity features, regularizer only
  bn,           // centering + scaling
  bn_plus_lc,   // centering + scaling, rescaled by the detached sigma_min
  rms_plain,    // Y / psi on every sample, nothing else
};

enum class StatMode { batch, running };
enum class MaskMode { stochastic, deterministic };

std::string_view to_string(Variant v);
std::string_view to_string(StatMode m);
Variant parse_variant(std::string_view name);
StatMode parse_stat_mode(std::string_view name);

// Statistics mode a variant uses unless configured otherwise.
StatMode default_mode(Variant v);
// Batch-norm style variants only support batch statistics.
bool supports_running(Variant v);

/// Per-layer mutable normalization state.
struct NormState {
  Variant variant = Variant::chain;
  StatMode mode = StatMode::running;
  double p = 0.0;
  double delta_p = 1e-3;
  double tau = 0.5;
  double lambda = 20.0;
  double eps = 1e-5;
  double decay = 0.9;
  std::vector<double> running_psi_sqr;
  std::vector<double> running_Psi;
  std::vector<double> running_mu;
  std::uint64_t running_updates = 0;

  static NormState create(Variant variant, std::size_t channels);
  std::size_t channels() const noexcept { return running_psi_sqr.size(); }
  // Throws DomainError when an invariant is broken.
  void validate() const;

  bool operator==(const NormState&) const = default;
};

struct ChannelStats {
  std::vector<double> mu;
  std::vector<double> psi;
  double psi_min = 0.0;
  std::size_t psi_argmin = 0;
};

// Axes reduced by channel statistics: {0} for B x d, {0,2,3} for B x d x H x W.
const std::vector<std::size_t>& norm_axes(std::size_t rank);
std::size_t channel_count(const Shape& shape);
// Number of entries per channel (B, or B*H*W).
std::size_t per_channel_count(const Shape& shape);

// ---------------------------------------------------------------------------
// Value-level building blocks.

ChannelStats channel_stats(const Tensor& y, double eps);

Tensor bn_center(const Tensor& y, std::span<const double> mu);
// Population standard deviation with eps inside the root.
std::vector<double> bn_sigma(const Tensor& centered, double eps);
Tensor bn_scale(const Tensor& centered, std::span<const double> sigma, double eps);

// (Y / psi) * psi_min with the given statistics.
Tensor lcrms_normalize(const Tensor& y, const ChannelStats& stats);

// Bernoulli(p) draws of shape batch x channels.
Tensor sample_mask(std::size_t batch, std::size_t channels, double p, Rng& rng);
// Reshapes a B x d mask so it broadcasts against `feature_shape`.
Tensor expand_mask(const Tensor& mask, const Shape& feature_shape);

Tensor arms_forward(const Tensor& y, const ChannelStats& stats, double p,
                    MaskMode mode, Rng& rng);

std::vector<double> update_running_stat(std::span<const double> old_value,
                                        std::span<const double> new_value,
                                        double decay);

/// Backward of the running-statistics RMS normalization.
///
/// `y_check` is Y / psi_bar saved by the forward pass, `running_psi` the
/// psi_bar it used and `psi_min` the detached output factor. Updates
/// state.running_Psi with the batch statistic before using it.
Tensor rmsnorm_running_backward(const Tensor& grad_out, const Tensor& y_check,
                                std::span<const double> running_psi, double psi_min,
                                NormState& state);

// E[sign(D(x))] over the given outputs.
double overfit_signal(std::span<const double> real_outputs);
NormState update_p(NormState state, std::span<const double> real_outputs);

// ---------------------------------------------------------------------------
// Graph-level layer.

// lambda * p * ||mu||^2 with mu the channel means of y.
Var zero_mean_reg(Var y, double p, double lambda);

// Random and detached quantities of one layer application. Passing them back
// through `frozen` replays the same function, which is what the
// finite-difference oracle differentiates.
struct LayerDraws {
  std::optional<Tensor> mask;
  std::optional<double> scale_min;  // psi_min, or sigma_min for bn_plus_lc
};

struct LayerOutput {
  Var features;
  Var reg;
  LayerDraws draws;
  std::size_t stat_rows = 0;  // batch rows that entered the statistics
};

LayerOutput chain_layer_forward(Var y, NormState& state, bool training, Rng& rng,
                                const LayerDraws* frozen = nullptr);

}  // namespace chain
