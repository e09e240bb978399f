#include "chain/norm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "chain/errors.hpp"

namespace chain {

namespace {

struct VariantName {
  Variant variant;
  std::string_view name;
};

constexpr std::array<VariantName, 10> kVariantNames{{
    {Variant::chain, "CHAIN"},
    {Variant::chain_batch, "CHAIN_batch"},
    {Variant::chain_dtm, "CHAIN_Dtm"},
    {Variant::plus_0c, "plus_0C"},
    {Variant::minus_lc, "minus_LC"},
    {Variant::minus_0mr, "minus_0MR"},
    {Variant::minus_arms, "minus_ARMS"},
    {Variant::bn, "BN"},
    {Variant::bn_plus_lc, "BN_plus_LC"},
    {Variant::rms_plain, "RMS_plain"},
}};

bool is_bn_family(Variant v) { return v == Variant::bn || v == Variant::bn_plus_lc; }

bool has_regularizer(Variant v) {
  switch (v) {
    case Variant::chain:
    case Variant::chain_batch:
    case Variant::chain_dtm:
    case Variant::plus_0c:
    case Variant::minus_lc:
    case Variant::minus_arms:
      return true;
    default:
      return false;
  }
}

// Entries per (batch, channel) slab: 1 for B x d, H*W for B x d x H x W.
std::size_t spatial_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) n *= shape[i];
  return n;
}

std::size_t channel_of(std::size_t flat, std::size_t channels, std::size_t spatial) {
  return (flat / spatial) % channels;
}

// Per-channel mean of f(value).
template <class F>
std::vector<double> channel_reduce(const Tensor& y, F f) {
  const std::size_t d = channel_count(y.shape());
  const std::size_t hw = spatial_size(y.shape());
  std::vector<double> acc(d, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) acc[channel_of(i, d, hw)] += f(y[i]);
  const double inv = 1.0 / static_cast<double>(per_channel_count(y.shape()));
  for (double& a : acc) a *= inv;
  return acc;
}

// Applies out[i] = f(y[i], c) with c the channel of entry i.
template <class F>
Tensor channel_map(const Tensor& y, F f) {
  const std::size_t d = channel_count(y.shape());
  const std::size_t hw = spatial_size(y.shape());
  Tensor out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = f(y[i], channel_of(i, d, hw));
  return out;
}

void check_channels(std::span<const double> values, const Tensor& y, const char* what) {
  if (values.size() != channel_count(y.shape()))
    throw DimensionError(std::string(what) + ": expected " +
                         std::to_string(channel_count(y.shape())) + " channels, got " +
                         std::to_string(values.size()));
}

// Per-channel values shaped 1 x d (x 1 x 1) so they broadcast against features.
Tensor channel_tensor(std::span<const double> values, std::size_t rank) {
  Shape shape(rank, 1);
  shape[1] = values.size();
  return Tensor(shape, std::vector<double>(values.begin(), values.end()));
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& entry : kVariantNames)
    if (entry.variant == v) return entry.name;
  return "unknown";
}

std::string_view to_string(StatMode m) {
  return m == StatMode::batch ? "batch" : "running";
}

Variant parse_variant(std::string_view name) {
  for (const auto& entry : kVariantNames)
    if (entry.name == name) return entry.variant;
  throw DomainError("unknown normalization variant '" + std::string(name) + "'");
}

StatMode parse_stat_mode(std::string_view name) {
  if (name == "batch") return StatMode::batch;
  if (name == "running") return StatMode::running;
  throw DomainError("unknown statistics mode '" + std::string(name) + "'");
}

StatMode default_mode(Variant v) {
  switch (v) {
    case Variant::chain_batch:
    case Variant::bn:
    case Variant::bn_plus_lc:
    case Variant::rms_plain:
      return StatMode::batch;
    default:
      return StatMode::running;
  }
}

bool supports_running(Variant v) { return !is_bn_family(v) && v != Variant::rms_plain; }

NormState NormState::create(Variant variant, std::size_t channels) {
  NormState s;
  s.variant = variant;
  s.mode = default_mode(variant);
  s.running_psi_sqr.assign(channels, 0.0);
  s.running_Psi.assign(channels, 0.0);
  s.running_mu.assign(channels, 0.0);
  return s;
}

void NormState::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0,1]");
  if (!(delta_p > 0.0)) throw DomainError("delta_p must be positive");
  if (!(tau >= -1.0 && tau <= 1.0)) throw DomainError("tau must lie in [-1,1]");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) throw DomainError("decay must lie in [0,1)");
  if (running_Psi.size() != running_psi_sqr.size() ||
      running_mu.size() != running_psi_sqr.size())
    throw DimensionError("running statistics have inconsistent channel counts");
  for (double v : running_psi_sqr)
    if (!(v >= 0.0)) throw DomainError("running_psi_sqr must be non-negative");
  if (mode == StatMode::running && !supports_running(variant))
    throw DomainError(std::string(to_string(variant)) +
                      " does not support running statistics");
}

const std::vector<std::size_t>& norm_axes(std::size_t rank) {
  static const std::vector<std::size_t> flat{0};
  static const std::vector<std::size_t> spatial{0, 2, 3};
  if (rank == 2) return flat;
  if (rank == 4) return spatial;
  throw DimensionError("normalization expects B x d or B x d x H x W features, got rank " +
                       std::to_string(rank));
}

std::size_t channel_count(const Shape& shape) {
  norm_axes(shape.size());
  return shape[1];
}

std::size_t per_channel_count(const Shape& shape) {
  norm_axes(shape.size());
  return shape[0] * spatial_size(shape);
}

ChannelStats channel_stats(const Tensor& y, double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  ChannelStats s;
  s.mu = channel_reduce(y, [](double v) { return v; });
  s.psi = channel_reduce(y, [](double v) { return v * v; });
  for (double& v : s.psi) v = std::sqrt(v + eps);
  const auto it = std::min_element(s.psi.begin(), s.psi.end());
  s.psi_min = *it;
  s.psi_argmin = static_cast<std::size_t>(it - s.psi.begin());
  return s;
}

Tensor bn_center(const Tensor& y, std::span<const double> mu) {
  check_channels(mu, y, "bn_center");
  return channel_map(y, [&](double v, std::size_t c) { return v - mu[c]; });
}

std::vector<double> bn_sigma(const Tensor& centered, double eps) {
  auto var = channel_reduce(centered, [](double v) { return v * v; });
  for (double& v : var) v = std::sqrt(v + eps);
  return var;
}

Tensor bn_scale(const Tensor& centered, std::span<const double> sigma, double eps) {
  check_channels(sigma, centered, "bn_scale");
  const double floor = std::sqrt(eps);
  for (double s : sigma)
    if (!(s >= floor)) throw DomainError("bn_scale: sigma below sqrt(eps)");
  return channel_map(centered, [&](double v, std::size_t c) { return v / sigma[c]; });
}

Tensor lcrms_normalize(const Tensor& y, const ChannelStats& stats) {
  check_channels(stats.psi, y, "lcrms_normalize");
  return channel_map(y, [&](double v, std::size_t c) {
    return v / stats.psi[c] * stats.psi_min;
  });
}

Tensor sample_mask(std::size_t batch, std::size_t channels, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("mask probability must lie in [0,1]");
  Tensor m(Shape{batch, channels});
  for (double& v : m.data()) v = uniform01(rng) < p ? 1.0 : 0.0;
  return m;
}

Tensor expand_mask(const Tensor& mask, const Shape& feature_shape) {
  if (mask.rank() != 2 || mask.dim(0) != feature_shape.at(0) ||
      mask.dim(1) != channel_count(feature_shape))
    throw DimensionError("mask " + shape_string(mask.shape()) +
                         " does not match features " + shape_string(feature_shape));
  if (feature_shape.size() == 2) return mask;
  return mask.reshaped({mask.dim(0), mask.dim(1), 1, 1});
}

Tensor arms_forward(const Tensor& y, const ChannelStats& stats, double p,
                    MaskMode mode, Rng& rng) {
  const Tensor normalized = lcrms_normalize(y, stats);
  Tensor out(y.shape());
  if (mode == MaskMode::deterministic) {
    for (std::size_t i = 0; i < y.size(); ++i)
      out[i] = (1.0 - p) * y[i] + p * normalized[i];
    return out;
  }
  const std::size_t d = channel_count(y.shape());
  const std::size_t hw = spatial_size(y.shape());
  const Tensor mask = sample_mask(y.dim(0), d, p, rng);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = mask[i / hw];
    out[i] = (1.0 - m) * y[i] + m * normalized[i];
  }
  return out;
}

std::vector<double> update_running_stat(std::span<const double> old_value,
                                        std::span<const double> new_value,
                                        double decay) {
  if (old_value.size() != new_value.size())
    throw DimensionError("running statistic length mismatch");
  if (!(decay >= 0.0 && decay < 1.0)) throw DomainError("decay must lie in [0,1)");
  std::vector<double> out(old_value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = decay * old_value[i] + (1.0 - decay) * new_value[i];
  return out;
}

Tensor rmsnorm_running_backward(const Tensor& grad_out, const Tensor& y_check,
                                std::span<const double> running_psi, double psi_min,
                                NormState& state) {
  if (grad_out.shape() != y_check.shape())
    throw DimensionError("grad_out " + shape_string(grad_out.shape()) +
                         " does not match saved y_check " +
                         shape_string(y_check.shape()));
  check_channels(running_psi, y_check, "rmsnorm_running_backward");
  const std::size_t d = channel_count(y_check.shape());
  if (state.running_Psi.size() != d) state.running_Psi.assign(d, 0.0);

  Tensor grad_check(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_check[i] = grad_out[i] * psi_min;

  std::vector<double> batch_Psi(d, 0.0);
  const std::size_t hw = spatial_size(y_check.shape());
  for (std::size_t i = 0; i < grad_check.size(); ++i)
    batch_Psi[channel_of(i, d, hw)] += grad_check[i] * y_check[i];
  const double inv = 1.0 / static_cast<double>(per_channel_count(y_check.shape()));
  for (double& v : batch_Psi) v *= inv;

  state.running_Psi = update_running_stat(state.running_Psi, batch_Psi, state.decay);

  const auto& Psi = state.running_Psi;
  Tensor grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_in.size(); ++i) {
    const std::size_t c = channel_of(i, d, hw);
    grad_in[i] = (grad_check[i] - y_check[i] * Psi[c]) / running_psi[c];
  }
  return grad_in;
}

double overfit_signal(std::span<const double> real_outputs) {
  if (real_outputs.empty()) throw DomainError("overfit signal needs at least one output");
  double s = 0.0;
  for (double v : real_outputs) s += v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return s / static_cast<double>(real_outputs.size());
}

NormState update_p(NormState state, std::span<const double> real_outputs) {
  const double diff = overfit_signal(real_outputs) - state.tau;
  const double direction = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  state.p = clamp01(state.p + state.delta_p * direction);
  return state;
}

// ---------------------------------------------------------------------------
// Graph-level layer

Var zero_mean_reg(Var y, double p, double lambda) {
  const Var mu = reduce_mean(y, norm_axes(y.shape().size()), false);
  return scale(sum(square(mu)), lambda * p);
}

namespace {

struct LayerContext {
  Graph& graph;
  NormState& state;
  bool training;
  const LayerDraws* frozen;
  LayerDraws& draws;
};

double pick_scale_min(const LayerContext& ctx, double computed) {
  const double v = (ctx.frozen && ctx.frozen->scale_min) ? *ctx.frozen->scale_min : computed;
  ctx.draws.scale_min = v;
  return v;
}

// Y / psi (times the detached psi_min when `lipschitz`), by batch statistics
// or by the running ones.
Var rms_branch(const LayerContext& ctx, Var z, bool lipschitz) {
  NormState& st = ctx.state;
  const Shape& shape = z.shape();
  const std::size_t rank = shape.size();
  const auto& axes = norm_axes(rank);

  if (st.mode == StatMode::batch) {
    const Var psi = sqrt(add_scalar(reduce_mean(square(z), axes, true), st.eps));
    Var normalized = z / psi;
    if (!lipschitz) return normalized;
    const double psi_min = pick_scale_min(ctx, min_all(detach(psi)).value().item());
    return scale(normalized, psi_min);
  }

  if (!ctx.training) {
    if (st.running_updates == 0)
      throw DomainError("running statistics requested before any training update");
    std::vector<double> rpsi(st.running_psi_sqr.size());
    for (std::size_t c = 0; c < rpsi.size(); ++c)
      rpsi[c] = std::sqrt(st.running_psi_sqr[c] + st.eps);
    Var normalized = z / ctx.graph.constant(channel_tensor(rpsi, rank));
    if (!lipschitz) return normalized;
    return scale(normalized, pick_scale_min(ctx, *std::min_element(rpsi.begin(), rpsi.end())));
  }

  const Tensor& zv = z.value();
  const auto batch_psi_sqr = channel_reduce(zv, [](double v) { return v * v; });
  st.running_psi_sqr = update_running_stat(st.running_psi_sqr, batch_psi_sqr, st.decay);
  ++st.running_updates;

  std::vector<double> rpsi(st.running_psi_sqr.size());
  for (std::size_t c = 0; c < rpsi.size(); ++c)
    rpsi[c] = std::sqrt(st.running_psi_sqr[c] + st.eps);
  const double factor =
      lipschitz ? pick_scale_min(ctx, *std::min_element(rpsi.begin(), rpsi.end())) : 1.0;

  Tensor y_check = channel_map(zv, [&](double v, std::size_t c) { return v / rpsi[c]; });
  Tensor out(y_check.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y_check[i] * factor;

  NormState* state = &st;
  return ctx.graph.record(
      OpKind::custom, {z}, std::move(out),
      [y_check = std::move(y_check), rpsi, factor, state](const Tensor& g) {
        return std::vector<Tensor>{
            rmsnorm_running_backward(g, y_check, rpsi, factor, *state)};
      });
}

Var batch_norm_branch(const LayerContext& ctx, Var y) {
  const auto& axes = norm_axes(y.shape().size());
  const Var centered = y - reduce_mean(y, axes, true);
  const Var sigma =
      sqrt(add_scalar(reduce_mean(square(centered), axes, true), ctx.state.eps));
  const Var scaled = centered / sigma;
  if (ctx.state.variant != Variant::bn_plus_lc) return scaled;
  return scale(scaled, pick_scale_min(ctx, min_all(detach(sigma)).value().item()));
}

Var center_for_arms(const LayerContext& ctx, Var y) {
  NormState& st = ctx.state;
  const std::size_t rank = y.shape().size();
  if (st.mode == StatMode::running && !ctx.training) {
    if (st.running_updates == 0)
      throw DomainError("running statistics requested before any training update");
    return y - ctx.graph.constant(channel_tensor(st.running_mu, rank));
  }
  const Var mu = reduce_mean(y, norm_axes(rank), true);
  if (st.mode == StatMode::running)
    st.running_mu = update_running_stat(st.running_mu, mu.value().data(), st.decay);
  return y - mu;
}

}  // namespace

LayerOutput chain_layer_forward(Var y, NormState& state, bool training, Rng& rng,
                                const LayerDraws* frozen) {
  const Shape shape = y.shape();
  const std::size_t d = channel_count(shape);
  if (state.channels() != d)
    throw DimensionError("layer state has " + std::to_string(state.channels()) +
                         " channels, features have " + std::to_string(d));
  if (state.mode == StatMode::running && !supports_running(state.variant))
    throw DomainError(std::string(to_string(state.variant)) +
                      " does not support running statistics");

  Graph& graph = *y.graph;
  LayerOutput out;
  out.stat_rows = shape[0];
  LayerContext ctx{graph, state, training, frozen, out.draws};

  out.reg = has_regularizer(state.variant) ? zero_mean_reg(y, state.p, state.lambda)
                                           : graph.constant(Tensor::scalar(0.0));

  switch (state.variant) {
    case Variant::bn:
    case Variant::bn_plus_lc:
      out.features = batch_norm_branch(ctx, y);
      return out;
    case Variant::rms_plain:
      out.features = rms_branch(ctx, y, false);
      return out;
    case Variant::minus_arms:
      out.features = y;
      return out;
    default:
      break;
  }

  const Var z = state.variant == Variant::plus_0c ? center_for_arms(ctx, y) : y;
  const Var normalized = rms_branch(ctx, z, state.variant != Variant::minus_lc);
  const double p = state.p;

  if (state.variant == Variant::chain_dtm || !training) {
    out.features = scale(z, 1.0 - p) + scale(normalized, p);
    return out;
  }

  Tensor mask = (frozen && frozen->mask) ? *frozen->mask : sample_mask(shape[0], d, p, rng);
  const Tensor expanded = expand_mask(mask, shape);
  Tensor keep(expanded.shape());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = 1.0 - expanded[i];
  out.features = graph.constant(std::move(keep)) * z + graph.constant(expanded) * normalized;
  out.draws.mask = std::move(mask);
  return out;
}

}  // namespace chain
