#pragma once

// Test-side oracles. Deliberately independent of the library's own
// finite-difference helper so a bug there cannot hide a bug in backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "chain/autodiff.hpp"
#include "chain/norm.hpp"
#include "chain/random.hpp"
#include "chain/tensor.hpp"

namespace oracle {

using chain::Shape;
using chain::Tensor;

inline Tensor central_diff(const std::function<double(const Tensor&)>& f, const Tensor& x,
                           double h = 1e-5) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Norm-wise relative error; `floor` keeps near-zero true gradients (where FD
// roundoff dominates) from blowing up the ratio.
inline double rel_err(const Tensor& a, const Tensor& b, double floor = 0.0) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(std::max(na, nb)), floor);
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

inline Tensor randn(const Shape& shape, chain::Rng& rng, double scale = 1.0,
                    double shift = 0.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = shift + scale * chain::standard_normal(rng);
  return t;
}

// Random B x d or B x d x H x W features.
inline Shape random_feature_shape(chain::Rng& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  if (coin(rng) == 0) {
    std::uniform_int_distribution<std::size_t> b(2, 6), d(1, 5);
    return {b(rng), d(rng)};
  }
  std::uniform_int_distribution<std::size_t> b(2, 3), d(1, 3), s(1, 2);
  return {b(rng), d(rng), s(rng), s(rng)};
}

struct LayerCheck {
  double rel_err = 0.0;
  Tensor autodiff;
  Tensor numeric;
};

// Gradient of  sum(R * features) + reg  w.r.t. the layer input, by backward()
// and by central differences with the mask and scale_min of the recorded pass
// replayed. Each evaluation starts from a copy of `state`.
inline LayerCheck check_layer_gradient(const chain::NormState& state, const Tensor& y,
                                       const Tensor& weights, std::uint64_t mask_seed) {
  chain::NormState st = state;
  chain::Graph g;
  const chain::Var x = g.leaf(y);
  chain::Rng rng = chain::make_rng(mask_seed);
  const chain::LayerOutput out = chain::chain_layer_forward(x, st, true, rng);
  g.backward(chain::sum(out.features * g.constant(weights)) + out.reg);

  const chain::LayerDraws frozen = out.draws;
  const auto f = [&](const Tensor& v) {
    chain::NormState s2 = state;
    chain::Graph g2;
    chain::Rng unused = chain::make_rng(mask_seed);
    const chain::LayerOutput o = chain::chain_layer_forward(g2.constant(v), s2, true, unused,
                                                            &frozen);
    double total = o.reg.value().item();
    for (std::size_t i = 0; i < v.size(); ++i) total += o.features.value()[i] * weights[i];
    return total;
  };
  LayerCheck c;
  c.autodiff = g.grad(x);
  c.numeric = central_diff(f, y);
  // BN on a 2 x 1 batch is +-1 whatever y is; the true gradient is ~1e-6 and
  // pure roundoff is then ~1e-5 of it. Scale against the upstream gradient.
  double wn = 0.0;
  for (double v : weights.data()) wn += v * v;
  c.rel_err = rel_err(c.autodiff, c.numeric, 1e-3 * std::sqrt(wn));
  return c;
}

// A random state for `variant` in `mode`; running mode uses decay 0 so its
// custom backward is the exact gradient.
inline chain::NormState random_state(chain::Variant variant, chain::StatMode mode,
                                     std::size_t channels, chain::Rng& rng) {
  chain::NormState st = chain::NormState::create(variant, channels);
  st.mode = mode;
  st.p = chain::uniform01(rng);
  st.lambda = 0.5 + chain::uniform01(rng);
  if (mode == chain::StatMode::running) st.decay = 0.0;
  return st;
}

}  // namespace oracle
