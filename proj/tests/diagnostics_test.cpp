#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chain/diagnostics.hpp"
#include "chain/errors.hpp"
#include "chain/gan.hpp"
#include "chain/norm.hpp"
#include "oracle.hpp"

using namespace chain;

namespace {

// D(x) = x w  (B x n times n x 1).
ModelFn linear_model(const Tensor& w) {
  return [w](Graph& g, Var x) {
    const Var wv = g.leaf(w);
    return ModelOutput{matmul(x, wv), {wv}};
  };
}

Tensor orthonormal_rows(std::size_t r, std::size_t d, Rng& rng) {
  // Gram-Schmidt on random rows.
  Tensor q(Shape{r, d});
  for (std::size_t i = 0; i < r; ++i) {
    std::vector<double> v(d);
    for (double& x : v) x = standard_normal(rng);
    for (std::size_t k = 0; k < i; ++k) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += v[j] * q.at(k, j);
      for (std::size_t j = 0; j < d; ++j) v[j] -= dot * q.at(k, j);
    }
    const double n = l2_norm(v);
    for (std::size_t j = 0; j < d; ++j) q.at(i, j) = v[j] / n;
  }
  return q;
}

}  // namespace

// --- finite differences ----------------------------------------------------

TEST(FiniteDiff, QuadraticAndLinear) {
  Rng rng = make_rng(1);
  const Tensor x = oracle::randn({3, 4}, rng);
  const Tensor g = finite_diff_grad(
      [](const Tensor& v) {
        double s = 0.0;
        for (double e : v.data()) s += e * e / 2.0;
        return s;
      },
      x, 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(g[i], x[i], 1e-9);

  const Tensor w = oracle::randn({3, 4}, rng);
  const Tensor lin = finite_diff_grad(
      [&](const Tensor& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
        return s;
      },
      x, 1e-5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(lin[i], w[i], 1e-10);
  EXPECT_THROW(finite_diff_grad([](const Tensor&) { return 0.0; }, x, 0.0), DomainError);
}

TEST(FiniteDiff, ChainLayerWithQuadraticHead) {
  Rng rng = make_rng(2);
  for (int k = 0; k < 20; ++k) {
    const Tensor y = oracle::randn({6, 3}, rng, 1.5, 0.5);
    NormState st = NormState::create(Variant::chain_batch, 3);
    st.p = uniform01(rng);
    Graph g;
    const Var x = g.leaf(y);
    Rng mask_rng = make_rng(k);
    NormState s1 = st;
    const LayerOutput out = chain_layer_forward(x, s1, true, mask_rng);
    g.backward(sum(square(out.features)) + out.reg);
    const LayerDraws frozen = out.draws;
    const Tensor fd = finite_diff_grad(
        [&](const Tensor& v) {
          NormState s2 = st;
          Graph g2;
          Rng unused = make_rng(0);
          const LayerOutput o = chain_layer_forward(g2.constant(v), s2, true, unused, &frozen);
          double total = o.reg.value().item();
          for (double f : o.features.value().data()) total += f * f;
          return total;
        },
        y, 1e-5);
    EXPECT_LE(relative_error(g.grad(x), fd), 1e-5);
  }
}

TEST(RelativeError, Basics) {
  EXPECT_EQ(relative_error(Tensor(Shape{2}), Tensor(Shape{2})), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(Tensor::matrix({{1, 0}}), Tensor::matrix({{0, 0}})), 1.0);
  EXPECT_THROW(relative_error(Tensor(Shape{2}), Tensor(Shape{3})), DimensionError);
}

// --- gradient norms --------------------------------------------------------

TEST(GradNorm, ConstantModelIsZero) {
  const ModelFn constant = [](Graph& g, Var x) {
    return ModelOutput{scale(matmul(x, g.constant(Tensor(Shape{3, 1}))), 0.0), {}};
  };
  Rng rng = make_rng(3);
  EXPECT_EQ(grad_norm_input(constant, oracle::randn({5, 3}, rng)), 0.0);
}

TEST(GradNorm, LinearClosedForms) {
  Rng rng = make_rng(4);
  for (int k = 0; k < 20; ++k) {
    const std::size_t b = 1 + k % 7, n = 1 + k % 5;
    const Tensor w = oracle::randn({n, 1}, rng);
    const Tensor x = oracle::randn({b, n}, rng, 2.0, 0.5);
    EXPECT_NEAR(grad_norm_input(linear_model(w), x), std::sqrt(double(b)) * l2_norm(w), 1e-12);
    std::vector<double> xbar(n, 0.0);
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < n; ++j) xbar[j] += x.at(i, j) / double(b);
    EXPECT_NEAR(grad_norm_weights(linear_model(w), x), l2_norm(xbar), 1e-12);
  }
}

TEST(GradNorm, ZeroInputBiasFreeFirstLayerHasNoWeightGradient) {
  Rng rng = make_rng(5);
  const Tensor w1 = oracle::randn({3, 4}, rng), w2 = oracle::randn({4, 1}, rng);
  const ModelFn model = [&](Graph& g, Var x) {
    const Var a = g.leaf(w1);
    const Var h = leaky_relu(add(matmul(x, a), g.constant(Tensor(Shape{1, 4}, 0.3))), 0.2);
    return ModelOutput{matmul(h, g.constant(w2)), {a}};
  };
  EXPECT_EQ(grad_norm_weights(model, Tensor(Shape{6, 3})), 0.0);
}

TEST(GradNorm, WeightGradientBoundedByLargestSingularValue) {
  // Y = A W: dL/dW = A^T dL/dY, so ||dW|| <= s_max(A) ||dY|| column by column.
  Rng rng = make_rng(6);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t b = 2 + k % 15, n = 1 + k % 8;
    const Tensor a = oracle::randn({b, n}, rng);
    const Tensor dy = oracle::randn({b, 1}, rng);
    const Tensor dw = matmul(transpose(a), dy);
    const double smax = largest_singular_value(a);
    EXPECT_LE(l2_norm(dw) * l2_norm(dw), smax * smax * l2_norm(dy) * l2_norm(dy) * (1 + 1e-12));
  }
}

TEST(GradNorm, LcLowersInputGradientAgainstPlainRms) {
  // Same initial weights, both normalizations fully on (p = 1, batch stats).
  int larger = 0;
  for (std::uint64_t net = 0; net < 100; ++net) {
    double norms[2];
    const Variant variants[2] = {Variant::chain, Variant::minus_lc};
    Rng data_rng = make_rng(10000 + net);
    const Tensor batch = oracle::randn({32, 2}, data_rng);
    for (int v = 0; v < 2; ++v) {
      DiscriminatorSpec spec;
      spec.layer_widths = {16, 16};
      spec.norm_placement = {variants[v], variants[v]};
      NormHyper hyper;
      hyper.mode = StatMode::batch;
      hyper.p_init = 1.0;
      Rng init = make_rng(net);
      const Discriminator d(spec, 2, hyper, init);
      auto states = d.norm_states();
      Rng mask_rng = make_rng(1);
      norms[v] = grad_norm_input(
          [&](Graph& g, Var x) {
            const auto pass = d.forward(g, x, states, true, mask_rng, false);
            return ModelOutput{pass.scores, pass.weights};
          },
          batch);
    }
    if (norms[1] > norms[0]) ++larger;
  }
  EXPECT_GE(larger, 90);
}

// --- singular values and effective rank ------------------------------------

TEST(SingularValues, Basics) {
  const auto s = singular_values(Tensor::matrix({{3, 0}, {0, -4}}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 4.0, 1e-12);
  EXPECT_NEAR(s[1], 3.0, 1e-12);
  EXPECT_NEAR(largest_singular_value(Tensor::matrix({{1, 1}, {1, 1}})), 2.0, 1e-12);
  EXPECT_THROW(singular_values(Tensor(Shape{2, 2, 1})), DimensionError);
}

TEST(EffectiveRank, Examples) {
  Rng rng = make_rng(7);
  for (std::size_t r = 1; r <= 5; ++r) {
    const Tensor q = orthonormal_rows(r, 6, rng);
    EXPECT_NEAR(effective_rank(q), double(r), 1e-10);
  }
  Tensor outer(Shape{4, 3});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) outer.at(i, j) = (i + 1.0) * (j - 1.5);
  EXPECT_NEAR(effective_rank(outer), 1.0, 1e-10);
  EXPECT_NEAR(effective_rank(Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}})), 2.0, 1e-12);
  EXPECT_THROW(effective_rank(Tensor(Shape{3, 3})), DomainError);
}

TEST(EffectiveRank, RangeAndScaleInvariance) {
  Rng rng = make_rng(8);
  for (int k = 0; k < 200; ++k) {
    const std::size_t b = 1 + k % 9, d = 1 + k % 6;
    const Tensor f = oracle::randn({b, d}, rng);
    const double e = effective_rank(f);
    EXPECT_GE(e, 1.0 - 1e-12);
    EXPECT_LE(e, double(std::min(b, d)) + 1e-12);
    Tensor scaled = f;
    const double c = std::exp(2.0 * standard_normal(rng));
    for (double& v : scaled.data()) v *= c;
    EXPECT_NEAR(effective_rank(scaled), e, 1e-9 * e);
  }
}

// --- cosine similarity -----------------------------------------------------

TEST(Cosine, Examples) {
  EXPECT_NEAR(mean_pairwise_cosine(Tensor::matrix({{1, 2}, {1, 2}})).mean, 1.0, 1e-15);
  EXPECT_NEAR(mean_pairwise_cosine(Tensor::matrix({{1, 2}, {-1, -2}})).mean, -1.0, 1e-15);
  const auto four = mean_pairwise_cosine(Tensor::matrix({{1, 0}, {-1, 0}, {0, 3}, {0, -3}}));
  EXPECT_NEAR(four.mean, -1.0 / 3.0, 1e-15);
  EXPECT_EQ(four.pairs, 6u);
}

TEST(Cosine, ZeroRowsExcludedAndCounted) {
  const auto s = mean_pairwise_cosine(Tensor::matrix({{1, 0}, {0, 0}, {2, 0}}));
  EXPECT_EQ(s.zero_rows, 1u);
  EXPECT_EQ(s.pairs, 1u);
  EXPECT_NEAR(s.mean, 1.0, 1e-15);
  EXPECT_THROW(mean_pairwise_cosine(Tensor::matrix({{1, 0}, {0, 0}})), DomainError);
}

TEST(Cosine, RangeAndRowScaleInvariance) {
  Rng rng = make_rng(9);
  for (int k = 0; k < 200; ++k) {
    const std::size_t b = 2 + k % 7, d = 1 + k % 5;
    Tensor f = oracle::randn({b, d}, rng, 1.0, 0.5 * standard_normal(rng));
    const double m = mean_pairwise_cosine(f).mean;
    EXPECT_GE(m, -1.0 - 1e-12);
    EXPECT_LE(m, 1.0 + 1e-12);
    for (std::size_t i = 0; i < b; ++i) {
      const double c = std::exp(standard_normal(rng));
      for (std::size_t j = 0; j < d; ++j) f.at(i, j) *= c;
    }
    EXPECT_NEAR(mean_pairwise_cosine(f).mean, m, 1e-12);
  }
}

// --- channel correlation ---------------------------------------------------

TEST(Correlation, Examples) {
  Rng rng = make_rng(10);
  Tensor y(Shape{50, 3});
  for (std::size_t b = 0; b < 50; ++b) {
    y.at(b, 0) = standard_normal(rng);
    y.at(b, 1) = 2.0 * y.at(b, 0);
    y.at(b, 2) = -y.at(b, 0);
  }
  EXPECT_NEAR(channel_correlation(y, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(channel_correlation(y, 0, 2), -1.0, 1e-12);
  EXPECT_THROW(channel_correlation(y, 1, 1), DomainError);
  EXPECT_THROW(channel_correlation(Tensor::matrix({{1, 2}, {1, 3}}), 0, 1), DomainError);
}

TEST(Correlation, IndependentChannelsAreNearlyUncorrelated) {
  Rng rng = make_rng(11);
  const Tensor y = oracle::randn({100000, 2}, rng);
  EXPECT_LE(std::fabs(channel_correlation(y, 0, 1)), 0.01);
}

TEST(Correlation, InvariantUnderPositiveAffineMaps) {
  Rng rng = make_rng(12);
  for (int k = 0; k < 100; ++k) {
    Tensor y = oracle::randn({20, 2}, rng);
    for (std::size_t b = 0; b < 20; ++b) y.at(b, 1) += 0.7 * y.at(b, 0);
    const double r = channel_correlation(y, 0, 1);
    const double a0 = std::exp(standard_normal(rng)), a1 = std::exp(standard_normal(rng));
    const double c0 = 5 * standard_normal(rng), c1 = 5 * standard_normal(rng);
    for (std::size_t b = 0; b < 20; ++b) {
      y.at(b, 0) = a0 * y.at(b, 0) + c0;
      y.at(b, 1) = a1 * y.at(b, 1) + c1;
    }
    EXPECT_NEAR(channel_correlation(y, 0, 1), r, 1e-12);
  }
}

// --- Lipschitz estimates ---------------------------------------------------

TEST(Lipschitz, Examples) {
  Rng rng = make_rng(13);
  const Sampler sampler = [](Rng& r) { return oracle::randn({1, 3}, r); };
  const auto id = lipschitz_estimate([](const Tensor& x) { return x; }, sampler, 100, rng);
  EXPECT_NEAR(id.sampled, 1.0, 1e-12);
  EXPECT_EQ(id.pairs, 100u);

  const std::vector<double> inv{1 / 2.0, 1 / 0.5, 1 / 1.0};
  const auto diag = lipschitz_estimate(inv, sampler, 1000, rng);
  ASSERT_TRUE(diag.exact.has_value());
  EXPECT_DOUBLE_EQ(*diag.exact, 2.0);
  EXPECT_LE(diag.sampled, 2.0 + 1e-12);
  EXPECT_GT(diag.sampled, 1.5);

  EXPECT_THROW(lipschitz_estimate([](const Tensor& x) { return x; }, sampler, 0, rng),
               DomainError);
}

TEST(Lipschitz, CoincidentPairsAreSkipped) {
  Rng rng = make_rng(14);
  const Sampler constant = [](Rng&) { return Tensor::matrix({{1, 2}}); };
  const auto est = lipschitz_estimate([](const Tensor& x) { return x; }, constant, 10, rng);
  EXPECT_EQ(est.skipped, 10u);
  EXPECT_EQ(est.sampled, 0.0);
}

TEST(Lipschitz, LcRmsWithFrozenStatsIsOneLipschitz) {
  Rng rng = make_rng(15);
  const Tensor ref = oracle::randn({16, 8}, rng, 2.0);
  const ChannelStats stats = channel_stats(ref, 1e-5);
  const auto est = lipschitz_estimate(
      [&](const Tensor& x) { return lcrms_normalize(x, stats); },
      [](Rng& r) { return oracle::randn({16, 8}, r, 3.0); }, 10000, rng);
  EXPECT_LE(est.sampled, 1.0 + 1e-9);
}
