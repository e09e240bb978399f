#include "chain/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "chain/autodiff.hpp"
#include "chain/diagnostics.hpp"
#include "chain/errors.hpp"
#include "chain/norm.hpp"
#include "chain/tensor.hpp"

namespace chain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Accumulates checks into a report.
class Checker {
 public:
  Checker(std::string theorem, double tolerance, std::uint64_t seed) {
    report_.theorem = std::move(theorem);
    report_.tolerance = tolerance;
    report_.seed = seed;
    report_.worst_margin = kInf;
  }

  // One inequality with signed slack `margin`; NaN counts as a failure.
  void check(double margin) {
    if (!(margin >= 0.0)) ++failures_in_trial_;
    if (std::isnan(margin))
      report_.worst_margin = -kInf;
    else
      report_.worst_margin = std::min(report_.worst_margin, margin);
  }

  void end_trial() {
    ++report_.trials;
    if (failures_in_trial_ > 0) ++report_.failures;
    failures_in_trial_ = 0;
  }

  void set(const std::string& name, double v) {
    for (auto& [k, old] : report_.values)
      if (k == name) {
        old = v;
        return;
      }
    report_.values.emplace_back(name, v);
  }

  VerificationReport finish() && { return std::move(report_); }

 private:
  VerificationReport report_;
  std::size_t failures_in_trial_ = 0;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Cosine similarity; 0 when either vector vanishes.
double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double enumerate_expected_cosine(const std::vector<std::vector<double>>& pts) {
  double s = 0.0;
  for (const auto& a : pts)
    for (const auto& b : pts) s += cosine(a, b);
  return s / static_cast<double>(pts.size() * pts.size());
}

void require_symmetric(const SymmetricPointSet& set) {
  if (set.points.empty()) throw DomainError("centering check needs at least one support point");
  const std::size_t d = set.center.size();
  if (d == 0) throw DimensionError("centering check needs a non-empty center");
  for (const auto& p : set.points)
    if (p.size() != d) throw DimensionError("support point dimension differs from center");
  for (const auto& p : set.points) {
    const bool mirrored = std::any_of(set.points.begin(), set.points.end(), [&](const auto& q) {
      for (std::size_t i = 0; i < d; ++i) {
        const double target = 2.0 * set.center[i] - p[i];
        if (std::fabs(q[i] - target) > 1e-12 * std::max(1.0, std::fabs(target))) return false;
      }
      return true;
    });
    if (!mirrored) throw DomainError("distribution is not symmetric about its center");
  }
}

// Expected cosine before and after centering by the support mean.
std::pair<double, double> point_set_cosines(const SymmetricPointSet& set) {
  const std::size_t d = set.center.size();
  std::vector<double> mean(d, 0.0);
  for (const auto& p : set.points)
    for (std::size_t i = 0; i < d; ++i) mean[i] += p[i];
  for (double& m : mean) m /= static_cast<double>(set.points.size());
  auto centered = set.points;
  for (auto& p : centered)
    for (std::size_t i = 0; i < d; ++i) p[i] -= mean[i];
  return {enumerate_expected_cosine(set.points), enumerate_expected_cosine(centered)};
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double m = 0.0;
  for (double x : xs) m += x;
  m /= n;
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= (n - 1.0);
  return {m, std::sqrt(v / n)};
}

VerificationReport centering_exact(const SymmetricPointSet& set, std::uint64_t seed) {
  require_symmetric(set);
  Checker chk("centering_cosine", 1e-12, seed);
  const auto [uncentered, centered] = point_set_cosines(set);
  chk.check(1e-12 - std::fabs(centered));
  chk.check(uncentered - centered + 1e-12);
  chk.end_trial();
  chk.set("uncentered_mean", uncentered);
  chk.set("centered_mean", centered);
  return std::move(chk).finish();
}

VerificationReport centering_two_point(const RandomTwoPoint& spec, std::size_t trials,
                                       std::uint64_t seed) {
  if (spec.dim == 0) throw DimensionError("two-point check needs dim >= 1");
  Checker chk("centering_cosine", 0.0, seed);
  Rng rng = make_rng(seed, 0);
  std::uniform_int_distribution<int> grid(-64, 64);
  double worst_uncentered = kInf;
  for (std::size_t t = 0; t < trials; ++t) {
    // Multiples of 1/16: the mirror point, mean and differences are exact.
    SymmetricPointSet set;
    set.center.resize(spec.dim);
    std::vector<double> v(spec.dim);
    do {
      for (std::size_t i = 0; i < spec.dim; ++i) {
        v[i] = grid(rng) / 16.0;
        set.center[i] = grid(rng) / 16.0;
      }
    } while (v == set.center);
    std::vector<double> w(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) w[i] = 2.0 * set.center[i] - v[i];
    set.points = {v, w};
    const auto [uncentered, centered] = point_set_cosines(set);
    chk.check(0.0 - std::fabs(centered));
    chk.check(uncentered - centered);
    chk.end_trial();
    worst_uncentered = std::min(worst_uncentered, uncentered);
  }
  chk.set("min_uncentered_mean", worst_uncentered);
  return std::move(chk).finish();
}

VerificationReport centering_gaussian(const GaussianCentering& spec, std::size_t trials,
                                      std::uint64_t seed) {
  if (spec.dim == 0) throw DimensionError("Gaussian centering check needs dim >= 1");
  if (spec.pairs < 2) throw DomainError("Gaussian centering check needs at least 2 pairs");
  if (!(spec.noise_sd > 0.0)) throw DomainError("noise_sd must be positive");
  Checker chk("centering_cosine", 3.0, seed);
  const std::size_t d = spec.dim;
  const std::size_t n = spec.pairs;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, t);
    std::vector<double> samples(2 * n * d);
    for (std::size_t k = 0; k < 2 * n; ++k)
      for (std::size_t i = 0; i < d; ++i)
        samples[k * d + i] = (i == 0 ? spec.offset : 0.0) + spec.noise_sd * standard_normal(rng);
    std::vector<double> mean(d, 0.0);
    for (std::size_t k = 0; k < 2 * n; ++k)
      for (std::size_t i = 0; i < d; ++i) mean[i] += samples[k * d + i];
    for (double& m : mean) m /= static_cast<double>(2 * n);

    std::vector<double> unc(n), cen(n), diff(n);
    std::vector<double> mu_z(d, 0.0);
    std::vector<double> a(d), b(d);
    for (std::size_t k = 0; k < n; ++k) {
      const std::span<const double> x(&samples[2 * k * d], d);
      const std::span<const double> y(&samples[(2 * k + 1) * d], d);
      unc[k] = cosine(x, y);
      for (std::size_t i = 0; i < d; ++i) {
        a[i] = x[i] - mean[i];
        b[i] = y[i] - mean[i];
      }
      cen[k] = cosine(a, b);
      diff[k] = unc[k] - cen[k];
      const double nx = norm2(x);
      const double ny = norm2(y);
      for (std::size_t i = 0; i < d; ++i) mu_z[i] += x[i] / nx + y[i] / ny;
    }
    for (double& m : mu_z) m /= static_cast<double>(2 * n);

    const MeanSe u = mean_se(unc);
    const MeanSe c = mean_se(cen);
    const MeanSe g = mean_se(diff);
    chk.check(3.0 * c.se - std::fabs(c.mean));
    chk.check(g.mean + 3.0 * g.se);
    chk.end_trial();
    chk.set("uncentered_mean", u.mean);
    chk.set("uncentered_se", u.se);
    chk.set("centered_mean", c.mean);
    chk.set("centered_se", c.se);
    chk.set("gap_se", g.se);
    chk.set("mu_z_sqr", dot(mu_z, mu_z));
    chk.set("pairs", static_cast<double>(n));
  }
  return std::move(chk).finish();
}

}  // namespace

double VerificationReport::value(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw DomainError("report '" + theorem + "' has no value '" + name + "'");
}

std::string format_report_line(const VerificationReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << r.theorem << ": " << (r.passed() ? "PASS" : "FAIL") << " trials=" << r.trials
     << " failures=" << r.failures << " worst_margin=" << r.worst_margin
     << " tolerance=" << r.tolerance << " seed=" << r.seed;
  return os.str();
}

VerificationReport verify_centering_cosine(const CenteringDistribution& dist,
                                           std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw DomainError("verifier needs at least one trial");
  return std::visit(
      [&](const auto& spec) -> VerificationReport {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, SymmetricPointSet>)
          return centering_exact(spec, seed);
        else if constexpr (std::is_same_v<T, RandomTwoPoint>)
          return centering_two_point(spec, trials, seed);
        else
          return centering_gaussian(spec, trials, seed);
      },
      dist);
}

// ---------------------------------------------------------------------------

SigmaSampler log_normal_sigma_sampler(double eps) {
  const double floor = std::sqrt(eps);
  return [floor](Rng& rng) {
    std::uniform_int_distribution<std::size_t> len(1, 16);
    std::vector<double> sigma(len(rng));
    for (double& s : sigma) s = std::max(floor, std::exp(standard_normal(rng)));
    return sigma;
  };
}

VerificationReport verify_scaling_lipschitz(const SigmaSampler& sampler, std::size_t trials,
                                            std::uint64_t seed, std::size_t lcrms_pairs) {
  if (trials == 0) throw DomainError("verifier needs at least one trial");
  constexpr double tol = 1e-12;
  Checker chk("scaling_lipschitz", tol, seed);
  Rng rng = make_rng(seed, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::vector<double> sigma = sampler(rng);
    if (sigma.empty()) throw DimensionError("sigma sampler returned an empty vector");
    for (double s : sigma)
      if (!(s > 0.0)) throw DomainError("sigma must be positive");
    std::vector<double> inv(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) inv[i] = 1.0 / sigma[i];

    const auto argmin = static_cast<std::size_t>(
        std::min_element(sigma.begin(), sigma.end()) - sigma.begin());
    const double expected = 1.0 / sigma[argmin];
    const Sampler vectors = [n = sigma.size()](Rng& r) {
      Tensor x(Shape{n});
      for (double& v : x.data()) v = standard_normal(r);
      return x;
    };
    const LipschitzEstimate est = lipschitz_estimate(inv, vectors, 32, rng);
    const double closed = *est.exact;
    chk.check(tol - std::fabs(closed - expected) / expected);
    chk.check(closed * (1.0 + tol) - est.sampled);

    Tensor e(Shape{sigma.size()});
    e[argmin] = 1.0;
    const Tensor zero(Shape{sigma.size()});
    const LipschitzEstimate hit = lipschitz_estimate(
        inv, [&, k = 0](Rng&) mutable { return (k++ % 2 == 0) ? e : zero; }, 1, rng);
    chk.check(tol - std::fabs(hit.sampled - closed) / closed);
    chk.end_trial();
  }

  // LC-RMSNorm with frozen batch statistics is 1-Lipschitz on the whole batch.
  if (lcrms_pairs > 0) {
    Rng r = make_rng(seed, 1);
    const std::size_t batch = 16, channels = 8;
    Tensor y(Shape{batch, channels});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < channels; ++c)
        y.at(b, c) = std::exp(standard_normal(r)) * standard_normal(r);
    const ChannelStats stats = channel_stats(y, 1e-5);
    const VectorMap map = [&](const Tensor& x) { return lcrms_normalize(x, stats); };
    const Sampler draw = [&](Rng& rr) {
      Tensor x(Shape{batch, channels});
      for (double& v : x.data()) v = 3.0 * standard_normal(rr);
      return x;
    };
    const LipschitzEstimate est = lipschitz_estimate(map, draw, lcrms_pairs, r);
    chk.check(1.0 + 1e-9 - est.sampled);
    chk.end_trial();
    chk.set("lcrms_sampled_lipschitz", est.sampled);
    chk.set("lcrms_pairs", static_cast<double>(est.pairs));
  }
  return std::move(chk).finish();
}

// ---------------------------------------------------------------------------

std::vector<double> expected_arms_backward(const std::vector<double>& grad_out,
                                           const std::vector<double>& y_check, double p,
                                           double psi_c, double psi_min) {
  if (grad_out.size() != y_check.size() || grad_out.empty())
    throw DimensionError("expected_arms_backward: gradient and features differ in length");
  const double b = static_cast<double>(grad_out.size());
  const double k = ((1.0 - p) * psi_c + p * psi_min) / psi_c;
  const double a = p * psi_min / psi_c;
  const double s = dot(grad_out, y_check) / b;
  std::vector<double> out(grad_out.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grad_out[i] * k - a * y_check[i] * s;
  return out;
}

VerificationReport verify_chain_grad_bound(std::size_t trials, const GradBoundShapes& shapes,
                                           std::uint64_t seed) {
  if (trials == 0) throw DomainError("verifier needs at least one trial");
  if (shapes.min_batch < 2 || shapes.min_batch > shapes.max_batch ||
      shapes.min_channels < 1 || shapes.min_channels > shapes.max_channels ||
      shapes.min_inputs < 1 || shapes.min_inputs > shapes.max_inputs)
    throw DomainError("gradient-bound shape ranges are invalid");
  constexpr double tol = 1e-9;
  Checker chk("chain_grad_bound", tol, seed);
  Rng rng = make_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick_b(shapes.min_batch, shapes.max_batch);
  std::uniform_int_distribution<std::size_t> pick_d(shapes.min_channels, shapes.max_channels);
  std::uniform_int_distribution<std::size_t> pick_k(shapes.min_inputs, shapes.max_inputs);

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t B = pick_b(rng), d = pick_d(rng), k_in = pick_k(rng);
    const double p = uniform01(rng);
    Tensor A(Shape{B, k_in}), W(Shape{k_in, d});
    for (double& v : A.data()) v = standard_normal(rng);
    for (double& v : W.data()) v = standard_normal(rng);
    const Tensor Y = matmul(A, W);
    const ChannelStats stats = channel_stats(Y, shapes.eps);
    const double s_max = largest_singular_value(A);

    for (std::size_t c = 0; c < d; ++c) {
      std::vector<double> g(B), y_check(B);
      for (std::size_t b = 0; b < B; ++b) {
        g[b] = standard_normal(rng);
        y_check[b] = Y.at(b, c) / stats.psi[c];
      }
      const double psi_c = stats.psi[c];
      const auto dy = expected_arms_backward(g, y_check, p, psi_c, stats.psi_min);

      const double k = ((1.0 - p) * psi_c + p * stats.psi_min) / psi_c;
      const double gy = dot(g, y_check);
      const double lhs = dot(dy, dy);
      const double rhs = dot(g, g) * k * k -
                         2.0 * (1.0 - p) * p * stats.psi_min / (B * psi_c) * gy * gy;
      chk.check(rhs + tol - lhs);

      // dW_c = A^T dy_c
      double dw_sq = 0.0;
      for (std::size_t j = 0; j < k_in; ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < B; ++b) s += A.at(b, j) * dy[b];
        dw_sq += s * s;
      }
      chk.check(s_max * s_max * lhs + tol - dw_sq);
    }
    chk.end_trial();
  }
  return std::move(chk).finish();
}

// ---------------------------------------------------------------------------

VerificationReport verify_decorrelation(std::size_t trials, const DecorrelationSetup& setup,
                                        std::uint64_t seed) {
  if (trials == 0) throw DomainError("verifier needs at least one trial");
  if (!(std::fabs(setup.rho) < 1.0))
    throw DomainError("decorrelation construction needs |rho| < 1");
  if (!(setup.psi_ratio > 0.0 && setup.psi_ratio <= 1.0))
    throw DomainError("decorrelation construction needs psi_min/psi_i in (0, 1]");
  if (setup.mc_samples < 3) throw DomainError("decorrelation check needs at least 3 samples");
  if (setup.p_grid.empty()) throw DomainError("decorrelation check needs a p grid");
  for (double p : setup.p_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p grid values must lie in [0,1]");

  Checker chk("decorrelation", 3.0, seed);
  const std::size_t n = setup.mc_samples;
  const double rn = std::sqrt(static_cast<double>(n));
  // Channel i has psi 1, channel j has psi psi_ratio (so psi_min = psi_ratio).
  const double psi[2] = {1.0, setup.psi_ratio};
  const double ratio[2] = {setup.psi_ratio / psi[0], setup.psi_ratio / psi[1]};
  const double side = std::sqrt(1.0 - setup.rho * setup.rho);

  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, t);
    Tensor y(Shape{n, 2});
    for (std::size_t b = 0; b < n; ++b) {
      const double z1 = standard_normal(rng);
      const double z2 = standard_normal(rng);
      y.at(b, 0) = psi[0] * z1;
      y.at(b, 1) = psi[1] * (setup.rho * z1 + side * z2);
    }
    for (double p : setup.p_grid) {
      Tensor det(Shape{n, 2}), sto(Shape{n, 2});
      const Tensor mask = sample_mask(n, 2, p, rng);
      for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t c = i % 2;
        det[i] = (1.0 - p + p * ratio[c]) * y[i];
        sto[i] = (1.0 - mask[i] + mask[i] * ratio[c]) * y[i];
      }
      const double rho_det = channel_correlation(det, 0, 1);
      const double rho_sto = channel_correlation(sto, 0, 1);
      const double se = std::hypot((1.0 - rho_det * rho_det) / rn,
                                   (1.0 - rho_sto * rho_sto) / rn);
      chk.check(rho_det - rho_sto + 3.0 * se);
      if (p == 0.0 || p == 1.0) chk.check(3.0 * se - std::fabs(rho_det - rho_sto));
      if (p == 0.5) {
        chk.check(rho_det - rho_sto - 3.0 * se);
        chk.set("rho_det_p05", rho_det);
        chk.set("rho_sto_p05", rho_sto);
        chk.set("se_p05", se);
      }

      // Second moments against their closed forms, per channel.
      for (std::size_t c = 0; c < 2; ++c) {
        std::vector<double> dsq(n), ssq(n);
        for (std::size_t b = 0; b < n; ++b) {
          dsq[b] = det.at(b, c) * det.at(b, c);
          ssq[b] = sto.at(b, c) * sto.at(b, c);
        }
        const double ey2 = psi[c] * psi[c];
        const double k = 1.0 - p + p * ratio[c];
        const MeanSe md = mean_se(dsq);
        const MeanSe ms = mean_se(ssq);
        chk.check(3.0 * md.se - std::fabs(md.mean - k * k * ey2));
        chk.check(3.0 * ms.se - std::fabs(ms.mean - (1.0 - p + p * ratio[c] * ratio[c]) * ey2));
      }
    }
    chk.end_trial();
  }
  chk.set("mc_samples", static_cast<double>(n));
  return std::move(chk).finish();
}

// ---------------------------------------------------------------------------

namespace {

Tensor random_features(Rng& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  Shape shape;
  if (coin(rng) == 0) {
    std::uniform_int_distribution<std::size_t> b(2, 8), d(1, 6);
    shape = {b(rng), d(rng)};
  } else {
    std::uniform_int_distribution<std::size_t> b(2, 4), d(1, 3), s(1, 3);
    shape = {b(rng), d(rng), s(rng), s(rng)};
  }
  Tensor y(shape);
  for (double& v : y.data()) v = 0.5 + 2.0 * standard_normal(rng);
  return y;
}

}  // namespace

VerificationReport verify_running_consistency(std::size_t trials,
                                              const RunningConsistencySetup& setup,
                                              std::uint64_t seed) {
  if (trials == 0) throw DomainError("verifier needs at least one trial");
  if (!(setup.decay >= 0.0 && setup.decay < 1.0)) throw DomainError("decay must lie in [0,1)");
  constexpr double tol = 1e-9;
  Checker chk("running_consistency", tol, seed);
  Rng rng = make_rng(seed, 0);

  for (std::size_t t = 0; t < trials; ++t) {
    const Tensor y = random_features(rng);
    const std::size_t d = y.dim(1);
    const double p = uniform01(rng);
    Tensor weights(y.shape());
    for (double& v : weights.data()) v = standard_normal(rng);

    // decay = 0: running path against the autodiff batch path, same mask.
    NormState running = NormState::create(Variant::chain, d);
    running.decay = 0.0;
    running.p = p;
    NormState batch = running;
    batch.variant = Variant::chain_batch;
    batch.mode = StatMode::batch;

    Graph g1;
    const Var x1 = g1.leaf(y);
    Rng mask_rng = make_rng(seed, 1000 + t);
    const LayerOutput r = chain_layer_forward(x1, running, true, mask_rng);
    g1.backward(sum(r.features * g1.constant(weights)) + r.reg);

    Graph g2;
    const Var x2 = g2.leaf(y);
    LayerDraws frozen;
    frozen.mask = r.draws.mask;
    const LayerOutput b = chain_layer_forward(x2, batch, true, mask_rng, &frozen);
    g2.backward(sum(b.features * g2.constant(weights)) + b.reg);

    double fwd = 0.0, bwd = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      fwd = std::max(fwd, std::fabs(r.features.value()[i] - b.features.value()[i]));
      bwd = std::max(bwd, std::fabs(g1.grad(x1)[i] - g2.grad(x2)[i]));
    }
    chk.check(tol - fwd);
    chk.check(tol - bwd);

    // Identical batches from a zero start: relative error is decay^T.
    NormState conv = NormState::create(Variant::chain, d);
    conv.decay = setup.decay;
    for (std::size_t k = 0; k < setup.repeats; ++k) {
      Graph g;
      Rng unused = make_rng(seed, 2000 + t);
      chain_layer_forward(g.constant(y), conv, true, unused);
    }
    const ChannelStats stats = channel_stats(y, 1e-5);
    const double bound = std::pow(setup.decay, static_cast<double>(setup.repeats));
    for (std::size_t c = 0; c < d; ++c) {
      const double target = stats.psi[c] * stats.psi[c] - 1e-5;  // mean of Y^2
      const double rel = std::fabs(conv.running_psi_sqr[c] - target) / target;
      chk.check(bound * (1.0 + 1e-6) + 1e-13 - rel);
    }

    // Zero upstream gradient: the running Psi decays geometrically to 0.
    NormState quiet = NormState::create(Variant::chain, d);
    quiet.decay = setup.decay;
    for (double& v : quiet.running_Psi) v = standard_normal(rng);
    const std::vector<double> start = quiet.running_Psi;
    const Tensor zero(y.shape());
    const std::vector<double> ones(d, 1.0);
    for (std::size_t k = 0; k < setup.repeats; ++k)
      rmsnorm_running_backward(zero, y, ones, 1.0, quiet);
    for (std::size_t c = 0; c < d; ++c)
      chk.check(bound * std::fabs(start[c]) * (1.0 + 1e-9) + 1e-300 -
                std::fabs(quiet.running_Psi[c]));
    chk.end_trial();
  }
  chk.set("repeats", static_cast<double>(setup.repeats));
  return std::move(chk).finish();
}

// ---------------------------------------------------------------------------

std::vector<VerificationReport> run_theorem_suite(std::uint64_t seed) {
  std::vector<std::future<VerificationReport>> jobs;
  jobs.push_back(std::async(std::launch::async, [seed] {
    return verify_centering_cosine(GaussianCentering{}, 1, seed);
  }));
  jobs.push_back(std::async(std::launch::async, [seed] {
    return verify_scaling_lipschitz(log_normal_sigma_sampler(), 1000, seed);
  }));
  jobs.push_back(std::async(std::launch::async, [seed] {
    return verify_chain_grad_bound(1000, GradBoundShapes{}, seed);
  }));
  jobs.push_back(std::async(std::launch::async, [seed] {
    return verify_decorrelation(1, DecorrelationSetup{}, seed);
  }));
  jobs.push_back(std::async(std::launch::async, [seed] {
    return verify_running_consistency(100, RunningConsistencySetup{}, seed);
  }));
  std::vector<VerificationReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace chain
