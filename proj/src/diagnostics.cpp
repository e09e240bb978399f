#include "chain/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "chain/errors.hpp"

namespace chain {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError("relative_error shape mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  const double scale = std::max(l2_norm(a), l2_norm(b));
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / scale;
}

double grad_norm_input(const ModelFn& model, const Tensor& batch) {
  Graph g;
  const Var x = g.leaf(batch, true);
  const ModelOutput out = model(g, x);
  const Var total = sum(out.scores);
  if (!g.requires_grad(total)) return 0.0;
  g.backward(total);
  return g.has_grad(x) ? l2_norm(g.grad(x)) : 0.0;
}

double grad_norm_weights(const ModelFn& model, const Tensor& batch) {
  Graph g;
  const Var x = g.constant(batch);
  const ModelOutput out = model(g, x);
  const Var avg = mean(out.scores);
  if (!g.requires_grad(avg)) return 0.0;
  g.backward(avg);
  double sq = 0.0;
  for (const Var& w : out.weights) {
    if (!g.has_grad(w)) continue;
    for (double v : g.grad(w).data()) sq += v * v;
  }
  return std::sqrt(sq);
}

std::vector<double> singular_values(const Tensor& matrix) {
  if (matrix.rank() != 2) throw DimensionError("singular_values expects a matrix");
  Eigen::MatrixXd m(matrix.dim(0), matrix.dim(1));
  for (std::size_t i = 0; i < matrix.dim(0); ++i)
    for (std::size_t j = 0; j < matrix.dim(1); ++j) m(i, j) = matrix.at(i, j);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

double largest_singular_value(const Tensor& matrix) {
  const auto s = singular_values(matrix);
  return s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
}

double effective_rank(const Tensor& features) {
  const auto s = singular_values(features);
  double total = 0.0;
  for (double v : s) total += v;
  if (!(total > 0.0)) throw DomainError("effective rank of an all-zero matrix");
  double entropy = 0.0;
  for (double v : s) {
    const double q = v / total;
    if (q > 0.0) entropy -= q * std::log(q);
  }
  return std::exp(entropy);
}

CosineSummary mean_pairwise_cosine(const Tensor& features) {
  if (features.rank() != 2) throw DimensionError("mean_pairwise_cosine expects B x d");
  const std::size_t rows = features.dim(0), cols = features.dim(1);
  std::vector<std::size_t> kept;
  std::vector<double> norms(rows, 0.0);
  CosineSummary out;
  for (std::size_t i = 0; i < rows; ++i) {
    norms[i] = l2_norm(features.data().subspan(i * cols, cols));
    if (norms[i] > 0.0) {
      kept.push_back(i);
    } else {
      ++out.zero_rows;
    }
  }
  if (kept.size() < 2) throw DomainError("mean_pairwise_cosine needs two nonzero rows");
  double total = 0.0;
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      const std::size_t i = kept[a], j = kept[b];
      double dot = 0.0;
      for (std::size_t k = 0; k < cols; ++k) dot += features.at(i, k) * features.at(j, k);
      total += std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      ++out.pairs;
    }
  out.mean = total / static_cast<double>(out.pairs);
  return out;
}

double channel_correlation(const Tensor& y, std::size_t i, std::size_t j) {
  if (y.rank() != 2) throw DimensionError("channel_correlation expects B x d");
  if (i == j) throw DomainError("channel_correlation needs two distinct channels");
  if (i >= y.dim(1) || j >= y.dim(1)) throw DimensionError("channel index out of range");
  const std::size_t n = y.dim(0);
  double mi = 0.0, mj = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    mi += y.at(b, i);
    mj += y.at(b, j);
  }
  mi /= static_cast<double>(n);
  mj /= static_cast<double>(n);
  double cov = 0.0, vi = 0.0, vj = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double a = y.at(b, i) - mi;
    const double c = y.at(b, j) - mj;
    cov += a * c;
    vi += a * a;
    vj += c * c;
  }
  if (vi == 0.0 || vj == 0.0) throw DomainError("channel_correlation: zero-variance channel");
  return cov / std::sqrt(vi * vj);
}

LipschitzEstimate lipschitz_estimate(const VectorMap& map, const Sampler& sampler,
                                     std::size_t pairs, Rng& rng) {
  if (pairs == 0) throw DomainError("lipschitz_estimate needs at least one pair");
  LipschitzEstimate est;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Tensor u = sampler(rng);
    const Tensor v = sampler(rng);
    Tensor du(u.shape());
    for (std::size_t i = 0; i < u.size(); ++i) du[i] = u[i] - v[i];
    const double denom = l2_norm(du);
    if (denom == 0.0) {
      ++est.skipped;
      continue;
    }
    const Tensor fu = map(u);
    const Tensor fv = map(v);
    Tensor df(fu.shape());
    for (std::size_t i = 0; i < fu.size(); ++i) df[i] = fu[i] - fv[i];
    est.sampled = std::max(est.sampled, l2_norm(df) / denom);
    ++est.pairs;
  }
  return est;
}

double diagonal_operator_norm(std::span<const double> diagonal) {
  double best = 0.0;
  for (double v : diagonal) best = std::max(best, std::fabs(v));
  return best;
}

LipschitzEstimate lipschitz_estimate(std::span<const double> diagonal,
                                     const Sampler& sampler, std::size_t pairs, Rng& rng) {
  std::vector<double> diag(diagonal.begin(), diagonal.end());
  const VectorMap map = [diag](const Tensor& x) {
    const std::size_t d = diag.size();
    if (x.size() % d != 0) throw DimensionError("diagonal map width mismatch");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * diag[i % d];
    return out;
  };
  LipschitzEstimate est = lipschitz_estimate(map, sampler, pairs, rng);
  est.exact = diagonal_operator_norm(diagonal);
  return est;
}

}  // namespace chain
