#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "chain/autodiff.hpp"
#include "chain/random.hpp"
#include "chain/tensor.hpp"

namespace chain {

// A differentiable model evaluated on a graph: per-sample scores plus the
// weight nodes whose gradients count towards the weight-gradient norm.
struct ModelOutput {
  Var scores;
  std::vector<Var> weights;
};
using ModelFn = std::function<ModelOutput(Graph&, Var input)>;

using ScalarFn = std::function<double(const Tensor&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-5);

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(const Tensor& a, const Tensor& b);

// || d(sum_b D(x_b)) / dX ||_2 over the whole batch tensor.
double grad_norm_input(const ModelFn& model, const Tensor& batch);
// || d(mean_b D(x_b)) / dtheta ||_2 over the concatenated weights.
double grad_norm_weights(const ModelFn& model, const Tensor& batch);

std::vector<double> singular_values(const Tensor& matrix);
double largest_singular_value(const Tensor& matrix);

// exp of the entropy of the l1-normalised singular values.
double effective_rank(const Tensor& features);

struct CosineSummary {
  double mean = 0.0;
  std::size_t pairs = 0;
  std::size_t zero_rows = 0;  // rows excluded because their norm is zero
};
CosineSummary mean_pairwise_cosine(const Tensor& features);

// Pearson correlation of columns i and j over the batch.
double channel_correlation(const Tensor& y, std::size_t i, std::size_t j);

struct LipschitzEstimate {
  double sampled = 0.0;          // max ratio over the sampled pairs
  std::optional<double> exact;   // closed form, when the map is diagonal
  std::size_t pairs = 0;
  std::size_t skipped = 0;       // coincident pairs
};

using VectorMap = std::function<Tensor(const Tensor&)>;
using Sampler = std::function<Tensor(Rng&)>;

LipschitzEstimate lipschitz_estimate(const VectorMap& map, const Sampler& sampler,
                                     std::size_t pairs, Rng& rng);
// Diagonal linear map x -> diag * x (applied along the last axis).
LipschitzEstimate lipschitz_estimate(std::span<const double> diagonal,
                                     const Sampler& sampler, std::size_t pairs, Rng& rng);
double diagonal_operator_norm(std::span<const double> diagonal);

}  // namespace chain
