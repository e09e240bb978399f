#include "chain/metrics.hpp"

#include <cmath>
#include <numeric>

namespace chain {

namespace {

double mean_or_zero(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool finite_all(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

double MetricsRecord::erank() const { return mean_or_zero(erank_per_probe_layer); }

double MetricsRecord::mean_cosine() const { return mean_or_zero(mean_cosine_per_probe_layer); }

bool MetricsRecord::all_finite() const {
  for (double x : {d_loss, g_loss, p, grad_norm_input, grad_norm_weights, D_real_mean,
                   D_fake_mean, D_test_mean, reg_value})
    if (!std::isfinite(x)) return false;
  return finite_all(erank_per_probe_layer) && finite_all(mean_cosine_per_probe_layer) &&
         finite_all(erank_fake_per_probe_layer) && finite_all(mean_cosine_fake_per_probe_layer);
}

}  // namespace chain
