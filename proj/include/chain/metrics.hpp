#pragma once

#include <cstddef>
#include <vector>

namespace chain {

/// One training step's measurements.
struct MetricsRecord {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double p = 0.0;
  double grad_norm_input = 0.0;
  double grad_norm_weights = 0.0;
  // Probe layers are the normalized pre-activation features of every hidden
  // discriminator layer; real and fake passes are measured separately.
  std::vector<double> erank_per_probe_layer;
  std::vector<double> mean_cosine_per_probe_layer;
  std::vector<double> erank_fake_per_probe_layer;
  std::vector<double> mean_cosine_fake_per_probe_layer;
  double D_real_mean = 0.0;
  double D_fake_mean = 0.0;
  double D_test_mean = 0.0;
  double reg_value = 0.0;

  // Averages over probe layers of the real pass (the CSV columns).
  double erank() const;
  double mean_cosine() const;
  bool all_finite() const;

  bool operator==(const MetricsRecord&) const = default;
};

}  // namespace chain
