#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chain/autodiff.hpp"
#include "chain/metrics.hpp"
#include "chain/norm.hpp"
#include "chain/random.hpp"
#include "chain/tensor.hpp"

namespace chain {

// ---------------------------------------------------------------------------
// Synthetic data

enum class DatasetKind { ring, gauss_mixture };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::ring;
  std::size_t components = 8;  // gauss_mixture only

  bool operator==(const DatasetSpec&) const = default;
};

// "ring" or "gauss_mixture(k)".
DatasetSpec parse_dataset(std::string_view tag);
std::string to_string(const DatasetSpec& spec);

inline constexpr double kRingNoise = 0.05;
inline constexpr double kMixtureRadius = 2.0;
inline constexpr double kMixtureNoise = 0.1;

Tensor sample_synthetic(const DatasetSpec& spec, std::size_t count, Rng& rng);

// ---------------------------------------------------------------------------
// Networks

struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

Linear make_linear(std::size_t in, std::size_t out, double slope, Rng& rng);

struct DiscriminatorSpec {
  std::vector<std::size_t> layer_widths{64, 64, 64};  // hidden widths
  double slope = 0.2;
  // One entry per hidden layer; nullopt leaves that layer unnormalized.
  std::vector<std::optional<Variant>> norm_placement;
  std::size_t spatial_h = 1;
  std::size_t spatial_w = 1;

  void validate() const;
};

// Hyperparameters copied into every normalization layer.
struct NormHyper {
  double lambda = 20.0;
  double tau = 0.5;
  double delta_p = 1e-3;
  double eps = 1e-5;
  double decay = 0.9;
  double p_init = 0.0;
  std::optional<StatMode> mode;  // nullopt: the variant's default
};

class Discriminator {
 public:
  struct Pass {
    Var scores;                  // B x 1
    Var reg;                     // sum of 0MR terms of this pass
    std::vector<Var> params;     // every parameter leaf, in params() order
    std::vector<Var> weights;    // weight matrices only
    std::vector<Var> probes;     // normalized pre-activation per hidden layer
    std::vector<std::size_t> stat_rows;
    std::vector<LayerDraws> draws;  // per normalized layer
  };

  Discriminator(DiscriminatorSpec spec, std::size_t input_dim, const NormHyper& hyper,
                Rng& init_rng);

  // Parameters as graph nodes: leaves when `trainable`, else constants.
  std::vector<Var> bind(Graph& g, bool trainable) const;

  // `params` comes from bind() on the same graph, so several passes can share
  // one set of leaves. `states` holds one entry per normalized layer and must
  // outlive the graph.
  Pass forward(Graph& g, Var x, const std::vector<Var>& params,
               std::vector<NormState>& states, bool training, Rng& rng,
               const std::vector<LayerDraws>* frozen = nullptr) const;
  Pass forward(Graph& g, Var x, std::vector<NormState>& states, bool training, Rng& rng,
               bool trainable = true) const {
    return forward(g, x, bind(g, trainable), states, training, rng);
  }

  const DiscriminatorSpec& spec() const noexcept { return spec_; }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  std::vector<NormState>& norm_states() noexcept { return states_; }
  const std::vector<NormState>& norm_states() const noexcept { return states_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<Tensor> params_;  // W0, b0, W1, b1, ..., W_out, b_out
  std::vector<NormState> states_;
};

class Generator {
 public:
  Generator(std::size_t latent_dim, std::vector<std::size_t> hidden, std::size_t out_dim,
            double slope, Rng& init_rng);

  struct Pass {
    Var samples;
    std::vector<Var> params;
  };
  Pass forward(Graph& g, Var z, bool trainable = true) const;

  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::vector<Tensor>& params() noexcept { return params_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }

 private:
  std::size_t latent_dim_;
  double slope_;
  std::vector<Tensor> params_;
};

class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps = 1e-8);
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// ---------------------------------------------------------------------------
// Losses

enum class LossForm { hinge, ipm };
std::string_view to_string(LossForm f);
LossForm parse_loss_form(std::string_view name);

// Discriminator objective on per-sample scores plus the accumulated 0MR terms.
Var disc_loss(Var real_scores, Var fake_scores, LossForm form, Var reg);
// -mean(h(fake)).
Var gen_loss(Var fake_scores);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 64;
  double lr_d = 2e-4;
  double lr_g = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  std::size_t real_train_size = 256;
  std::size_t real_test_size = 256;
  LossForm loss = LossForm::hinge;
  Variant variant = Variant::chain;
  std::optional<StatMode> norm_mode;
  // Hidden layers that get normalization; nullopt means all of them.
  std::optional<std::vector<std::size_t>> norm_layers;
  double lambda = 20.0;
  double tau = 0.5;
  double delta_p = 1e-3;
  double eps = 1e-5;
  double decay = 0.9;
  double p_init = 0.0;
  std::vector<std::size_t> disc_widths{64, 64, 64};
  std::vector<std::size_t> gen_widths{64, 64, 64};
  std::size_t latent_dim = 8;
  double slope = 0.2;
  std::size_t spatial_h = 1;
  std::size_t spatial_w = 1;
  std::size_t diag_every = 1;

  // Throws DomainError naming the offending key.
  void validate() const;
  NormHyper norm_hyper() const;
  DiscriminatorSpec disc_spec() const;

  bool operator==(const TrainConfig&) const = default;
};

// Instrumentation for the separate real/fake normalization protocol.
struct ProtocolCounters {
  std::size_t real_norm_calls = 0;
  std::size_t fake_norm_calls = 0;
  std::size_t mixed_norm_calls = 0;  // statistics over rows of another pass
};

class GanTrainer {
 public:
  explicit GanTrainer(TrainConfig config);

  // One discriminator update, the p update, one generator update.
  MetricsRecord step();
  std::vector<MetricsRecord> run();

  const TrainConfig& config() const noexcept { return config_; }
  Discriminator& discriminator() noexcept { return disc_; }
  const Discriminator& discriminator() const noexcept { return disc_; }
  Generator& generator() noexcept { return gen_; }
  const ProtocolCounters& counters() const noexcept { return counters_; }
  std::size_t steps_done() const noexcept { return step_; }
  double p() const;

  const Tensor& real_train() const noexcept { return real_train_; }
  const Tensor& real_test() const noexcept { return real_test_; }

 private:
  Tensor sample_real_batch();
  Tensor sample_latent(std::size_t count);
  Tensor generate(const Tensor& z) const;
  void count_pass(const Discriminator::Pass& pass, std::size_t rows, bool real);
  void fill_diagnostics(MetricsRecord& rec, const Tensor& real_batch, const Tensor& fake_batch);

  TrainConfig config_;
  Rng init_rng_;
  Rng data_rng_;
  Rng train_rng_;
  Rng diag_rng_;
  Tensor real_train_;
  Tensor real_test_;
  Generator gen_;
  Discriminator disc_;
  Adam opt_d_;
  Adam opt_g_;
  ProtocolCounters counters_;
  std::size_t step_ = 0;
  std::optional<MetricsRecord> last_diag_;
};

MetricsRecord train_step(GanTrainer& trainer);
std::vector<MetricsRecord> train_run(const TrainConfig& config);

}  // namespace chain
