#include "chain/gan.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "chain/diagnostics.hpp"
#include "chain/errors.hpp"

namespace chain {

// ---------------------------------------------------------------------------
// Synthetic data

DatasetSpec parse_dataset(std::string_view tag) {
  if (tag == "ring") return {DatasetKind::ring, 8};
  constexpr std::string_view prefix = "gauss_mixture";
  if (tag.substr(0, prefix.size()) == prefix) {
    std::string_view rest = tag.substr(prefix.size());
    if (rest.empty()) return {DatasetKind::gauss_mixture, 8};
    if (rest.size() >= 3 && rest.front() == '(' && rest.back() == ')') {
      rest = rest.substr(1, rest.size() - 2);
      std::size_t k = 0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
      if (ec == std::errc() && ptr == rest.data() + rest.size() && k >= 1)
        return {DatasetKind::gauss_mixture, k};
    }
  }
  throw DomainError("unknown dataset '" + std::string(tag) + "'");
}

std::string to_string(const DatasetSpec& spec) {
  if (spec.kind == DatasetKind::ring) return "ring";
  return "gauss_mixture(" + std::to_string(spec.components) + ")";
}

Tensor sample_synthetic(const DatasetSpec& spec, std::size_t count, Rng& rng) {
  if (count == 0) throw DomainError("sample_synthetic: count must be positive");
  Tensor out(Shape{count, 2});
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < count; ++i) {
    double cx, cy, noise;
    if (spec.kind == DatasetKind::ring) {
      const double angle = two_pi * uniform01(rng);
      cx = std::cos(angle);
      cy = std::sin(angle);
      noise = kRingNoise;
    } else {
      if (spec.components == 0) throw DomainError("gauss_mixture needs k >= 1");
      const std::size_t k = std::uniform_int_distribution<std::size_t>(
          0, spec.components - 1)(rng);
      const double angle = two_pi * static_cast<double>(k) /
                           static_cast<double>(spec.components);
      cx = kMixtureRadius * std::cos(angle);
      cy = kMixtureRadius * std::sin(angle);
      noise = kMixtureNoise;
    }
    out.at(i, 0) = cx + noise * standard_normal(rng);
    out.at(i, 1) = cy + noise * standard_normal(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Networks

Linear make_linear(std::size_t in, std::size_t out, double slope, Rng& rng) {
  // He-uniform for a leaky-ReLU successor; bias in +-1/sqrt(fan_in).
  const double fan_in = static_cast<double>(in);
  const double w_bound = std::sqrt(6.0 / ((1.0 + slope * slope) * fan_in));
  const double b_bound = 1.0 / std::sqrt(fan_in);
  Linear l{Tensor(Shape{in, out}), Tensor(Shape{1, out})};
  for (double& v : l.weight.data()) v = w_bound * (2.0 * uniform01(rng) - 1.0);
  for (double& v : l.bias.data()) v = b_bound * (2.0 * uniform01(rng) - 1.0);
  return l;
}

void DiscriminatorSpec::validate() const {
  if (layer_widths.empty()) throw DomainError("discriminator needs a hidden layer");
  if (norm_placement.size() != layer_widths.size())
    throw DimensionError("norm_placement needs one entry per hidden layer");
  if (spatial_h == 0 || spatial_w == 0) throw DomainError("spatial extents must be positive");
  const std::size_t hw = spatial_h * spatial_w;
  for (std::size_t l = 0; l < layer_widths.size(); ++l) {
    if (layer_widths[l] == 0) throw DomainError("layer widths must be positive");
    if (norm_placement[l] && layer_widths[l] % hw != 0)
      throw DomainError("width " + std::to_string(layer_widths[l]) +
                        " is not divisible by spatial_h * spatial_w");
  }
}

Discriminator::Discriminator(DiscriminatorSpec spec, std::size_t input_dim,
                             const NormHyper& hyper, Rng& init_rng)
    : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t in = input_dim;
  const std::size_t hw = spec_.spatial_h * spec_.spatial_w;
  for (std::size_t l = 0; l < spec_.layer_widths.size(); ++l) {
    const std::size_t out = spec_.layer_widths[l];
    Linear lin = make_linear(in, out, spec_.slope, init_rng);
    params_.push_back(std::move(lin.weight));
    params_.push_back(std::move(lin.bias));
    if (const auto& variant = spec_.norm_placement[l]) {
      NormState st = NormState::create(*variant, out / hw);
      st.mode = hyper.mode.value_or(default_mode(*variant));
      st.lambda = hyper.lambda;
      st.tau = hyper.tau;
      st.delta_p = hyper.delta_p;
      st.eps = hyper.eps;
      st.decay = hyper.decay;
      st.p = hyper.p_init;
      st.validate();
      states_.push_back(std::move(st));
    }
    in = out;
  }
  Linear head = make_linear(in, 1, spec_.slope, init_rng);
  params_.push_back(std::move(head.weight));
  params_.push_back(std::move(head.bias));
}

std::vector<Var> Discriminator::bind(Graph& g, bool trainable) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const Tensor& p : params_) vars.push_back(trainable ? g.leaf(p) : g.constant(p));
  return vars;
}

Discriminator::Pass Discriminator::forward(Graph& g, Var x, const std::vector<Var>& params,
                                           std::vector<NormState>& states, bool training,
                                           Rng& rng,
                                           const std::vector<LayerDraws>* frozen) const {
  if (params.size() != params_.size()) throw DimensionError("parameter count mismatch");
  Pass pass;
  pass.reg = g.constant(Tensor::scalar(0.0));
  pass.params = params;
  const auto param = [&](std::size_t i) { return params[i]; };
  const std::size_t batch = x.shape().at(0);
  const std::size_t hw = spec_.spatial_h * spec_.spatial_w;
  std::size_t norm_index = 0;
  Var h = x;
  for (std::size_t l = 0; l < spec_.layer_widths.size(); ++l) {
    const Var w = param(2 * l);
    const Var b = param(2 * l + 1);
    pass.weights.push_back(w);
    Var y = matmul(h, w) + b;
    if (spec_.norm_placement[l]) {
      if (norm_index >= states.size()) throw DimensionError("missing normalization state");
      const std::size_t width = spec_.layer_widths[l];
      Var in = hw > 1 ? reshape(y, {batch, width / hw, spec_.spatial_h, spec_.spatial_w}) : y;
      const LayerDraws* replay = frozen ? &frozen->at(norm_index) : nullptr;
      LayerOutput lo = chain_layer_forward(in, states[norm_index], training, rng, replay);
      y = hw > 1 ? reshape(lo.features, {batch, width}) : lo.features;
      pass.reg = pass.reg + lo.reg;
      pass.stat_rows.push_back(lo.stat_rows);
      pass.draws.push_back(std::move(lo.draws));
      ++norm_index;
    }
    pass.probes.push_back(y);
    h = leaky_relu(y, spec_.slope);
  }
  const std::size_t head = 2 * spec_.layer_widths.size();
  const Var w = param(head);
  const Var b = param(head + 1);
  pass.weights.push_back(w);
  pass.scores = matmul(h, w) + b;
  return pass;
}

Generator::Generator(std::size_t latent_dim, std::vector<std::size_t> hidden,
                     std::size_t out_dim, double slope, Rng& init_rng)
    : latent_dim_(latent_dim), slope_(slope) {
  std::size_t in = latent_dim;
  hidden.push_back(out_dim);
  for (std::size_t width : hidden) {
    Linear lin = make_linear(in, width, slope, init_rng);
    params_.push_back(std::move(lin.weight));
    params_.push_back(std::move(lin.bias));
    in = width;
  }
}

Generator::Pass Generator::forward(Graph& g, Var z, bool trainable) const {
  Pass pass;
  Var h = z;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const Var w = trainable ? g.leaf(params_[2 * l]) : g.constant(params_[2 * l]);
    const Var b = trainable ? g.leaf(params_[2 * l + 1]) : g.constant(params_[2 * l + 1]);
    pass.params.push_back(w);
    pass.params.push_back(b);
    h = matmul(h, w) + b;
    if (l + 1 < layers) h = leaky_relu(h, slope_);
  }
  pass.samples = h;
  return pass;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: gradient count mismatch");
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.shape(), 0.0);
      v_.emplace_back(p.shape(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    auto g = grads[k].data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------
// Losses

std::string_view to_string(LossForm f) { return f == LossForm::hinge ? "hinge" : "ipm"; }

LossForm parse_loss_form(std::string_view name) {
  if (name == "hinge") return LossForm::hinge;
  if (name == "ipm") return LossForm::ipm;
  throw DomainError("unknown loss form '" + std::string(name) + "'");
}

Var disc_loss(Var real_scores, Var fake_scores, LossForm form, Var reg) {
  Var base = form == LossForm::ipm
                 ? mean(fake_scores) - mean(real_scores)
                 : mean(relu(add_scalar(-real_scores, 1.0))) +
                       mean(relu(add_scalar(fake_scores, 1.0)));
  return base + reg;
}

Var gen_loss(Var fake_scores) { return -mean(fake_scores); }

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  const auto fail = [](const std::string& key, const std::string& why) {
    throw DomainError("config key '" + key + "': " + why);
  };
  if (batch_size < 2) fail("batch_size", "must be at least 2");
  if (real_train_size < batch_size) fail("real_train_size", "must be >= batch_size");
  if (real_test_size < 2) fail("real_test_size", "must be at least 2");
  if (!(lr_d >= 0.0)) fail("lr_d", "must be non-negative");
  if (!(lr_g >= 0.0)) fail("lr_g", "must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0,1)");
  if (!(lambda >= 0.0)) fail("lambda", "must be non-negative");
  if (!(tau >= -1.0 && tau <= 1.0)) fail("tau", "must lie in [-1,1]");
  if (!(delta_p > 0.0 && delta_p <= 1.0)) fail("delta_p", "must lie in (0,1]");
  if (!(eps > 0.0)) fail("eps", "must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) fail("decay", "must lie in [0,1)");
  if (!(p_init >= 0.0 && p_init <= 1.0)) fail("p_init", "must lie in [0,1]");
  if (disc_widths.empty()) fail("disc_widths", "needs at least one hidden layer");
  if (gen_widths.empty()) fail("gen_widths", "needs at least one hidden layer");
  for (auto w : disc_widths)
    if (w == 0) fail("disc_widths", "widths must be positive");
  for (auto w : gen_widths)
    if (w == 0) fail("gen_widths", "widths must be positive");
  if (latent_dim == 0) fail("latent_dim", "must be positive");
  if (!(slope >= 0.0 && slope < 1.0)) fail("slope", "must lie in [0,1)");
  if (spatial_h == 0) fail("spatial_h", "must be positive");
  if (spatial_w == 0) fail("spatial_w", "must be positive");
  if (diag_every == 0) fail("diag_every", "must be positive");
  if (dataset.kind == DatasetKind::gauss_mixture && dataset.components == 0)
    fail("dataset", "gauss_mixture needs k >= 1");
  if (norm_mode == StatMode::running && !supports_running(variant))
    fail("norm_mode", std::string(to_string(variant)) + " only supports batch statistics");
  if (norm_layers)
    for (auto idx : *norm_layers)
      if (idx >= disc_widths.size()) fail("norm_layers", "index out of range");
  const auto spec = disc_spec();
  for (std::size_t l = 0; l < spec.layer_widths.size(); ++l)
    if (spec.norm_placement[l] && spec.layer_widths[l] % (spatial_h * spatial_w) != 0)
      fail("spatial_h", "normalized widths must be divisible by spatial_h * spatial_w");
}

NormHyper TrainConfig::norm_hyper() const {
  return NormHyper{lambda, tau, delta_p, eps, decay, p_init, norm_mode};
}

DiscriminatorSpec TrainConfig::disc_spec() const {
  DiscriminatorSpec spec;
  spec.layer_widths = disc_widths;
  spec.slope = slope;
  spec.spatial_h = spatial_h;
  spec.spatial_w = spatial_w;
  spec.norm_placement.assign(disc_widths.size(), std::nullopt);
  if (!norm_layers) {
    std::fill(spec.norm_placement.begin(), spec.norm_placement.end(), variant);
  } else {
    for (auto idx : *norm_layers)
      if (idx < spec.norm_placement.size()) spec.norm_placement[idx] = variant;
  }
  return spec;
}

namespace {

constexpr std::size_t kInputDim = 2;

enum Stream : std::uint64_t { kInitStream = 0, kDataStream = 1, kTrainStream = 2, kDiagStream = 3 };

double mean_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.size());
}

std::vector<Tensor> collect_grads(const Graph& g, const std::vector<Var>& vars) {
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  for (const Var& v : vars)
    grads.push_back(g.has_grad(v) ? g.grad(v) : Tensor(v.shape(), 0.0));
  return grads;
}

const TrainConfig& validated(const TrainConfig& c) {
  c.validate();
  return c;
}

}  // namespace

GanTrainer::GanTrainer(TrainConfig config)
    : config_(validated(config)),
      init_rng_(make_rng(config_.seed, kInitStream)),
      data_rng_(make_rng(config_.seed, kDataStream)),
      train_rng_(make_rng(config_.seed, kTrainStream)),
      diag_rng_(make_rng(config_.seed, kDiagStream)),
      real_train_(sample_synthetic(config_.dataset, config_.real_train_size, data_rng_)),
      real_test_(sample_synthetic(config_.dataset, config_.real_test_size, data_rng_)),
      gen_(config_.latent_dim, config_.gen_widths, kInputDim, config_.slope, init_rng_),
      disc_(config_.disc_spec(), kInputDim, config_.norm_hyper(), init_rng_),
      opt_d_(config_.lr_d, config_.beta1, config_.beta2),
      opt_g_(config_.lr_g, config_.beta1, config_.beta2) {}

double GanTrainer::p() const {
  const auto& states = disc_.norm_states();
  return states.empty() ? config_.p_init : states.front().p;
}

Tensor GanTrainer::sample_real_batch() {
  const std::size_t b = config_.batch_size;
  Tensor batch(Shape{b, kInputDim});
  std::uniform_int_distribution<std::size_t> pick(0, real_train_.dim(0) - 1);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t row = pick(train_rng_);
    for (std::size_t k = 0; k < kInputDim; ++k) batch.at(i, k) = real_train_.at(row, k);
  }
  return batch;
}

Tensor GanTrainer::sample_latent(std::size_t count) {
  Tensor z(Shape{count, gen_.latent_dim()});
  for (double& v : z.data()) v = standard_normal(train_rng_);
  return z;
}

Tensor GanTrainer::generate(const Tensor& z) const {
  Graph g;
  return gen_.forward(g, g.constant(z), false).samples.value();
}

void GanTrainer::count_pass(const Discriminator::Pass& pass, std::size_t rows, bool real) {
  for (std::size_t used : pass.stat_rows) {
    if (used != rows) ++counters_.mixed_norm_calls;
    ++(real ? counters_.real_norm_calls : counters_.fake_norm_calls);
  }
}

void GanTrainer::fill_diagnostics(MetricsRecord& rec, const Tensor& real_batch,
                                  const Tensor& fake_batch) {
  // Diagnostics run on copies of the normalization state so that measuring
  // never perturbs training.
  {
    auto states = disc_.norm_states();
    const ModelFn model = [&](Graph& g, Var x) {
      auto pass = disc_.forward(g, x, states, true, diag_rng_, false);
      return ModelOutput{pass.scores, pass.weights};
    };
    rec.grad_norm_input = grad_norm_input(model, real_batch);
  }
  {
    auto states = disc_.norm_states();
    const ModelFn model = [&](Graph& g, Var x) {
      auto pass = disc_.forward(g, x, states, true, diag_rng_, true);
      return ModelOutput{pass.scores, pass.weights};
    };
    rec.grad_norm_weights = grad_norm_weights(model, real_batch);
  }
  {
    auto states = disc_.norm_states();
    Graph g;
    const auto real_pass = disc_.forward(g, g.constant(real_batch), states, true, diag_rng_, false);
    const auto fake_pass = disc_.forward(g, g.constant(fake_batch), states, true, diag_rng_, false);
    for (const Var& probe : real_pass.probes) {
      rec.erank_per_probe_layer.push_back(effective_rank(probe.value()));
      rec.mean_cosine_per_probe_layer.push_back(mean_pairwise_cosine(probe.value()).mean);
    }
    for (const Var& probe : fake_pass.probes) {
      rec.erank_fake_per_probe_layer.push_back(effective_rank(probe.value()));
      rec.mean_cosine_fake_per_probe_layer.push_back(mean_pairwise_cosine(probe.value()).mean);
    }
  }
  {
    auto states = disc_.norm_states();
    Graph g;
    const auto pass = disc_.forward(g, g.constant(real_test_), states, false, diag_rng_, false);
    rec.D_test_mean = mean_of(pass.scores.value());
  }
}

MetricsRecord GanTrainer::step() {
  MetricsRecord rec;
  rec.step = step_;
  const std::size_t b = config_.batch_size;
  auto& states = disc_.norm_states();

  const Tensor real = sample_real_batch();
  const Tensor fake = generate(sample_latent(b));

  std::vector<double> real_scores;
  {
    Graph g;
    const auto params = disc_.bind(g, true);
    const auto pr = disc_.forward(g, g.constant(real), params, states, true, train_rng_);
    count_pass(pr, b, true);
    const auto pf = disc_.forward(g, g.constant(fake), params, states, true, train_rng_);
    count_pass(pf, b, false);
    const Var reg = pr.reg + pf.reg;
    const Var loss = disc_loss(pr.scores, pf.scores, config_.loss, reg);
    rec.d_loss = loss.value().item();
    if (!std::isfinite(rec.d_loss))
      throw TrainingAbort("non-finite discriminator loss at step " + std::to_string(step_));
    rec.reg_value = reg.value().item();
    rec.D_real_mean = mean_of(pr.scores.value());
    rec.D_fake_mean = mean_of(pf.scores.value());
    real_scores = pr.scores.value().values();
    g.backward(loss);
    opt_d_.step(disc_.params(), collect_grads(g, params));
  }

  for (auto& st : states) st = update_p(st, real_scores);

  {
    Graph g;
    const auto gp = gen_.forward(g, g.constant(sample_latent(b)), true);
    const auto dp = disc_.forward(g, gp.samples, states, true, train_rng_, false);
    count_pass(dp, b, false);
    const Var loss = gen_loss(dp.scores);
    rec.g_loss = loss.value().item();
    if (!std::isfinite(rec.g_loss))
      throw TrainingAbort("non-finite generator loss at step " + std::to_string(step_));
    g.backward(loss);
    opt_g_.step(gen_.params(), collect_grads(g, gp.params));
  }

  rec.p = p();
  if (!last_diag_ || step_ % config_.diag_every == 0) {
    fill_diagnostics(rec, real, fake);
    last_diag_ = rec;
  } else {
    rec.grad_norm_input = last_diag_->grad_norm_input;
    rec.grad_norm_weights = last_diag_->grad_norm_weights;
    rec.erank_per_probe_layer = last_diag_->erank_per_probe_layer;
    rec.mean_cosine_per_probe_layer = last_diag_->mean_cosine_per_probe_layer;
    rec.erank_fake_per_probe_layer = last_diag_->erank_fake_per_probe_layer;
    rec.mean_cosine_fake_per_probe_layer = last_diag_->mean_cosine_fake_per_probe_layer;
    rec.D_test_mean = last_diag_->D_test_mean;
  }
  ++step_;
  return rec;
}

std::vector<MetricsRecord> GanTrainer::run() {
  std::vector<MetricsRecord> out;
  out.reserve(config_.steps);
  for (std::size_t i = 0; i < config_.steps; ++i) out.push_back(step());
  return out;
}

MetricsRecord train_step(GanTrainer& trainer) { return trainer.step(); }

std::vector<MetricsRecord> train_run(const TrainConfig& config) {
  GanTrainer trainer(config);
  return trainer.run();
}

}  // namespace chain
