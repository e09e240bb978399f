// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "chain/gan.hpp"
#include "chain/norm.hpp"
#include "chain/theorems.hpp"
#include "oracle.hpp"

using namespace chain;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // CPU-time budget
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome gradient_oracles() {
  struct Case {
    Variant v;
    StatMode m;
  };
  const std::vector<Case> cases{
      {Variant::chain, StatMode::running},      {Variant::chain, StatMode::batch},
      {Variant::chain_batch, StatMode::batch},  {Variant::chain_dtm, StatMode::running},
      {Variant::chain_dtm, StatMode::batch},    {Variant::plus_0c, StatMode::running},
      {Variant::plus_0c, StatMode::batch},      {Variant::minus_lc, StatMode::running},
      {Variant::minus_lc, StatMode::batch},     {Variant::minus_0mr, StatMode::running},
      {Variant::minus_arms, StatMode::running}, {Variant::bn, StatMode::batch},
      {Variant::bn_plus_lc, StatMode::batch},   {Variant::rms_plain, StatMode::batch}};
  const int per_case = 100;
  double worst = 0.0;
  std::string worst_case;
  std::size_t bad = 0;
  Rng rng = make_rng(2024);
  for (const auto& c : cases) {
    for (int k = 0; k < per_case; ++k) {
      const Shape shape = oracle::random_feature_shape(rng);
      const Tensor y = oracle::randn(shape, rng, 1.5, 0.3);
      const Tensor w = oracle::randn(shape, rng);
      const NormState st = oracle::random_state(c.v, c.m, shape[1], rng);
      const double e = oracle::check_layer_gradient(st, y, w, rng()).rel_err;
      if (!(e <= 1e-5)) ++bad;
      if (e > worst) {
        worst = e;
        worst_case = std::string(to_string(c.v)) + "/" + std::string(to_string(c.m));
      }
    }
  }
  return {bad == 0, fmt("%zu variant/mode cases x %d instances, failures=%zu, max rel err=%.3g (%s)",
                        cases.size(), per_case, bad, worst, worst_case.c_str())};
}

// 2 ------------------------------------------------------------------------

Outcome scaling_lipschitz() {
  const auto r = verify_scaling_lipschitz(log_normal_sigma_sampler(), 1000, 11, 10000);
  const double lc = r.value("lcrms_sampled_lipschitz");
  const bool ok = r.passed() && r.trials >= 1000 && lc <= 1.0 + 1e-9 &&
                  r.value("lcrms_pairs") >= 10000;
  return {ok, fmt("%zu trials, failures=%zu, worst margin=%.3g, LC-RMS sampled Lipschitz=%.12f "
                  "over %.0f pairs",
                  r.trials, r.failures, r.worst_margin, lc, r.value("lcrms_pairs"))};
}

// 3 ------------------------------------------------------------------------

Outcome centering() {
  const auto two = verify_centering_cosine(RandomTwoPoint{8}, 1000, 12);
  const auto mc = verify_centering_cosine(GaussianCentering{16, 5.0, 1.0, 100000}, 1, 13);
  const double centered = mc.value("centered_mean"), cse = mc.value("centered_se");
  const double gap = mc.value("uncentered_mean") - centered, gse = mc.value("gap_se");
  const bool ok = two.passed() && two.tolerance == 0.0 && mc.passed() &&
                  std::fabs(centered) <= 3 * cse && gap > 10 * gse;
  return {ok, fmt("two-point: %zu trials, failures=%zu (exact); Gaussian: centered=%.5f "
                  "(3SE=%.5f), uncentered=%.5f, gap=%.1f SE",
                  two.trials, two.failures, centered, 3 * cse, mc.value("uncentered_mean"),
                  gap / gse)};
}

// 4 ------------------------------------------------------------------------

Outcome grad_bound() {
  const auto r = verify_chain_grad_bound(1000, GradBoundShapes{}, 14);
  // worst_margin is slack + tolerance; the criterion asks slack >= -1e-9.
  const bool ok = r.passed() && r.trials >= 1000 && r.worst_margin >= 0.0;
  return {ok, fmt("%zu instances, failures=%zu, worst slack + 1e-9 = %.3g", r.trials, r.failures,
                  r.worst_margin)};
}

// 5 ------------------------------------------------------------------------

Outcome decorrelation() {
  const auto r = verify_decorrelation(1, DecorrelationSetup{}, 15);
  const double det = r.value("rho_det_p05"), sto = r.value("rho_sto_p05"), se = r.value("se_p05");
  const bool ok = r.passed() && det - sto > 3 * se;
  return {ok, fmt("p=0.5: rho'=%.4f rho_dot=%.4f effect=%.1f SE; checks=%zu failures=%zu", det,
                  sto, (det - sto) / se, r.trials, r.failures)};
}

// 6 ------------------------------------------------------------------------

Outcome running() {
  const auto r = verify_running_consistency(100, RunningConsistencySetup{200, 0.9}, 16);
  return {r.passed(), fmt("%zu trials, failures=%zu, worst margin=%.3g", r.trials, r.failures,
                          r.worst_margin)};
}

// 7, 8 ---------------------------------------------------------------------

TrainConfig smoke_config(Variant v, std::uint64_t seed) {
  TrainConfig c;
  c.steps = 2000;
  c.seed = seed;
  c.variant = v;
  c.diag_every = 5;
  return c;
}

std::vector<std::vector<MetricsRecord>> smoke_runs;  // CHAIN, minus_LC per seed

double late_median_grad(const std::vector<MetricsRecord>& rows) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.step >= rows.size() - 500 && r.step % 5 == 0) v.push_back(r.grad_norm_input);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome mechanism() {
  int held = 0;
  bool finite = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto chain_rows = train_run(smoke_config(Variant::chain, seed));
    const auto lc_rows = train_run(smoke_config(Variant::minus_lc, seed));
    for (const auto& r : chain_rows) finite = finite && r.all_finite();
    const double a = late_median_grad(chain_rows), b = late_median_grad(lc_rows);
    if (a < b) ++held;
    detail += fmt("seed %llu: %.3f vs %.3f; ", static_cast<unsigned long long>(seed), a, b);
    smoke_runs.push_back(chain_rows);
    smoke_runs.push_back(lc_rows);
  }
  detail += fmt("CHAIN < minus_LC on %d/3 seeds, CHAIN finite=%s", held, finite ? "yes" : "no");
  return {finite && held >= 2, "median grad_norm_input over last 500 steps, " + detail};
}

Outcome controller() {
  // (a) every trajectory recorded so far, plus a fresh short one if none.
  if (smoke_runs.empty()) {
    TrainConfig c;
    c.steps = 300;
    smoke_runs.push_back(train_run(c));
  }
  const double dp = TrainConfig{}.delta_p;
  std::size_t steps = 0, bad = 0, moves = 0;
  for (const auto& rows : smoke_runs) {
    double prev = TrainConfig{}.p_init;
    for (const auto& r : rows) {
      const bool in_range = r.p >= 0.0 && r.p <= 1.0;
      const bool legal = r.p == prev || r.p == std::clamp(prev + dp, 0.0, 1.0) ||
                         r.p == std::clamp(prev - dp, 0.0, 1.0);
      if (!in_range || !legal) ++bad;
      if (r.p != prev) ++moves;
      prev = r.p;
      ++steps;
    }
  }
  // (b) discriminator forced positive on real data: p climbs to the clamp.
  TrainConfig c;
  c.steps = 120;
  c.delta_p = 0.01;
  c.tau = 0.5;
  c.lr_d = 0.0;
  c.lr_g = 0.0;
  c.diag_every = 1000;
  GanTrainer t(c);
  t.discriminator().params().back() = Tensor(Shape{1, 1}, 100.0);
  double prev = 0.0;
  bool monotone = true;
  std::size_t reached = 0;
  for (std::size_t i = 0; i < c.steps; ++i) {
    const double p = t.step().p;
    if (prev < 1.0 ? p != std::clamp(prev + c.delta_p, 0.0, 1.0) : p != 1.0) monotone = false;
    if (p == 1.0 && reached == 0) reached = i + 1;
    prev = p;
  }
  const bool ok = bad == 0 && moves > 0 && monotone && reached > 0;
  return {ok, fmt("%zu recorded steps, %zu p moves, illegal=%zu; forced-positive run monotone=%s, "
                  "clamped at 1 after %zu steps",
                  steps, moves, bad, monotone ? "yes" : "no", reached)};
}

// 9 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "chain_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "steps = 300\nseed = 5\ndiag_every = 3\n";
  std::vector<std::string> csv, snap;
  for (const char* tag : {"a", "b"}) {
    const std::string cmd = std::string(CHAIN_CLI_PATH) + " train --config " +
                            (dir / "run.cfg").string() + " --out " + (dir / tag).string() +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "chain_cli train failed"};
    csv.push_back(slurp(dir / tag / "metrics.csv"));
    snap.push_back(slurp(dir / tag / "state_snapshot.txt"));
  }
  const bool ok = !csv[0].empty() && csv[0] == csv[1] && snap[0] == snap[1];
  return {ok, fmt("metrics.csv %zu bytes identical=%s, snapshot identical=%s", csv[0].size(),
                  csv[0] == csv[1] ? "yes" : "no", snap[0] == snap[1] ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient oracle suite", 60, gradient_oracles},
      {2, "scaling Lipschitz constant", 10, scaling_lipschitz},
      {3, "centering and cosine", 30, centering},
      {4, "CHAIN gradient bounds", 30, grad_bound},
      {5, "decorrelation", 60, decorrelation},
      {6, "running statistics", 10, running},
      {7, "mechanism smoke test", 300, mechanism},
      {8, "p controller", 10, controller},
      {9, "determinism", 60, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const std::clock_t c0 = std::clock();
    const auto w0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double cpu = double(std::clock() - c0) / CLOCKS_PER_SEC;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
    // Budgets are CPU seconds of this process; 8 reuses 7's trajectories.
    const bool in_budget = cpu <= c.budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    std::printf("criterion %d (%s): %s | %s | cpu %.1fs wall %.1fs budget %.0fs%s\n", c.id,
                c.name.c_str(), pass ? "PASS" : "FAIL", o.detail.c_str(), cpu, wall, c.budget_s,
                in_budget ? "" : " EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
