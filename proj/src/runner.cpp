#include "chain/runner.hpp"

#include <future>
#include <system_error>

#include "chain/errors.hpp"
#include "chain/metrics_io.hpp"
#include "chain/snapshot.hpp"
#include "chain/theorems.hpp"

namespace chain {

namespace {

void prepare_out_dir(const std::filesystem::path& dir) {
  if (dir.empty()) throw ConfigError("no output directory given");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

TrainConfig seeded(const RunConfig& config) {
  TrainConfig tc = config.train;
  tc.seed = config.seed();
  return tc;
}

int run_train(const RunConfig& config, std::ostream& log) {
  GanTrainer trainer(seeded(config));
  const auto records = trainer.run();
  write_metrics(records, config.out_dir / "metrics.csv");
  write_file(config.out_dir / "state_snapshot.txt",
             serialize_states(trainer.discriminator().norm_states()));
  log << "train: " << records.size() << " steps written to "
      << (config.out_dir / "metrics.csv").string() << '\n';
  return kExitOk;
}

int run_verify(const RunConfig& config, std::ostream& log) {
  const auto reports = run_theorem_suite(config.seed());
  const std::string text = reports_text(reports);
  write_file(config.out_dir / "verify_report.txt", text);
  write_file(config.out_dir / "verify_report.csv", reports_csv(reports));
  log << text;
  for (const auto& r : reports)
    if (!r.passed()) return kExitVerifyFailed;
  return kExitOk;
}

int run_ablate(const RunConfig& config, std::ostream& log) {
  if (config.variants.empty()) throw ConfigError("config key 'variants': list is empty");
  const std::uint64_t seed = config.seed();
  std::vector<TrainConfig> configs;
  for (Variant v : config.variants) {
    TrainConfig tc = seeded(config);
    tc.variant = v;
    if (tc.norm_mode == StatMode::running && !supports_running(v)) tc.norm_mode.reset();
    try {
      tc.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    configs.push_back(std::move(tc));
  }

  std::vector<std::future<void>> jobs;
  for (const auto& tc : configs) {
    jobs.push_back(std::async(std::launch::async, [&config, tc, seed] {
      const auto records = train_run(tc);
      const std::string name(to_string(tc.variant));
      write_metrics(records, config.out_dir / ("ablate_" + name + ".csv"),
                    {"variant=" + name + " seed=" + std::to_string(seed)});
    }));
  }
  // Wait for every job before surfacing the first error.
  std::exception_ptr first;
  for (auto& j : jobs) {
    try {
      j.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
  log << "ablate: " << configs.size() << " variants written to " << config.out_dir.string()
      << '\n';
  return kExitOk;
}

}  // namespace

int run_experiment(const RunConfig& config, std::ostream& log) {
  try {
    prepare_out_dir(config.out_dir);
    switch (config.command) {
      case Command::train:
        return run_train(config, log);
      case Command::verify:
        return run_verify(config, log);
      case Command::ablate:
        return run_ablate(config, log);
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const IoError& e) {
    log << "output error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const TrainingAbort& e) {
    log << "training aborted: " << e.what() << '\n';
    return kExitTrainingAbort;
  }
  return kExitConfigError;
}

}  // namespace chain
