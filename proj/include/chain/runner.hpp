#pragma once

#include <ostream>

#include "chain/config.hpp"

namespace chain {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitConfigError = 2,
  kExitTrainingAbort = 3,
};

// Executes the configured command, writing artifacts under config.out_dir:
//   train  -> metrics.csv, state_snapshot.txt
//   verify -> verify_report.txt, verify_report.csv
//   ablate -> ablate_<variant>.csv per variant (run concurrently)
// Progress and errors go to `log`.
int run_experiment(const RunConfig& config, std::ostream& log);

}  // namespace chain
