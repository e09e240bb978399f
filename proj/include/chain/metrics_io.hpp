#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "chain/metrics.hpp"
#include "chain/theorems.hpp"

namespace chain {

inline constexpr std::string_view kMetricsHeader =
    "step,d_loss,g_loss,p,grad_norm_input,grad_norm_weights,erank,mean_cosine,D_real,D_fake,"
    "D_test,reg";

// `preamble` lines are written first, each prefixed with "# ".
std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        const std::vector<std::string>& preamble = {});
void write_metrics(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                   const std::vector<std::string>& preamble = {});

inline constexpr std::string_view kReportHeader =
    "theorem,passed,trials,failures,worst_margin,tolerance,seed";
std::string reports_csv(const std::vector<VerificationReport>& reports);
std::string reports_text(const std::vector<VerificationReport>& reports);

// Writes `contents` verbatim (binary mode, so LF stays LF). Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chain
