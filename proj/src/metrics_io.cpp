#include "chain/metrics_io.hpp"

#include <fstream>

#include "chain/errors.hpp"
#include "chain/format.hpp"

namespace chain {

std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        const std::vector<std::string>& preamble) {
  std::string out;
  for (const auto& line : preamble) out += "# " + line + '\n';
  out += kMetricsHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.step);
    for (double v : {r.d_loss, r.g_loss, r.p, r.grad_norm_input, r.grad_norm_weights, r.erank(),
                     r.mean_cosine(), r.D_real_mean, r.D_fake_mean, r.D_test_mean, r.reg_value}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_metrics(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                   const std::vector<std::string>& preamble) {
  write_file(path, metrics_csv(records, preamble));
}

std::string reports_csv(const std::vector<VerificationReport>& reports) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : reports) {
    out += r.theorem + ',' + (r.passed() ? "1" : "0") + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.failures) + ',' + format_double(r.worst_margin) + ',' +
           format_double(r.tolerance) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string reports_text(const std::vector<VerificationReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += format_report_line(r) + '\n';
  return out;
}

}  // namespace chain
