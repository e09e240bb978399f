#include "chain/snapshot.hpp"

#include <map>
#include <sstream>

#include "chain/errors.hpp"
#include "chain/format.hpp"

namespace chain {

namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) out.push_back(parse_double(item));
  return out;
}

}  // namespace

std::string serialize_states(const std::vector<NormState>& states) {
  std::ostringstream os;
  os << "layers = " << states.size() << '\n';
  for (std::size_t i = 0; i < states.size(); ++i) {
    const NormState& s = states[i];
    const std::string k = "layer" + std::to_string(i) + '.';
    os << k << "variant = " << to_string(s.variant) << '\n'
       << k << "mode = " << to_string(s.mode) << '\n'
       << k << "p = " << format_double(s.p) << '\n'
       << k << "delta_p = " << format_double(s.delta_p) << '\n'
       << k << "tau = " << format_double(s.tau) << '\n'
       << k << "lambda = " << format_double(s.lambda) << '\n'
       << k << "eps = " << format_double(s.eps) << '\n'
       << k << "decay = " << format_double(s.decay) << '\n'
       << k << "running_updates = " << s.running_updates << '\n'
       << k << "running_psi_sqr = " << join(s.running_psi_sqr) << '\n'
       << k << "running_Psi = " << join(s.running_Psi) << '\n'
       << k << "running_mu = " << join(s.running_mu) << '\n';
  }
  return os.str();
}

std::vector<NormState> parse_states(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    if (!line.empty() && line.front() != '#') {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw DomainError("snapshot line " + std::to_string(line_no) + ": expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      if (!kv.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
        throw DomainError("snapshot line " + std::to_string(line_no) + ": duplicate key '" +
                          key + "'");
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }

  const auto take = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DomainError("snapshot: missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  const std::size_t layers = parse_u64(take("layers"));
  std::vector<NormState> out;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string k = "layer" + std::to_string(i) + '.';
    NormState s;
    s.variant = parse_variant(take(k + "variant"));
    s.mode = parse_stat_mode(take(k + "mode"));
    s.p = parse_double(take(k + "p"));
    s.delta_p = parse_double(take(k + "delta_p"));
    s.tau = parse_double(take(k + "tau"));
    s.lambda = parse_double(take(k + "lambda"));
    s.eps = parse_double(take(k + "eps"));
    s.decay = parse_double(take(k + "decay"));
    s.running_updates = parse_u64(take(k + "running_updates"));
    s.running_psi_sqr = parse_list(take(k + "running_psi_sqr"));
    s.running_Psi = parse_list(take(k + "running_Psi"));
    s.running_mu = parse_list(take(k + "running_mu"));
    s.validate();
    out.push_back(std::move(s));
  }
  if (!kv.empty()) throw DomainError("snapshot: unknown key '" + kv.begin()->first + "'");
  return out;
}

}  // namespace chain
