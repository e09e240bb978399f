#include "chain/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "chain/errors.hpp"
#include "chain/format.hpp"

namespace chain {

namespace {

std::vector<std::size_t> parse_sizes(std::string_view text) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) out.push_back(parse_u64(item));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::size_t parse_size(std::string_view text) { return parse_u64(text); }

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CHAIN_SIZE_KEY(field)                                                          \
  Key{#field, [](RunConfig& c, std::string_view v) { c.train.field = parse_size(v); }, \
      [](const RunConfig& c) { return std::to_string(c.train.field); }}
#define CHAIN_DOUBLE_KEY(field)                                                          \
  Key{#field, [](RunConfig& c, std::string_view v) { c.train.field = parse_double(v); }, \
      [](const RunConfig& c) { return format_double(c.train.field); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      CHAIN_SIZE_KEY(steps),
      CHAIN_SIZE_KEY(batch_size),
      CHAIN_DOUBLE_KEY(lr_d),
      CHAIN_DOUBLE_KEY(lr_g),
      CHAIN_DOUBLE_KEY(beta1),
      CHAIN_DOUBLE_KEY(beta2),
      Key{"seed", [](RunConfig& c, std::string_view v) { c.train.seed = parse_u64(v); },
          [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      Key{"dataset",
          [](RunConfig& c, std::string_view v) { c.train.dataset = parse_dataset(v); },
          [](const RunConfig& c) { return to_string(c.train.dataset); }},
      CHAIN_SIZE_KEY(real_train_size),
      CHAIN_SIZE_KEY(real_test_size),
      Key{"loss", [](RunConfig& c, std::string_view v) { c.train.loss = parse_loss_form(v); },
          [](const RunConfig& c) { return std::string(to_string(c.train.loss)); }},
      Key{"variant", [](RunConfig& c, std::string_view v) { c.train.variant = parse_variant(v); },
          [](const RunConfig& c) { return std::string(to_string(c.train.variant)); }},
      Key{"norm_mode",
          [](RunConfig& c, std::string_view v) {
            if (v == "default")
              c.train.norm_mode.reset();
            else
              c.train.norm_mode = parse_stat_mode(v);
          },
          [](const RunConfig& c) {
            return c.train.norm_mode ? std::string(to_string(*c.train.norm_mode))
                                     : std::string("default");
          }},
      // "all", a comma list of hidden-layer indices, or empty for none.
      Key{"norm_layers",
          [](RunConfig& c, std::string_view v) {
            if (v == "all")
              c.train.norm_layers.reset();
            else
              c.train.norm_layers = parse_sizes(v);
          },
          [](const RunConfig& c) {
            return c.train.norm_layers ? join_sizes(*c.train.norm_layers) : std::string("all");
          }},
      CHAIN_DOUBLE_KEY(lambda),
      CHAIN_DOUBLE_KEY(tau),
      CHAIN_DOUBLE_KEY(delta_p),
      CHAIN_DOUBLE_KEY(eps),
      CHAIN_DOUBLE_KEY(decay),
      CHAIN_DOUBLE_KEY(p_init),
      Key{"disc_widths",
          [](RunConfig& c, std::string_view v) { c.train.disc_widths = parse_sizes(v); },
          [](const RunConfig& c) { return join_sizes(c.train.disc_widths); }},
      Key{"gen_widths",
          [](RunConfig& c, std::string_view v) { c.train.gen_widths = parse_sizes(v); },
          [](const RunConfig& c) { return join_sizes(c.train.gen_widths); }},
      CHAIN_SIZE_KEY(latent_dim),
      CHAIN_DOUBLE_KEY(slope),
      CHAIN_SIZE_KEY(spatial_h),
      CHAIN_SIZE_KEY(spatial_w),
      CHAIN_SIZE_KEY(diag_every),
      Key{"variants",
          [](RunConfig& c, std::string_view v) {
            c.variants.clear();
            if (trim(v).empty()) return;
            for (auto name : split(v, ',')) c.variants.push_back(parse_variant(name));
          },
          [](const RunConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < c.variants.size(); ++i) {
              if (i) out += ',';
              out += to_string(c.variants[i]);
            }
            return out;
          }},
  };
  return table;
}

#undef CHAIN_SIZE_KEY
#undef CHAIN_DOUBLE_KEY

std::string line_error(std::size_t line, const std::string& what) {
  return "config line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::train:
      return "train";
    case Command::verify:
      return "verify";
    case Command::ablate:
      return "ablate";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  if (name == "train") return Command::train;
  if (name == "verify") return Command::verify;
  if (name == "ablate") return Command::ablate;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.name);
    return out;
  }();
  return names;
}

RunConfig parse_config(std::string_view text) {
  std::map<std::string_view, const Key*> lookup;
  for (const auto& k : keys()) lookup.emplace(k.name, &k);

  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(line_error(line_no, "expected 'key = value'"));
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(line_error(line_no, "missing key"));
      const auto it = lookup.find(key);
      if (it == lookup.end())
        throw ConfigError(line_error(line_no, "unknown key '" + std::string(key) + "'"));
      if (!seen.emplace(key).second)
        throw ConfigError(line_error(line_no, "duplicate key '" + std::string(key) + "'"));
      try {
        it->second->set(cfg, value);
      } catch (const DomainError& e) {
        throw ConfigError(line_error(line_no, "key '" + std::string(key) + "': " + e.what()));
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }

  try {
    cfg.train.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  for (const auto& k : keys()) os << k.name << " = " << k.get(config) << '\n';
  return os.str();
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str());
  cfg.config_path = path;
  return cfg;
}

}  // namespace chain
