#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chain/gan.hpp"
#include "chain/norm.hpp"

namespace chain {

enum class Command { train, verify, ablate };
std::string_view to_string(Command c);
Command parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::train;
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  TrainConfig train;
  std::vector<Variant> variants{Variant::chain, Variant::minus_lc};  // ablate only

  std::uint64_t seed() const { return seed_override.value_or(train.seed); }
  bool operator==(const RunConfig&) const = default;
};

// Flat `key = value` lines, `#` starts a comment. Unknown or repeated keys,
// malformed lines and out-of-range values throw ConfigError; syntax errors
// carry the line number, range errors the key name.
RunConfig parse_config(std::string_view text);
// Every file-level key, in a fixed order. parse_config(serialize_config(c))
// reproduces c apart from the command-line fields.
std::string serialize_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// Accepted keys, in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace chain
