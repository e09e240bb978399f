#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "chain/norm.hpp"

namespace chain {

// Flat `layer<i>.<field> = value` text, one line per field; per-channel
// vectors are comma separated. parse_states(serialize_states(s)) == s.
std::string serialize_states(const std::vector<NormState>& states);
std::vector<NormState> parse_states(std::string_view text);

}  // namespace chain
