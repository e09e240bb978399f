#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chain {

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// Strict parsers: the whole (trimmed) string must be consumed. Throw
// DomainError on malformed input.
double parse_double(std::string_view text);
std::uint64_t parse_u64(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace chain
