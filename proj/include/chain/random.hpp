#pragma once

#include <cstdint>
#include <random>

namespace chain {

using Rng = std::mt19937_64;

// Independent, reproducible stream `stream` derived from a run seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

}  // namespace chain
