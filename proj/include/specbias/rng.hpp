#pragma once

#include <cstdint>
#include <random>

namespace specbias {

// splitmix64 finalizer; used to derive independent per-task streams from
// (seed, stream) so Monte Carlo results do not depend on scheduling.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0)
{
    return Engine{mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL))};
}

} // namespace specbias
