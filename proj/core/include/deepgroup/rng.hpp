#pragma once

#include <cstdint>
#include <random>

namespace deepgroup {

// Every stochastic step takes a caller-owned engine; nothing draws from global state.
using Rng = std::mt19937_64;

// splitmix64 finalizer. Used to derive independent, replayable sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for stream `index` under `parent`. A pure function of both arguments,
// so adding streams never perturbs existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix_seed(mix_seed(parent) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Uniformly pick one element of a non-empty random-access range.
template <class Range>
auto pick_uniform(const Range& r, Rng& rng) -> decltype(r[0]) {
  return r[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(r.size()) - 1))];
}

}  // namespace deepgroup
