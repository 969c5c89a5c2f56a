#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deepgroup/preflib.hpp"
#include "deepgroup/rng.hpp"

namespace deepgroup {

// Mallows draw by repeated insertion. `dispersion` in (0, 1]; 1 is uniform.
std::vector<AlternativeId> sample_mallows(const std::vector<AlternativeId>& center, double dispersion, Rng& rng);

/// Shape of one of the public election profiles the experiments use.
struct SurrogateSpec {
  std::string name;
  int num_alternatives = 0;
  int num_voters = 0;
  bool partial = false;            // top-t ballots rather than complete rankings
  std::vector<int> party_sizes;    // partial profiles: candidates per party
};

// Known names: dublin_west, dublin_north, meath, sushi.
SurrogateSpec surrogate_spec(std::string_view dataset);
std::vector<std::string> surrogate_names();

// Synthetic stand-in with the same m, voter count and ballot form as the
// named dataset, drawn from a Mallows mixture. Party-structured top-t
// ballots for the election profiles; complete rankings with a shared
// popularity core and a contrarian minority for sushi.
PreferenceProfile make_surrogate(const SurrogateSpec& spec, std::uint64_t seed);

}  // namespace deepgroup
