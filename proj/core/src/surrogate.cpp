#include "deepgroup/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace deepgroup {

std::vector<AlternativeId> sample_mallows(const std::vector<AlternativeId>& center, double dispersion, Rng& rng) {
  if (!(dispersion > 0.0 && dispersion <= 1.0)) throw std::invalid_argument("mallows dispersion must lie in (0, 1]");
  std::vector<AlternativeId> out;
  out.reserve(center.size());
  std::vector<double> weight;
  for (std::size_t i = 0; i < center.size(); ++i) {
    // Inserting at slot j (0 = front) creates i - j inversions w.r.t. the center.
    weight.assign(i + 1, 0.0);
    for (std::size_t j = 0; j <= i; ++j) weight[j] = std::pow(dispersion, static_cast<double>(i - j));
    std::discrete_distribution<std::size_t> slot(weight.begin(), weight.end());
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(slot(rng)), center[i]);
  }
  return out;
}

SurrogateSpec surrogate_spec(std::string_view dataset) {
  if (dataset == "dublin_west") return {"dublin_west", 9, 29'989, true, {2, 2, 1, 1, 1, 1, 1}};
  if (dataset == "dublin_north") return {"dublin_north", 12, 43'942, true, {3, 2, 2, 1, 1, 1, 1, 1}};
  if (dataset == "meath") return {"meath", 14, 64'081, true, {3, 3, 2, 2, 1, 1, 1, 1}};
  if (dataset == "sushi") return {"sushi", 10, 5'000, false, {}};
  throw std::invalid_argument("no surrogate shape for dataset '" + std::string(dataset) + "'");
}

std::vector<std::string> surrogate_names() { return {"dublin_west", "dublin_north", "meath", "sushi"}; }

namespace {

void shuffle(std::vector<AlternativeId>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1))]);
}

PreferenceProfile election_like(const SurrogateSpec& spec, Rng& rng) {
  const int m = spec.num_alternatives;
  std::vector<AlternativeId> popularity(static_cast<std::size_t>(m));
  std::iota(popularity.begin(), popularity.end(), 1);
  shuffle(popularity, rng);

  // Parties take consecutive slices of the popularity order, so larger
  // parties tend to hold the stronger candidates.
  std::vector<std::vector<AlternativeId>> parties;
  for (std::size_t p = 0, next = 0; p < spec.party_sizes.size(); ++p) {
    parties.emplace_back(popularity.begin() + static_cast<std::ptrdiff_t>(next),
                         popularity.begin() + static_cast<std::ptrdiff_t>(next + static_cast<std::size_t>(spec.party_sizes[p])));
    next += static_cast<std::size_t>(spec.party_sizes[p]);
  }
  std::vector<double> party_weight;
  for (std::size_t p = 0; p < parties.size(); ++p) party_weight.push_back(std::pow(0.72, static_cast<double>(p)));
  std::discrete_distribution<std::size_t> pick_party(party_weight.begin(), party_weight.end());

  // Ballot length: most voters rank only a handful of candidates.
  std::vector<double> length_weight;
  for (int t = 1; t <= m; ++t) length_weight.push_back(std::exp(-0.3 * (t - 1)) + (t == m ? 0.4 : 0.0));
  std::discrete_distribution<int> pick_length(length_weight.begin(), length_weight.end());

  PreferenceProfile profile;
  profile.num_alternatives = m;
  for (int i = 1; i <= m; ++i) profile.alternative_names.push_back("candidate " + std::to_string(i));
  profile.voters.reserve(static_cast<std::size_t>(spec.num_voters));
  for (int v = 0; v < spec.num_voters; ++v) {
    const auto party = pick_party(rng);
    std::vector<AlternativeId> center = parties[party];
    for (const auto a : popularity)
      if (std::find(center.begin(), center.end(), a) == center.end()) center.push_back(a);
    auto ballot = sample_mallows(center, 0.55, rng);
    ballot.resize(static_cast<std::size_t>(pick_length(rng) + 1));
    profile.voters.emplace_back(std::move(ballot), m);
  }
  return profile;
}

PreferenceProfile sushi_like(const SurrogateSpec& spec, Rng& rng) {
  const int m = spec.num_alternatives;
  std::vector<AlternativeId> base(static_cast<std::size_t>(m));
  std::iota(base.begin(), base.end(), 1);
  shuffle(base, rng);

  std::vector<std::vector<AlternativeId>> centers;
  for (int c = 0; c < 5; ++c) centers.push_back(sample_mallows(base, 0.6, rng));
  std::vector<AlternativeId> contrarian(base.rbegin(), base.rend());
  centers.push_back(sample_mallows(contrarian, 0.3, rng));
  const std::vector<double> weight{0.28, 0.2, 0.16, 0.12, 0.1, 0.14};
  std::discrete_distribution<std::size_t> pick_center(weight.begin(), weight.end());

  PreferenceProfile profile;
  profile.num_alternatives = m;
  for (int i = 1; i <= m; ++i) profile.alternative_names.push_back("sushi " + std::to_string(i));
  profile.voters.reserve(static_cast<std::size_t>(spec.num_voters));
  for (int v = 0; v < spec.num_voters; ++v) profile.voters.emplace_back(sample_mallows(centers[pick_center(rng)], 0.7, rng), m);
  return profile;
}

}  // namespace

PreferenceProfile make_surrogate(const SurrogateSpec& spec, std::uint64_t seed) {
  if (spec.num_alternatives < 2 || spec.num_voters < 1) throw std::invalid_argument("surrogate: invalid shape");
  Rng rng(seed);
  if (!spec.partial) return sushi_like(spec, rng);
  if (std::accumulate(spec.party_sizes.begin(), spec.party_sizes.end(), 0) != spec.num_alternatives)
    throw std::invalid_argument("surrogate: party sizes must cover every candidate");
  return election_like(spec, rng);
}

}  // namespace deepgroup
