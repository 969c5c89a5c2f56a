#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deepgroup/rng.hpp"

namespace deepgroup {

// Alternatives are numbered 1..m. Position 1 is most preferred.
using AlternativeId = int;

/// A strict, possibly partial (top-t) ranking over m alternatives.
///
/// Unranked alternatives have position 0. Construction validates that the
/// entries are distinct and lie in [1, m].
class Ranking {
 public:
  Ranking(std::vector<AlternativeId> entries, int total_alternatives);

  const std::vector<AlternativeId>& entries() const { return entries_; }
  int total_alternatives() const { return static_cast<int>(positions_.size()) - 1; }
  int length() const { return static_cast<int>(entries_.size()); }
  bool complete() const { return length() >= total_alternatives() - 1; }

  // 1-based position of `a`, or 0 when `a` is unranked. `a` must be in [1, m].
  int position(AlternativeId a) const { return positions_[static_cast<std::size_t>(a)]; }
  AlternativeId top() const { return entries_.front(); }

  bool operator==(const Ranking& other) const { return entries_ == other.entries_ && positions_.size() == other.positions_.size(); }

 private:
  std::vector<AlternativeId> entries_;
  std::vector<int> positions_;  // indexed by alternative id; slot 0 unused
};

struct PreferenceProfile {
  int num_alternatives = 0;
  std::vector<std::string> alternative_names;
  std::vector<Ranking> voters;  // one entry per user; multiplicities expanded

  int num_voters() const { return static_cast<int>(voters.size()); }
  bool operator==(const PreferenceProfile&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Parses the legacy numeric election layout:
//   m
//   i,name            (m lines)
//   total_voters,total_vote_weight,unique_ballots
//   multiplicity,a1,a2,...,ak
// Lines starting with '#' are skipped. Newer metadata files that carry
// "# NUMBER ALTERNATIVES" / "# ALTERNATIVE NAME i" headers and
// "count: a1,a2,..." ballot lines are accepted as well. Ties ({...}) are
// rejected. Errors carry the 1-based line number.
PreferenceProfile parse_preference_file(std::string_view raw_text);
PreferenceProfile load_preference_file(const std::filesystem::path& path);

// Writes the legacy layout, collapsing runs of identical consecutive ballots.
std::string serialize_preference_file(const PreferenceProfile& profile);
void save_preference_file(const PreferenceProfile& profile, const std::filesystem::path& path);

// n voters drawn uniformly without replacement, in draw order.
PreferenceProfile sample_users(const PreferenceProfile& profile, int n, Rng& rng);

}  // namespace deepgroup
