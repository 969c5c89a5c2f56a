#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deepgroup/preflib.hpp"
#include "deepgroup/rng.hpp"

namespace deepgroup {

enum class DecisionRule { Borda, Plurality, Mixture };

std::string_view to_string(DecisionRule rule);
DecisionRule parse_decision_rule(std::string_view text);

// Borda: m - position; 0 when unranked.
int borda_score(const Ranking& ranking, AlternativeId alternative);
// Plurality: 1 iff ranked first.
int plurality_score(const Ranking& ranking, AlternativeId alternative);

// Mixture resolves to Borda or Plurality with probability 1/2 each; fixed
// rules are returned unchanged without touching the engine.
DecisionRule resolve_rule(DecisionRule rule, Rng& rng);

// Cumulative score per alternative, indexed 1..m (slot 0 unused).
// `rule` must be Borda or Plurality.
std::vector<long> cumulative_scores(std::span<const Ranking* const> members, DecisionRule rule);

// Alternatives attaining the maximum cumulative score, ascending.
std::vector<AlternativeId> winners(std::span<const Ranking* const> members, DecisionRule rule);

// Argmax of cumulative scores with ties broken uniformly at random.
AlternativeId group_decision(std::span<const Ranking* const> members, DecisionRule rule, Rng& rng);
AlternativeId group_decision(std::span<const Ranking> members, DecisionRule rule, Rng& rng);

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Kendall tau-b between two rankings over the same m alternatives.
///
/// Unranked alternatives share the bottom position, so pairs of unranked
/// alternatives count as ties. Tied pairs are excluded from the concordant
/// and discordant counts and enter through the tau-b denominator.
/// Throws UndefinedCorrelation when every pair is tied in either ranking.
double kendall_tau(const Ranking& r1, const Ranking& r2);

}  // namespace deepgroup
