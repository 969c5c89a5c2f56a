#include "deepgroup/social_choice.hpp"

#include <algorithm>
#include <cmath>

namespace deepgroup {

std::string_view to_string(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::Borda: return "borda";
    case DecisionRule::Plurality: return "plurality";
    case DecisionRule::Mixture: return "mixture";
  }
  return "unknown";
}

DecisionRule parse_decision_rule(std::string_view text) {
  if (text == "borda") return DecisionRule::Borda;
  if (text == "plurality") return DecisionRule::Plurality;
  if (text == "mixture") return DecisionRule::Mixture;
  throw std::invalid_argument("unknown decision rule '" + std::string(text) + "'");
}

namespace {

void check_alternative(const Ranking& ranking, AlternativeId a) {
  if (a < 1 || a > ranking.total_alternatives())
    throw std::out_of_range("alternative " + std::to_string(a) + " out of range [1, " +
                            std::to_string(ranking.total_alternatives()) + "]");
}

}  // namespace

int borda_score(const Ranking& ranking, AlternativeId alternative) {
  check_alternative(ranking, alternative);
  const int pos = ranking.position(alternative);
  return pos == 0 ? 0 : ranking.total_alternatives() - pos;
}

int plurality_score(const Ranking& ranking, AlternativeId alternative) {
  check_alternative(ranking, alternative);
  return ranking.position(alternative) == 1 ? 1 : 0;
}

DecisionRule resolve_rule(DecisionRule rule, Rng& rng) {
  if (rule != DecisionRule::Mixture) return rule;
  return uniform_int(rng, 0, 1) == 0 ? DecisionRule::Borda : DecisionRule::Plurality;
}

std::vector<long> cumulative_scores(std::span<const Ranking* const> members, DecisionRule rule) {
  if (members.empty()) throw std::invalid_argument("group decision over an empty group");
  if (rule == DecisionRule::Mixture) throw std::invalid_argument("cumulative_scores needs a resolved rule");
  const int m = members.front()->total_alternatives();
  std::vector<long> score(static_cast<std::size_t>(m) + 1, 0);
  for (const Ranking* r : members) {
    if (r->total_alternatives() != m) throw std::invalid_argument("group members rank different alternative sets");
    const auto& entries = r->entries();
    if (rule == DecisionRule::Plurality) {
      ++score[static_cast<std::size_t>(entries.front())];
    } else {
      for (std::size_t i = 0; i < entries.size(); ++i)
        score[static_cast<std::size_t>(entries[i])] += m - static_cast<long>(i + 1);
    }
  }
  return score;
}

std::vector<AlternativeId> winners(std::span<const Ranking* const> members, DecisionRule rule) {
  const auto score = cumulative_scores(members, rule);
  const long best = *std::max_element(score.begin() + 1, score.end());
  std::vector<AlternativeId> out;
  for (std::size_t a = 1; a < score.size(); ++a)
    if (score[a] == best) out.push_back(static_cast<AlternativeId>(a));
  return out;
}

AlternativeId group_decision(std::span<const Ranking* const> members, DecisionRule rule, Rng& rng) {
  const auto tied = winners(members, resolve_rule(rule, rng));
  return tied.size() == 1 ? tied.front() : pick_uniform(tied, rng);
}

AlternativeId group_decision(std::span<const Ranking> members, DecisionRule rule, Rng& rng) {
  std::vector<const Ranking*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& r : members) ptrs.push_back(&r);
  return group_decision(std::span<const Ranking* const>(ptrs), rule, rng);
}

double kendall_tau(const Ranking& r1, const Ranking& r2) {
  const int m = r1.total_alternatives();
  if (r2.total_alternatives() != m) throw std::invalid_argument("kendall_tau: rankings over different alternative sets");
  // Effective rank: unranked alternatives sit together below the last ranked one.
  auto rank = [m](const Ranking& r, int a) { const int p = r.position(a); return p == 0 ? m + 1 : p; };
  long concordant = 0, discordant = 0, tied1 = 0, tied2 = 0, pairs = 0;
  for (int a = 1; a <= m; ++a) {
    const int a1 = rank(r1, a), a2 = rank(r2, a);
    for (int b = a + 1; b <= m; ++b) {
      ++pairs;
      const int d1 = a1 - rank(r1, b);
      const int d2 = a2 - rank(r2, b);
      if (d1 == 0) ++tied1;
      if (d2 == 0) ++tied2;
      if (d1 == 0 || d2 == 0) continue;
      ((d1 > 0) == (d2 > 0) ? concordant : discordant) += 1;
    }
  }
  if (pairs == tied1 || pairs == tied2)
    throw UndefinedCorrelation("kendall_tau undefined: every pair is tied in one ranking");
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(pairs - tied1) * static_cast<double>(pairs - tied2));
}

}  // namespace deepgroup
