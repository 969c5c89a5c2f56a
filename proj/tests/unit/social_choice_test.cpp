#include <algorithm>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "deepgroup/social_choice.hpp"
#include "suites.hpp"

namespace deepgroup {
namespace {

// a=1, b=2, c=3, d=4
TEST(BordaScore, PositionalValues) {
  const Ranking abc({1, 2, 3}, 3);
  EXPECT_EQ(borda_score(abc, 1), 2);
  EXPECT_EQ(borda_score(abc, 2), 1);
  EXPECT_EQ(borda_score(abc, 3), 0);
  const Ranking partial({4}, 9);
  EXPECT_EQ(borda_score(partial, 4), 8);
  EXPECT_EQ(borda_score(partial, 5), 0);
  EXPECT_THROW(borda_score(abc, 4), std::out_of_range);
  EXPECT_THROW(borda_score(abc, 0), std::out_of_range);
}

TEST(PluralityScore, IndicatorOfTop) {
  const Ranking bac({2, 1, 3}, 3);
  EXPECT_EQ(plurality_score(bac, 2), 1);
  EXPECT_EQ(plurality_score(bac, 1), 0);
  int total = 0;
  for (int a = 1; a <= 3; ++a) total += plurality_score(bac, a);
  EXPECT_EQ(total, 1);
  EXPECT_THROW(plurality_score(bac, 7), std::out_of_range);
}

TEST(GroupDecision, PluralityMajority) {
  const std::vector<Ranking> members{Ranking({1, 2}, 3), Ranking({1}, 3), Ranking({2, 1}, 3)};
  Rng rng(0);
  EXPECT_EQ(group_decision(std::span<const Ranking>(members), DecisionRule::Plurality, rng), 1);
}

TEST(GroupDecision, BordaTieIsUniform) {
  const std::vector<Ranking> members{Ranking({1, 2, 3}, 3), Ranking({2, 1, 3}, 3)};
  std::map<AlternativeId, int> seen;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    Rng rng(seed);
    ++seen[group_decision(std::span<const Ranking>(members), DecisionRule::Borda, rng)];
  }
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_NEAR(seen[1] / 4000.0, 0.5, 0.04);
  EXPECT_NEAR(seen[2] / 4000.0, 0.5, 0.04);
}

TEST(GroupDecision, SingleMemberPicksTopForEveryRule) {
  const std::vector<Ranking> one{Ranking({3, 1, 2}, 4)};
  for (const auto rule : {DecisionRule::Borda, DecisionRule::Plurality, DecisionRule::Mixture}) {
    Rng rng(9);
    EXPECT_EQ(group_decision(std::span<const Ranking>(one), rule, rng), 3);
  }
}

TEST(GroupDecision, RejectsEmptyAndMixedAlternativeSets) {
  Rng rng(0);
  EXPECT_THROW(group_decision(std::span<const Ranking>(), DecisionRule::Borda, rng), std::invalid_argument);
  const std::vector<Ranking> mixed{Ranking({1}, 3), Ranking({1}, 4)};
  EXPECT_THROW(group_decision(std::span<const Ranking>(mixed), DecisionRule::Borda, rng), std::invalid_argument);
}

TEST(GroupDecision, BruteForceTallyOracle) {
  const auto r = testing::run_tally_oracle(77, 1000);
  EXPECT_EQ(r.cases, 2000);
  EXPECT_EQ(r.agreements, r.cases);
}

TEST(Scores, RelabelingEquivariance) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto members = testing::random_ballots(rng, 6, 6);
    const int m = members.front().total_alternatives();
    std::vector<AlternativeId> perm(static_cast<std::size_t>(m) + 1);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    for (const auto& r : members) {
      std::vector<AlternativeId> relabeled;
      for (const auto a : r.entries()) relabeled.push_back(perm[static_cast<std::size_t>(a)]);
      const Ranking q(relabeled, m);
      for (int a = 1; a <= m; ++a) {
        EXPECT_EQ(borda_score(r, a), borda_score(q, perm[static_cast<std::size_t>(a)]));
        EXPECT_EQ(plurality_score(r, a), plurality_score(q, perm[static_cast<std::size_t>(a)]));
      }
    }
  }
}

TEST(ResolveRule, MixtureIsFairCoin) {
  Rng rng(12);
  int borda = 0;
  for (int i = 0; i < 4000; ++i) borda += resolve_rule(DecisionRule::Mixture, rng) == DecisionRule::Borda;
  EXPECT_NEAR(borda / 4000.0, 0.5, 0.03);
  Rng untouched(5), reference(5);
  EXPECT_EQ(resolve_rule(DecisionRule::Borda, untouched), DecisionRule::Borda);
  EXPECT_EQ(untouched(), reference());
}

TEST(KendallTau, Extremes) {
  const Ranking r({1, 2, 3, 4}, 4);
  EXPECT_DOUBLE_EQ(kendall_tau(r, r), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(r, Ranking({4, 3, 2, 1}, 4)), -1.0);
}

TEST(KendallTau, OneSwapOfFour) {
  EXPECT_NEAR(kendall_tau(Ranking({1, 2, 3, 4}, 4), Ranking({1, 2, 4, 3}, 4)), 4.0 / 6.0, 1e-12);
}

// Pair enumeration straight from the tau-b definition.
double tau_b_oracle(const Ranking& x, const Ranking& y) {
  const int m = x.total_alternatives();
  auto rank = [m](const Ranking& r, int a) { return r.position(a) == 0 ? m + 1 : r.position(a); };
  double nc = 0, nd = 0, n0 = 0, t1 = 0, t2 = 0;
  for (int a = 1; a <= m; ++a)
    for (int b = a + 1; b <= m; ++b) {
      ++n0;
      const int s1 = (rank(x, a) > rank(x, b)) - (rank(x, a) < rank(x, b));
      const int s2 = (rank(y, a) > rank(y, b)) - (rank(y, a) < rank(y, b));
      t1 += s1 == 0;
      t2 += s2 == 0;
      if (s1 * s2 > 0) ++nc;
      if (s1 * s2 < 0) ++nd;
    }
  return (nc - nd) / std::sqrt((n0 - t1) * (n0 - t2));
}

TEST(KendallTau, MatchesOracleAndIsSymmetricOnPartialBallots) {
  Rng rng(8);
  int checked = 0;
  for (int t = 0; t < 500; ++t) {
    const auto members = testing::random_ballots(rng, 7, 2);
    if (members.size() < 2) continue;
    const auto& x = members[0];
    const auto& y = members[1];
    double forward = 0.0;
    try {
      forward = kendall_tau(x, y);
    } catch (const UndefinedCorrelation&) {
      EXPECT_THROW(kendall_tau(y, x), UndefinedCorrelation);
      continue;
    }
    EXPECT_NEAR(forward, tau_b_oracle(x, y), 1e-12);
    EXPECT_EQ(forward, kendall_tau(y, x));
    EXPECT_GE(forward, -1.0);
    EXPECT_LE(forward, 1.0);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(KendallTau, UndefinedWhenEveryPairTied) {
  // Any ballot orders its top against the rest, so only the pairless m=1 case is undefined.
  EXPECT_THROW(kendall_tau(Ranking({1}, 1), Ranking({1}, 1)), UndefinedCorrelation);
  // Top-1 ballots on m=3: one untied pair each side of the tail tie.
  EXPECT_NEAR(kendall_tau(Ranking({1}, 3), Ranking({1}, 3)), 1.0, 1e-12);
  EXPECT_THROW(kendall_tau(Ranking({1}, 3), Ranking({1}, 4)), std::invalid_argument);
}

}  // namespace
}  // namespace deepgroup
