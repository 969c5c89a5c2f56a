#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "deepgroup/group_synth.hpp"
#include "deepgroup/surrogate.hpp"

namespace deepgroup {
namespace {

PreferenceProfile random_profile(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  PreferenceProfile p;
  p.num_alternatives = m;
  for (int i = 0; i < m; ++i) p.alternative_names.push_back("x" + std::to_string(i));
  for (int v = 0; v < n; ++v) {
    std::vector<AlternativeId> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 1);
    std::shuffle(order.begin(), order.end(), rng);
    p.voters.emplace_back(order, m);
  }
  return p;
}

TEST(Group, NormalizesAndRejects) {
  const Group g({5, 1, 3});
  EXPECT_EQ(g.members(), (std::vector<UserId>{1, 3, 5}));
  EXPECT_TRUE(g.contains(3));
  EXPECT_FALSE(g.contains(2));
  EXPECT_THROW(Group(std::vector<UserId>{}), std::invalid_argument);
  EXPECT_THROW(Group({1, 1}), std::invalid_argument);
  EXPECT_THROW(Group({-1}), std::invalid_argument);
}

TEST(RandomPartition, ForcedPairs) {
  Rng rng(1);
  const auto parts = random_partition(4, 2, 2, rng);
  ASSERT_EQ(parts.size(), 2u);
  std::set<UserId> seen;
  for (const auto& p : parts) {
    EXPECT_EQ(p.size(), 2u);
    seen.insert(p.begin(), p.end());
  }
  EXPECT_EQ(seen, (std::set<UserId>{0, 1, 2, 3}));
}

TEST(RandomPartition, BoundsAndCoverProperty) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const int s_min = uniform_int(rng, 2, 5);
    const int s_max = uniform_int(rng, s_min, 12);
    const int n = uniform_int(rng, s_min, 300);
    std::vector<std::vector<UserId>> parts;
    try {
      parts = random_partition(n, s_min, s_max, rng);
    } catch (const std::invalid_argument&) {
      // e.g. n=7 with sizes in [4,5]; confirm no chunk count fits.
      bool feasible = false;
      for (int k = 1; k <= n; ++k) feasible |= k * s_min <= n && n <= k * s_max;
      EXPECT_FALSE(feasible) << n << " " << s_min << " " << s_max;
      continue;
    }
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (const auto& p : parts) {
      EXPECT_GE(static_cast<int>(p.size()), s_min);
      EXPECT_LE(static_cast<int>(p.size()), s_max);
      for (const auto u : p) ++count[static_cast<std::size_t>(u)];
    }
    EXPECT_TRUE(std::all_of(count.begin(), count.end(), [](int c) { return c == 1; }));
  }
  EXPECT_THROW(random_partition(1, 2, 10, rng), std::invalid_argument);
}

TEST(KpgGenerate, KappaOneIsPartition) {
  const auto p = random_profile(4, 3, 1);
  SynthConfig c;
  c.s_min = c.s_max = 2;
  Rng rng(3);
  const auto groups = kpg_generate(p, c, rng);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_TRUE(std::ranges::none_of(groups[0].members(), [&](UserId u) { return groups[1].contains(u); }));
}

TEST(KpgGenerate, DuplicatesCollapse) {
  // Three users with sizes fixed at 3: every partition is the same single group.
  const auto p = random_profile(3, 3, 1);
  SynthConfig c;
  c.kappa = 2;
  c.s_min = c.s_max = 3;
  Rng rng(0);
  EXPECT_EQ(kpg_generate(p, c, rng).size(), 1u);
}

TEST(KpgGenerate, MembershipCountsWithinKappa) {
  const auto p = random_profile(5000, 4, 2);
  SynthConfig c;
  c.kappa = 5;
  Rng rng(4);
  const auto groups = kpg_generate(p, c, rng);
  std::vector<int> count(5000, 0);
  for (const auto& g : groups) {
    EXPECT_GE(g.size(), 2u);
    EXPECT_LE(g.size(), 10u);
    for (const auto u : g.members()) ++count[static_cast<std::size_t>(u)];
  }
  EXPECT_EQ(*std::min_element(count.begin(), count.end()), 5);  // distinct groups; duplicates are vanishingly rare
  EXPECT_LE(*std::max_element(count.begin(), count.end()), 5);
  EXPECT_EQ(std::set<Group>(groups.begin(), groups.end()).size(), groups.size());
}

TEST(KpgGenerate, RejectsTooFewUsers) {
  const auto p = random_profile(1, 3, 1);
  Rng rng(0);
  EXPECT_THROW(kpg_generate(p, SynthConfig{}, rng), std::invalid_argument);
}

TEST(RsgGenerate, VacuousThresholdAcceptsEverything) {
  const auto p = random_profile(200, 5, 6);
  SynthConfig c;
  c.method = SynthMethod::RSG;
  c.l = 300;
  c.tau_sim = -1.0;
  Rng rng(1);
  const auto groups = rsg_rdg_generate(p, c, rng);
  EXPECT_EQ(groups.size(), 300u);
  std::map<std::size_t, int> sizes;
  for (const auto& g : groups) ++sizes[g.size()];
  EXPECT_EQ(sizes.size(), 9u);  // every size in [2, 10] shows up
  EXPECT_EQ(std::set<Group>(groups.begin(), groups.end()).size(), groups.size());
}

double extreme_pair_tau(const Group& g, const PreferenceProfile& p, bool want_min) {
  double out = want_min ? 2.0 : -2.0;
  const auto& m = g.members();
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const double t = kendall_tau(p.voters[static_cast<std::size_t>(m[i])], p.voters[static_cast<std::size_t>(m[j])]);
      out = want_min ? std::min(out, t) : std::max(out, t);
    }
  return out;
}

TEST(RsgRdgGenerate, ThresholdsHoldOnEveryGroup) {
  const auto sushi = make_surrogate(surrogate_spec("sushi"), 5);
  SynthConfig c;
  c.l = 200;
  c.method = SynthMethod::RSG;
  Rng rng(2);
  for (const auto& g : rsg_rdg_generate(sushi, c, rng)) EXPECT_GE(extreme_pair_tau(g, sushi, true), 0.5);
  c.method = SynthMethod::RDG;
  for (const auto& g : rsg_rdg_generate(sushi, c, rng)) EXPECT_LE(extreme_pair_tau(g, sushi, false), -0.5);
}

TEST(RsgRdgGenerate, ExhaustedBudgetFailsLoudly) {
  // Identical ballots never reach tau <= -0.5.
  PreferenceProfile p;
  p.num_alternatives = 4;
  p.alternative_names = {"a", "b", "c", "d"};
  for (int i = 0; i < 30; ++i) p.voters.emplace_back(std::vector<AlternativeId>{1, 2, 3, 4}, 4);
  SynthConfig c;
  c.method = SynthMethod::RDG;
  c.l = 5;
  Rng rng(0);
  EXPECT_THROW(rsg_rdg_generate(p, c, rng), SynthesisExhausted);
}

TEST(AssignDecisions, SingletonsGetTopChoice) {
  const auto p = random_profile(20, 6, 9);
  std::vector<Group> groups;
  for (int u = 0; u < 20; ++u) groups.emplace_back(std::vector<UserId>{u});
  Rng rng(0);
  const auto ds = assign_decisions(groups, p, DecisionRule::Plurality, rng);
  for (int u = 0; u < 20; ++u) EXPECT_EQ(ds.decisions[static_cast<std::size_t>(u)], p.voters[static_cast<std::size_t>(u)].top());
  EXPECT_NO_THROW(ds.validate());
}

TEST(AssignDecisions, MixtureSplitsRulesEvenly) {
  const auto p = random_profile(3000, 5, 10);
  SynthConfig c;
  c.kappa = 3;
  Rng rng(1);
  const auto many = kpg_generate(p, c, rng);
  const auto ds = assign_decisions(many, p, DecisionRule::Mixture, rng);
  ASSERT_EQ(ds.rule_used.size(), many.size());
  const double n = static_cast<double>(many.size());
  const double borda = static_cast<double>(std::count(ds.rule_used.begin(), ds.rule_used.end(), DecisionRule::Borda));
  EXPECT_GE(n, 1000.0);
  EXPECT_NEAR(borda / n, 0.5, 4.0 * std::sqrt(0.25 / n));
}

TEST(AssignDecisions, Replayable) {
  const auto p = random_profile(500, 5, 3);
  SynthConfig c;
  c.kappa = 3;
  auto run = [&] {
    Rng rng(42);
    return assign_decisions(generate_groups(p, c, rng), p, DecisionRule::Mixture, rng);
  };
  EXPECT_EQ(run(), run());
}

TEST(GroupDatasetFormat, RoundTripsExactly) {
  const auto p = random_profile(300, 7, 3);
  for (const auto rule : {DecisionRule::Borda, DecisionRule::Plurality, DecisionRule::Mixture}) {
    SynthConfig c;
    c.kappa = 2;
    Rng rng(5);
    auto ds = assign_decisions(generate_groups(p, c, rng), p, rule, rng);
    ds.seed = 123456789012345ULL;
    const auto text = serialize_group_dataset(ds);
    const auto back = parse_group_dataset(text);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(serialize_group_dataset(back), text);
  }
}

TEST(GroupDatasetFormat, HeaderAndErrors) {
  GroupDataset ds;
  ds.groups = {Group({0, 2}), Group({1, 3, 4})};
  ds.decisions = {2, 1};
  ds.num_alternatives = 3;
  ds.rule_used = {DecisionRule::Plurality, DecisionRule::Plurality};
  EXPECT_EQ(serialize_group_dataset(ds), "2 3 kpg plurality 0\n0,2 -> 2\n1,3,4 -> 1\n");
  EXPECT_THROW(parse_group_dataset("2 3 kpg plurality 0\n0,2 -> 2\n"), ParseError);
  EXPECT_THROW(parse_group_dataset("1 3 kpg plurality 0\n0,2 -> 4\n"), ParseError);
  EXPECT_THROW(parse_group_dataset("2 3 kpg plurality 0\n0,2 -> 2\n2,0 -> 1\n"), ParseError);
  EXPECT_THROW(parse_group_dataset("1 3 kpg plurality 0\n0,2 2\n"), ParseError);
}

}  // namespace
}  // namespace deepgroup
