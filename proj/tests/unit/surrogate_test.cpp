#include <algorithm>
#include <map>

#include <gtest/gtest.h>

#include "deepgroup/social_choice.hpp"
#include "deepgroup/surrogate.hpp"

namespace deepgroup {
namespace {

TEST(Mallows, IsAPermutationOfTheCenter) {
  Rng rng(1);
  const std::vector<AlternativeId> center{3, 1, 4, 2, 5};
  for (int i = 0; i < 200; ++i) {
    auto r = sample_mallows(center, 0.5, rng);
    std::sort(r.begin(), r.end());
    EXPECT_EQ(r, (std::vector<AlternativeId>{1, 2, 3, 4, 5}));
  }
  EXPECT_THROW(sample_mallows(center, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(sample_mallows(center, 1.5, rng), std::invalid_argument);
}

TEST(Mallows, ConcentratesAroundTheCenter) {
  Rng rng(2);
  const std::vector<AlternativeId> center{1, 2, 3, 4, 5, 6};
  const Ranking c(center, 6);
  double tight = 0.0, loose = 0.0;
  for (int i = 0; i < 500; ++i) {
    tight += kendall_tau(Ranking(sample_mallows(center, 0.2, rng), 6), c);
    loose += kendall_tau(Ranking(sample_mallows(center, 1.0, rng), 6), c);
  }
  EXPECT_GT(tight / 500, 0.7);
  EXPECT_NEAR(loose / 500, 0.0, 0.1);
}

TEST(Mallows, UniformWhenDispersionIsOne) {
  Rng rng(3);
  std::map<std::vector<AlternativeId>, int> counts;
  for (int i = 0; i < 6000; ++i) ++counts[sample_mallows({1, 2, 3}, 1.0, rng)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [perm, n] : counts) EXPECT_NEAR(n, 1000, 120);
}

TEST(Surrogate, ShapesMatchTheNamedProfiles) {
  for (const auto& name : surrogate_names()) {
    auto spec = surrogate_spec(name);
    const int voters = spec.num_voters;
    spec.num_voters = 500;
    const auto p = make_surrogate(spec, 7);
    EXPECT_EQ(p.num_alternatives, spec.num_alternatives) << name;
    EXPECT_EQ(p.num_voters(), 500);
    EXPECT_GT(voters, 1000);
    bool any_partial = false;
    for (const auto& v : p.voters) any_partial |= v.length() < spec.num_alternatives;
    EXPECT_EQ(any_partial, spec.partial) << name;
  }
  EXPECT_EQ(surrogate_spec("dublin_west").num_alternatives, 9);
  EXPECT_EQ(surrogate_spec("sushi").num_voters, 5000);
  EXPECT_THROW(surrogate_spec("nowhere"), std::invalid_argument);
}

TEST(Surrogate, SameSeedSameProfile) {
  auto spec = surrogate_spec("meath");
  spec.num_voters = 300;
  EXPECT_EQ(make_surrogate(spec, 11), make_surrogate(spec, 11));
  EXPECT_NE(make_surrogate(spec, 11), make_surrogate(spec, 12));
}

TEST(Surrogate, RejectsInconsistentParties) {
  auto spec = surrogate_spec("dublin_west");
  spec.party_sizes = {3, 3};
  EXPECT_THROW(make_surrogate(spec, 1), std::invalid_argument);
}

}  // namespace
}  // namespace deepgroup
