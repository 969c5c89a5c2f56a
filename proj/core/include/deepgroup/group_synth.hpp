#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deepgroup/preflib.hpp"
#include "deepgroup/rng.hpp"
#include "deepgroup/social_choice.hpp"

namespace deepgroup {

using UserId = int;  // 0-based index into PreferenceProfile::voters

/// A group is its member set, stored sorted ascending without duplicates.
class Group {
 public:
  Group() = default;
  explicit Group(std::vector<UserId> members);

  const std::vector<UserId>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(UserId u) const;

  auto operator<=>(const Group&) const = default;

 private:
  std::vector<UserId> members_;
};

enum class SynthMethod { KPG, RSG, RDG };

std::string_view to_string(SynthMethod method);
SynthMethod parse_synth_method(std::string_view text);

struct SynthConfig {
  SynthMethod method = SynthMethod::KPG;
  int kappa = 1;   // KPG: number of independent partitions
  int l = 1000;    // RSG/RDG: number of groups
  int s_min = 2;
  int s_max = 10;
  double tau_sim = 0.5;
  double tau_dis = -0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// One decision per group, row-aligned; the dense l x m matrix Y is never stored.
struct GroupDataset {
  std::vector<Group> groups;
  std::vector<AlternativeId> decisions;
  int num_alternatives = 0;
  SynthMethod method = SynthMethod::KPG;
  DecisionRule rule = DecisionRule::Plurality;
  std::vector<DecisionRule> rule_used;  // resolved Borda/Plurality per group
  std::uint64_t seed = 0;

  std::size_t size() const { return groups.size(); }
  // Largest member id + 1.
  int user_span() const;
  void validate() const;
  bool operator==(const GroupDataset&) const = default;
};

class SynthesisExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Consecutive rejections tolerated by rejection sampling before giving up.
inline constexpr int kRejectionBudget = 10'000;

// Splits `n` shuffled users into chunks with sizes in [s_min, s_max].
std::vector<std::vector<UserId>> random_partition(int n, int s_min, int s_max, Rng& rng);

// kappa random partitions of all profile voters; unique subsets in first-seen order.
std::vector<Group> kpg_generate(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng);

// Rejection-sampled groups whose pairwise Kendall tau values all clear the
// similarity (RSG) or dissimilarity (RDG) threshold.
std::vector<Group> rsg_rdg_generate(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng);

std::vector<Group> generate_groups(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng);

GroupDataset assign_decisions(const std::vector<Group>& groups, const PreferenceProfile& profile, DecisionRule rule, Rng& rng);

// Text format: header "l m method rule seed", then one
// "member,member,... -> decision" line per group. Mixture datasets append
// the resolved per-group rule as a trailing " @borda" / " @plurality".
std::string serialize_group_dataset(const GroupDataset& dataset);
GroupDataset parse_group_dataset(std::string_view text);
void save_group_dataset(const GroupDataset& dataset, const std::filesystem::path& path);
GroupDataset load_group_dataset(const std::filesystem::path& path);

}  // namespace deepgroup
