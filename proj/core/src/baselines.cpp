#include "deepgroup/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace deepgroup {

TrainingSummary summarize(const GroupDataset& train) {
  TrainingSummary s;
  s.num_groups = train.groups.size();
  s.decision_counts.assign(static_cast<std::size_t>(train.num_alternatives) + 1, 0);
  for (std::size_t i = 0; i < train.groups.size(); ++i) {
    const AlternativeId d = train.decisions[i];
    ++s.decision_counts[static_cast<std::size_t>(d)];
    for (const auto u : train.groups[i].members()) s.user_groups[u].emplace_back(i, d);
  }
  return s;
}

namespace {

// Uniform choice among the maxima of counts[1..].
AlternativeId argmax_uniform(const std::vector<long>& counts, Rng& rng) {
  const long best = *std::max_element(counts.begin() + 1, counts.end());
  std::vector<AlternativeId> tied;
  for (std::size_t a = 1; a < counts.size(); ++a)
    if (counts[a] == best) tied.push_back(static_cast<AlternativeId>(a));
  return tied.size() == 1 ? tied.front() : pick_uniform(tied, rng);
}

}  // namespace

AlternativeId pop_predict(const TrainingSummary& summary, Rng& rng) {
  if (summary.num_groups == 0) throw std::invalid_argument("pop_predict: empty training set");
  return argmax_uniform(summary.decision_counts, rng);
}

AlternativeId rtcp_predict(const Group& group, const TrainingSummary& summary, Rng& rng) {
  if (group.size() == 0) throw std::invalid_argument("rtcp_predict: empty group");
  std::vector<long> votes(summary.decision_counts.size(), 0);
  for (const auto u : group.members()) {
    const auto it = summary.user_groups.find(u);
    const AlternativeId guess = it == summary.user_groups.end() ? pop_predict(summary, rng) : pick_uniform(it->second, rng).second;
    ++votes[static_cast<std::size_t>(guess)];
  }
  return argmax_uniform(votes, rng);
}

AlternativeId osim_predict(const Group& group, const GroupDataset& train, const TrainingSummary& summary, Rng& rng) {
  if (group.size() == 0) throw std::invalid_argument("osim_predict: empty group");
  std::unordered_map<std::size_t, int> overlap;
  for (const auto u : group.members()) {
    const auto it = summary.user_groups.find(u);
    if (it == summary.user_groups.end()) continue;
    for (const auto& [index, decision] : it->second) ++overlap[index];
  }
  if (overlap.empty()) return pop_predict(summary, rng);
  int best = 0;
  for (const auto& [index, count] : overlap) best = std::max(best, count);
  std::vector<std::size_t> tied;
  for (const auto& [index, count] : overlap)
    if (count == best) tied.push_back(index);
  std::sort(tied.begin(), tied.end());  // hash order is not part of the seed contract
  return train.decisions[tied.size() == 1 ? tied.front() : pick_uniform(tied, rng)];
}

}  // namespace deepgroup
