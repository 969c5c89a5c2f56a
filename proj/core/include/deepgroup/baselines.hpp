#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "deepgroup/group_synth.hpp"
#include "deepgroup/rng.hpp"

namespace deepgroup {

// Precomputed view of the training groups shared by the heuristic baselines.
struct TrainingSummary {
  std::vector<long> decision_counts;  // indexed by alternative id; slot 0 unused
  // user -> (training group index, decision) for every training group containing the user
  std::unordered_map<UserId, std::vector<std::pair<std::size_t, AlternativeId>>> user_groups;
  std::size_t num_groups = 0;
};

TrainingSummary summarize(const GroupDataset& train);

// Most frequent training decision; ties uniform.
AlternativeId pop_predict(const TrainingSummary& summary, Rng& rng);

// Guess each member's top choice from one of their training groups (or the
// popular item for unseen members), then take the plurality winner.
AlternativeId rtcp_predict(const Group& group, const TrainingSummary& summary, Rng& rng);

// Decision of the training group sharing the most members; ties uniform;
// popularity when nothing overlaps.
AlternativeId osim_predict(const Group& group, const GroupDataset& train, const TrainingSummary& summary, Rng& rng);

}  // namespace deepgroup
