#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "deepgroup/adam.hpp"
#include "deepgroup/group_synth.hpp"
#include "deepgroup/rng.hpp"
#include "deepgroup/tensor.hpp"

namespace deepgroup {

enum class Aggregator { Mean, Max, Min, Median, MeanMaxMin };

std::string_view to_string(Aggregator a);
Aggregator parse_aggregator(std::string_view text);

struct ModelConfig {
  int num_users = 0;
  int num_items = 0;
  int user_dim = 64;
  int item_dim = 64;
  std::vector<int> hidden_sizes{64, 32, 16, 8};
  Aggregator aggregator = Aggregator::Mean;
  double keep_prob = 0.8;
  double learning_rate = 0.001;
  int epochs = 100;
  int batch_size = 4096;
  std::uint64_t seed = 0;

  int aggregate_dim() const { return aggregator == Aggregator::MeanMaxMin ? 3 * user_dim : user_dim; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// All learnable state. Item `a` (1-based alternative id) lives in row a-1
/// of `item_embeddings`.
struct ModelParams {
  Tensor user_embeddings;   // [n x d]
  Tensor item_embeddings;   // [m x d']
  std::vector<Tensor> weights;  // [h_i x h_{i-1}]
  std::vector<Tensor> biases;   // [h_i]
  Tensor output_weight;     // [1 x h_X]
  Tensor output_bias;       // [1]
  // Users that appeared in a training group. Unseen users are represented by
  // the mean embedding of seen ones at prediction time.
  std::vector<char> seen_users;

  std::vector<Tensor> trainable() const;
};

// Glorot-uniform MLP weights, zero biases, N(0, 0.01^2) embeddings. All
// users start unseen.
ModelParams init_params(const ModelConfig& config, Rng& rng);
ModelParams zero_params(const ModelConfig& config);

// q for one group. Member ids are sorted before reduction so the result is
// bit-identical under any member order.
Tensor aggregate_group(std::span<const UserId> member_ids, const ModelParams& params, Aggregator aggregator);

// Batched group embeddings [B x agg_dim] from an embedding table.
Tensor aggregate_groups(const Tensor& user_table, const Segments& sorted_members, Aggregator aggregator);

// yhat = sigmoid(w_o . MLP(q || V_item) + b_o). Dropout is applied to
// hidden activations only when `training`.
double forward(std::span<const UserId> member_ids, AlternativeId item, const ModelParams& params, const ModelConfig& config,
               bool training, Rng& rng);

// Batched forward over (group, item) records; returns probabilities [B x 1].
Tensor forward_batch(const Tensor& user_table, const Segments& sorted_members, std::span<const int> item_rows,
                     const ModelParams& params, const ModelConfig& config, bool training, Rng& rng);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // mean training BCE per epoch
};

// Full enumeration of (group, item) records, Adam on mean BCE.
TrainResult train(const GroupDataset& dataset, const ModelConfig& config);

/// Scores groups against all items in evaluation mode, substituting the mean
/// seen-user embedding for users absent from training.
class GroupPredictor {
 public:
  GroupPredictor(const ModelParams& params, const ModelConfig& config);

  // Probabilities for items 1..m (index a-1).
  std::vector<double> scores(std::span<const UserId> member_ids) const;
  // Row g holds the m item probabilities for groups[g].
  std::vector<std::vector<double>> scores(std::span<const Group> groups) const;

  // Top-k items by descending probability, ties by ascending id.
  std::vector<AlternativeId> top_k(std::span<const UserId> member_ids, int k) const;
  std::vector<AlternativeId> top1(std::span<const Group> groups) const;

 private:
  std::vector<int> resolve_members(std::span<const UserId> member_ids) const;

  ModelParams params_;  // detached copy; scoring builds no graph
  ModelConfig config_;
  Tensor table_;  // user embeddings plus one trailing row for the cold-user mean
  int cold_row_;
};

std::vector<AlternativeId> predict_topk(std::span<const UserId> member_ids, const ModelParams& params, const ModelConfig& config, int k);

// Fraction of groups whose top-1 prediction equals their decision.
double training_accuracy(const GroupDataset& dataset, const ModelParams& params, const ModelConfig& config);

// Checkpoint: "deepgroup-model 1" header of key=value config lines, the
// seen-user mask, then the tensor container. Loading validates shapes.
void save_model(const std::filesystem::path& path, const ModelParams& params, const ModelConfig& config);
std::pair<ModelParams, ModelConfig> load_model(const std::filesystem::path& path);

}  // namespace deepgroup
