#include "deepgroup/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "deepgroup/checkpoint.hpp"

namespace deepgroup {

std::string_view to_string(Aggregator a) {
  switch (a) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Max: return "max";
    case Aggregator::Min: return "min";
    case Aggregator::Median: return "median";
    case Aggregator::MeanMaxMin: return "meanmaxmin";
  }
  return "unknown";
}

Aggregator parse_aggregator(std::string_view text) {
  if (text == "mean") return Aggregator::Mean;
  if (text == "max") return Aggregator::Max;
  if (text == "min") return Aggregator::Min;
  if (text == "median") return Aggregator::Median;
  if (text == "meanmaxmin") return Aggregator::MeanMaxMin;
  throw std::invalid_argument("unknown aggregator '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  if (num_users < 1 || num_items < 1) throw std::invalid_argument("model: num_users and num_items must be positive");
  if (user_dim < 1 || item_dim < 1) throw std::invalid_argument("model: embedding dimensions must be positive");
  if (hidden_sizes.empty()) throw std::invalid_argument("model: at least one hidden layer required");
  for (const int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("model: hidden sizes must be positive");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw std::invalid_argument("model: keep_prob must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("model: learning rate must be positive");
  if (epochs < 0 || batch_size < 1) throw std::invalid_argument("model: invalid epochs or batch size");
}

std::vector<Tensor> ModelParams::trainable() const {
  std::vector<Tensor> out{user_embeddings, item_embeddings};
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  out.push_back(output_weight);
  out.push_back(output_bias);
  return out;
}

namespace {

std::size_t to_size(int v) { return static_cast<std::size_t>(v); }

Tensor detach(const Tensor& t) { return Tensor::from(t.shape(), {t.values().begin(), t.values().end()}); }

ReduceOp reduce_op(Aggregator a) {
  switch (a) {
    case Aggregator::Mean: return ReduceOp::Mean;
    case Aggregator::Max: return ReduceOp::Max;
    case Aggregator::Min: return ReduceOp::Min;
    case Aggregator::Median: return ReduceOp::Median;
    case Aggregator::MeanMaxMin: break;
  }
  throw std::logic_error("combined aggregator has no single reduce op");
}

// Input width of each layer, output layer last.
std::vector<int> layer_inputs(const ModelConfig& c) {
  std::vector<int> in{c.aggregate_dim() + c.item_dim};
  for (std::size_t i = 0; i + 1 < c.hidden_sizes.size(); ++i) in.push_back(c.hidden_sizes[i]);
  in.push_back(c.hidden_sizes.back());
  return in;
}

std::vector<int> sorted_checked(std::span<const UserId> member_ids, int num_users) {
  if (member_ids.empty()) throw std::invalid_argument("empty group");
  std::vector<int> ids(member_ids.begin(), member_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw std::invalid_argument("group has duplicate members");
  if (ids.front() < 0 || ids.back() >= num_users)
    throw std::out_of_range("user id out of range [0, " + std::to_string(num_users) + ")");
  return ids;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParams p;
  std::normal_distribution<double> embedding(0.0, 0.01);
  auto normal_table = [&](int rows, int cols) {
    std::vector<double> v(to_size(rows) * to_size(cols));
    for (auto& x : v) x = embedding(rng);
    return Tensor::from({to_size(rows), to_size(cols)}, std::move(v), true);
  };
  auto glorot = [&](int out, int in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(to_size(out) * to_size(in));
    for (auto& x : v) x = u(rng);
    return Tensor::from({to_size(out), to_size(in)}, std::move(v), true);
  };
  p.user_embeddings = normal_table(config.num_users, config.user_dim);
  p.item_embeddings = normal_table(config.num_items, config.item_dim);
  const auto inputs = layer_inputs(config);
  for (std::size_t i = 0; i < config.hidden_sizes.size(); ++i) {
    p.weights.push_back(glorot(config.hidden_sizes[i], inputs[i]));
    p.biases.push_back(Tensor::zeros({to_size(config.hidden_sizes[i])}, true));
  }
  p.output_weight = glorot(1, config.hidden_sizes.back());
  p.output_bias = Tensor::zeros({1}, true);
  p.seen_users.assign(to_size(config.num_users), 0);
  return p;
}

ModelParams zero_params(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.user_embeddings = Tensor::zeros({to_size(config.num_users), to_size(config.user_dim)}, true);
  p.item_embeddings = Tensor::zeros({to_size(config.num_items), to_size(config.item_dim)}, true);
  const auto inputs = layer_inputs(config);
  for (std::size_t i = 0; i < config.hidden_sizes.size(); ++i) {
    p.weights.push_back(Tensor::zeros({to_size(config.hidden_sizes[i]), to_size(inputs[i])}, true));
    p.biases.push_back(Tensor::zeros({to_size(config.hidden_sizes[i])}, true));
  }
  p.output_weight = Tensor::zeros({1, to_size(config.hidden_sizes.back())}, true);
  p.output_bias = Tensor::zeros({1}, true);
  p.seen_users.assign(to_size(config.num_users), 0);
  return p;
}

Tensor aggregate_group(std::span<const UserId> member_ids, const ModelParams& params, Aggregator aggregator) {
  const auto ids = sorted_checked(member_ids, static_cast<int>(params.user_embeddings.dim(0)));
  const Tensor rows = gather_rows(params.user_embeddings, ids);
  if (aggregator != Aggregator::MeanMaxMin) return elementwise_reduce(rows, reduce_op(aggregator));
  return concat_columns({elementwise_reduce(rows, ReduceOp::Mean), elementwise_reduce(rows, ReduceOp::Max),
                         elementwise_reduce(rows, ReduceOp::Min)});
}

Tensor aggregate_groups(const Tensor& user_table, const Segments& sorted_members, Aggregator aggregator) {
  if (aggregator != Aggregator::MeanMaxMin) return gather_reduce(user_table, sorted_members, reduce_op(aggregator));
  return concat_columns({gather_reduce(user_table, sorted_members, ReduceOp::Mean), gather_reduce(user_table, sorted_members, ReduceOp::Max),
                         gather_reduce(user_table, sorted_members, ReduceOp::Min)});
}

Tensor forward_batch(const Tensor& user_table, const Segments& sorted_members, std::span<const int> item_rows,
                     const ModelParams& params, const ModelConfig& config, bool training, Rng& rng) {
  if (sorted_members.size() != item_rows.size()) throw std::invalid_argument("forward_batch: groups and items misaligned");
  Tensor h = concat_columns({aggregate_groups(user_table, sorted_members, config.aggregator), gather_rows(params.item_embeddings, item_rows)});
  for (std::size_t i = 0; i < params.weights.size(); ++i)
    h = dropout(relu(linear(h, params.weights[i], params.biases[i])), config.keep_prob, training, rng);
  return sigmoid(linear(h, params.output_weight, params.output_bias));
}

double forward(std::span<const UserId> member_ids, AlternativeId item, const ModelParams& params, const ModelConfig& config,
               bool training, Rng& rng) {
  if (item < 1 || item > config.num_items) throw std::out_of_range("item " + std::to_string(item) + " out of range");
  Segments segment;
  segment.add(sorted_checked(member_ids, config.num_users));
  const int row = item - 1;
  return forward_batch(params.user_embeddings, segment, std::span<const int>(&row, 1), params, config, training, rng).item();
}

namespace {

void check_dataset(const GroupDataset& dataset, const ModelConfig& config) {
  dataset.validate();
  if (dataset.num_alternatives != config.num_items)
    throw std::invalid_argument("dataset has " + std::to_string(dataset.num_alternatives) + " alternatives, model expects " +
                                std::to_string(config.num_items));
  if (dataset.user_span() > config.num_users)
    throw std::invalid_argument("dataset references user " + std::to_string(dataset.user_span() - 1) + " beyond model's " +
                                std::to_string(config.num_users) + " users");
}

}  // namespace

TrainResult train(const GroupDataset& dataset, const ModelConfig& config) {
  config.validate();
  check_dataset(dataset, config);
  if (dataset.groups.empty()) throw std::invalid_argument("train: empty dataset");

  Rng init_rng(derive_seed(config.seed, 0));
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));

  TrainResult result{init_params(config, init_rng), {}};
  ModelParams& params = result.params;
  for (const auto& g : dataset.groups)
    for (const auto u : g.members()) params.seen_users[to_size(u)] = 1;

  const std::size_t m = to_size(config.num_items);
  std::vector<std::uint32_t> records(dataset.groups.size() * m);
  std::iota(records.begin(), records.end(), 0u);

  auto trainable = params.trainable();
  AdamState adam;
  adam.learning_rate = config.learning_rate;

  Segments segments;
  std::vector<int> items;
  std::vector<double> targets;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = records.size(); i > 1; --i)
      std::swap(records[i - 1], records[to_size(uniform_int(shuffle_rng, 0, static_cast<int>(i) - 1))]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < records.size(); start += to_size(config.batch_size)) {
      const std::size_t end = std::min(records.size(), start + to_size(config.batch_size));
      segments.clear();
      items.clear();
      targets.clear();
      for (std::size_t r = start; r < end; ++r) {
        const std::size_t group = records[r] / m;
        const int item = static_cast<int>(records[r] % m);
        segments.add(dataset.groups[group].members());
        items.push_back(item);
        targets.push_back(dataset.decisions[group] == item + 1 ? 1.0 : 0.0);
      }
      const std::size_t batch = end - start;
      const Tensor predictions = forward_batch(params.user_embeddings, segments, items, params, config, true, dropout_rng);
      Tensor loss = bce_loss(predictions, Tensor::from({batch, 1}, targets));
      loss.backward();
      adam_step(trainable, adam);
      epoch_loss += loss.item() * static_cast<double>(batch);
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(records.size()));
  }
  return result;
}

GroupPredictor::GroupPredictor(const ModelParams& params, const ModelConfig& config) : config_(config) {
  config_.validate();
  params_.user_embeddings = detach(params.user_embeddings);
  params_.item_embeddings = detach(params.item_embeddings);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    params_.weights.push_back(detach(params.weights[i]));
    params_.biases.push_back(detach(params.biases[i]));
  }
  params_.output_weight = detach(params.output_weight);
  params_.output_bias = detach(params.output_bias);
  params_.seen_users = params.seen_users;

  const std::size_t n = params.user_embeddings.dim(0), d = params.user_embeddings.dim(1);
  std::vector<double> table(params.user_embeddings.values().begin(), params.user_embeddings.values().end());
  std::vector<double> mean(d, 0.0);
  std::size_t seen = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (!params.seen_users.empty() && !params.seen_users[u]) continue;
    ++seen;
    for (std::size_t c = 0; c < d; ++c) mean[c] += table[u * d + c];
  }
  if (seen > 0)
    for (auto& v : mean) v /= static_cast<double>(seen);
  table.insert(table.end(), mean.begin(), mean.end());
  table_ = Tensor::from({n + 1, d}, std::move(table));
  cold_row_ = static_cast<int>(n);
}

std::vector<int> GroupPredictor::resolve_members(std::span<const UserId> member_ids) const {
  auto ids = sorted_checked(member_ids, config_.num_users);
  bool any_seen = false;
  for (auto& u : ids) {
    if (!params_.seen_users.empty() && !params_.seen_users[to_size(u)])
      u = cold_row_;
    else
      any_seen = true;
  }
  // A group made only of cold users is the cold-user singleton.
  if (!any_seen) ids.assign(1, cold_row_);
  return ids;
}

std::vector<std::vector<double>> GroupPredictor::scores(std::span<const Group> groups) const {
  const std::size_t m = to_size(config_.num_items);
  std::vector<std::vector<double>> out(groups.size(), std::vector<double>(m));
  const std::size_t per_chunk = std::max<std::size_t>(1, 8192 / m);
  Segments segments;
  std::vector<int> items;
  Rng unused(0);
  for (std::size_t start = 0; start < groups.size(); start += per_chunk) {
    const std::size_t end = std::min(groups.size(), start + per_chunk);
    segments.clear();
    items.clear();
    for (std::size_t g = start; g < end; ++g) {
      const auto resolved = resolve_members(groups[g].members());
      for (std::size_t j = 0; j < m; ++j) {
        segments.add(resolved);
        items.push_back(static_cast<int>(j));
      }
    }
    const Tensor probs = forward_batch(table_, segments, items, params_, config_, false, unused);
    for (std::size_t g = start; g < end; ++g)
      for (std::size_t j = 0; j < m; ++j) out[g][j] = probs.at((g - start) * m + j);
  }
  return out;
}

std::vector<double> GroupPredictor::scores(std::span<const UserId> member_ids) const {
  const Group g(std::vector<UserId>(member_ids.begin(), member_ids.end()));
  return scores(std::span<const Group>(&g, 1)).front();
}

namespace {

std::vector<AlternativeId> rank_items(const std::vector<double>& scores, int k) {
  std::vector<AlternativeId> order(scores.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](AlternativeId a, AlternativeId b) {
    return scores[to_size(a - 1)] > scores[to_size(b - 1)];
  });
  order.resize(to_size(k));
  return order;
}

}  // namespace

std::vector<AlternativeId> GroupPredictor::top_k(std::span<const UserId> member_ids, int k) const {
  if (k < 1 || k > config_.num_items) throw std::out_of_range("k must lie in [1, " + std::to_string(config_.num_items) + "]");
  return rank_items(scores(member_ids), k);
}

std::vector<AlternativeId> GroupPredictor::top1(std::span<const Group> groups) const {
  std::vector<AlternativeId> out;
  out.reserve(groups.size());
  for (const auto& s : scores(groups)) out.push_back(rank_items(s, 1).front());
  return out;
}

std::vector<AlternativeId> predict_topk(std::span<const UserId> member_ids, const ModelParams& params, const ModelConfig& config, int k) {
  return GroupPredictor(params, config).top_k(member_ids, k);
}

double training_accuracy(const GroupDataset& dataset, const ModelParams& params, const ModelConfig& config) {
  if (dataset.groups.empty()) throw std::invalid_argument("training_accuracy: empty dataset");
  const auto predicted = GroupPredictor(params, config).top1(dataset.groups);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == dataset.decisions[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

void save_model(const std::filesystem::path& path, const ModelParams& params, const ModelConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model checkpoint " + path.string());
  out << "deepgroup-model 1\n";
  out << "num_users=" << config.num_users << '\n' << "num_items=" << config.num_items << '\n';
  out << "user_dim=" << config.user_dim << '\n' << "item_dim=" << config.item_dim << '\n';
  out << "hidden_sizes=";
  for (std::size_t i = 0; i < config.hidden_sizes.size(); ++i) out << (i ? "," : "") << config.hidden_sizes[i];
  out << '\n';
  out << "aggregator=" << to_string(config.aggregator) << '\n';
  out << "keep_prob=" << format_double(config.keep_prob) << '\n';
  out << "learning_rate=" << format_double(config.learning_rate) << '\n';
  out << "epochs=" << config.epochs << '\n' << "batch_size=" << config.batch_size << '\n' << "seed=" << config.seed << '\n';
  out << "seen_users=";
  for (const char s : params.seen_users) out << (s ? '1' : '0');
  out << "\nend\n";
  std::vector<NamedTensor> tensors{{"user_embeddings", params.user_embeddings}, {"item_embeddings", params.item_embeddings}};
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    tensors.push_back({"weight" + std::to_string(i + 1), params.weights[i]});
    tensors.push_back({"bias" + std::to_string(i + 1), params.biases[i]});
  }
  tensors.push_back({"output_weight", params.output_weight});
  tensors.push_back({"output_bias", params.output_bias});
  write_tensors(out, tensors);
}

std::pair<ModelParams, ModelConfig> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "deepgroup-model 1") throw std::runtime_error(path.string() + ": not a deepgroup model checkpoint");
  ModelConfig config;
  std::string seen;
  while (std::getline(in, line) && line != "end") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed checkpoint header line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "num_users") config.num_users = std::stoi(value);
    else if (key == "num_items") config.num_items = std::stoi(value);
    else if (key == "user_dim") config.user_dim = std::stoi(value);
    else if (key == "item_dim") config.item_dim = std::stoi(value);
    else if (key == "aggregator") config.aggregator = parse_aggregator(value);
    else if (key == "keep_prob") config.keep_prob = parse_double(value);
    else if (key == "learning_rate") config.learning_rate = parse_double(value);
    else if (key == "epochs") config.epochs = std::stoi(value);
    else if (key == "batch_size") config.batch_size = std::stoi(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "seen_users") seen = value;
    else if (key == "hidden_sizes") {
      config.hidden_sizes.clear();
      std::istringstream s(value);
      for (std::string h; std::getline(s, h, ',');) config.hidden_sizes.push_back(std::stoi(h));
    } else {
      throw std::runtime_error("unknown checkpoint header key '" + key + "'");
    }
  }
  config.validate();
  const ModelParams expected = zero_params(config);
  const auto tensors = read_tensors(in);
  const auto slots = expected.trainable();
  if (tensors.size() != slots.size())
    throw std::runtime_error("checkpoint holds " + std::to_string(tensors.size()) + " tensors, config implies " + std::to_string(slots.size()));
  std::vector<Tensor> loaded;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (tensors[i].tensor.shape() != slots[i].shape())
      throw std::runtime_error("checkpoint tensor '" + tensors[i].name + "' has shape " + shape_string(tensors[i].tensor.shape()) +
                               ", expected " + shape_string(slots[i].shape()));
    loaded.push_back(Tensor::from(tensors[i].tensor.shape(), {tensors[i].tensor.values().begin(), tensors[i].tensor.values().end()}, true));
  }
  if (seen.size() != to_size(config.num_users)) throw std::runtime_error("checkpoint seen_users mask has wrong length");

  ModelParams params;
  std::size_t k = 0;
  params.user_embeddings = loaded[k++];
  params.item_embeddings = loaded[k++];
  for (std::size_t i = 0; i < config.hidden_sizes.size(); ++i) {
    params.weights.push_back(loaded[k++]);
    params.biases.push_back(loaded[k++]);
  }
  params.output_weight = loaded[k++];
  params.output_bias = loaded[k++];
  for (const char c : seen) params.seen_users.push_back(c == '1' ? 1 : 0);
  return {std::move(params), config};
}

}  // namespace deepgroup
