#include "deepgroup/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "deepgroup/baselines.hpp"
#include "deepgroup/checkpoint.hpp"

namespace deepgroup {

std::string_view to_string(Task task) {
  return task == Task::GroupDecisionPrediction ? "group" : "reverse";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::DeepGroup: return "deepgroup";
    case Method::Pop: return "pop";
    case Method::RTCP: return "rtcp";
    case Method::OSim: return "osim";
  }
  return "unknown";
}

Task parse_task(std::string_view text) {
  if (text == "group") return Task::GroupDecisionPrediction;
  if (text == "reverse") return Task::ReverseSocialChoice;
  throw std::invalid_argument("unknown task '" + std::string(text) + "' (expected group or reverse)");
}

Method parse_method(std::string_view text) {
  if (text == "deepgroup") return Method::DeepGroup;
  if (text == "pop") return Method::Pop;
  if (text == "rtcp") return Method::RTCP;
  if (text == "osim") return Method::OSim;
  throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  synth.validate();
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw std::invalid_argument("split_fraction must lie in (0, 1)");
  if (instances < 1) throw std::invalid_argument("instances must be at least 1");
  if (n_users < 0) throw std::invalid_argument("n must be non-negative");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  for (std::string item; std::getline(in, item, ',');)
    if (auto t = trim(item); !t.empty()) out.push_back(std::move(t));
  if (out.empty()) throw std::invalid_argument("empty list value");
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  const int v = std::stoi(s, &used);
  if (used != s.size()) throw std::invalid_argument("invalid integer '" + s + "'");
  return v;
}

}  // namespace

std::vector<ExperimentConfig> parse_experiment_config(std::string_view text) {
  ExperimentConfig base;
  std::vector<std::string> kappas, ls, rules, tasks, synths;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected key=value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (key == "preference_file") base.preference_file = value;
      else if (key == "dataset") base.dataset = value;
      else if (key == "n") base.n_users = to_int(value);
      else if (key == "synth") synths = split_list(value);
      else if (key == "kappa") kappas = split_list(value);
      else if (key == "l") ls = split_list(value);
      else if (key == "s_min") base.synth.s_min = to_int(value);
      else if (key == "s_max") base.synth.s_max = to_int(value);
      else if (key == "tau_sim") base.synth.tau_sim = parse_double(value);
      else if (key == "tau_dis") base.synth.tau_dis = parse_double(value);
      else if (key == "rule") rules = split_list(value);
      else if (key == "task") tasks = split_list(value);
      else if (key == "methods") {
        base.methods.clear();
        if (value != "none")
          for (const auto& m : split_list(value)) base.methods.push_back(parse_method(m));
      } else if (key == "aggregator") base.model.aggregator = parse_aggregator(value);
      else if (key == "user_dim") base.model.user_dim = to_int(value);
      else if (key == "item_dim") base.model.item_dim = to_int(value);
      else if (key == "hidden_sizes") {
        base.model.hidden_sizes.clear();
        for (const auto& h : split_list(value)) base.model.hidden_sizes.push_back(to_int(h));
      } else if (key == "keep_prob") base.model.keep_prob = parse_double(value);
      else if (key == "learning_rate") base.model.learning_rate = parse_double(value);
      else if (key == "epochs") base.model.epochs = to_int(value);
      else if (key == "batch_size") base.model.batch_size = to_int(value);
      else if (key == "instances") base.instances = to_int(value);
      else if (key == "split_fraction") base.split_fraction = parse_double(value);
      else if (key == "seed") base.seed = std::stoull(value);
      else if (key == "output") base.output = value;
      else if (key == "jobs") base.jobs = to_int(value);
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(number, e.what());
    }
  }
  if (base.dataset.empty()) base.dataset = base.preference_file.stem().string();
  if (kappas.empty()) kappas = {std::to_string(base.synth.kappa)};
  if (ls.empty()) ls = {std::to_string(base.synth.l)};
  if (rules.empty()) rules = {std::string(to_string(base.rule))};
  if (tasks.empty()) tasks = {std::string(to_string(base.task))};
  if (synths.empty()) synths = {std::string(to_string(base.synth.method))};

  std::vector<ExperimentConfig> cells;
  for (const auto& task : tasks)
    for (const auto& rule : rules)
      for (const auto& synth : synths) {
        const auto method = parse_synth_method(synth);
        // The irrelevant sweep axis collapses to its first value.
        const auto& params = method == SynthMethod::KPG ? kappas : ls;
        for (const auto& p : params) {
          ExperimentConfig c = base;
          c.task = parse_task(task);
          c.rule = parse_decision_rule(rule);
          c.synth.method = method;
          (method == SynthMethod::KPG ? c.synth.kappa : c.synth.l) = to_int(p);
          c.validate();
          cells.push_back(std::move(c));
        }
      }
  return cells;
}

std::vector<ExperimentConfig> load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto cells = parse_experiment_config(buffer.str());
  for (auto& c : cells)
    if (c.preference_file.is_relative() && !c.preference_file.empty()) c.preference_file = path.parent_path() / c.preference_file;
  return cells;
}

const MethodResult& EvalReport::result(Method method) const {
  for (const auto& r : results)
    if (r.method == method) return r;
  throw std::out_of_range("report has no results for " + std::string(to_string(method)));
}

std::pair<GroupDataset, GroupDataset> split_dataset(const GroupDataset& dataset, double fraction, Rng& rng) {
  const std::size_t l = dataset.groups.size();
  if (l < 2) throw std::invalid_argument("split_dataset: need at least 2 groups");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_dataset: fraction must lie in (0, 1)");
  const auto train_size = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(l))), 1, l - 1);

  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = l; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1))]);

  auto take = [&](std::size_t begin, std::size_t end) {
    GroupDataset part;
    part.num_alternatives = dataset.num_alternatives;
    part.method = dataset.method;
    part.rule = dataset.rule;
    part.seed = dataset.seed;
    std::vector<std::size_t> picked(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(picked.begin(), picked.end());
    for (const auto i : picked) {
      part.groups.push_back(dataset.groups[i]);
      part.decisions.push_back(dataset.decisions[i]);
      if (i < dataset.rule_used.size()) part.rule_used.push_back(dataset.rule_used[i]);
    }
    return part;
  };
  return {take(0, train_size), take(train_size, l)};
}

GroupDataset build_reverse_test(const GroupDataset& train, const PreferenceProfile& profile) {
  if (train.groups.empty()) throw std::invalid_argument("build_reverse_test: empty training set");
  std::set<UserId> users;
  for (const auto& g : train.groups) users.insert(g.members().begin(), g.members().end());
  GroupDataset test;
  test.num_alternatives = train.num_alternatives;
  test.method = train.method;
  test.rule = train.rule;
  test.seed = train.seed;
  for (const auto u : users) {
    if (u >= profile.num_voters()) throw std::out_of_range("training user " + std::to_string(u) + " not in profile");
    test.groups.emplace_back(std::vector<UserId>{u});
    test.decisions.push_back(profile.voters[static_cast<std::size_t>(u)].top());
  }
  return test;
}

double accuracy(const std::vector<AlternativeId>& predicted, const GroupDataset& test) {
  if (test.groups.empty()) throw std::invalid_argument("accuracy: empty test set");
  if (predicted.size() != test.decisions.size()) throw std::invalid_argument("accuracy: prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == test.decisions[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double evaluate(Method method, const GroupDataset& train, const GroupDataset& test, const ModelConfig& model, Rng& rng) {
  if (test.groups.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<AlternativeId> predicted;
  predicted.reserve(test.groups.size());
  if (method == Method::DeepGroup) {
    const auto fitted = deepgroup::train(train, model);
    predicted = GroupPredictor(fitted.params, model).top1(test.groups);
    return accuracy(predicted, test);
  }
  const auto summary = summarize(train);
  for (const auto& g : test.groups) {
    switch (method) {
      case Method::Pop: predicted.push_back(pop_predict(summary, rng)); break;
      case Method::RTCP: predicted.push_back(rtcp_predict(g, summary, rng)); break;
      case Method::OSim: predicted.push_back(osim_predict(g, train, summary, rng)); break;
      case Method::DeepGroup: break;
    }
  }
  return accuracy(predicted, test);
}

namespace {

std::vector<double> run_instance(const ExperimentConfig& config, const PreferenceProfile& profile, int index) {
  const std::uint64_t instance_seed = derive_seed(config.seed, static_cast<std::uint64_t>(index));
  Rng sample_rng(derive_seed(instance_seed, 1));
  Rng synth_rng(derive_seed(instance_seed, 2));
  Rng decision_rng(derive_seed(instance_seed, 3));
  Rng split_rng(derive_seed(instance_seed, 4));

  const PreferenceProfile users = config.n_users > 0 ? sample_users(profile, config.n_users, sample_rng) : profile;
  SynthConfig synth = config.synth;
  synth.seed = instance_seed;
  GroupDataset dataset = assign_decisions(generate_groups(users, synth, synth_rng), users, config.rule, decision_rng);
  dataset.method = synth.method;
  dataset.seed = instance_seed;

  // Both tasks train on the same split; the reverse task swaps the held-out
  // groups for singletons of the training users.
  auto [train, test] = split_dataset(dataset, config.split_fraction, split_rng);
  if (config.task == Task::ReverseSocialChoice) test = build_reverse_test(train, users);

  ModelConfig model = config.model;
  model.num_users = users.num_voters();
  model.num_items = users.num_alternatives;
  model.seed = derive_seed(instance_seed, 5);

  std::vector<double> out;
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    Rng method_rng(derive_seed(instance_seed, 6 + static_cast<std::uint64_t>(config.methods[k])));
    out.push_back(evaluate(config.methods[k], train, test, model, method_rng));
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config, const PreferenceProfile& profile) {
  config.validate();
  std::vector<std::vector<double>> per_instance(static_cast<std::size_t>(config.instances));
  std::vector<std::exception_ptr> errors(per_instance.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < config.instances; i = next++) {
      try {
        per_instance[static_cast<std::size_t>(i)] = run_instance(config, profile, i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(config.jobs, config.instances);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("instance " + std::to_string(i) + ": " + e.what());
    }
  }

  EvalReport report{config, {}};
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    MethodResult r;
    r.method = config.methods[k];
    for (const auto& inst : per_instance) r.accuracies.push_back(inst[k]);
    r.mean = std::accumulate(r.accuracies.begin(), r.accuracies.end(), 0.0) / static_cast<double>(r.accuracies.size());
    if (r.accuracies.size() > 1) {
      double ss = 0.0;
      for (const double a : r.accuracies) ss += (a - r.mean) * (a - r.mean);
      r.stddev = std::sqrt(ss / static_cast<double>(r.accuracies.size() - 1));
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

EvalReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_preference_file(config.preference_file));
}

namespace {

constexpr const char* kDetailHeader = "dataset,task,rule,synth_method,param,method,instance,accuracy";
constexpr const char* kSummaryHeader = "dataset,task,rule,synth_method,param,method,instances,mean,std";

void write_cell_prefix(std::ostream& out, const ExperimentConfig& c) {
  out << c.dataset << ',' << to_string(c.task) << ',' << to_string(c.rule) << ',' << to_string(c.synth.method) << ','
      << c.sweep_parameter() << ',';
}

}  // namespace

void emit_results(const std::vector<EvalReport>& reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream detail(dir / "detail.csv", std::ios::binary);
  std::ofstream summary(dir / "summary.csv", std::ios::binary);
  if (!detail || !summary) throw std::runtime_error("cannot write results under " + dir.string());
  detail << kDetailHeader << '\n';
  summary << kSummaryHeader << '\n';
  for (const auto& report : reports) {
    for (const auto& r : report.results) {
      for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
        write_cell_prefix(detail, report.config);
        detail << to_string(r.method) << ',' << i << ',' << format_double(r.accuracies[i]) << '\n';
      }
      write_cell_prefix(summary, report.config);
      summary << to_string(r.method) << ',' << r.accuracies.size() << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << '\n';
    }
  }
  if (!detail.flush() || !summary.flush()) throw std::runtime_error("I/O failure writing results under " + dir.string());
}

std::vector<DetailRow> read_detail_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kDetailHeader) throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<DetailRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    rows.push_back({f[0], f[1], f[2], f[3], to_int(f[4]), f[5], to_int(f[6]), parse_double(f[7])});
  }
  return rows;
}

}  // namespace deepgroup
