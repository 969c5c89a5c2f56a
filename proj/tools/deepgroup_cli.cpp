// deepgroup: command line front end for the group decision experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "deepgroup/checkpoint.hpp"
#include "deepgroup/experiment.hpp"
#include "deepgroup/runtime.hpp"
#include "deepgroup/surrogate.hpp"

namespace fs = std::filesystem;
using namespace deepgroup;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
};

// Settings of the first cell of a config file, or the defaults.
ExperimentConfig base_config(const Common& common) {
  if (common.config.empty()) return {};
  return load_experiment_config(common.config).front();
}

PreferenceProfile load_profile(const std::string& profile, const std::string& surrogate, std::uint64_t seed) {
  if (!surrogate.empty()) return make_surrogate(surrogate_spec(surrogate), seed);
  if (profile.empty()) throw std::invalid_argument("no preference profile given (use --profile or --surrogate)");
  return load_preference_file(profile);
}

fs::path out_dir(const Common& common, const fs::path& fallback) {
  const fs::path dir = common.out.empty() ? fallback : fs::path(common.out);
  if (dir.empty()) throw std::invalid_argument("no output directory given (use --out)");
  fs::create_directories(dir);
  return dir;
}

int cmd_inspect(const std::string& path) {
  const auto profile = load_preference_file(path);
  const int m = profile.num_alternatives;
  std::vector<long> top(static_cast<std::size_t>(m) + 1, 0), lengths(static_cast<std::size_t>(m) + 1, 0);
  long complete = 0;
  double total_length = 0.0;
  for (const auto& r : profile.voters) {
    ++top[static_cast<std::size_t>(r.top())];
    ++lengths[static_cast<std::size_t>(r.length())];
    complete += r.complete();
    total_length += r.length();
  }
  const double n = profile.num_voters();
  std::printf("alternatives %d\nvoters %d\ncomplete ballots %ld (%.1f%%)\nmean ballot length %.2f\n", m, profile.num_voters(), complete,
              100.0 * static_cast<double>(complete) / n, total_length / n);
  std::printf("ballot length histogram:\n");
  for (int t = 1; t <= m; ++t)
    if (lengths[static_cast<std::size_t>(t)]) std::printf("  %2d  %ld\n", t, lengths[static_cast<std::size_t>(t)]);
  std::printf("top choices:\n");
  for (int a = 1; a <= m; ++a)
    std::printf("  %2d  %-24s %6ld (%.1f%%)\n", a, profile.alternative_names[static_cast<std::size_t>(a - 1)].c_str(),
                top[static_cast<std::size_t>(a)], 100.0 * static_cast<double>(top[static_cast<std::size_t>(a)]) / n);
  return 0;
}

struct SynthArgs {
  std::string profile, surrogate, method, rule;
  std::optional<int> n, kappa, l;
};

int cmd_synth(const Common& common, const SynthArgs& a) {
  ExperimentConfig c = base_config(common);
  if (a.n) c.n_users = *a.n;
  if (!a.method.empty()) c.synth.method = parse_synth_method(a.method);
  if (a.kappa) c.synth.kappa = *a.kappa;
  if (a.l) c.synth.l = *a.l;
  if (!a.rule.empty()) c.rule = parse_decision_rule(a.rule);
  const std::uint64_t seed = common.seed.value_or(c.seed);
  c.synth.seed = seed;
  c.validate();

  const auto profile = load_profile(a.profile.empty() ? c.preference_file.string() : a.profile, a.surrogate, seed);
  Rng sample_rng(derive_seed(seed, 1)), synth_rng(derive_seed(seed, 2)), decision_rng(derive_seed(seed, 3));
  const auto users = c.n_users > 0 ? sample_users(profile, c.n_users, sample_rng) : profile;
  auto dataset = assign_decisions(generate_groups(users, c.synth, synth_rng), users, c.rule, decision_rng);
  dataset.method = c.synth.method;
  dataset.seed = seed;

  const auto dir = out_dir(common, {});
  save_preference_file(users, dir / "users.soi");
  save_group_dataset(dataset, dir / "groups.txt");
  std::printf("wrote %zu groups over %d users to %s\n", dataset.size(), users.num_voters(), (dir / "groups.txt").c_str());
  return 0;
}

struct TrainArgs {
  std::string groups, users;
  std::optional<int> epochs;
  double split = 0.0;
};

int cmd_train(const Common& common, const TrainArgs& a) {
  ExperimentConfig c = base_config(common);
  const auto dataset = load_group_dataset(a.groups);
  ModelConfig model = c.model;
  if (a.epochs) model.epochs = *a.epochs;
  model.seed = common.seed.value_or(c.seed);
  model.num_items = dataset.num_alternatives;
  model.num_users = a.users.empty() ? dataset.user_span() : load_preference_file(a.users).num_voters();

  GroupDataset train_set = dataset, test_set;
  const auto dir = out_dir(common, {});
  if (a.split > 0.0) {
    Rng split_rng(derive_seed(model.seed, 4));
    std::tie(train_set, test_set) = split_dataset(dataset, a.split, split_rng);
    save_group_dataset(train_set, dir / "train.txt");
    save_group_dataset(test_set, dir / "test.txt");
  }
  const auto result = train(train_set, model);
  save_model(dir / "model.ckpt", result.params, model);
  std::ofstream loss(dir / "loss.csv");
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) loss << e + 1 << ',' << format_double(result.loss_trace[e]) << '\n';
  if (!loss.flush()) throw std::runtime_error("cannot write " + (dir / "loss.csv").string());

  std::printf("trained on %zu groups: loss %.4f -> %.4f, training accuracy %.4f\n", train_set.size(), result.loss_trace.front(),
              result.loss_trace.back(), training_accuracy(train_set, result.params, model));
  if (!test_set.groups.empty())
    std::printf("held-out accuracy %.4f on %zu groups\n", accuracy(GroupPredictor(result.params, model).top1(test_set.groups), test_set),
                test_set.size());
  std::printf("checkpoint %s\n", (dir / "model.ckpt").c_str());
  return 0;
}

struct EvalArgs {
  std::string method = "deepgroup", model, train, test, users;
  bool reverse = false;
};

int cmd_eval(const Common& common, const EvalArgs& a) {
  const Method method = parse_method(a.method);
  if (a.train.empty()) throw std::invalid_argument("--train is required");
  const auto train_set = load_group_dataset(a.train);
  GroupDataset test_set;
  if (a.reverse) {
    if (a.users.empty()) throw std::invalid_argument("--reverse needs --users for the ground-truth rankings");
    test_set = build_reverse_test(train_set, load_preference_file(a.users));
  } else {
    if (a.test.empty()) throw std::invalid_argument("--test is required unless --reverse is given");
    test_set = load_group_dataset(a.test);
  }

  double acc = 0.0;
  if (method == Method::DeepGroup) {
    if (a.model.empty()) throw std::invalid_argument("deepgroup evaluation needs --model");
    const auto [params, config] = load_model(a.model);
    acc = accuracy(GroupPredictor(params, config).top1(test_set.groups), test_set);
  } else {
    Rng rng(common.seed.value_or(0));
    ModelConfig unused;
    acc = evaluate(method, train_set, test_set, unused, rng);
  }
  std::printf("%s %s accuracy %.4f on %zu test groups\n", std::string(to_string(method)).c_str(), a.reverse ? "reverse" : "group", acc,
              test_set.size());
  return 0;
}

struct ExperimentArgs {
  std::string surrogate;
  std::uint64_t surrogate_seed = 0;
};

int cmd_experiment(const Common& common, const ExperimentArgs& a) {
  if (common.config.empty()) throw std::invalid_argument("experiment needs --config (or DEEPGROUP_CONFIG)");
  auto cells = load_experiment_config(common.config);
  for (auto& c : cells) {
    if (common.seed) c.seed = *common.seed;
    if (common.jobs) c.jobs = *common.jobs;
    if (!a.surrogate.empty() && c.dataset.empty()) c.dataset = a.surrogate;
  }
  const auto dir = out_dir(common, cells.front().output);

  std::map<fs::path, PreferenceProfile> profiles;
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const fs::path key = a.surrogate.empty() ? c.preference_file : fs::path("surrogate:" + a.surrogate);
    if (!profiles.contains(key)) profiles.emplace(key, load_profile(c.preference_file.string(), a.surrogate, a.surrogate_seed));
    std::fprintf(stderr, "[%zu/%zu] %s %s %s %s=%d\n", i + 1, cells.size(), c.dataset.c_str(), std::string(to_string(c.task)).c_str(),
                 std::string(to_string(c.rule)).c_str(), std::string(to_string(c.synth.method)).c_str(), c.sweep_parameter());
    try {
      reports.push_back(run_experiment(c, profiles.at(key)));
    } catch (const std::exception& e) {
      throw std::runtime_error("cell " + std::to_string(i + 1) + ": " + e.what());
    }
    for (const auto& r : reports.back().results)
      std::fprintf(stderr, "    %-10s %.4f +- %.4f\n", std::string(to_string(r.method)).c_str(), r.mean, r.stddev);
  }
  emit_results(reports, dir);
  std::printf("wrote %s and %s\n", (dir / "detail.csv").c_str(), (dir / "summary.csv").c_str());
  return 0;
}

int cmd_surrogate(const Common& common, const std::string& name, std::optional<int> voters) {
  auto spec = surrogate_spec(name);
  if (voters) spec.num_voters = *voters;
  const auto profile = make_surrogate(spec, common.seed.value_or(0));
  const auto dir = out_dir(common, {});
  const auto path = dir / (name + (spec.partial ? ".soi" : ".soc"));
  save_preference_file(profile, path);
  std::printf("wrote %d voters over %d alternatives to %s\n", profile.num_voters(), profile.num_alternatives, path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Group decision prediction from group implicit feedback"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool config, bool seed, bool out, bool jobs) {
    if (config)
      sub->add_option("--config", common.config, "Experiment config (key=value)")->envname("DEEPGROUP_CONFIG")->check(CLI::ExistingFile);
    if (seed) sub->add_option("--seed", common.seed, "Master seed");
    if (out) sub->add_option("--out", common.out, "Output directory");
    if (jobs) sub->add_option("--jobs", common.jobs, "Concurrent instances")->check(CLI::PositiveNumber);
  };

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print statistics of a preference profile");
  inspect->add_option("profile", inspect_path, "Preference file")->required()->check(CLI::ExistingFile);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Sample users, synthesize groups and write a group dataset");
  add_common(synth, true, true, true, false);
  synth->add_option("--profile", synth_args.profile, "Preference file (defaults to the config's)");
  synth->add_option("--surrogate", synth_args.surrogate, "Use a synthetic profile shaped like this dataset");
  synth->add_option("--n", synth_args.n, "Users to sample (0 = all)");
  synth->add_option("--method", synth_args.method, "kpg, rsg or rdg");
  synth->add_option("--kappa", synth_args.kappa, "KPG partitions");
  synth->add_option("--l", synth_args.l, "RSG/RDG group count");
  synth->add_option("--rule", synth_args.rule, "plurality, borda or mixture");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train one model on a group dataset and write a checkpoint");
  add_common(train_cmd, true, true, true, false);
  train_cmd->add_option("--groups", train_args.groups, "Group dataset")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--users", train_args.users, "Profile the group member ids index into")->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", train_args.epochs, "Override the configured epoch count");
  train_cmd->add_option("--split", train_args.split, "Hold out 1 - split of the groups and report accuracy on them")
      ->check(CLI::Range(0.0, 1.0));

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a baseline");
  add_common(eval, false, true, false, false);
  eval->add_option("--method", eval_args.method, "deepgroup, pop, rtcp or osim");
  eval->add_option("--model", eval_args.model, "Checkpoint (deepgroup)")->check(CLI::ExistingFile);
  eval->add_option("--train", eval_args.train, "Training group dataset")->check(CLI::ExistingFile);
  eval->add_option("--test", eval_args.test, "Test group dataset")->check(CLI::ExistingFile);
  eval->add_flag("--reverse", eval_args.reverse, "Predict each training user's top choice instead");
  eval->add_option("--users", eval_args.users, "Profile with the users' rankings (reverse task)")->check(CLI::ExistingFile);

  ExperimentArgs experiment_args;
  auto* experiment = app.add_subcommand("experiment", "Run every cell of a config and write detail/summary CSVs");
  add_common(experiment, true, true, true, true);
  experiment->add_option("--surrogate", experiment_args.surrogate, "Use a synthetic profile instead of preference_file");
  experiment->add_option("--surrogate-seed", experiment_args.surrogate_seed, "Seed of the synthetic profile");

  std::string surrogate_name;
  std::optional<int> surrogate_voters;
  auto* surrogate = app.add_subcommand("surrogate", "Write a synthetic profile shaped like a known dataset");
  add_common(surrogate, false, true, true, false);
  surrogate->add_option("name", surrogate_name, "dublin_west, dublin_north, meath or sushi")->required();
  surrogate->add_option("--voters", surrogate_voters, "Override the voter count")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*inspect) return cmd_inspect(inspect_path);
    if (*synth) return cmd_synth(common, synth_args);
    if (*train_cmd) return cmd_train(common, train_args);
    if (*eval) return cmd_eval(common, eval_args);
    if (*experiment) return cmd_experiment(common, experiment_args);
    if (*surrogate) return cmd_surrogate(common, surrogate_name, surrogate_voters);
  } catch (const std::exception& e) {
    std::cerr << "deepgroup: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
