#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deepgroup/group_synth.hpp"
#include "deepgroup/model.hpp"
#include "deepgroup/preflib.hpp"
#include "deepgroup/social_choice.hpp"

namespace deepgroup {

enum class Task { GroupDecisionPrediction, ReverseSocialChoice };
enum class Method { DeepGroup, Pop, RTCP, OSim };

std::string_view to_string(Task task);
std::string_view to_string(Method method);
Task parse_task(std::string_view text);
Method parse_method(std::string_view text);

struct ExperimentConfig {
  std::filesystem::path preference_file;
  std::string dataset;  // label written to the CSVs; defaults to the file stem
  int n_users = 0;      // users sampled per instance; 0 uses the whole profile
  SynthConfig synth;
  DecisionRule rule = DecisionRule::Plurality;
  Task task = Task::GroupDecisionPrediction;
  std::vector<Method> methods{Method::DeepGroup, Method::Pop, Method::RTCP, Method::OSim};
  ModelConfig model;  // num_users / num_items / seed are set per instance
  int instances = 20;
  double split_fraction = 0.7;
  std::filesystem::path output;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  // kappa for KPG, l for RSG/RDG.
  int sweep_parameter() const { return synth.method == SynthMethod::KPG ? synth.kappa : synth.l; }
};

// Flat key=value document; '#' starts a comment. The keys kappa, l, rule,
// task and synth accept comma-separated lists and expand into the cartesian
// product of cells.
std::vector<ExperimentConfig> parse_experiment_config(std::string_view text);
std::vector<ExperimentConfig> load_experiment_config(const std::filesystem::path& path);

struct MethodResult {
  Method method = Method::DeepGroup;
  std::vector<double> accuracies;  // per instance, in instance order
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one instance
};

struct EvalReport {
  ExperimentConfig config;
  std::vector<MethodResult> results;

  const MethodResult& result(Method method) const;
};

// Uniform random split by group; train gets round(fraction * l) groups,
// clamped so both sides are non-empty.
std::pair<GroupDataset, GroupDataset> split_dataset(const GroupDataset& dataset, double fraction, Rng& rng);

// One singleton group per distinct training user, labelled with that user's top choice.
GroupDataset build_reverse_test(const GroupDataset& train, const PreferenceProfile& profile);

// Fraction of test groups whose predicted top choice matches the recorded decision.
double accuracy(const std::vector<AlternativeId>& predicted, const GroupDataset& test);

// Fits `method` on `train` only and scores it on `test`. `model.num_users`
// and `model.num_items` must cover both datasets.
double evaluate(Method method, const GroupDataset& train, const GroupDataset& test, const ModelConfig& model, Rng& rng);

EvalReport run_experiment(const ExperimentConfig& config, const PreferenceProfile& profile);
EvalReport run_experiment(const ExperimentConfig& config);

// Writes <dir>/detail.csv (one row per method x instance) and
// <dir>/summary.csv (mean/std per cell).
void emit_results(const std::vector<EvalReport>& reports, const std::filesystem::path& dir);

struct DetailRow {
  std::string dataset, task, rule, synth_method;
  int param = 0;
  std::string method;
  int instance = 0;
  double accuracy = 0.0;
};

std::vector<DetailRow> read_detail_csv(const std::filesystem::path& path);

}  // namespace deepgroup
