#include "deepgroup/group_synth.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace deepgroup {

Group::Group(std::vector<UserId> members) : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("group must have at least one member");
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
    throw std::invalid_argument("group has duplicate members");
  if (members_.front() < 0) throw std::invalid_argument("negative user id");
}

bool Group::contains(UserId u) const { return std::binary_search(members_.begin(), members_.end(), u); }

std::string_view to_string(SynthMethod method) {
  switch (method) {
    case SynthMethod::KPG: return "kpg";
    case SynthMethod::RSG: return "rsg";
    case SynthMethod::RDG: return "rdg";
  }
  return "unknown";
}

SynthMethod parse_synth_method(std::string_view text) {
  if (text == "kpg") return SynthMethod::KPG;
  if (text == "rsg") return SynthMethod::RSG;
  if (text == "rdg") return SynthMethod::RDG;
  throw std::invalid_argument("unknown group synthesis method '" + std::string(text) + "'");
}

void SynthConfig::validate() const {
  if (s_min < 2 || s_min > s_max) throw std::invalid_argument("group size bounds must satisfy 2 <= s_min <= s_max");
  if (method == SynthMethod::KPG && kappa < 1) throw std::invalid_argument("kappa must be positive");
  if (method != SynthMethod::KPG && l < 1) throw std::invalid_argument("l must be positive");
}

int GroupDataset::user_span() const {
  int span = 0;
  for (const auto& g : groups) span = std::max(span, g.members().back() + 1);
  return span;
}

void GroupDataset::validate() const {
  if (groups.size() != decisions.size()) throw std::invalid_argument("dataset: one decision per group required");
  if (!rule_used.empty() && rule_used.size() != groups.size()) throw std::invalid_argument("dataset: rule tags misaligned");
  for (const auto d : decisions)
    if (d < 1 || d > num_alternatives) throw std::invalid_argument("dataset: decision " + std::to_string(d) + " out of range");
  std::set<Group> unique(groups.begin(), groups.end());
  if (unique.size() != groups.size()) throw std::invalid_argument("dataset: duplicate groups");
}

namespace {

void shuffle(std::vector<UserId>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

bool partition_feasible(int n, int s_min, int s_max) {
  for (int k = (n + s_max - 1) / s_max; k * s_min <= n; ++k)
    if (k * s_max >= n) return true;
  return false;
}

// Chunk sizes summing to n, or empty when the tail could not be rebalanced.
std::vector<int> draw_chunk_sizes(int n, int s_min, int s_max, Rng& rng) {
  std::vector<int> sizes;
  for (int rest = n; rest > 0;) {
    const int s = std::min(uniform_int(rng, s_min, s_max), rest);
    sizes.push_back(s);
    rest -= s;
  }
  if (sizes.back() < s_min && sizes.size() > 1) {
    const int tail = sizes.back();
    sizes.pop_back();
    sizes.back() += tail;
    for (std::size_t i = sizes.size() - 1; sizes.back() > s_max && i-- > 0;) {
      while (sizes.back() > s_max && sizes[i] < s_max) {
        ++sizes[i];
        --sizes.back();
      }
    }
  }
  if (sizes.back() < s_min || sizes.back() > s_max) return {};
  return sizes;
}

}  // namespace

std::vector<std::vector<UserId>> random_partition(int n, int s_min, int s_max, Rng& rng) {
  if (n < s_min) throw std::invalid_argument("cannot form groups: " + std::to_string(n) + " users < s_min=" + std::to_string(s_min));
  if (!partition_feasible(n, s_min, s_max))
    throw std::invalid_argument(std::to_string(n) + " users cannot be partitioned into sizes within [" + std::to_string(s_min) +
                                ", " + std::to_string(s_max) + "]");
  std::vector<UserId> users(static_cast<std::size_t>(n));
  std::iota(users.begin(), users.end(), 0);
  shuffle(users, rng);

  std::vector<int> sizes;
  for (int attempt = 0; sizes.empty(); ++attempt) {
    if (attempt == 1000) throw std::runtime_error("random_partition: could not draw valid chunk sizes");
    sizes = draw_chunk_sizes(n, s_min, s_max, rng);
  }
  std::vector<std::vector<UserId>> chunks;
  chunks.reserve(sizes.size());
  auto it = users.begin();
  for (const int s : sizes) {
    chunks.emplace_back(it, it + s);
    it += s;
  }
  return chunks;
}

std::vector<Group> kpg_generate(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng) {
  config.validate();
  if (config.method != SynthMethod::KPG) throw std::invalid_argument("kpg_generate called with a non-KPG config");
  std::vector<Group> out;
  std::set<Group> seen;
  for (int k = 0; k < config.kappa; ++k) {
    for (auto& chunk : random_partition(profile.num_voters(), config.s_min, config.s_max, rng)) {
      Group g(std::move(chunk));
      if (seen.insert(g).second) out.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<Group> rsg_rdg_generate(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng) {
  config.validate();
  if (config.method == SynthMethod::KPG) throw std::invalid_argument("rsg_rdg_generate called with a KPG config");
  const int n = profile.num_voters();
  if (n < config.s_min) throw std::invalid_argument("profile has fewer voters than s_min");
  const bool similar = config.method == SynthMethod::RSG;

  auto acceptable = [&](const std::vector<UserId>& members) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        double tau = 0.0;
        try {
          tau = kendall_tau(profile.voters[static_cast<std::size_t>(members[i])], profile.voters[static_cast<std::size_t>(members[j])]);
        } catch (const UndefinedCorrelation&) {
          return false;
        }
        if (similar ? tau < config.tau_sim : tau > config.tau_dis) return false;
      }
    }
    return true;
  };

  std::vector<Group> out;
  std::set<Group> seen;
  std::vector<UserId> members;
  int rejections = 0;
  while (static_cast<int>(out.size()) < config.l) {
    const int size = uniform_int(rng, config.s_min, std::min(config.s_max, n));
    members.clear();
    while (static_cast<int>(members.size()) < size) {
      const UserId u = uniform_int(rng, 0, n - 1);
      if (std::find(members.begin(), members.end(), u) == members.end()) members.push_back(u);
    }
    if (acceptable(members)) {
      Group g(members);
      if (seen.insert(g).second) {
        out.push_back(std::move(g));
        rejections = 0;
        continue;
      }
    }
    if (++rejections >= kRejectionBudget)
      throw SynthesisExhausted(std::string(to_string(config.method)) + ": " + std::to_string(kRejectionBudget) +
                               " consecutive rejections after " + std::to_string(out.size()) + " of " + std::to_string(config.l) +
                               " groups; the profile cannot support the threshold");
  }
  return out;
}

std::vector<Group> generate_groups(const PreferenceProfile& profile, const SynthConfig& config, Rng& rng) {
  return config.method == SynthMethod::KPG ? kpg_generate(profile, config, rng) : rsg_rdg_generate(profile, config, rng);
}

GroupDataset assign_decisions(const std::vector<Group>& groups, const PreferenceProfile& profile, DecisionRule rule, Rng& rng) {
  GroupDataset ds;
  ds.num_alternatives = profile.num_alternatives;
  ds.rule = rule;
  ds.groups = groups;
  ds.decisions.reserve(groups.size());
  ds.rule_used.reserve(groups.size());
  std::vector<const Ranking*> members;
  for (const auto& g : groups) {
    members.clear();
    for (const auto u : g.members()) {
      if (u >= profile.num_voters()) throw std::out_of_range("group member " + std::to_string(u) + " not in profile");
      members.push_back(&profile.voters[static_cast<std::size_t>(u)]);
    }
    const auto resolved = resolve_rule(rule, rng);
    ds.rule_used.push_back(resolved);
    ds.decisions.push_back(group_decision(std::span<const Ranking* const>(members), resolved, rng));
  }
  return ds;
}

std::string serialize_group_dataset(const GroupDataset& dataset) {
  std::ostringstream out;
  out << dataset.groups.size() << ' ' << dataset.num_alternatives << ' ' << to_string(dataset.method) << ' '
      << to_string(dataset.rule) << ' ' << dataset.seed << '\n';
  for (std::size_t i = 0; i < dataset.groups.size(); ++i) {
    const auto& members = dataset.groups[i].members();
    for (std::size_t k = 0; k < members.size(); ++k) out << (k ? "," : "") << members[k];
    out << " -> " << dataset.decisions[i];
    if (dataset.rule == DecisionRule::Mixture && i < dataset.rule_used.size()) out << " @" << to_string(dataset.rule_used[i]);
    out << '\n';
  }
  return out.str();
}

namespace {

template <class T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw ParseError(line, "invalid number '" + std::string(s) + "'");
  return v;
}

}  // namespace

GroupDataset parse_group_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  GroupDataset ds;
  std::size_t expected = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      std::istringstream h(line);
      std::string l, m, method, rule, seed;
      if (!(h >> l >> m >> method >> rule >> seed)) throw ParseError(number, "expected header 'l m method rule seed'");
      expected = parse_number<std::size_t>(l, number);
      ds.num_alternatives = parse_number<int>(m, number);
      try {
        ds.method = parse_synth_method(method);
        ds.rule = parse_decision_rule(rule);
      } catch (const std::invalid_argument& e) {
        throw ParseError(number, e.what());
      }
      ds.seed = parse_number<std::uint64_t>(seed, number);
      have_header = true;
      continue;
    }
    const auto arrow = line.find(" -> ");
    if (arrow == std::string::npos) throw ParseError(number, "expected 'members -> decision'");
    std::vector<UserId> members;
    std::string_view lhs(line.data(), arrow);
    for (std::size_t start = 0;;) {
      const auto comma = lhs.find(',', start);
      members.push_back(parse_number<int>(lhs.substr(start, comma == std::string_view::npos ? lhs.npos : comma - start), number));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::string_view rhs(line.data() + arrow + 4, line.size() - arrow - 4);
    const auto at = rhs.find(" @");
    DecisionRule used = ds.rule;
    if (at != std::string_view::npos) {
      try {
        used = parse_decision_rule(rhs.substr(at + 2));
      } catch (const std::invalid_argument& e) {
        throw ParseError(number, e.what());
      }
      rhs = rhs.substr(0, at);
    }
    try {
      ds.groups.emplace_back(std::move(members));
    } catch (const std::invalid_argument& e) {
      throw ParseError(number, e.what());
    }
    ds.decisions.push_back(parse_number<int>(rhs, number));
    ds.rule_used.push_back(used);
  }
  if (!have_header) throw ParseError(number, "missing dataset header");
  if (ds.groups.size() != expected)
    throw ParseError(number, "header declares " + std::to_string(expected) + " groups but file has " + std::to_string(ds.groups.size()));
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(number, e.what());
  }
  return ds;
}

void save_group_dataset(const GroupDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  out << serialize_group_dataset(dataset);
}

GroupDataset load_group_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_group_dataset(buffer.str());
}

}  // namespace deepgroup
