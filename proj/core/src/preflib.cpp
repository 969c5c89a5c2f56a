#include "deepgroup/preflib.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace deepgroup {

Ranking::Ranking(std::vector<AlternativeId> entries, int total_alternatives)
    : entries_(std::move(entries)) {
  if (total_alternatives <= 0) throw std::invalid_argument("ranking: number of alternatives must be positive");
  if (entries_.empty()) throw std::invalid_argument("ranking: empty ballot");
  if (static_cast<int>(entries_.size()) > total_alternatives)
    throw std::invalid_argument("ranking: more entries than alternatives");
  positions_.assign(static_cast<std::size_t>(total_alternatives) + 1, 0);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const AlternativeId a = entries_[i];
    if (a < 1 || a > total_alternatives)
      throw std::invalid_argument("ranking: alternative " + std::to_string(a) + " out of range");
    if (positions_[static_cast<std::size_t>(a)] != 0)
      throw std::invalid_argument("ranking: duplicate alternative " + std::to_string(a));
    positions_[static_cast<std::size_t>(a)] = static_cast<int>(i) + 1;
  }
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Line {
  std::size_t number;
  std::string_view text;
};

// Non-blank lines, with comment lines reported separately.
void split_lines(std::string_view raw, std::vector<Line>& content, std::vector<Line>& comments) {
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    ++number;
    const auto text = trim(raw.substr(start, end - start));
    if (!text.empty()) (text.front() == '#' ? comments : content).push_back({number, text});
    if (end == raw.size()) break;
    start = end + 1;
  }
}

class BallotReader {
 public:
  BallotReader(int m, std::unordered_map<long long, int> id_map) : m_(m), id_map_(std::move(id_map)) {}

  // Parses the alternative list of one ballot and appends `count` copies.
  void add(const Line& line, long long count, std::string_view alternatives, std::vector<Ranking>& voters) const {
    if (count <= 0) throw ParseError(line.number, "multiplicity must be positive, got " + std::to_string(count));
    if (alternatives.find('{') != std::string_view::npos || alternatives.find('}') != std::string_view::npos)
      throw ParseError(line.number, "tied positions are not supported");
    std::vector<AlternativeId> entries;
    std::vector<bool> seen(static_cast<std::size_t>(m_) + 1, false);
    for (const auto field : split(alternatives, ',')) {
      const auto raw_id = to_integer(field);
      if (!raw_id) throw ParseError(line.number, "expected an alternative id, got '" + std::string(field) + "'");
      const auto it = id_map_.find(*raw_id);
      if (it == id_map_.end()) throw ParseError(line.number, "alternative id " + std::to_string(*raw_id) + " out of range");
      if (seen[static_cast<std::size_t>(it->second)])
        throw ParseError(line.number, "duplicate alternative " + std::to_string(*raw_id) + " in ballot");
      seen[static_cast<std::size_t>(it->second)] = true;
      entries.push_back(it->second);
    }
    Ranking ranking(std::move(entries), m_);
    voters.insert(voters.end(), static_cast<std::size_t>(count), ranking);
  }

 private:
  int m_;
  std::unordered_map<long long, int> id_map_;
};

PreferenceProfile parse_legacy(const std::vector<Line>& lines) {
  PreferenceProfile profile;
  const auto m = to_integer(lines[0].text);
  if (!m || *m <= 0) throw ParseError(lines[0].number, "header must start with a positive number of alternatives");
  profile.num_alternatives = static_cast<int>(*m);
  if (lines.size() < static_cast<std::size_t>(*m) + 2)
    throw ParseError(lines.back().number, "truncated header: expected " + std::to_string(*m) + " alternative lines and a count line");

  std::unordered_map<long long, int> id_map;
  for (int i = 1; i <= profile.num_alternatives; ++i) {
    const auto& line = lines[static_cast<std::size_t>(i)];
    const auto comma = line.text.find(',');
    const auto label = to_integer(line.text.substr(0, comma));
    if (comma == std::string_view::npos || !label)
      throw ParseError(line.number, "expected 'id,name' alternative line");
    if (!id_map.emplace(*label, i).second) throw ParseError(line.number, "duplicate alternative id " + std::to_string(*label));
    profile.alternative_names.emplace_back(trim(line.text.substr(comma + 1)));
  }

  const auto& count_line = lines[static_cast<std::size_t>(*m) + 1];
  const auto counts = split(count_line.text, ',');
  if (counts.size() != 3 || !to_integer(counts[0]) || !to_integer(counts[1]) || !to_integer(counts[2]))
    throw ParseError(count_line.number, "expected 'total_voters,total_vote_weight,unique_ballots'");
  const long long total_weight = *to_integer(counts[1]);

  BallotReader reader(profile.num_alternatives, std::move(id_map));
  for (std::size_t i = static_cast<std::size_t>(*m) + 2; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto comma = line.text.find(',');
    const auto count = to_integer(line.text.substr(0, comma));
    if (!count) throw ParseError(line.number, "expected 'multiplicity,a1,...'");
    if (comma == std::string_view::npos) throw ParseError(line.number, "ballot ranks no alternatives");
    reader.add(line, *count, line.text.substr(comma + 1), profile.voters);
  }
  if (profile.voters.empty()) throw ParseError(count_line.number, "profile has no voters");
  if (static_cast<long long>(profile.voters.size()) != total_weight)
    throw ParseError(count_line.number, "declared vote weight " + std::to_string(total_weight) + " but ballots sum to " +
                                            std::to_string(profile.voters.size()));
  return profile;
}

// "# KEY: value" metadata layout with "count: a,b,c" ballots.
PreferenceProfile parse_metadata(const std::vector<Line>& lines, const std::vector<Line>& comments) {
  PreferenceProfile profile;
  std::optional<long long> m;
  std::vector<std::pair<long long, std::string>> names;
  for (const auto& c : comments) {
    const auto body = trim(c.text.substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) continue;
    const auto key = trim(body.substr(0, colon));
    const auto value = trim(body.substr(colon + 1));
    if (key == "NUMBER ALTERNATIVES") {
      m = to_integer(value);
      if (!m || *m <= 0) throw ParseError(c.number, "invalid number of alternatives");
    } else if (key.starts_with("ALTERNATIVE NAME ")) {
      const auto id = to_integer(key.substr(17));
      if (!id) throw ParseError(c.number, "invalid alternative id");
      names.emplace_back(*id, std::string(value));
    }
  }
  if (!m) throw ParseError(lines.empty() ? 1 : lines[0].number, "missing header: no alternative count found");
  profile.num_alternatives = static_cast<int>(*m);
  std::unordered_map<long long, int> id_map;
  for (int i = 1; i <= profile.num_alternatives; ++i) id_map.emplace(i, i);
  profile.alternative_names.resize(static_cast<std::size_t>(*m));
  for (int i = 0; i < profile.num_alternatives; ++i) profile.alternative_names[static_cast<std::size_t>(i)] = std::to_string(i + 1);
  for (const auto& [id, name] : names)
    if (id >= 1 && id <= *m) profile.alternative_names[static_cast<std::size_t>(id - 1)] = name;

  BallotReader reader(profile.num_alternatives, std::move(id_map));
  for (const auto& line : lines) {
    const auto colon = line.text.find(':');
    if (colon == std::string_view::npos) throw ParseError(line.number, "expected 'count: a1,a2,...'");
    const auto count = to_integer(line.text.substr(0, colon));
    if (!count) throw ParseError(line.number, "invalid multiplicity");
    reader.add(line, *count, line.text.substr(colon + 1), profile.voters);
  }
  if (profile.voters.empty()) throw ParseError(lines.empty() ? 1 : lines.back().number, "profile has no voters");
  return profile;
}

}  // namespace

PreferenceProfile parse_preference_file(std::string_view raw_text) {
  std::vector<Line> lines;
  std::vector<Line> comments;
  split_lines(raw_text, lines, comments);
  if (lines.empty()) throw ParseError(1, "empty preference file");
  if (to_integer(lines[0].text)) return parse_legacy(lines);
  return parse_metadata(lines, comments);
}

PreferenceProfile load_preference_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open preference file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_preference_file(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

std::string serialize_preference_file(const PreferenceProfile& profile) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // (first voter, count)
  for (std::size_t i = 0; i < profile.voters.size(); ++i) {
    if (!runs.empty() && profile.voters[runs.back().first] == profile.voters[i])
      ++runs.back().second;
    else
      runs.emplace_back(i, 1);
  }
  std::ostringstream out;
  out << profile.num_alternatives << '\n';
  for (int i = 0; i < profile.num_alternatives; ++i) out << i + 1 << ',' << profile.alternative_names[static_cast<std::size_t>(i)] << '\n';
  out << profile.voters.size() << ',' << profile.voters.size() << ',' << runs.size() << '\n';
  for (const auto& [first, count] : runs) {
    out << count;
    for (const auto a : profile.voters[first].entries()) out << ',' << a;
    out << '\n';
  }
  return out.str();
}

void save_preference_file(const PreferenceProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write preference file " + path.string());
  out << serialize_preference_file(profile);
}

PreferenceProfile sample_users(const PreferenceProfile& profile, int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("sample_users: n must be positive");
  if (n > profile.num_voters())
    throw std::invalid_argument("sample_users: requested " + std::to_string(n) + " users but profile has " +
                                std::to_string(profile.num_voters()));
  std::vector<std::size_t> index(profile.voters.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n slots end up a uniform sample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i), static_cast<int>(index.size()) - 1));
    std::swap(index[i], index[j]);
  }
  PreferenceProfile out;
  out.num_alternatives = profile.num_alternatives;
  out.alternative_names = profile.alternative_names;
  out.voters.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) out.voters.push_back(profile.voters[index[i]]);
  return out;
}

}  // namespace deepgroup
