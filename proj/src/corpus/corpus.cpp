#include "spaci/corpus.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>

#include "spaci/error.hpp"

namespace spaci {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"language", "source_tag", "difficulty_tag"};
  return keys;
}

std::string required_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaViolation(key, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw SchemaViolation(key, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

CorpusRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaViolation("", "line is not a JSON object");
  CorpusRecord r;
  r.submission_id = required_string(j, "submission_id");
  r.question_id = required_string(j, "question_id");
  const std::string lang = required_string(j, "language");
  const auto parsed = parse_language(lang);
  if (!parsed) throw SchemaViolation("language", "unknown language '" + lang + "'");
  r.language = *parsed;
  r.source_tag = j.contains("source_tag") ? required_string(j, "source_tag") : "";
  r.text = required_string(j, "text");
  r.problem_description =
      j.contains("problem_description") ? required_string(j, "problem_description") : "";
  if (auto it = j.find("difficulty_tag"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaViolation("difficulty_tag", "difficulty_tag must be a string");
    r.difficulty_tag = it->get<std::string>();
  }
  if (r.submission_id.empty()) throw SchemaViolation("submission_id", "empty submission_id");
  if (r.text.empty()) throw SchemaViolation("text", "empty text");
  return r;
}

}  // namespace

LoadResult parse_corpus(std::istream& in) {
  LoadResult out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      out.rejects.push_back({lineno, "invalid JSON"});
      continue;
    }
    if (j.is_object() && j.contains("sample_id") && !j.contains("submission_id")) continue;
    try {
      CorpusRecord r = record_from_json(j);
      if (!ids.insert(r.submission_id).second) {
        out.rejects.push_back({lineno, "duplicate submission_id '" + r.submission_id + "'"});
        continue;
      }
      out.records.push_back(std::move(r));
    } catch (const SchemaViolation& e) {
      out.rejects.push_back({lineno, e.what()});
    }
  }
  if (out.records.empty()) throw EmptyCorpus("corpus has no valid records");
  return out;
}

LoadResult load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus " + path.string());
  try {
    return parse_corpus(in);
  } catch (const EmptyCorpus&) {
    throw EmptyCorpus("corpus " + path.string() + " has no valid records");
  }
}

std::string to_json_line(const CorpusRecord& r) {
  nlohmann::ordered_json j;
  j["submission_id"] = r.submission_id;
  j["question_id"] = r.question_id;
  j["language"] = std::string(to_string(r.language));
  j["source_tag"] = r.source_tag;
  j["difficulty_tag"] = r.difficulty_tag ? nlohmann::ordered_json(*r.difficulty_tag) : nullptr;
  j["problem_description"] = r.problem_description;
  j["text"] = r.text;
  return j.dump();
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const CorpusRecord& r : records) out << to_json_line(r) << "\n";
}

std::string stratum_label(const CorpusRecord& r, const std::vector<std::string>& keys) {
  std::string label;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) label += '|';
    if (keys[i] == "language") {
      label += to_string(r.language);
    } else if (keys[i] == "source_tag") {
      label += r.source_tag;
    } else if (keys[i] == "difficulty_tag") {
      label += r.difficulty_tag.value_or("-");
    }
  }
  return label;
}

std::vector<std::size_t> largest_remainder(const std::vector<std::size_t>& sizes,
                                           std::size_t target) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> quota(sizes.size(), 0);
  if (total == 0) return quota;
  // Integer arithmetic keeps the remainders exact: quota_i = sizes_i * target / total.
  std::vector<std::pair<std::size_t, std::size_t>> rem;  // (remainder numerator, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const unsigned long long num = static_cast<unsigned long long>(sizes[i]) * target;
    quota[i] = static_cast<std::size_t>(num / total);
    assigned += quota[i];
    rem.push_back({static_cast<std::size_t>(num % total), i});
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target && k < rem.size(); ++k) {
    if (quota[rem[k].second] < sizes[rem[k].second]) {
      ++quota[rem[k].second];
      ++assigned;
    }
  }
  return quota;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::vector<CorpusRecord> stratified_sample(const std::vector<CorpusRecord>& records,
                                            const SamplePlan& plan) {
  for (const std::string& k : plan.keys) {
    if (!known_keys().count(k)) throw PreconditionError("unknown stratification key '" + k + "'");
  }
  if (plan.target_n > records.size())
    throw PreconditionError("target_n " + std::to_string(plan.target_n) + " exceeds corpus size " +
                            std::to_string(records.size()));
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i)
    strata[stratum_label(records[i], plan.keys)].push_back(i);
  for (const std::string& req : plan.required) {
    if (!strata.count(req)) throw StratumEmpty("stratum '" + req + "' has no members");
  }
  std::vector<std::size_t> sizes;
  for (const auto& [label, members] : strata) sizes.push_back(members.size());
  const std::vector<std::size_t> quota = largest_remainder(sizes, plan.target_n);

  std::mt19937_64 rng(plan.seed);
  std::vector<std::size_t> picked;
  std::size_t s = 0;
  for (auto& [label, members] : strata) {
    std::vector<std::size_t> order = members;
    portable_shuffle(order, rng);
    picked.insert(picked.end(), order.begin(), order.begin() + static_cast<long>(quota[s]));
    ++s;
  }
  std::sort(picked.begin(), picked.end());
  std::vector<CorpusRecord> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(records[i]);
  return out;
}

void write_sample(const std::filesystem::path& path, const std::string& sample_id,
                  const SamplePlan& plan, const std::vector<CorpusRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  nlohmann::ordered_json header;
  header["sample_id"] = sample_id;
  header["strata"] = plan.keys;
  header["target_n"] = plan.target_n;
  header["seed"] = plan.seed;
  header["n"] = records.size();
  out << header.dump() << "\n";
  for (const CorpusRecord& r : records) out << to_json_line(r) << "\n";
}

double margin_of_error(std::size_t n, double confidence) {
  if (n < 1) throw PreconditionError("margin_of_error needs n >= 1");
  if (!(confidence > 0 && confidence < 1)) throw PreconditionError("confidence must lie in (0, 1)");
  const boost::math::normal_distribution<double> normal(0.0, 1.0);
  const double z = boost::math::quantile(normal, 1.0 - (1.0 - confidence) / 2.0);
  return z * std::sqrt(0.25 / static_cast<double>(n));
}

}  // namespace spaci
