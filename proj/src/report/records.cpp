#include <fstream>
#include <json.hpp>

#include "spaci/error.hpp"
#include "spaci/report.hpp"

namespace spaci {

namespace {

using ojson = nlohmann::ordered_json;

std::optional<Status> parse_status(std::string_view s) {
  if (s == "pass") return Status::Pass;
  if (s == "fail") return Status::Fail;
  if (s == "skipped") return Status::Skipped;
  return std::nullopt;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ojson spans_json(const std::vector<Span>& spans) {
  ojson arr = ojson::array();
  for (const Span& s : spans) arr.push_back({s.start, s.end});
  return arr;
}

std::vector<Span> spans_from(const nlohmann::json& j, const char* key) {
  std::vector<Span> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw SchemaViolation(key, std::string(key) + " must be an array");
  for (const auto& pair : *it) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
        !pair[1].is_number_unsigned())
      throw SchemaViolation(key, std::string(key) + " entries must be [start, end]");
    out.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
  }
  return out;
}

std::string str(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw SchemaViolation(key, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<bool> opt_bool(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw SchemaViolation(key, std::string(key) + " must be a boolean or null");
  return it->get<bool>();
}

ojson opt_json(const std::optional<bool>& b) { return b ? ojson(*b) : ojson(nullptr); }

Status status_field(const nlohmann::json& v, const char* key) {
  const auto s = parse_status(str(v, key));
  if (!s) throw SchemaViolation(key, std::string("bad status in '") + key + "'");
  return *s;
}

template <typename F>
auto read_lines(const std::filesystem::path& path, F&& per_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      per_line(line);
    } catch (const SchemaViolation& e) {
      throw SchemaViolation(e.key(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaViolation("", path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

AdversarialVariant VariantRecord::to_variant() const {
  AdversarialVariant v;
  v.origin = parse(origin.text, origin.language);
  v.origin.with_ids(origin.submission_id, origin.question_id).with_problem(origin.problem_description);
  v.strategy_id = strategy_id;
  v.op = op;
  v.text = text;
  v.injection_sites = injection_sites;
  v.deadcode_sites = deadcode_sites;
  v.mapping = mapping;
  v.verification = verification;
  return v;
}

std::string to_json_line(const VariantRecord& v) {
  ojson j;
  j["variant_id"] = v.variant_id();
  j["submission_id"] = v.origin.submission_id;
  j["question_id"] = v.origin.question_id;
  j["language"] = std::string(to_string(v.origin.language));
  j["source_tag"] = v.origin.source_tag;
  j["difficulty_tag"] = v.origin.difficulty_tag ? ojson(*v.origin.difficulty_tag) : ojson(nullptr);
  j["strategy_id"] = v.strategy_id;
  j["operator"] = std::string(to_string(v.op));
  j["origin_compile_ok"] = opt_json(v.origin_compile_ok);
  ojson ver;
  ver["c1"] = lower(to_string(v.verification.c1));
  ver["c2"] = lower(to_string(v.verification.c2));
  ver["c3"] = lower(to_string(v.verification.c3));
  ver["c1_reason"] = v.verification.c1_reason;
  ver["c2_reason"] = v.verification.c2_reason;
  ver["c3_reason"] = v.verification.c3_reason;
  j["verification"] = ver;
  j["injection_sites"] = spans_json(v.injection_sites);
  j["deadcode_sites"] = spans_json(v.deadcode_sites);
  j["mapping"] = v.mapping.pairs;
  j["problem_description"] = v.origin.problem_description;
  j["origin_text"] = v.origin.text;
  j["text"] = v.text;
  return j.dump();
}

VariantRecord variant_from_json_line(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  if (!j.is_object()) throw SchemaViolation("", "variant line is not an object");
  VariantRecord v;
  v.origin.submission_id = str(j, "submission_id");
  v.origin.question_id = str(j, "question_id");
  const auto lang = parse_language(str(j, "language"));
  if (!lang) throw SchemaViolation("language", "unknown language");
  v.origin.language = *lang;
  v.origin.source_tag = j.value("source_tag", "");
  if (auto it = j.find("difficulty_tag"); it != j.end() && it->is_string())
    v.origin.difficulty_tag = it->get<std::string>();
  v.origin.problem_description = j.value("problem_description", "");
  v.origin.text = str(j, "origin_text");
  v.strategy_id = str(j, "strategy_id");
  const auto op = parse_operator(str(j, "operator"));
  if (!op) throw SchemaViolation("operator", "unknown operator");
  v.op = *op;
  v.text = str(j, "text");
  v.injection_sites = spans_from(j, "injection_sites");
  v.deadcode_sites = spans_from(j, "deadcode_sites");
  if (auto it = j.find("mapping"); it != j.end()) {
    if (!it->is_object()) throw SchemaViolation("mapping", "mapping must be an object");
    for (const auto& [k, val] : it->items()) {
      if (!val.is_string()) throw SchemaViolation("mapping", "mapping values must be strings");
      v.mapping.pairs[k] = val.get<std::string>();
    }
  }
  v.origin_compile_ok = opt_bool(j, "origin_compile_ok");
  auto ver = j.find("verification");
  if (ver == j.end() || !ver->is_object())
    throw SchemaViolation("verification", "missing verification object");
  v.verification.c1 = status_field(*ver, "c1");
  v.verification.c2 = status_field(*ver, "c2");
  v.verification.c3 = status_field(*ver, "c3");
  v.verification.c1_reason = ver->value("c1_reason", "");
  v.verification.c2_reason = ver->value("c2_reason", "");
  v.verification.c3_reason = ver->value("c3_reason", "");
  return v;
}

void write_variants(const std::filesystem::path& path, const std::vector<VariantRecord>& variants) {
  std::ofstream out = open_out(path);
  for (const VariantRecord& v : variants) out << to_json_line(v) << "\n";
}

std::vector<VariantRecord> read_variants(const std::filesystem::path& path) {
  std::vector<VariantRecord> out;
  read_lines(path, [&](const std::string& line) { out.push_back(variant_from_json_line(line)); });
  return out;
}

std::vector<ResultRecord> collect_results(const std::vector<GradingTask>& tasks,
                                          const BatchResult& batch) {
  std::map<std::string, const TaskFailure*> failed;
  for (const TaskFailure& f : batch.failures) failed[f.task_id] = &f;
  std::vector<ResultRecord> out;
  out.reserve(tasks.size());
  for (const GradingTask& t : tasks) {
    ResultRecord r;
    r.task = t;
    r.task.submission_text.clear();
    r.task.problem_description.clear();
    if (auto it = batch.results.find(t.task_id); it != batch.results.end()) r.score = it->second;
    if (auto it = failed.find(t.task_id); it != failed.end()) {
      r.error = it->second->last_error;
      r.message = it->second->message;
    }
    if (auto it = batch.history.find(t.task_id); it != batch.history.end())
      r.attempts = it->second.size();
    out.push_back(std::move(r));
  }
  return out;
}

void write_results(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
  std::ofstream out = open_out(path);
  for (const ResultRecord& r : records) {
    ojson j;
    j["task_id"] = r.task.task_id;
    j["submission_id"] = r.task.submission_id;
    j["model_id"] = r.task.model_id;
    j["strategy_id"] = r.task.strategy_id;
    j["language"] = r.task.language;
    j["compile_ok"] = opt_json(r.task.compile_ok);
    j["status"] = r.score ? "ok" : "failed";
    if (r.score) {
      ojson s;
      for (const RubricDimension& d : rubric_dimensions()) s[d.key] = (*r.score).*d.field;
      j["scores"] = s;
      j["total"] = r.score->total();
      j["error"] = nullptr;
    } else {
      j["scores"] = nullptr;
      j["total"] = nullptr;
      j["error"] = std::string(to_string(r.error));
    }
    j["message"] = r.message;
    j["attempts"] = r.attempts;
    out << j.dump() << "\n";
  }
}

std::vector<ResultRecord> read_results(const std::filesystem::path& path) {
  std::vector<ResultRecord> out;
  read_lines(path, [&](const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    ResultRecord r;
    r.task.task_id = str(j, "task_id");
    r.task.submission_id = str(j, "submission_id");
    r.task.model_id = str(j, "model_id");
    r.task.strategy_id = str(j, "strategy_id");
    r.task.language = j.value("language", "");
    r.task.compile_ok = opt_bool(j, "compile_ok");
    const std::string status = str(j, "status");
    if (status == "ok") {
      auto s = j.find("scores");
      if (s == j.end() || !s->is_object()) throw SchemaViolation("scores", "ok record without scores");
      RubricScore score;
      for (const RubricDimension& d : rubric_dimensions()) {
        auto v = s->find(d.key);
        if (v == s->end() || !v->is_number_integer())
          throw SchemaViolation(d.key, std::string("missing integer score '") + d.key + "'");
        score.*d.field = v->get<int>();
      }
      score.validate();
      r.score = score;
    } else if (status == "failed") {
      const std::string err = j.value("error", "");
      r.error = ErrorClass::EvaluatorError;
      for (ErrorClass e : {ErrorClass::Timeout, ErrorClass::HttpTransient, ErrorClass::HttpFatal,
                           ErrorClass::NoJsonFound, ErrorClass::SchemaViolation,
                           ErrorClass::RangeViolation, ErrorClass::EvaluatorError,
                           ErrorClass::Cancelled}) {
        if (to_string(e) == err) r.error = e;
      }
    } else {
      throw SchemaViolation("status", "status must be 'ok' or 'failed'");
    }
    r.message = j.value("message", "");
    r.attempts = j.value("attempts", std::size_t{0});
    out.push_back(std::move(r));
  });
  return out;
}

std::pair<std::vector<GradingTask>, std::map<std::string, RubricScore>> split_results(
    const std::vector<ResultRecord>& records) {
  std::pair<std::vector<GradingTask>, std::map<std::string, RubricScore>> out;
  for (const ResultRecord& r : records) {
    out.first.push_back(r.task);
    if (r.score) out.second[r.task.task_id] = *r.score;
  }
  return out;
}

}  // namespace spaci
