#include <json.hpp>
#include <regex>
#include <sstream>

#include "spaci/error.hpp"
#include "spaci/harness.hpp"

namespace spaci {

namespace {

const char* const kSystemIntro =
    "You grade programming assignments and you grade them strictly. Judge only what the "
    "code actually does for the stated problem.";

const char* const kDimensionHelp[] = {
    "readability, naming, structure and idiomatic style",
    "asymptotic running time compared with the best known approach",
    "memory use compared with the best known approach",
    "produces correct results on typical inputs",
    "handles boundary cases, empty inputs and extreme values",
};

std::string sanitize_quotes_and_commas(std::string s) {
  static const std::regex trailing(R"(,\s*([}\]]))");
  s = std::regex_replace(s, trailing, "$1");
  return s;
}

nlohmann::json parse_object(const std::string& candidate) {
  nlohmann::json j = nlohmann::json::parse(candidate, nullptr, false);
  if (!j.is_discarded()) return j;
  std::string repaired = sanitize_quotes_and_commas(candidate);
  j = nlohmann::json::parse(repaired, nullptr, false);
  if (!j.is_discarded()) return j;
  for (char& c : repaired) {
    if (c == '\'') c = '"';
  }
  return nlohmann::json::parse(repaired, nullptr, false);
}

}  // namespace

Prompt build_grader_prompt(const GradingTask& task) {
  std::ostringstream sys;
  sys << kSystemIntro << "\n\nRubric (integer points per dimension):\n";
  const auto& dims = rubric_dimensions();
  for (std::size_t i = 0; i < dims.size(); ++i)
    sys << "- " << dims[i].key << " (0-" << dims[i].cap << "): " << kDimensionHelp[i] << "\n";
  sys << "\nOutput Format: reply with one JSON object and no other text, exactly these keys:\n{";
  for (std::size_t i = 0; i < dims.size(); ++i)
    sys << (i ? ", " : "") << "\"" << dims[i].key << "\": <int>";
  sys << "}\n";

  std::ostringstream user;
  user << "Problem:\n" << task.problem_description << "\n\nSubmission";
  if (!task.language.empty()) user << " (" << task.language << ")";
  user << ":\n" << task.submission_text;
  if (task.submission_text.empty() || task.submission_text.back() != '\n') user << "\n";
  return {sys.str(), user.str()};
}

RubricScore extract_rubric_json(const RawResponse& raw) { return extract_rubric_json(raw.body); }

RubricScore extract_rubric_json(const std::string& body) {
  static const std::regex object(R"(\{[\s\S]*?\})");
  std::smatch m;
  if (!std::regex_search(body, m, object)) throw NoJsonFound("no JSON object in response");
  const nlohmann::json j = parse_object(m.str());
  if (j.is_discarded() || !j.is_object())
    throw NoJsonFound("response object is not valid JSON after repair");
  RubricScore score;
  for (const RubricDimension& d : rubric_dimensions()) {
    auto it = j.find(d.key);
    if (it == j.end()) throw SchemaViolation(d.key, std::string("missing key '") + d.key + "'");
    long long v = 0;
    if (it->is_number_integer()) {
      v = it->get<long long>();
    } else if (it->is_number_float() && it->get<double>() == static_cast<long long>(it->get<double>())) {
      v = static_cast<long long>(it->get<double>());
    } else {
      throw SchemaViolation(d.key, std::string("'") + d.key + "' is not an integer");
    }
    if (v < 0 || v > d.cap) throw RangeViolation(d.key, v);
    score.*d.field = static_cast<int>(v);
  }
  return score;
}

}  // namespace spaci
