#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <json.hpp>

#include "spaci/error.hpp"
#include "spaci/harness.hpp"
#include "spaci/hash.hpp"

namespace spaci {

MockEvaluator::MockEvaluator(MockConfig cfg) : cfg_(std::move(cfg)) {}

RubricScore MockEvaluator::score_for(const GradingTask& task) const {
  const std::string seed = std::to_string(cfg_.seed);
  const double base =
      25 + 55 * unit_interval(hash_fields({"mock-base", seed, task.model_id,
                                           task.problem_description, task.submission_id}));
  // Each model gets its own susceptibility in [0.5, 1.5) times the configured bias.
  const double susceptibility =
      0.5 + unit_interval(hash_fields({"mock-model", seed, task.model_id}));
  const double jitter =
      -4 + 8 * unit_interval(hash_fields({"mock-jitter", seed, task.submission_text}));
  bool marked = false;
  for (const std::string& m : cfg_.markers) {
    if (!m.empty() && task.submission_text.find(m) != std::string::npos) {
      marked = true;
      break;
    }
  }
  const double target = std::clamp(base + jitter + (marked ? cfg_.compliance_bias * susceptibility : 0), 0.0, 100.0);
  RubricScore s;
  for (const RubricDimension& d : rubric_dimensions())
    s.*d.field = static_cast<int>(std::lround(d.cap * target / 100.0));
  return s;
}

EvalReply MockEvaluator::call(const GradingTask& task, const Prompt& prompt, int attempt,
                              int pass) {
  (void)prompt;
  ++calls_;
  const int now = ++in_flight_;
  int seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};

  EvalReply reply;
  const std::string seed = std::to_string(cfg_.seed);
  const double u = unit_interval(hash_fields(
      {"mock-fail", seed, task.task_id, std::to_string(attempt), std::to_string(pass)}));
  if (u < cfg_.failure_rate) {
    // Alternate between the transient failure kinds the harness must absorb.
    const double kind = u / cfg_.failure_rate;
    if (kind < 0.4) {
      reply.http_status = 503;
      reply.body = "service unavailable";
    } else if (kind < 0.7) {
      reply.timeout = true;
      reply.http_status = 0;
    } else {
      reply.body = "I am unable to produce a JSON grade right now.";
    }
    return reply;
  }
  const RubricScore s = score_for(task);
  nlohmann::ordered_json j;
  for (const RubricDimension& d : rubric_dimensions()) j[d.key] = s.*d.field;
  reply.body = j.dump();
  if (cfg_.prose_wrapped)
    reply.body = "Sure! Here is the evaluation you asked for:\n" + reply.body +
                 "\nLet me know if you need more detail.";
  return reply;
}

std::string build_request_body(const EvaluatorConfig& cfg, const Prompt& prompt) {
  nlohmann::ordered_json j;
  j["model"] = cfg.model_id;
  j["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}});
  j["temperature"] = cfg.temperature;
  return j.dump();
}

std::optional<std::string> json_path_text(const std::string& json_text, const std::string& path) {
  const nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  const nlohmann::json* cur = &doc;
  std::size_t pos = 0;
  while (pos <= path.size() && !path.empty()) {
    std::size_t slash = path.find('/', pos);
    if (slash == std::string::npos) slash = path.size();
    const std::string part = path.substr(pos, slash - pos);
    pos = slash + 1;
    if (part.empty()) continue;
    if (cur->is_array()) {
      char* end = nullptr;
      const unsigned long idx = std::strtoul(part.c_str(), &end, 10);
      if (*end != '\0' || idx >= cur->size()) return std::nullopt;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return std::nullopt;
      cur = &*it;
    } else {
      return std::nullopt;
    }
    if (slash == path.size()) break;
  }
  if (cur->is_string()) return cur->get<std::string>();
  return cur->dump();
}

HttpEvaluator::HttpEvaluator(EvaluatorConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* override_url = std::getenv("SPACI_ENDPOINT"); override_url && *override_url)
    cfg_.endpoint_url = override_url;
  const std::string& url = cfg_.endpoint_url;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint URL needs a scheme: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.rfind("https://", 0) == 0) throw Error("built without TLS support: " + url);
#endif
  if (!cfg_.auth_header.empty()) {
    std::string header = cfg_.auth_header;
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    const std::string token = "{API_KEY}";
    if (auto p = header.find(token); p != std::string::npos) header.replace(p, token.size(), key ? key : "");
    const std::size_t colon = header.find(':');
    if (colon == std::string::npos) throw Error("auth header must look like 'Name: value'");
    header_name_ = header.substr(0, colon);
    header_value_ = header.substr(colon + 1);
    header_value_.erase(0, header_value_.find_first_not_of(' '));
  }
}

EvalReply HttpEvaluator::call(const GradingTask& task, const Prompt& prompt, int attempt,
                              int pass) {
  (void)attempt;
  (void)pass;
  EvaluatorConfig cfg = cfg_;
  if (!task.model_id.empty()) cfg.model_id = task.model_id;
  httplib::Client client(scheme_host_);
  const auto timeout = std::chrono::duration<double>(cfg.request_timeout);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!header_name_.empty()) headers.emplace(header_name_, header_value_);
  auto res = client.Post(path_, headers, build_request_body(cfg, prompt), "application/json");
  EvalReply reply;
  if (!res) {
    reply.timeout = res.error() == httplib::Error::Read ||
                    res.error() == httplib::Error::ConnectionTimeout ||
                    res.error() == httplib::Error::Connection;
    reply.http_status = reply.timeout ? 0 : 599;
    reply.body = httplib::to_string(res.error());
    return reply;
  }
  reply.http_status = res->status;
  reply.body = res->body;
  if (res->status >= 200 && res->status < 300) {
    if (auto text = json_path_text(res->body, cfg.response_path)) reply.body = *text;
  }
  return reply;
}

}  // namespace spaci
