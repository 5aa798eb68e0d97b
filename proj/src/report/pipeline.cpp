#include "spaci/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "spaci/error.hpp"

namespace spaci {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw SchemaViolation(k, std::string("unknown key '") + k + "' in " + where);
  }
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) into = it->get<T>();
}

void take_path(const json& j, const char* key, std::filesystem::path& into) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) into = it->get<std::string>();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ToolchainConfig AppConfig::toolchain() const {
  ToolchainConfig tc = ToolchainConfig::detect();
  tc.tier2 = tier2;
  tc.wall_time = std::chrono::milliseconds(wall_time_ms);
  tc.memory_bytes = static_cast<std::size_t>(memory_mb) << 20;
  tc.workspace_root = workspace_root;
  tc.keep_failed_workspaces = keep_failed_workspaces;
  return tc;
}

std::vector<StrategySpec> AppConfig::strategy_catalog() const {
  if (strategies.empty()) return catalog();
  return load_catalog(strategies);
}

AppConfig app_config_from_json(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SchemaViolation("", "config is not a JSON object");
  AppConfig c;
  try {
    check_keys(j, "config",
               {"metrics", "evaluator", "models", "mock", "paths", "toolchain", "injection", "seed"});
    take(j, "seed", c.seed);
    take(j, "models", c.models);
    if (auto m = j.find("metrics"); m != j.end()) {
      check_keys(*m, "metrics", {"delta", "tau", "lambda", "s_max", "kappa_partial"});
      take(*m, "delta", c.metrics.delta);
      take(*m, "tau", c.metrics.tau);
      take(*m, "lambda", c.metrics.lambda);
      take(*m, "s_max", c.metrics.s_max);
      take(*m, "kappa_partial", c.metrics.kappa_partial);
    }
    if (auto e = j.find("evaluator"); e != j.end()) {
      check_keys(*e, "evaluator",
                 {"endpoint_url", "auth_header", "api_key_env", "model_id", "temperature",
                  "max_concurrent_tasks", "connection_pool_limit", "rate_limit", "max_retries",
                  "max_passes", "request_timeout", "response_path"});
      EvaluatorConfig& ev = c.evaluator;
      take(*e, "endpoint_url", ev.endpoint_url);
      take(*e, "auth_header", ev.auth_header);
      take(*e, "api_key_env", ev.api_key_env);
      take(*e, "model_id", ev.model_id);
      take(*e, "temperature", ev.temperature);
      take(*e, "max_concurrent_tasks", ev.max_concurrent_tasks);
      take(*e, "connection_pool_limit", ev.connection_pool_limit);
      take(*e, "rate_limit", ev.rate_limit);
      take(*e, "max_retries", ev.max_retries);
      take(*e, "max_passes", ev.max_passes);
      take(*e, "request_timeout", ev.request_timeout);
      take(*e, "response_path", ev.response_path);
    }
    if (auto m = j.find("mock"); m != j.end()) {
      check_keys(*m, "mock", {"failure_rate", "compliance_bias", "prose_wrapped", "markers"});
      take(*m, "failure_rate", c.mock.failure_rate);
      take(*m, "compliance_bias", c.mock.compliance_bias);
      take(*m, "prose_wrapped", c.mock.prose_wrapped);
      take(*m, "markers", c.mock.markers);
    }
    if (auto p = j.find("paths"); p != j.end()) {
      check_keys(*p, "paths", {"corpus", "fixtures", "strategies", "out_dir", "workspace_root"});
      take_path(*p, "corpus", c.corpus);
      take_path(*p, "fixtures", c.fixtures);
      take_path(*p, "strategies", c.strategies);
      take_path(*p, "out_dir", c.out_dir);
      take_path(*p, "workspace_root", c.workspace_root);
    }
    if (auto t = j.find("toolchain"); t != j.end()) {
      check_keys(*t, "toolchain", {"tier2", "wall_time_ms", "memory_mb", "keep_failed_workspaces"});
      take(*t, "tier2", c.tier2);
      take(*t, "wall_time_ms", c.wall_time_ms);
      take(*t, "memory_mb", c.memory_mb);
      take(*t, "keep_failed_workspaces", c.keep_failed_workspaces);
    }
    if (auto in = j.find("injection"); in != j.end()) {
      check_keys(*in, "injection", {"score_target", "site_policy", "anchor_policy"});
      take(*in, "score_target", c.score_target);
      if (auto sp = in->find("site_policy"); sp != in->end() && !sp->is_null()) {
        const std::string s = sp->get<std::string>();
        bool found = false;
        for (SitePolicy p : {SitePolicy::FirstDocstring, SitePolicy::HeaderComment, SitePolicy::AllTrivia}) {
          if (to_string(p) == s) {
            c.site_policy = p;
            found = true;
          }
        }
        if (!found) throw SchemaViolation("site_policy", "unknown site_policy '" + s + "'");
      }
      if (auto ap = in->find("anchor_policy"); ap != in->end() && !ap->is_null()) {
        const std::string s = ap->get<std::string>();
        if (s == to_string(AnchorPolicy::FirstFunctionBody)) {
          c.anchor_policy = AnchorPolicy::FirstFunctionBody;
        } else if (s == to_string(AnchorPolicy::BeforeMainLogic)) {
          c.anchor_policy = AnchorPolicy::BeforeMainLogic;
        } else {
          throw SchemaViolation("anchor_policy", "unknown anchor_policy '" + s + "'");
        }
      }
    }
  } catch (const json::exception& e) {
    throw SchemaViolation("", std::string("config: ") + e.what());
  }
  c.metrics.validate();
  c.evaluator.validate();
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  return app_config_from_json(read_file(path));
}

std::map<std::string, std::vector<std::string>> load_fixtures(const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open fixtures " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (j.is_discarded() || !j.is_object() || !j.contains("submission_id") ||
        !j["submission_id"].is_string() || !j.contains("inputs") || !j["inputs"].is_array())
      throw SchemaViolation("", where + ": expected {submission_id, inputs}");
    auto& inputs = out[j["submission_id"].get<std::string>()];
    for (const auto& v : j["inputs"]) {
      if (!v.is_string()) throw SchemaViolation("inputs", where + ": inputs must be strings");
      inputs.push_back(v.get<std::string>());
    }
  }
  return out;
}

void ConstraintCounts::add(Status s) {
  switch (s) {
    case Status::Pass: ++pass; break;
    case Status::Fail: ++fail; break;
    case Status::Skipped: ++skipped; break;
  }
}

InjectSummary run_inject(const InjectRequest& request, const AppConfig& config) {
  if (request.strategies.empty()) throw PreconditionError("no strategies selected");
  const std::vector<StrategySpec> specs = config.strategy_catalog();
  std::vector<const StrategySpec*> selected;
  for (const std::string& id : request.strategies) {
    const StrategySpec* s = find_strategy(specs, id);
    if (!s) throw Error("unknown strategy '" + id + "'");
    selected.push_back(s);
  }
  const ToolchainConfig tc = config.toolchain();
  CompileChecker checker(tc);
  InjectionOptions opts;
  opts.seed = config.seed;
  opts.score_target = config.score_target;
  opts.site_policy = config.site_policy;
  opts.anchor_policy = config.anchor_policy;

  InjectSummary s;
  for (const CorpusRecord& rec : request.records) {
    if (!request.languages.empty() &&
        std::find(request.languages.begin(), request.languages.end(), rec.language) ==
            request.languages.end())
      continue;
    ++s.records;
    SourceUnit unit = parse(rec.text, rec.language);
    unit.with_ids(rec.submission_id, rec.question_id).with_problem(rec.problem_description);
    if (unit.parse_status() == ParseStatus::Unparseable) {
      ++s.unparseable;
      s.messages.push_back(rec.submission_id + ": unparseable, skipped");
      continue;
    }
    std::optional<bool> compile_ok = checker.compiles(rec.language, rec.text);
    if (!compile_ok) compile_ok = unit.parse_status() == ParseStatus::Clean;
    const auto fx = request.fixtures.find(rec.submission_id);

    for (const StrategySpec* spec : selected) {
      ++s.attempted;
      AdversarialVariant v;
      try {
        v = inject(unit, *spec, opts);
      } catch (const Error& e) {
        ++s.errors;
        s.messages.push_back(rec.submission_id + " x " + spec->id + ": " + e.what());
        continue;
      }
      if (request.check_c1) {
        const C1Result c1 = verify_c1(v, checker);
        v.verification.c1 = c1.status;
        v.verification.c1_reason = c1.reason;
      }
      if (request.check_c2 && fx != request.fixtures.end()) {
        const C2Result c2 = verify_c2(v, fx->second, tc);
        v.verification.c2 = c2.status;
        v.verification.c2_reason = c2.reason;
      }
      s.c1.add(v.verification.c1);
      s.c2.add(v.verification.c2);
      s.c3.add(v.verification.c3);

      VariantRecord vr;
      vr.origin = rec;
      vr.strategy_id = spec->id;
      vr.op = v.op;
      vr.text = v.text;
      vr.injection_sites = v.injection_sites;
      vr.deadcode_sites = v.deadcode_sites;
      vr.mapping = v.mapping;
      vr.verification = v.verification;
      vr.origin_compile_ok = compile_ok;
      if (admissible(v) && v.verification.c2 != Status::Fail) {
        ++s.admitted;
        ++s.admitted_by_strategy[spec->id];
        s.variants.push_back(std::move(vr));
      } else {
        std::string why = v.verification.c3 != Status::Pass ? "c3: " + v.verification.c3_reason
                          : v.verification.c1 == Status::Fail ? "c1: " + v.verification.c1_reason
                                                              : "c2: " + v.verification.c2_reason;
        s.messages.push_back(vr.variant_id() + " rejected (" + why + ")");
        s.rejected.push_back(std::move(vr));
      }
    }
  }
  return s;
}

std::string summary_json(const InjectSummary& s) {
  nlohmann::ordered_json j;
  j["records"] = s.records;
  j["unparseable"] = s.unparseable;
  j["attempted"] = s.attempted;
  j["admitted"] = s.admitted;
  j["errors"] = s.errors;
  for (const auto& [name, c] : {std::pair{"c1", &s.c1}, {"c2", &s.c2}, {"c3", &s.c3}})
    j["constraints"][name] = {{"pass", c->pass}, {"fail", c->fail}, {"skipped", c->skipped}};
  j["admitted_by_strategy"] = s.admitted_by_strategy;
  j["messages"] = s.messages;
  return j.dump(2) + "\n";
}

std::vector<GradingTask> build_tasks(const std::vector<CorpusRecord>& clean,
                                     const std::vector<VariantRecord>& variants,
                                     const std::vector<std::string>& models) {
  // Variants carry their originals, so a variants file alone yields complete baselines.
  std::vector<CorpusRecord> originals = clean;
  std::set<std::string> seen;
  for (const CorpusRecord& r : originals) seen.insert(r.submission_id);
  std::map<std::string, std::optional<bool>> compile_ok;
  for (const VariantRecord& v : variants) {
    compile_ok.emplace(v.origin.submission_id, v.origin_compile_ok);
    if (seen.insert(v.origin.submission_id).second) originals.push_back(v.origin);
  }
  std::vector<GradingTask> tasks;
  for (const std::string& model : models) {
    for (const CorpusRecord& r : originals) {
      GradingTask t;
      t.task_id = model + "|" + r.submission_id + "|" + kCleanStrategy;
      t.submission_text = r.text;
      t.problem_description = r.problem_description;
      t.model_id = model;
      t.submission_id = r.submission_id;
      t.strategy_id = kCleanStrategy;
      t.language = std::string(to_string(r.language));
      if (auto it = compile_ok.find(r.submission_id); it != compile_ok.end()) {
        t.compile_ok = it->second;
      } else {
        t.compile_ok = parse(r.text, r.language).parse_status() == ParseStatus::Clean;
      }
      tasks.push_back(std::move(t));
    }
    for (const VariantRecord& v : variants) {
      GradingTask t;
      t.task_id = model + "|" + v.origin.submission_id + "|" + v.strategy_id;
      t.submission_text = v.text;
      t.problem_description = v.origin.problem_description;
      t.model_id = model;
      t.submission_id = v.origin.submission_id;
      t.strategy_id = v.strategy_id;
      t.language = std::string(to_string(v.origin.language));
      t.compile_ok = v.origin_compile_ok;
      tasks.push_back(std::move(t));
    }
  }
  return tasks;
}

EvaluateSummary run_evaluate(const EvaluateRequest& request, const AppConfig& config,
                             Evaluator& evaluator) {
  std::vector<std::string> models = request.models;
  if (models.empty()) models = config.models;
  if (models.empty()) models = {config.evaluator.model_id};
  EvaluateSummary s;
  s.tasks = build_tasks(request.clean, request.variants, models);
  if (s.tasks.empty()) throw Error("nothing to evaluate");
  std::filesystem::create_directories(request.out_dir);
  BatchOptions bo;
  bo.checkpoint = request.out_dir / "checkpoint.jsonl";
  bo.resume = request.resume;
  bo.clock = request.clock;
  bo.keep_raw = false;
  if (!request.resume) std::filesystem::remove(bo.checkpoint);
  s.batch = run_batch(s.tasks, config.evaluator, evaluator, bo);
  s.results_path = request.out_dir / "results.jsonl";
  write_results(s.results_path, collect_results(s.tasks, s.batch));
  return s;
}

ScoreSummary run_score(const std::filesystem::path& results, const std::filesystem::path& out_dir,
                       const GroupBy& group_by, const MetricsConfig& metrics) {
  metrics.validate();
  const auto [tasks, scores] = split_results(read_results(results));
  ScoreSummary s;
  s.pairing = pair_scores(scores, tasks);
  if (s.pairing.pairs.empty()) throw EmptyBatch();
  s.report = build_report(aggregate(s.pairing.pairs, group_by, metrics));
  write_report(out_dir, s.report);

  std::ofstream missing(out_dir / "missing_baselines.txt", std::ios::binary | std::ios::trunc);
  for (const std::string& m : s.pairing.missing_baselines) missing << m << "\n";

  nlohmann::ordered_json j;
  j["results"] = results.filename().string();
  j["results_digest"] = run_id_for({read_file(results)});
  j["group_by"] = to_string(group_by);
  j["metrics"] = {{"delta", metrics.delta},
                  {"tau", metrics.tau},
                  {"lambda", metrics.lambda},
                  {"s_max", metrics.s_max},
                  {"kappa_partial", metrics.kappa_partial}};
  j["pairs"] = s.pairing.pairs.size();
  j["missing_baselines"] = s.pairing.missing_baselines.size();
  j["clean_failed"] = s.pairing.clean_failed;
  j["cells"] = s.report.cells.size();
  std::ofstream(out_dir / "score_summary.json", std::ios::binary | std::ios::trunc) << j.dump(2) << "\n";
  return s;
}

VerifySummary run_verify(const std::vector<VariantRecord>& variants, const AppConfig& config,
                         const std::map<std::string, std::vector<std::string>>& fixtures,
                         bool check_c2) {
  const ToolchainConfig tc = config.toolchain();
  CompileChecker checker(tc);
  VerifySummary s;
  for (const VariantRecord& vr : variants) {
    ++s.variants;
    const AdversarialVariant v = vr.to_variant();
    std::string why;
    const Status c3 = verify_c3(v, &why);
    s.c3.add(c3);
    if (c3 == Status::Fail) s.failures.push_back(vr.variant_id() + " c3: " + why);
    const C1Result c1 = verify_c1(v, checker);
    s.c1.add(c1.status);
    if (c1.status == Status::Fail) s.failures.push_back(vr.variant_id() + " c1: " + c1.reason);
    Status c2 = Status::Skipped;
    if (check_c2) {
      if (auto fx = fixtures.find(vr.origin.submission_id); fx != fixtures.end()) {
        const C2Result r = verify_c2(v, fx->second, tc);
        c2 = r.status;
        if (c2 == Status::Fail) s.failures.push_back(vr.variant_id() + " c2: " + r.reason);
      }
    }
    s.c2.add(c2);
  }
  return s;
}

}  // namespace spaci
