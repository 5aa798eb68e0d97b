#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "spaci/error.hpp"
#include "spaci/pipeline.hpp"

namespace {

using namespace spaci;

constexpr int kUsage = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

void print_counts(const char* name, const ConstraintCounts& c) {
  std::cout << "  " << name << ": pass " << c.pass << ", fail " << c.fail << ", skipped "
            << c.skipped << "\n";
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool mock = false;
  std::optional<double> failure_rate;
  std::optional<double> compliance_bias;
};

AppConfig resolve(const Globals& g) {
  AppConfig c = g.config.empty() ? AppConfig{} : load_app_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  if (g.failure_rate) c.mock.failure_rate = *g.failure_rate;
  if (g.compliance_bias) c.mock.compliance_bias = *g.compliance_bias;
  c.mock.seed = c.seed;
  return c;
}

std::filesystem::path pick(const std::string& flag, const std::filesystem::path& fallback,
                           const char* what) {
  if (!flag.empty()) return flag;
  if (!fallback.empty()) return fallback;
  throw CLI::ValidationError(std::string("no ") + what + " given (flag or config paths)");
}

RunManifest manifest_for(const std::string& command, const AppConfig& c, const Globals& g) {
  RunManifest m;
  m.command = command;
  m.metrics = c.metrics;
  m.seed = c.seed;
  m.evaluator = g.mock ? "mock" : (g.config.empty() ? c.evaluator.endpoint_url : g.config);
  m.started_at = utc_timestamp();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial code-injection toolkit for probing automated code graders"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration document")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for payload rendering, sampling and the mock");
  app.add_option("--out-dir", g.out_dir, "Output directory (default: config paths.out_dir)");
  app.add_flag("--mock", g.mock, "Grade with the deterministic mock evaluator");
  app.add_option("--failure-rate", g.failure_rate, "Mock per-attempt transient failure rate")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--compliance-bias", g.compliance_bias, "Mock bonus when payload markers appear");

  // inject
  auto* inject = app.add_subcommand("inject", "Generate and verify adversarial variants");
  std::string in_corpus, in_strategies = "all", in_languages, in_fixtures;
  bool no_c2 = false, no_tier2 = false;
  inject->add_option("--corpus", in_corpus, "Corpus JSONL");
  inject->add_option("--strategies", in_strategies, "Comma-separated strategy ids or 'all'");
  inject->add_option("--languages", in_languages, "Comma-separated languages (default: all)");
  inject->add_option("--fixtures", in_fixtures, "Fixture JSONL for execution checks");
  inject->add_flag("--no-c2", no_c2, "Skip execution equivalence");
  inject->add_flag("--no-tier2", no_tier2, "Skip compiler front-end checks");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Grade clean and adversarial submissions");
  std::string ev_corpus, ev_variants, ev_models;
  bool no_resume = false, real_time = false;
  evaluate->add_option("--corpus", ev_corpus, "Clean corpus JSONL");
  evaluate->add_option("--variants", ev_variants, "variants.jsonl from inject");
  evaluate->add_option("--models", ev_models, "Comma-separated model ids");
  evaluate->add_flag("--no-resume", no_resume, "Ignore an existing checkpoint");
  evaluate->add_flag("--real-time", real_time, "Mock only: pace on the wall clock");

  // score
  auto* score = app.add_subcommand("score", "Pair results and write the report");
  std::string sc_results, sc_group = "model,strategy,language";
  score->add_option("--results", sc_results, "results.jsonl (default: <out-dir>/results.jsonl)");
  score->add_option("--group-by", sc_group, "Comma list of model, strategy, language");

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a stratified sample");
  std::string sa_corpus, sa_strata = "language", sa_require, sa_id = "sample";
  std::size_t sa_n = 0;
  double sa_conf = 0.95;
  sample->add_option("--corpus", sa_corpus, "Corpus JSONL");
  sample->add_option("-n,--n", sa_n, "Sample size")->required();
  sample->add_option("--strata", sa_strata, "Comma list of language, source_tag, difficulty_tag");
  sample->add_option("--require", sa_require, "Comma list of stratum labels that must exist");
  sample->add_option("--confidence", sa_conf, "Confidence level for the margin of error");
  sample->add_option("--sample-id", sa_id, "Identifier written to the header record");

  // verify
  auto* verify = app.add_subcommand("verify", "Re-check constraints of a variants file");
  std::string ve_variants, ve_fixtures;
  bool ve_no_c2 = false;
  verify->add_option("--variants", ve_variants, "variants.jsonl")->required();
  verify->add_option("--fixtures", ve_fixtures, "Fixture JSONL");
  verify->add_flag("--no-c2", ve_no_c2, "Skip execution equivalence");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = resolve(g);
    const std::filesystem::path out = cfg.out_dir;

    if (*inject) {
      const auto corpus = pick(in_corpus, cfg.corpus, "corpus");
      InjectRequest req;
      if (in_strategies == "all") {
        for (const StrategySpec& s : cfg.strategy_catalog()) req.strategies.push_back(s.id);
      } else {
        req.strategies = split_list(in_strategies);
      }
      if (req.strategies.empty()) {
        std::cerr << "usage error: --strategies selects no strategy\n";
        return kUsage;
      }
      for (const std::string& l : split_list(in_languages)) {
        const auto lang = parse_language(l);
        if (!lang) {
          std::cerr << "usage error: unknown language '" << l << "'\n";
          return kUsage;
        }
        req.languages.push_back(*lang);
      }
      cfg.tier2 = cfg.tier2 && !no_tier2;
      const std::string fixtures = !in_fixtures.empty() ? in_fixtures : cfg.fixtures.string();
      if (!fixtures.empty()) req.fixtures = load_fixtures(fixtures);
      req.check_c2 = !no_c2;
      RunManifest m = manifest_for("inject", cfg, g);
      const LoadResult loaded = load_corpus(corpus);
      for (const RejectedLine& r : loaded.rejects)
        std::cerr << "warning: " << corpus.string() << ":" << r.line << ": " << r.message << "\n";
      req.records = loaded.records;
      const InjectSummary s = run_inject(req, cfg);
      write_variants(out / "variants.jsonl", s.variants);
      write_variants(out / "rejected.jsonl", s.rejected);
      std::ofstream(out / "inject_summary.json", std::ios::trunc) << summary_json(s);
      m.corpus_path = corpus.string();
      m.strategies = req.strategies;
      m.finished_at = utc_timestamp();
      m.run_id = run_id_for({"inject", m.corpus_path, join(m.strategies), std::to_string(cfg.seed)});
      write_manifest(out / "manifest_inject.json", m);
      std::cout << "records " << s.records << " (unparseable " << s.unparseable << "), attempted "
                << s.attempted << ", admitted " << s.admitted << ", errors " << s.errors << "\n";
      print_counts("c1", s.c1);
      print_counts("c2", s.c2);
      print_counts("c3", s.c3);
      std::cout << "wrote " << (out / "variants.jsonl").string() << "\n";
      return s.admitted == 0 ? 1 : 0;
    }

    if (*evaluate) {
      EvaluateRequest req;
      if (!ev_corpus.empty() || (!cfg.corpus.empty() && ev_variants.empty()))
        req.clean = load_corpus(pick(ev_corpus, cfg.corpus, "corpus")).records;
      if (!ev_variants.empty()) req.variants = read_variants(ev_variants);
      if (req.clean.empty() && req.variants.empty()) {
        std::cerr << "usage error: give --corpus and/or --variants\n";
        return kUsage;
      }
      req.models = split_list(ev_models);
      req.out_dir = out;
      req.resume = !no_resume;
      std::unique_ptr<Evaluator> evaluator;
      std::unique_ptr<Clock> clock;
      if (g.mock) {
        evaluator = std::make_unique<MockEvaluator>(cfg.mock);
        if (!real_time) clock = std::make_unique<VirtualClock>();
      } else {
        if (cfg.evaluator.endpoint_url.empty() && !std::getenv("SPACI_ENDPOINT")) {
          std::cerr << "usage error: no evaluator endpoint configured (use --mock or --config)\n";
          return kUsage;
        }
        evaluator = std::make_unique<HttpEvaluator>(cfg.evaluator);
      }
      req.clock = clock.get();
      RunManifest m = manifest_for("evaluate", cfg, g);
      const EvaluateSummary s = run_evaluate(req, cfg, *evaluator);
      m.corpus_path = ev_corpus.empty() ? ev_variants : ev_corpus;
      m.models = req.models.empty() ? (cfg.models.empty() ? std::vector<std::string>{cfg.evaluator.model_id}
                                                          : cfg.models)
                                    : req.models;
      std::set<std::string> strategies;
      for (const GradingTask& t : s.tasks) strategies.insert(t.strategy_id);
      m.strategies.assign(strategies.begin(), strategies.end());
      m.finished_at = utc_timestamp();
      m.extra["tasks"] = std::to_string(s.tasks.size());
      m.extra["yield"] = format_number(s.batch.yield());
      m.extra["passes_run"] = std::to_string(s.batch.passes_run);
      m.run_id = run_id_for({"evaluate", m.corpus_path, join(m.models), std::to_string(cfg.seed)});
      write_manifest(out / "manifest_evaluate.json", m);
      std::cout << "tasks " << s.tasks.size() << ", graded " << s.batch.results.size()
                << " (resumed " << s.batch.resumed << "), failed " << s.batch.failures.size()
                << ", attempts " << s.batch.attempts << ", passes " << s.batch.passes_run << "\n";
      std::cout << "yield " << format_number(100 * s.batch.yield()) << "%\n";
      for (const TaskFailure& f : s.batch.failures)
        std::cerr << "warning: " << f.task_id << " failed: " << to_string(f.last_error) << " "
                  << f.message << "\n";
      std::cout << "wrote " << s.results_path.string() << "\n";
      return s.batch.results.empty() ? 1 : 0;
    }

    if (*score) {
      const std::filesystem::path results = sc_results.empty() ? out / "results.jsonl" : std::filesystem::path(sc_results);
      GroupBy gb;
      try {
        gb = parse_group_by(sc_group);
      } catch (const Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
      }
      const ScoreSummary s = run_score(results, out / "report", gb, cfg.metrics);
      for (const std::string& msg : s.pairing.missing_baselines) std::cerr << "warning: " << msg << "\n";
      std::cout << "pairs " << s.pairing.pairs.size() << ", cells " << s.report.cells.size()
                << ", missing baselines " << s.pairing.missing_baselines.size() << "\n";
      for (const LeaderboardEntry& e : s.report.models)
        std::cout << "  model #" << e.rank << " " << e.key << " mean p_decouple "
                  << format_number(e.mean) << "\n";
      for (const LeaderboardEntry& e : s.report.strategies)
        std::cout << "  strategy #" << e.rank << " " << e.key << " mean psi "
                  << format_number(e.mean) << "\n";
      std::cout << "wrote " << (out / "report").string() << "\n";
      return 0;
    }

    if (*sample) {
      const auto corpus = pick(sa_corpus, cfg.corpus, "corpus");
      SamplePlan plan;
      plan.keys = split_list(sa_strata);
      plan.target_n = sa_n;
      plan.seed = cfg.seed;
      plan.required = split_list(sa_require);
      const std::vector<CorpusRecord> records = load_corpus(corpus).records;
      const std::vector<CorpusRecord> picked = stratified_sample(records, plan);
      const auto path = out / "sample.jsonl";
      write_sample(path, sa_id, plan, picked);
      std::map<std::string, std::size_t> counts;
      for (const CorpusRecord& r : picked) ++counts[stratum_label(r, plan.keys)];
      for (const auto& [label, n] : counts) std::cout << "  " << (label.empty() ? "*" : label) << ": " << n << "\n";
      std::cout << "sampled " << picked.size() << " of " << records.size() << ", margin of error "
                << format_number(100 * margin_of_error(picked.size(), sa_conf)) << "% at "
                << sa_conf << " confidence\nwrote " << path.string() << "\n";
      return picked.empty() ? 1 : 0;
    }

    if (*verify) {
      const std::vector<VariantRecord> variants = read_variants(ve_variants);
      std::map<std::string, std::vector<std::string>> fixtures;
      const std::string fx = !ve_fixtures.empty() ? ve_fixtures : cfg.fixtures.string();
      if (!fx.empty()) fixtures = load_fixtures(fx);
      const VerifySummary s = run_verify(variants, cfg, fixtures, !ve_no_c2);
      std::cout << "variants " << s.variants << "\n";
      print_counts("c1", s.c1);
      print_counts("c2", s.c2);
      print_counts("c3", s.c3);
      for (const std::string& f : s.failures) std::cout << "  " << f << "\n";
      return s.failures.empty() && s.variants > 0 ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
