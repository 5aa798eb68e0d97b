#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spaci/corpus.hpp"
#include "spaci/harness.hpp"
#include "spaci/injection.hpp"
#include "spaci/metrics.hpp"
#include "spaci/report.hpp"

namespace spaci {

/// The single configuration document read by `--config`.
struct AppConfig {
  MetricsConfig metrics;
  EvaluatorConfig evaluator;
  std::vector<std::string> models;  // empty: evaluator.model_id
  MockConfig mock;
  std::uint64_t seed = 0;

  std::filesystem::path corpus;
  std::filesystem::path fixtures;
  std::filesystem::path strategies;  // empty: built-in catalog
  std::filesystem::path out_dir = "out";

  bool tier2 = true;
  long wall_time_ms = 5000;
  long memory_mb = 512;
  std::filesystem::path workspace_root;
  bool keep_failed_workspaces = true;

  std::string score_target = "100/100";
  std::optional<SitePolicy> site_policy;
  AnchorPolicy anchor_policy = AnchorPolicy::BeforeMainLogic;

  ToolchainConfig toolchain() const;
  std::vector<StrategySpec> strategy_catalog() const;
};

/// Parses the JSON config; missing keys keep their defaults, unknown keys are rejected.
AppConfig app_config_from_json(const std::string& text);
AppConfig load_app_config(const std::filesystem::path& path);

/// `{"submission_id": ..., "inputs": [...]}` per line.
std::map<std::string, std::vector<std::string>> load_fixtures(const std::filesystem::path& path);

struct ConstraintCounts {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t skipped = 0;

  void add(Status s);
  std::size_t total() const { return pass + fail + skipped; }
};

struct InjectRequest {
  std::vector<CorpusRecord> records;
  std::vector<std::string> strategies;  // ids; must be non-empty
  std::vector<Language> languages;      // empty: all
  std::map<std::string, std::vector<std::string>> fixtures;
  bool check_c1 = true;
  bool check_c2 = true;
};

struct InjectSummary {
  std::size_t records = 0;
  std::size_t unparseable = 0;
  std::size_t attempted = 0;
  std::size_t admitted = 0;
  std::size_t errors = 0;  // operator or template errors
  ConstraintCounts c1, c2, c3;
  std::map<std::string, std::size_t> admitted_by_strategy;
  std::vector<std::string> messages;
  std::vector<VariantRecord> variants;  // admitted only
  std::vector<VariantRecord> rejected;
};

/// Every (record, strategy): render, apply, verify. Throws PreconditionError on an empty
/// strategy list and spaci::Error on an unknown strategy id.
InjectSummary run_inject(const InjectRequest& request, const AppConfig& config);

std::string summary_json(const InjectSummary& s);

struct EvaluateRequest {
  std::vector<CorpusRecord> clean;
  std::vector<VariantRecord> variants;
  std::vector<std::string> models;
  std::filesystem::path out_dir;
  bool resume = true;
  Clock* clock = nullptr;
};

/// CLEAN task per (record, model) plus one task per (variant, model).
std::vector<GradingTask> build_tasks(const std::vector<CorpusRecord>& clean,
                                     const std::vector<VariantRecord>& variants,
                                     const std::vector<std::string>& models);

struct EvaluateSummary {
  std::vector<GradingTask> tasks;
  BatchResult batch;
  std::filesystem::path results_path;
};

/// Runs the batch with checkpointing under out_dir and writes results.jsonl.
EvaluateSummary run_evaluate(const EvaluateRequest& request, const AppConfig& config,
                             Evaluator& evaluator);

struct ScoreSummary {
  PairingReport pairing;
  Report report;
};

/// Pairs, aggregates and writes the report files plus missing_baselines.txt. Output is a
/// pure function of the results file and the metrics configuration.
ScoreSummary run_score(const std::filesystem::path& results, const std::filesystem::path& out_dir,
                       const GroupBy& group_by, const MetricsConfig& metrics);

struct VerifySummary {
  std::size_t variants = 0;
  ConstraintCounts c1, c2, c3;
  std::vector<std::string> failures;
};

VerifySummary run_verify(const std::vector<VariantRecord>& variants, const AppConfig& config,
                         const std::map<std::string, std::vector<std::string>>& fixtures,
                         bool check_c2);

}  // namespace spaci
