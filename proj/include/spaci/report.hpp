#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spaci/corpus.hpp"
#include "spaci/harness.hpp"
#include "spaci/injection.hpp"
#include "spaci/metrics.hpp"

namespace spaci {

// ---------------------------------------------------------------------------
// Records exchanged between subcommands

/// One admitted (or rejected) adversarial variant as stored in variants.jsonl.
struct VariantRecord {
  CorpusRecord origin;
  std::string strategy_id;
  Operator op = Operator::A;
  std::string text;
  std::vector<Span> injection_sites;
  std::vector<Span> deadcode_sites;
  IdentifierMapping mapping;
  Verification verification;
  /// Compile status of the original submission (tier 2 if available, else parse status).
  std::optional<bool> origin_compile_ok;

  std::string variant_id() const { return origin.submission_id + "::" + strategy_id; }
  /// Rebuilds the variant for re-verification (reparses both texts).
  AdversarialVariant to_variant() const;
};

std::string to_json_line(const VariantRecord& v);
VariantRecord variant_from_json_line(const std::string& line);
void write_variants(const std::filesystem::path& path, const std::vector<VariantRecord>& variants);
/// Throws SchemaViolation with the offending line number in the message.
std::vector<VariantRecord> read_variants(const std::filesystem::path& path);

/// One graded (or failed) task as stored in results.jsonl.
struct ResultRecord {
  GradingTask task;  // submission_text and problem_description are not stored
  std::optional<RubricScore> score;
  ErrorClass error = ErrorClass::None;
  std::string message;
  std::size_t attempts = 0;
};

std::vector<ResultRecord> collect_results(const std::vector<GradingTask>& tasks,
                                          const BatchResult& batch);
void write_results(const std::filesystem::path& path, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_results(const std::filesystem::path& path);

/// Tasks and successful scores of a results file, ready for pair_scores.
std::pair<std::vector<GradingTask>, std::map<std::string, RubricScore>> split_results(
    const std::vector<ResultRecord>& records);

// ---------------------------------------------------------------------------
// Report

struct LeaderboardEntry {
  std::size_t rank = 0;
  std::string key;
  double mean = 0;
  std::size_t cells = 0;
};

struct Heatmap {
  std::string metric;
  std::vector<std::string> rows;     // models
  std::vector<std::string> columns;  // strategies
  std::vector<std::vector<std::optional<double>>> values;
};

struct Report {
  std::vector<MetricsCell> cells;
  std::vector<LeaderboardEntry> models;      // by mean p_decouple, descending
  std::vector<LeaderboardEntry> strategies;  // by mean psi, descending
  std::vector<Heatmap> heatmaps;             // p_decouple, d_adv, psi
  std::vector<Deviation> deviations;
};

/// Summary cells are the Mean roll-ups when languages were grouped, otherwise every cell.
std::vector<MetricsCell> summary_cells(const std::vector<MetricsCell>& cells);

Report build_report(const std::vector<MetricsCell>& cells);

/// Writes cells.csv, leaderboard_models.csv, leaderboard_strategies.csv,
/// heatmap_{p_decouple,d_adv,psi}.csv, deviations.csv and false_certification.csv.
void write_report(const std::filesystem::path& dir, const Report& report);

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);
std::string to_csv(const CsvTable& table);
/// RFC 4180 subset: quoted fields, doubled quotes, LF or CRLF line ends.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable cells_table(const std::vector<MetricsCell>& cells);
/// Schema parser for cells.csv. Throws SchemaViolation on a header or field mismatch.
std::vector<MetricsCell> cells_from_table(const CsvTable& table);
CsvTable leaderboard_table(const std::vector<LeaderboardEntry>& board, const std::string& key_name,
                           const std::string& metric);
std::vector<LeaderboardEntry> leaderboard_from_table(const CsvTable& table);
CsvTable heatmap_table(const Heatmap& h);
Heatmap heatmap_from_table(const CsvTable& table, const std::string& metric);
CsvTable deviations_table(const std::vector<Deviation>& devs);
CsvTable false_certification_table(const std::vector<MetricsCell>& cells);

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string run_id;
  std::string command;
  std::string corpus_path;
  std::vector<std::string> strategies;
  std::vector<std::string> models;
  MetricsConfig metrics;
  std::string evaluator;  // config file path or "mock"
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> extra;
};

std::string to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

/// UTC ISO-8601 timestamp of the current wall-clock time.
std::string utc_timestamp();

/// Hex digest of the fields, stable across platforms.
std::string run_id_for(std::initializer_list<std::string_view> fields);

}  // namespace spaci
