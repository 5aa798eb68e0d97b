#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spaci/language.hpp"

namespace spaci {

struct CorpusRecord {
  std::string submission_id;
  std::string question_id;
  Language language = Language::Python;
  std::string source_tag;
  std::string text;
  std::string problem_description;
  std::optional<std::string> difficulty_tag;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<CorpusRecord> records;
  std::vector<RejectedLine> rejects;
};

/// Reads JSONL, one record per line; blank lines and a leading sample header are skipped.
/// Invalid lines are rejected with their line number. Throws EmptyCorpus when no line is
/// valid and spaci::Error when the file cannot be opened.
LoadResult load_corpus(const std::filesystem::path& path);
LoadResult parse_corpus(std::istream& in);

std::string to_json_line(const CorpusRecord& r);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);

struct SamplePlan {
  /// Subset of {"language", "source_tag", "difficulty_tag"}; empty: one stratum.
  std::vector<std::string> keys;
  std::size_t target_n = 0;
  std::uint64_t seed = 0;
  /// Stratum labels that must have members (see stratum_label).
  std::vector<std::string> required;
};

/// Label of `r` under `keys`, fields joined by '|' (missing difficulty: "-").
std::string stratum_label(const CorpusRecord& r, const std::vector<std::string>& keys);

/// Largest-remainder quotas for stratum sizes, summing to `target`.
std::vector<std::size_t> largest_remainder(const std::vector<std::size_t>& sizes,
                                           std::size_t target);

/// Deterministic proportional sample, returned in corpus order. Throws StratumEmpty when a
/// required stratum has no members and PreconditionError on an invalid plan.
std::vector<CorpusRecord> stratified_sample(const std::vector<CorpusRecord>& records,
                                            const SamplePlan& plan);

/// Writes `{"sample_id": ..., ...}` followed by the records.
void write_sample(const std::filesystem::path& path, const std::string& sample_id,
                  const SamplePlan& plan, const std::vector<CorpusRecord>& records);

/// Worst-case Wald margin z * sqrt(0.25 / n).
double margin_of_error(std::size_t n, double confidence = 0.95);

/// Uniform integer in [0, bound) from a 64-bit engine, identical on every platform.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Fisher-Yates driven by uniform_below.
template <typename T>
void portable_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace spaci
