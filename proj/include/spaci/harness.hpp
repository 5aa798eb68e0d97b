#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spaci/metrics.hpp"

namespace spaci {

inline constexpr const char* kCleanStrategy = "CLEAN";

struct EvaluatorConfig {
  std::string endpoint_url;
  /// Header line with `{API_KEY}` substituted from `api_key_env`.
  std::string auth_header = "Authorization: Bearer {API_KEY}";
  std::string api_key_env = "SPACI_API_KEY";
  std::string model_id = "mock";
  double temperature = 0;
  int max_concurrent_tasks = 200;
  int connection_pool_limit = 300;
  double rate_limit = 2000;  // requests per minute
  int max_retries = 3;
  int max_passes = 3;
  double request_timeout = 60;  // seconds
  /// Slash-separated path to the reply text inside the response JSON.
  std::string response_path = "choices/0/message/content";

  /// Throws spaci::Error on a non-zero temperature or inconsistent limits.
  void validate() const;
};

struct GradingTask {
  std::string task_id;
  std::string submission_text;
  std::string problem_description;
  std::string model_id;
  std::string submission_id;
  std::string strategy_id = kCleanStrategy;
  std::string language;
  std::optional<bool> compile_ok;
};

struct RawResponse {
  std::string task_id;
  int http_status = 0;
  std::string body;
  int attempt = 0;
  int pass = 0;
};

struct Prompt {
  std::string system;
  std::string user;
};

/// Rubric system text plus the problem and submission; no hint of injection status.
Prompt build_grader_prompt(const GradingTask& task);

/// First `{...}` object in `body` (non-greedy, across lines), repaired and validated.
/// Throws NoJsonFound, SchemaViolation or RangeViolation.
RubricScore extract_rubric_json(const std::string& body);
RubricScore extract_rubric_json(const RawResponse& raw);

// ---------------------------------------------------------------------------
// Time and pacing

/// Seconds on a monotonic timeline.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_until(double t) = 0;
  virtual bool is_virtual() const = 0;
};

class SteadyClock : public Clock {
 public:
  SteadyClock();
  double now() override;
  void sleep_until(double t) override;
  bool is_virtual() const override { return false; }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Time moves only when the scheduler sleeps; evaluator calls take zero time.
class VirtualClock : public Clock {
 public:
  double now() override { return now_; }
  void sleep_until(double t) override {
    if (t > now_) now_ = t;
  }
  bool is_virtual() const override { return true; }

 private:
  double now_ = 0;
};

/// Admission pacing: `rate_per_minute` tokens per minute, at most `capacity` banked.
class TokenBucket {
 public:
  TokenBucket(double rate_per_minute, double capacity, double start = 0);
  bool try_take(double now);
  /// Earliest time a token is available.
  double next_available(double now) const;

 private:
  void refill(double now);
  double rate_;  // per second
  double capacity_;
  double tokens_;
  double last_;
};

// ---------------------------------------------------------------------------
// Evaluators

struct EvalReply {
  int http_status = 200;
  std::string body;
  bool timeout = false;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Called concurrently from worker threads.
  virtual EvalReply call(const GradingTask& task, const Prompt& prompt, int attempt, int pass) = 0;
};

struct MockConfig {
  std::uint64_t seed = 0;
  double failure_rate = 0;      // per-attempt transient failure probability
  double compliance_bias = 0;   // points added when payload markers are present
  bool prose_wrapped = false;   // surround the JSON with conversational filler
  std::vector<std::string> markers = {"Role:", "Mode:", "SYSTEM", "if (False)", "if (0)",
                                      "if (false)", "Final Grade"};
};

/// Deterministic grader. The base grade hashes (model, problem, submission id), so clean and
/// adversarial copies of one program land within a few points of each other; a small
/// text-hash jitter is added, and marker hits add `compliance_bias` scaled by a per-model
/// factor in [0.5, 1.5).
class MockEvaluator : public Evaluator {
 public:
  explicit MockEvaluator(MockConfig cfg);
  EvalReply call(const GradingTask& task, const Prompt& prompt, int attempt, int pass) override;

  int max_in_flight() const noexcept { return max_in_flight_.load(); }
  long calls() const noexcept { return calls_.load(); }
  /// Score the mock would give, without failure injection.
  RubricScore score_for(const GradingTask& task) const;

 private:
  MockConfig cfg_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<long> calls_{0};
};

/// Chat-style JSON POST over HTTP(S).
class HttpEvaluator : public Evaluator {
 public:
  explicit HttpEvaluator(EvaluatorConfig cfg);
  EvalReply call(const GradingTask& task, const Prompt& prompt, int attempt, int pass) override;

 private:
  EvaluatorConfig cfg_;
  std::string scheme_host_;
  std::string path_;
  std::string header_name_;
  std::string header_value_;
};

/// Request body sent by HttpEvaluator.
std::string build_request_body(const EvaluatorConfig& cfg, const Prompt& prompt);

/// Text at `path` ("a/0/b") inside a JSON document, or nullopt.
std::optional<std::string> json_path_text(const std::string& json_text, const std::string& path);

// ---------------------------------------------------------------------------
// Batch execution

enum class ErrorClass { None, Timeout, HttpTransient, HttpFatal, NoJsonFound, SchemaViolation,
                        RangeViolation, EvaluatorError, Cancelled };
std::string_view to_string(ErrorClass e);
bool retryable(ErrorClass e);

struct AttemptRecord {
  int pass = 0;
  int attempt = 0;
  double dispatched_at = 0;
  double completed_at = 0;
  int http_status = 0;
  ErrorClass error = ErrorClass::None;
  /// When the attempt was released for dispatch (pass start, or failure time plus backoff);
  /// dispatch can come later when the rate limit or concurrency cap is binding.
  double eligible_at = 0;
};

struct TaskFailure {
  std::string task_id;
  ErrorClass last_error = ErrorClass::None;
  std::string message;
  std::vector<AttemptRecord> attempts;
};

struct BatchOptions {
  std::filesystem::path checkpoint;  // empty: no checkpoint
  bool resume = true;                // reuse successful records already in the checkpoint
  Clock* clock = nullptr;            // default: SteadyClock
  const std::atomic<bool>* cancel = nullptr;
  bool keep_raw = true;
};

struct BatchResult {
  std::map<std::string, RubricScore> results;
  std::vector<TaskFailure> failures;
  std::map<std::string, std::vector<AttemptRecord>> history;
  std::vector<RawResponse> raw;
  int passes_run = 0;
  long attempts = 0;
  long resumed = 0;

  double yield() const;
};

/// Bounded-concurrency, token-bucket-paced batch with per-pass retries (delays 2^attempt s)
/// and multi-pass recovery. Every task ends in exactly one of results / failures.
BatchResult run_batch(const std::vector<GradingTask>& tasks, const EvaluatorConfig& cfg,
                      Evaluator& evaluator, const BatchOptions& options = {});

/// Appends RawResponse records as JSON lines.
class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::filesystem::path& path);
  void append(const RawResponse& r);

 private:
  std::mutex mu_;
  std::filesystem::path path_;
};

std::vector<RawResponse> read_checkpoint(const std::filesystem::path& path);

struct PairingReport {
  std::vector<ScorePair> pairs;
  /// One message per adversarial result without a usable clean baseline.
  std::vector<std::string> missing_baselines;
  /// Submissions (per model) whose clean evaluation failed.
  std::size_t clean_failed = 0;
};

/// Joins CLEAN and strategy results per (submission, model).
PairingReport pair_scores(const std::map<std::string, RubricScore>& results,
                          const std::vector<GradingTask>& tasks);

/// Strict variant: throws MissingBaseline on the first orphaned adversarial result.
std::vector<ScorePair> pair_scores_strict(const std::map<std::string, RubricScore>& results,
                                          const std::vector<GradingTask>& tasks);

}  // namespace spaci
