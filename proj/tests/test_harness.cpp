#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "spaci/error.hpp"
#include "spaci/harness.hpp"
#include "support.hpp"

using namespace spaci;
using namespace spaci::testing;

namespace {

std::vector<GradingTask> make_tasks(std::size_t n, const std::string& model = "mock") {
  std::vector<GradingTask> out;
  for (std::size_t i = 0; i < n; ++i) {
    GradingTask t;
    t.submission_id = "sub" + std::to_string(i);
    t.model_id = model;
    t.task_id = model + "|" + t.submission_id + "|CLEAN";
    t.problem_description = "Print the sum of two integers.";
    t.submission_text = "a, b = map(int, input().split())\nprint(a + b)\n";
    t.language = "python";
    out.push_back(t);
  }
  return out;
}

MockConfig mock_cfg(double failure_rate, std::uint64_t seed = 42) {
  MockConfig m;
  m.seed = seed;
  m.failure_rate = failure_rate;
  return m;
}

// Raises the cancel flag after a number of calls.
class Interrupting : public Evaluator {
 public:
  Interrupting(Evaluator& inner, std::atomic<bool>& flag, long after)
      : inner_(inner), flag_(flag), after_(after) {}
  EvalReply call(const GradingTask& t, const Prompt& p, int attempt, int pass) override {
    if (++calls_ >= after_) flag_ = true;
    return inner_.call(t, p, attempt, pass);
  }

 private:
  Evaluator& inner_;
  std::atomic<bool>& flag_;
  long after_;
  std::atomic<long> calls_{0};
};

}  // namespace

TEST(Prompt, ListsRubricKeys) {
  GradingTask t = make_tasks(1)[0];
  Prompt p = build_grader_prompt(t);
  for (const char* k : {"program_format", "time_complexity", "space_complexity", "correctness_general",
                        "correctness_edge_cases"})
    EXPECT_NE(p.system.find(k), std::string::npos) << k;
  EXPECT_NE(p.system.find("Output Format"), std::string::npos);
  EXPECT_NE(p.user.find(t.problem_description), std::string::npos);
  EXPECT_NE(p.user.find(t.submission_text), std::string::npos);
}

TEST(Prompt, DeterministicAndBlindToStrategy) {
  GradingTask t = make_tasks(1)[0];
  Prompt a = build_grader_prompt(t);
  Prompt b = build_grader_prompt(t);
  EXPECT_EQ(a.system, b.system);
  EXPECT_EQ(a.user, b.user);
  t.strategy_id = "RPA";
  t.task_id = "x";
  Prompt c = build_grader_prompt(t);
  EXPECT_EQ(a.system, c.system);
  EXPECT_EQ(a.user, c.user);
}

TEST(Extract, PreambleJson) {
  RubricScore s = extract_rubric_json(
      "Here is the JSON you requested: {\"program_format\": 8, \"time_complexity\": 12, "
      "\"space_complexity\": 10, \"correctness_general\": 25, \"correctness_edge_cases\": 20}");
  EXPECT_EQ(s.total(), 75);
}

TEST(Extract, SingleQuotesTrailingComma) {
  RubricScore s = extract_rubric_json(
      "{'program_format': 10, 'time_complexity': 15, 'space_complexity': 15, "
      "'correctness_general': 30, 'correctness_edge_cases': 30,}");
  EXPECT_EQ(s.total(), 100);
}

TEST(Extract, OverCapIsRangeViolation) {
  try {
    extract_rubric_json("{\"program_format\": 11, \"time_complexity\": 0, \"space_complexity\": 0, "
                        "\"correctness_general\": 0, \"correctness_edge_cases\": 0}");
    FAIL() << "no exception";
  } catch (const RangeViolation& e) {
    EXPECT_EQ(e.key(), "program_format");
    EXPECT_EQ(e.value(), 11);
  }
}

TEST(Extract, AdversarialCorpus) {
  auto cases = extraction_corpus();
  ASSERT_EQ(cases.size(), 20u);
  int ok = 0;
  for (const auto& c : cases) {
    auto [cls, detail] = extraction_outcome(c.body);
    EXPECT_EQ(cls, c.expect) << c.id;
    if (c.expect == "ok") {
      ++ok;
      EXPECT_EQ(detail, std::to_string(c.total)) << c.id;
    } else if (!c.key.empty()) {
      EXPECT_EQ(detail, c.key) << c.id;
    }
  }
  EXPECT_EQ(ok, 15);
}

TEST(Extract, MockRoundTrip) {
  MockConfig m = mock_cfg(0);
  m.prose_wrapped = true;
  MockEvaluator mock(m);
  int parsed = 0;
  auto tasks = make_tasks(200);
  for (const auto& t : tasks) {
    EvalReply r = mock.call(t, build_grader_prompt(t), 1, 1);
    RubricScore s = extract_rubric_json(r.body);
    EXPECT_EQ(s, mock.score_for(t));
    ++parsed;
  }
  EXPECT_EQ(parsed, 200);
}

TEST(EvaluatorConfig, Validation) {
  EvaluatorConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.temperature = 0.7;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.max_concurrent_tasks = 400;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(TokenBucket, PacesToRate) {
  TokenBucket b(60, 3, 0);  // one per second, burst of three
  EXPECT_TRUE(b.try_take(0));
  EXPECT_TRUE(b.try_take(0));
  EXPECT_TRUE(b.try_take(0));
  EXPECT_FALSE(b.try_take(0));
  EXPECT_NEAR(b.next_available(0), 1.0, 1e-9);
  EXPECT_TRUE(b.try_take(1.0));
  EXPECT_FALSE(b.try_take(1.5));
}

TEST(RunBatch, NoFailures) {
  MockEvaluator mock(mock_cfg(0));
  VirtualClock clock;
  BatchOptions opt;
  opt.clock = &clock;
  auto tasks = make_tasks(1000);
  BatchResult r = run_batch(tasks, {}, mock, opt);
  EXPECT_EQ(r.results.size(), 1000u);
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.attempts, 1000);
  EXPECT_EQ(r.yield(), 1.0);
}

TEST(RunBatch, TransientFailuresRecovered) {
  MockEvaluator mock(mock_cfg(0.2));
  VirtualClock clock;
  BatchOptions opt;
  opt.clock = &clock;
  auto tasks = make_tasks(1000);
  BatchResult r = run_batch(tasks, {}, mock, opt);
  EXPECT_GE(r.yield(), 0.99);
  EXPECT_GT(r.attempts, 1000);

  // Exactly once: every task lands in one bucket.
  std::set<std::string> seen;
  for (const auto& [id, s] : r.results) EXPECT_TRUE(seen.insert(id).second);
  for (const auto& f : r.failures) EXPECT_TRUE(seen.insert(f.task_id).second);
  EXPECT_EQ(seen.size(), tasks.size());
}

namespace {

// Gap between each failed attempt and the next attempt of the same pass, keyed by the
// failed attempt's number; `released` measures to eligibility instead of dispatch.
std::map<int, std::vector<double>> retry_gaps(const BatchResult& r, bool released) {
  std::map<int, std::vector<double>> out;
  for (const auto& [id, hist] : r.history)
    for (std::size_t k = 1; k < hist.size(); ++k) {
      if (hist[k].pass != hist[k - 1].pass) continue;
      const double next = released ? hist[k].eligible_at : hist[k].dispatched_at;
      out[hist[k - 1].attempt].push_back(next - hist[k - 1].completed_at);
    }
  return out;
}

void expect_doubling(const std::map<int, std::vector<double>>& gaps) {
  ASSERT_EQ(gaps.size(), 3u);
  for (const auto& [attempt, values] : gaps) {
    const double want = std::pow(2.0, attempt);
    for (double g : values) {
      EXPECT_GE(g, 0.8 * want) << attempt;
      EXPECT_LE(g, 1.2 * want) << attempt;
    }
  }
}

}  // namespace

TEST(RunBatch, BackoffReleasesAfterDoublingDelays) {
  MockEvaluator mock(mock_cfg(0.5, 7));
  VirtualClock clock;
  BatchOptions opt;
  opt.clock = &clock;
  BatchResult r = run_batch(make_tasks(300), {}, mock, opt);
  expect_doubling(retry_gaps(r, true));
  for (const auto& [id, hist] : r.history)
    for (const auto& a : hist) EXPECT_GE(a.dispatched_at, a.eligible_at);
}

TEST(RunBatch, DispatchFollowsBackoffWhenRateIsSlack) {
  MockEvaluator mock(mock_cfg(0.5, 7));
  VirtualClock clock;
  EvaluatorConfig cfg;
  cfg.rate_limit = 1e9;
  BatchOptions opt;
  opt.clock = &clock;
  BatchResult r = run_batch(make_tasks(300), cfg, mock, opt);
  expect_doubling(retry_gaps(r, false));
}

TEST(RunBatch, ConcurrencyCapped) {
  MockEvaluator mock(mock_cfg(0.1));
  SlowEvaluator slow(mock);
  EvaluatorConfig cfg;
  cfg.rate_limit = 1e9;
  BatchResult r = run_batch(make_tasks(1000), cfg, slow);
  EXPECT_LE(slow.peak(), 200);
  EXPECT_LE(mock.max_in_flight(), 200);
  EXPECT_EQ(r.results.size() + r.failures.size(), 1000u);

  cfg.max_concurrent_tasks = 8;
  SlowEvaluator slow8(mock);
  run_batch(make_tasks(200), cfg, slow8);
  EXPECT_LE(slow8.peak(), 8);
}

TEST(RunBatch, RateBound) {
  MockEvaluator mock(mock_cfg(0.2));
  VirtualClock clock;
  EvaluatorConfig cfg;
  cfg.max_concurrent_tasks = 5;
  cfg.rate_limit = 60;
  BatchOptions opt;
  opt.clock = &clock;
  BatchResult r = run_batch(make_tasks(100), cfg, mock, opt);
  std::vector<double> times;
  for (const auto& [id, hist] : r.history)
    for (const auto& a : hist) times.push_back(a.dispatched_at);
  std::sort(times.begin(), times.end());
  ASSERT_EQ(static_cast<long>(times.size()), r.attempts);
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto end = std::upper_bound(times.begin(), times.end(), times[i] + 10.0 - 1e-9);
    long in_window = end - (times.begin() + static_cast<long>(i));
    EXPECT_LE(in_window, 5 + 10 + 1);
  }
  EXPECT_GE(times.back(), static_cast<double>(r.attempts - 5) - 1e-6);
}

TEST(RunBatch, ProseWrappedReplies) {
  MockConfig m = mock_cfg(0);
  m.prose_wrapped = true;
  MockEvaluator mock(m);
  VirtualClock clock;
  BatchOptions opt;
  opt.clock = &clock;
  BatchResult r = run_batch(make_tasks(300), {}, mock, opt);
  EXPECT_EQ(r.results.size(), 300u);
}

TEST(RunBatch, DuplicateTaskIdsRejected) {
  MockEvaluator mock(mock_cfg(0));
  auto tasks = make_tasks(2);
  tasks[1].task_id = tasks[0].task_id;
  EXPECT_THROW(run_batch(tasks, {}, mock), PreconditionError);
}

TEST(RunBatch, CheckpointResumeHasNoDuplicates) {
  TempDir dir("ckpt");
  auto tasks = make_tasks(400);
  MockEvaluator mock(mock_cfg(0.1));
  std::atomic<bool> cancel{false};
  Interrupting interrupting(mock, cancel, 150);
  VirtualClock clock;
  BatchOptions opt;
  opt.clock = &clock;
  opt.checkpoint = dir.path / "checkpoint.jsonl";
  opt.cancel = &cancel;
  BatchResult first = run_batch(tasks, {}, interrupting, opt);
  ASSERT_LT(first.results.size(), tasks.size());
  ASSERT_GT(first.results.size(), 0u);

  MockEvaluator fresh(mock_cfg(0.1));
  BatchOptions again;
  again.clock = &clock;
  again.checkpoint = opt.checkpoint;
  BatchResult second = run_batch(tasks, {}, fresh, again);
  EXPECT_EQ(second.resumed, static_cast<long>(first.results.size()));
  EXPECT_EQ(second.results.size() + second.failures.size(), tasks.size());
  for (const auto& [id, s] : first.results) EXPECT_EQ(second.results.at(id), s);

  std::map<std::string, int> successes;
  for (const auto& raw : read_checkpoint(opt.checkpoint)) {
    if (raw.http_status != 200) continue;
    try {
      extract_rubric_json(raw.body);
      ++successes[raw.task_id];
    } catch (const Error&) {
    }
  }
  for (const auto& [id, n] : successes) EXPECT_EQ(n, 1) << id;
}

TEST(Pairing, CleanAndAdversarial) {
  std::vector<GradingTask> tasks;
  GradingTask clean = make_tasks(1)[0];
  GradingTask adv = clean;
  adv.strategy_id = "RPA";
  adv.task_id = "mock|sub0|RPA";
  tasks = {clean, adv};
  RubricScore s30{3, 4, 5, 10, 8};
  RubricScore s90{9, 14, 14, 27, 26};
  auto report = pair_scores({{clean.task_id, s30}, {adv.task_id, s90}}, tasks);
  ASSERT_EQ(report.pairs.size(), 1u);
  EXPECT_EQ(report.pairs[0].y_clean, 30);
  EXPECT_EQ(report.pairs[0].y_adv, 90);
  EXPECT_EQ(report.pairs[0].strategy_id, "RPA");
}

TEST(Pairing, MissingBaseline) {
  GradingTask adv = make_tasks(1)[0];
  adv.strategy_id = "RPA";
  adv.task_id = "mock|sub0|RPA";
  RubricScore s{1, 1, 1, 1, 1};
  EXPECT_THROW(pair_scores_strict({{adv.task_id, s}}, {adv}), MissingBaseline);
  auto lenient = pair_scores({{adv.task_id, s}}, {adv});
  EXPECT_TRUE(lenient.pairs.empty());
  EXPECT_EQ(lenient.missing_baselines.size(), 1u);
}

TEST(Pairing, CardinalityRecount) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 20; ++round) {
    const std::size_t n = 5 + rng() % 20;
    std::vector<GradingTask> tasks;
    std::map<std::string, RubricScore> results;
    for (const std::string model : {"m1", "m2"}) {
      for (auto& t : make_tasks(n, model)) {
        tasks.push_back(t);
        if (rng() % 5) results[t.task_id] = {1, 1, 1, 1, 1};
        for (const auto& spec : catalog()) {
          GradingTask a = t;
          a.strategy_id = spec.id;
          a.task_id = model + "|" + t.submission_id + "|" + spec.id;
          tasks.push_back(a);
          if (rng() % 4) results[a.task_id] = {2, 2, 2, 2, 2};
        }
      }
    }
    auto report = pair_scores(results, tasks);
    EXPECT_LE(report.pairs.size(), 2 * 17 * n);
    std::set<std::tuple<std::string, std::string, std::string>> keys;
    std::size_t expected = 0;
    for (const auto& t : tasks)
      if (t.strategy_id != kCleanStrategy && results.count(t.task_id) &&
          results.count(t.model_id + "|" + t.submission_id + "|CLEAN"))
        ++expected;
    for (const auto& p : report.pairs)
      EXPECT_TRUE(keys.insert({p.submission_id, p.strategy_id, p.model_id}).second);
    EXPECT_EQ(report.pairs.size(), expected);
  }
}
