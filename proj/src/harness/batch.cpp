#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <json.hpp>
#include <queue>
#include <set>
#include <thread>

#include "spaci/error.hpp"
#include "spaci/harness.hpp"

namespace spaci {

namespace {

struct Job {
  std::size_t task = 0;
  int attempt = 1;
  double dispatched_at = 0;
  double eligible_at = 0;
};

struct Completion {
  Job job;
  EvalReply reply;
  bool threw = false;
  std::string what;
};

struct TaskState {
  int attempt = 1;  // next attempt number within the current pass
  double eligible_at = 0;
  std::vector<AttemptRecord> history;
  ErrorClass last_error = ErrorClass::None;
  std::string message;
};

ErrorClass classify(const Completion& c, std::optional<RubricScore>& score, std::string& message) {
  if (c.threw) {
    message = c.what;
    return ErrorClass::EvaluatorError;
  }
  if (c.reply.timeout) {
    message = "request timed out";
    return ErrorClass::Timeout;
  }
  const int s = c.reply.http_status;
  if (s == 408 || s == 429 || s >= 500) {
    message = "HTTP " + std::to_string(s);
    return ErrorClass::HttpTransient;
  }
  if (s < 200 || s >= 300) {
    message = "HTTP " + std::to_string(s);
    return ErrorClass::HttpFatal;
  }
  try {
    score = extract_rubric_json(c.reply.body);
    return ErrorClass::None;
  } catch (const NoJsonFound& e) {
    message = e.what();
    return ErrorClass::NoJsonFound;
  } catch (const SchemaViolation& e) {
    message = e.what();
    return ErrorClass::SchemaViolation;
  } catch (const RangeViolation& e) {
    message = e.what();
    return ErrorClass::RangeViolation;
  }
}

struct TimerLess {
  bool operator()(const std::pair<double, std::size_t>& a,
                  const std::pair<double, std::size_t>& b) const {
    return a > b;
  }
};

}  // namespace

std::string_view to_string(ErrorClass e) {
  switch (e) {
    case ErrorClass::None: return "None";
    case ErrorClass::Timeout: return "Timeout";
    case ErrorClass::HttpTransient: return "HttpTransient";
    case ErrorClass::HttpFatal: return "HttpFatal";
    case ErrorClass::NoJsonFound: return "NoJsonFound";
    case ErrorClass::SchemaViolation: return "SchemaViolation";
    case ErrorClass::RangeViolation: return "RangeViolation";
    case ErrorClass::EvaluatorError: return "EvaluatorError";
    case ErrorClass::Cancelled: return "Cancelled";
  }
  return "None";
}

bool retryable(ErrorClass e) {
  switch (e) {
    case ErrorClass::Timeout:
    case ErrorClass::HttpTransient:
    case ErrorClass::NoJsonFound:
    case ErrorClass::SchemaViolation:
    case ErrorClass::RangeViolation:
    case ErrorClass::EvaluatorError:
      return true;
    default:
      return false;
  }
}

void EvaluatorConfig::validate() const {
  if (temperature != 0) throw Error("temperature must be 0 for experiment runs");
  if (max_concurrent_tasks < 1) throw Error("max_concurrent_tasks must be >= 1");
  if (max_concurrent_tasks > connection_pool_limit)
    throw Error("max_concurrent_tasks must not exceed connection_pool_limit");
  if (!(rate_limit > 0)) throw Error("rate_limit must be > 0");
  if (max_retries < 0) throw Error("max_retries must be >= 0");
  if (max_passes < 1) throw Error("max_passes must be >= 1");
  if (!(request_timeout > 0)) throw Error("request_timeout must be > 0");
}

SteadyClock::SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

double SteadyClock::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
}

void SteadyClock::sleep_until(double t) {
  const double d = t - now();
  if (d > 0) std::this_thread::sleep_for(std::chrono::duration<double>(d));
}

TokenBucket::TokenBucket(double rate_per_minute, double capacity, double start)
    : rate_(rate_per_minute / 60.0), capacity_(std::max(1.0, capacity)), tokens_(capacity_),
      last_(start) {}

void TokenBucket::refill(double now) {
  if (now > last_) {
    tokens_ = std::min(capacity_, tokens_ + (now - last_) * rate_);
    last_ = now;
  }
}

bool TokenBucket::try_take(double now) {
  refill(now);
  if (tokens_ >= 1.0 - 1e-9) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

double TokenBucket::next_available(double now) const {
  const double banked =
      std::min(capacity_, tokens_ + std::max(0.0, now - last_) * rate_);
  if (banked >= 1.0 - 1e-9) return now;
  return now + (1.0 - banked) / rate_;
}

double BatchResult::yield() const {
  const std::size_t total = results.size() + failures.size();
  return total ? static_cast<double>(results.size()) / static_cast<double>(total) : 0.0;
}

CheckpointWriter::CheckpointWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void CheckpointWriter::append(const RawResponse& r) {
  nlohmann::json j = {{"task_id", r.task_id}, {"http_status", r.http_status},
                      {"body", r.body},       {"attempt", r.attempt},
                      {"pass", r.pass}};
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to checkpoint " + path_.string());
  out << j.dump() << "\n";
  out.flush();
}

std::vector<RawResponse> read_checkpoint(const std::filesystem::path& path) {
  std::vector<RawResponse> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A crash can leave a torn final line; skip anything that does not parse.
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("task_id")) continue;
    RawResponse r;
    r.task_id = j.value("task_id", "");
    r.http_status = j.value("http_status", 0);
    r.body = j.value("body", "");
    r.attempt = j.value("attempt", 0);
    r.pass = j.value("pass", 0);
    out.push_back(std::move(r));
  }
  return out;
}

BatchResult run_batch(const std::vector<GradingTask>& tasks, const EvaluatorConfig& cfg,
                      Evaluator& evaluator, const BatchOptions& options) {
  if (tasks.empty()) throw PreconditionError("run_batch needs at least one task");
  cfg.validate();
  {
    std::set<std::string> ids;
    for (const GradingTask& t : tasks) {
      if (!ids.insert(t.task_id).second)
        throw PreconditionError("duplicate task id '" + t.task_id + "'");
    }
  }
  SteadyClock steady;
  Clock& clock = options.clock ? *options.clock : steady;
  BatchResult result;
  std::unique_ptr<CheckpointWriter> checkpoint;
  if (!options.checkpoint.empty()) {
    if (options.resume) {
      for (const RawResponse& r : read_checkpoint(options.checkpoint)) {
        if (r.http_status < 200 || r.http_status >= 300) continue;
        try {
          RubricScore s = extract_rubric_json(r.body);
          if (result.results.emplace(r.task_id, s).second) ++result.resumed;
        } catch (const Error&) {
        }
      }
    }
    checkpoint = std::make_unique<CheckpointWriter>(options.checkpoint);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tasks.size(); ++i) index[tasks[i].task_id] = i;
  // Drop resumed records for tasks that are not part of this batch.
  for (auto it = result.results.begin(); it != result.results.end();) {
    if (!index.count(it->first)) {
      --result.resumed;
      it = result.results.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<Prompt> prompts;
  prompts.reserve(tasks.size());
  for (const GradingTask& t : tasks) prompts.push_back(build_grader_prompt(t));

  std::vector<TaskState> state(tasks.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!result.results.count(tasks[i].task_id)) pending.push_back(i);
  }

  std::mutex mu;
  std::condition_variable cv_jobs;
  std::condition_variable cv_done;
  std::deque<Job> jobs;
  std::deque<Completion> completions;
  bool stop = false;
  int current_pass = 0;

  const std::size_t workers_n =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.max_concurrent_tasks),
                            std::max<std::size_t>(1, pending.size()));
  std::vector<std::thread> workers;
  auto worker = [&] {
    while (true) {
      Job job;
      int pass = 0;
      {
        std::unique_lock<std::mutex> lock(mu);
        cv_jobs.wait(lock, [&] { return stop || !jobs.empty(); });
        if (jobs.empty()) return;
        job = jobs.front();
        jobs.pop_front();
        pass = current_pass;
      }
      Completion c;
      c.job = job;
      try {
        c.reply = evaluator.call(tasks[job.task], prompts[job.task], job.attempt, pass);
      } catch (const std::exception& e) {
        c.threw = true;
        c.what = e.what();
      }
      {
        std::lock_guard<std::mutex> lock(mu);
        completions.push_back(std::move(c));
      }
      cv_done.notify_one();
    }
  };
  if (!pending.empty()) {
    for (std::size_t i = 0; i < workers_n; ++i) workers.emplace_back(worker);
  }

  TokenBucket bucket(cfg.rate_limit, cfg.max_concurrent_tasks, clock.now());
  const int attempts_per_pass = 1 + cfg.max_retries;
  std::vector<std::size_t> failed_this_pass;

  for (int pass = 1; pass <= cfg.max_passes && !pending.empty(); ++pass) {
    {
      std::lock_guard<std::mutex> lock(mu);
      current_pass = pass;
    }
    result.passes_run = pass;
    std::deque<std::size_t> ready(pending.begin(), pending.end());
    std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>,
                        TimerLess>
        timers;
    const double pass_start = clock.now();
    for (std::size_t i : pending) {
      state[i].attempt = 1;
      state[i].eligible_at = pass_start;
    }
    failed_this_pass.clear();
    int in_flight = 0;
    bool cancelled = false;

    while (true) {
      if (options.cancel && options.cancel->load() && !cancelled) {
        cancelled = true;
        for (std::size_t i : ready) failed_this_pass.push_back(i), state[i].last_error = ErrorClass::Cancelled;
        ready.clear();
        while (!timers.empty()) {
          failed_this_pass.push_back(timers.top().second);
          state[timers.top().second].last_error = ErrorClass::Cancelled;
          timers.pop();
        }
      }
      const double now = clock.now();
      // Retries that are due go ahead of first attempts.
      std::vector<std::size_t> due;
      while (!timers.empty() && timers.top().first <= now + 1e-9) {
        state[timers.top().second].eligible_at = timers.top().first;
        due.push_back(timers.top().second);
        timers.pop();
      }
      for (auto it = due.rbegin(); it != due.rend(); ++it) ready.push_front(*it);

      while (!ready.empty() && in_flight < cfg.max_concurrent_tasks && bucket.try_take(now)) {
        const std::size_t i = ready.front();
        ready.pop_front();
        Job job{i, state[i].attempt, now, state[i].eligible_at};
        {
          std::lock_guard<std::mutex> lock(mu);
          jobs.push_back(job);
        }
        cv_jobs.notify_one();
        ++in_flight;
        ++result.attempts;
      }

      if (in_flight == 0 && ready.empty() && timers.empty()) break;

      std::deque<Completion> done;
      {
        std::unique_lock<std::mutex> lock(mu);
        if (completions.empty() && in_flight > 0) {
          if (clock.is_virtual()) {
            cv_done.wait(lock, [&] { return !completions.empty(); });
          } else {
            double next = timers.empty() ? now + 0.25 : timers.top().first;
            if (!ready.empty()) next = std::min(next, bucket.next_available(now));
            const double wait = std::clamp(next - clock.now(), 0.001, 0.25);
            cv_done.wait_for(lock, std::chrono::duration<double>(wait),
                             [&] { return !completions.empty(); });
          }
        }
        done.swap(completions);
      }
      if (done.empty() && in_flight == 0) {
        double next = timers.empty() ? clock.now() : timers.top().first;
        if (!ready.empty()) {
          const double tok = bucket.next_available(clock.now());
          next = timers.empty() ? tok : std::min(next, tok);
        }
        clock.sleep_until(next);
        continue;
      }

      for (Completion& c : done) {
        --in_flight;
        const std::size_t i = c.job.task;
        const double finished = clock.now();
        std::optional<RubricScore> score;
        std::string message;
        const ErrorClass err = classify(c, score, message);
        AttemptRecord rec{pass,    c.job.attempt,        c.job.dispatched_at, finished,
                          c.reply.http_status, err, c.job.eligible_at};
        state[i].history.push_back(rec);
        if (!c.threw) {
          RawResponse raw{tasks[i].task_id, c.reply.http_status, c.reply.body, c.job.attempt, pass};
          if (checkpoint) checkpoint->append(raw);
          if (options.keep_raw) result.raw.push_back(std::move(raw));
        }
        if (err == ErrorClass::None) {
          result.results[tasks[i].task_id] = *score;
          continue;
        }
        state[i].last_error = err;
        state[i].message = message;
        const bool can_retry = retryable(err) && c.job.attempt < attempts_per_pass && !cancelled;
        if (can_retry) {
          const double delay = std::pow(2.0, c.job.attempt);
          state[i].attempt = c.job.attempt + 1;
          timers.push({finished + delay, i});
        } else {
          failed_this_pass.push_back(i);
        }
      }
    }
    pending = failed_this_pass;
    std::sort(pending.begin(), pending.end());
    if (cancelled) break;
  }

  {
    std::lock_guard<std::mutex> lock(mu);
    stop = true;
  }
  cv_jobs.notify_all();
  for (std::thread& t : workers) t.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!state[i].history.empty()) result.history[tasks[i].task_id] = state[i].history;
  }
  for (std::size_t i : pending) {
    if (result.results.count(tasks[i].task_id)) continue;
    TaskFailure f;
    f.task_id = tasks[i].task_id;
    f.last_error = state[i].last_error;
    f.message = state[i].message;
    f.attempts = state[i].history;
    result.failures.push_back(std::move(f));
  }
  return result;
}

PairingReport pair_scores(const std::map<std::string, RubricScore>& results,
                          const std::vector<GradingTask>& tasks) {
  PairingReport report;
  std::map<std::pair<std::string, std::string>, const GradingTask*> clean;
  for (const GradingTask& t : tasks) {
    if (t.strategy_id == kCleanStrategy) clean[{t.submission_id, t.model_id}] = &t;
  }
  std::set<std::pair<std::string, std::string>> failed_clean;
  for (const auto& [key, t] : clean) {
    if (!results.count(t->task_id)) failed_clean.insert(key);
  }
  report.clean_failed = failed_clean.size();
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const GradingTask& t : tasks) {
    if (t.strategy_id == kCleanStrategy) continue;
    auto adv = results.find(t.task_id);
    if (adv == results.end()) continue;
    auto base = clean.find({t.submission_id, t.model_id});
    if (base == clean.end() || !results.count(base->second->task_id)) {
      report.missing_baselines.push_back("no clean baseline for task '" + t.task_id +
                                         "' (submission " + t.submission_id + ", model " +
                                         t.model_id + ")");
      continue;
    }
    if (!seen.insert({t.submission_id, t.model_id, t.strategy_id}).second) continue;
    ScorePair p;
    p.submission_id = t.submission_id;
    p.strategy_id = t.strategy_id;
    p.model_id = t.model_id;
    p.language = t.language;
    p.y_clean = results.at(base->second->task_id).total();
    p.y_adv = adv->second.total();
    p.compile_ok = t.compile_ok ? t.compile_ok : base->second->compile_ok;
    report.pairs.push_back(std::move(p));
  }
  return report;
}

std::vector<ScorePair> pair_scores_strict(const std::map<std::string, RubricScore>& results,
                                          const std::vector<GradingTask>& tasks) {
  PairingReport r = pair_scores(results, tasks);
  if (!r.missing_baselines.empty()) throw MissingBaseline(r.missing_baselines.front());
  return std::move(r.pairs);
}

}  // namespace spaci
