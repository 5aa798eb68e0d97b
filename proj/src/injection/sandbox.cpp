#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <thread>

#include "spaci/error.hpp"
#include "spaci/hash.hpp"
#include "spaci/injection.hpp"

namespace spaci {

namespace {

constexpr std::size_t kOutputCap = 4u << 20;

std::string substitute(std::string s, const std::map<std::string, std::string>& vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = s.find(token, pos)) != std::string::npos) {
      s.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return s;
}

bool on_path(const std::string& program) {
  if (program.find('/') != std::string::npos) return ::access(program.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string dirs(path);
  std::size_t pos = 0;
  while (pos <= dirs.size()) {
    std::size_t colon = dirs.find(':', pos);
    if (colon == std::string::npos) colon = dirs.size();
    std::string dir = dirs.substr(pos, colon - pos);
    if (dir.empty()) dir = ".";
    if (::access((dir + "/" + program).c_str(), X_OK) == 0) return true;
    pos = colon + 1;
  }
  return false;
}

bool program_available(const std::string& command) {
  const auto argv = split_command(command);
  if (argv.empty()) return false;
  if (argv[0].find('{') != std::string::npos) return true;  // {BIN}
  return on_path(argv[0]);
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ToolchainError("cannot write " + p.string());
  out << content;
}

std::map<std::string, std::string> vars_for(const Workspace& ws, const std::string& file) {
  const std::filesystem::path src = ws.path() / file;
  return {{"SRC", src.string()},
          {"WORK", ws.path().string()},
          {"BIN", (ws.path() / "prog").string()},
          {"CLASS", src.stem().string()},
          {"STDIN", (ws.path() / "stdin.txt").string()}};
}

std::chrono::milliseconds build_time(const ToolchainConfig& cfg) {
  return std::max(cfg.wall_time, std::chrono::milliseconds(60000));
}

struct Prepared {
  std::unique_ptr<Workspace> ws;
  std::string file;
  bool built = false;
  std::string error;
};

Prepared prepare(const ToolchainConfig& cfg, Language lang, const std::string& text) {
  Prepared p;
  p.ws = std::make_unique<Workspace>(cfg.workspace_root);
  p.file = source_file_name(lang, text);
  write_file(p.ws->path() / p.file, text);
  const LanguageToolchain& tc = cfg.tools.at(lang);
  if (tc.build.empty()) {
    p.built = true;
    return p;
  }
  const auto argv = split_command(substitute(tc.build, vars_for(*p.ws, p.file)));
  ProcessResult r = run_process(argv, "", p.ws->path(), build_time(cfg), 0);
  p.built = !r.timed_out && r.exit_code == 0;
  if (!p.built) p.error = r.timed_out ? "build timed out" : r.err.substr(0, 2000);
  return p;
}

ProcessResult execute(const ToolchainConfig& cfg, Language lang, Prepared& p,
                      const std::string& input) {
  write_file(p.ws->path() / "stdin.txt", input);
  const auto argv =
      split_command(substitute(cfg.tools.at(lang).run, vars_for(*p.ws, p.file)));
  return run_process(argv, input, p.ws->path(), cfg.wall_time, cfg.memory_bytes);
}

/// Outcomes of unmodified originals, shared by every variant of the same submission.
/// Timed-out runs are never stored.
class OriginalRuns {
 public:
  struct Entry {
    std::optional<bool> built;
    std::map<std::string, ProcessResult> runs;
  };

  Entry get(std::uint64_t key) {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_[key];
  }
  void set_built(std::uint64_t key, bool built) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key].built = built;
  }
  void store(std::uint64_t key, const std::string& input, const ProcessResult& r) {
    if (r.timed_out) return;
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key].runs[input] = r;
  }

 private:
  std::mutex mu_;
  std::map<std::uint64_t, Entry> entries_;
};

OriginalRuns& original_runs() {
  static OriginalRuns runs;
  return runs;
}

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::string cur;
  bool have = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      have = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (have) out.push_back(cur);
      cur.clear();
      have = false;
    } else {
      cur.push_back(c);
      have = true;
    }
  }
  if (have) out.push_back(cur);
  return out;
}

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          const std::filesystem::path& cwd, std::chrono::milliseconds wall_time,
                          std::size_t memory_bytes) {
  if (argv.empty()) throw ToolchainError("empty command");
  std::vector<char*> cargv;
  for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);
  const std::string dir = cwd.string();
  // A child that exits early must not take us down when we write its stdin.
  static const bool sigpipe_ignored = (::signal(SIGPIPE, SIG_IGN), true);
  (void)sigpipe_ignored;

  int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) ||
      ::pipe2(err_pipe, O_CLOEXEC) || ::pipe2(exec_pipe, O_CLOEXEC))
    throw ToolchainError(std::string("pipe: ") + std::strerror(errno));

  const pid_t pid = ::fork();
  if (pid < 0) throw ToolchainError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    if (memory_bytes > 0) {
      rlimit lim{memory_bytes, memory_bytes};
      ::setrlimit(RLIMIT_AS, &lim);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);
    if (!dir.empty() && ::chdir(dir.c_str()) != 0) {
      int e = errno;
      (void)!::write(exec_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    ::execvp(cargv[0], cargv.data());
    int e = errno;
    (void)!::write(exec_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);

  int exec_errno = 0;
  const ssize_t got = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(exec_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    ::waitpid(pid, nullptr, 0);
    throw ToolchainError("cannot run '" + argv[0] + "': " + std::strerror(exec_errno));
  }

  ::fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  ProcessResult r;
  std::size_t written = 0;
  int in_fd = in_pipe[1];
  if (input.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  int out_fd = out_pipe[0];
  int err_fd = err_pipe[0];
  const auto deadline = std::chrono::steady_clock::now() + wall_time;
  char buf[65536];
  while (out_fd >= 0 || err_fd >= 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      r.timed_out = true;
      break;
    }
    pollfd fds[3];
    int n = 0;
    if (out_fd >= 0) fds[n++] = {out_fd, POLLIN, 0};
    if (err_fd >= 0) fds[n++] = {err_fd, POLLIN, 0};
    if (in_fd >= 0) fds[n++] = {in_fd, POLLOUT, 0};
    const int rc = ::poll(fds, n, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0 && errno != EINTR) break;
    for (int i = 0; i < n; ++i) {
      if (!fds[i].revents) continue;
      if (fds[i].fd == in_fd) {
        const ssize_t w = ::write(in_fd, input.data() + written, input.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if (w < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) {
          ::close(in_fd);
          in_fd = -1;
        }
        continue;
      }
      const ssize_t k = ::read(fds[i].fd, buf, sizeof buf);
      std::string& sink = fds[i].fd == out_fd ? r.out : r.err;
      if (k > 0) {
        if (sink.size() < kOutputCap) sink.append(buf, static_cast<std::size_t>(k));
      } else if (k == 0 || errno != EAGAIN) {
        ::close(fds[i].fd);
        (fds[i].fd == out_fd ? out_fd : err_fd) = -1;
      }
    }
  }
  if (r.timed_out) ::kill(-pid, SIGKILL);
  for (int fd : {in_fd, out_fd, err_fd}) {
    if (fd >= 0) ::close(fd);
  }
  int status = 0;
  if (!r.timed_out) {
    // Output closed; give the child the remaining budget to exit.
    while (true) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        r.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  } else {
    ::waitpid(pid, &status, 0);
  }
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) {
    r.signal = WTERMSIG(status);
    r.exit_code = 128 + r.signal;
  }
  return r;
}

Workspace::Workspace(const std::filesystem::path& root) {
  std::filesystem::path base = root.empty() ? std::filesystem::temp_directory_path() : root;
  std::filesystem::create_directories(base);
  std::string tmpl = (base / "spaci-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw ToolchainError("cannot create workspace under " + base.string());
  path_ = tmpl;
}

Workspace::~Workspace() {
  if (keep_) return;
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

ToolchainConfig ToolchainConfig::detect() {
  ToolchainConfig cfg;
  auto add = [&](Language lang, LanguageToolchain tc) {
    if (!program_available(tc.check)) tc.check.clear();
    if (!program_available(tc.run) || (!tc.build.empty() && !program_available(tc.build))) {
      tc.build.clear();
      tc.run.clear();
    }
    cfg.tools[lang] = tc;
  };
  add(Language::Python, {"python3 -m py_compile {SRC}", "", "python3 {SRC}"});
  add(Language::C, {"gcc -fsyntax-only -w {SRC}", "gcc -O0 -w -o {BIN} {SRC} -lm", "{BIN}"});
  add(Language::Cpp, {"g++ -std=c++17 -fsyntax-only -w {SRC}",
                      "g++ -std=c++17 -O0 -w -o {BIN} {SRC}", "{BIN}"});
  LanguageToolchain java{"javac -d {WORK} {SRC}", "javac -d {WORK} {SRC}",
                         "java -cp {WORK} {CLASS}"};
  if (!program_available("java")) java.run.clear();
  add(Language::Java, java);
  return cfg;
}

bool ToolchainConfig::has_check(Language lang) const {
  auto it = tools.find(lang);
  return tier2 && it != tools.end() && !it->second.check.empty();
}

bool ToolchainConfig::can_run(Language lang) const {
  auto it = tools.find(lang);
  return it != tools.end() && !it->second.run.empty();
}

std::string source_file_name(Language lang, const std::string& text) {
  switch (lang) {
    case Language::Python: return "main.py";
    case Language::C: return "main.c";
    case Language::Cpp: return "main.cpp";
    case Language::Java: {
      static const std::regex re(R"(public\s+(?:(?:final|abstract|strictfp)\s+)*(?:class|interface|enum|record)\s+([A-Za-z_$][A-Za-z0-9_$]*))");
      std::smatch m;
      if (std::regex_search(text, m, re)) return m[1].str() + ".java";
      return "Main.java";
    }
  }
  return "main.txt";
}

CompileChecker::CompileChecker(ToolchainConfig config) : config_(std::move(config)) {}

std::optional<bool> CompileChecker::compiles(Language lang, const std::string& text) {
  if (!config_.has_check(lang)) return std::nullopt;
  const auto key = std::make_pair(lang, hash_fields({text}));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  Workspace ws(config_.workspace_root);
  const std::string file = source_file_name(lang, text);
  write_file(ws.path() / file, text);
  const auto argv = split_command(substitute(config_.tools.at(lang).check, vars_for(ws, file)));
  ProcessResult r = run_process(argv, "", ws.path(), build_time(config_), 0);
  if (r.timed_out) throw ToolchainError("compile check timed out for " + std::string(to_string(lang)));
  const bool ok = r.exit_code == 0;
  std::lock_guard<std::mutex> lock(mu_);
  cache_[key] = ok;
  return ok;
}

C1Result verify_c1(const AdversarialVariant& variant, const ToolchainConfig& config) {
  CompileChecker checker(config);
  return verify_c1(variant, checker);
}

C1Result verify_c1(const AdversarialVariant& variant, CompileChecker& checker) {
  C1Result r;
  const SourceUnit& original = variant.origin;
  const Language lang = original.language();
  if (variant.text.empty()) {
    r.status = r.tier1 = Status::Fail;
    r.reason = "variant is empty";
    return r;
  }
  const SourceUnit reparsed = parse(variant.text, lang);
  const bool same_status = reparsed.parse_status() == original.parse_status();
  const bool no_worse =
      reparsed.tree().diagnostics.size() <= original.tree().diagnostics.size();
  r.tier1 = same_status && no_worse ? Status::Pass : Status::Fail;
  if (r.tier1 == Status::Fail) {
    r.status = Status::Fail;
    r.reason = "grammar re-parse: " + std::string(to_string(original.parse_status())) + " -> " +
               std::string(to_string(reparsed.parse_status()));
    if (!reparsed.tree().diagnostics.empty())
      r.reason += " (" + reparsed.tree().diagnostics.front().message + ")";
    return r;
  }
  if (!checker.config().tier2) {
    r.status = Status::Pass;
    return r;
  }
  const std::optional<bool> before = checker.compiles(lang, original.text());
  if (!before) {
    r.status = Status::Skipped;
    r.reason = "no compiler front-end configured for " + std::string(to_string(lang));
    return r;
  }
  const bool after = *checker.compiles(lang, variant.text);
  r.tier2 = after == *before ? Status::Pass : Status::Fail;
  r.status = r.tier2;
  if (r.tier2 == Status::Fail)
    r.reason = std::string("compile status changed: ") + (*before ? "ok" : "error") + " -> " +
               (after ? "ok" : "error");
  return r;
}

C2Result verify_c2(const AdversarialVariant& variant, const std::vector<std::string>& inputs,
                   const ToolchainConfig& config) {
  C2Result r;
  const Language lang = variant.origin.language();
  if (!config.can_run(lang)) {
    r.reason = "no runtime configured for " + std::string(to_string(lang));
    return r;
  }
  if (inputs.empty()) {
    r.reason = "no fixtures";
    return r;
  }
  const LanguageToolchain& tc = config.tools.at(lang);
  const std::uint64_t key =
      hash_fields({to_string(lang), variant.origin.text(), tc.build, tc.run,
                   std::to_string(config.wall_time.count()), std::to_string(config.memory_bytes)});
  OriginalRuns::Entry known = original_runs().get(key);
  bool complete = known.built.has_value();
  for (const std::string& in : inputs) complete = complete && known.runs.count(in);
  std::optional<Prepared> orig;
  if (known.built == false) {
    r.reason = "original does not build";
    return r;
  }
  if (!complete) {
    orig = prepare(config, lang, variant.origin.text());
    original_runs().set_built(key, orig->built);
    if (!orig->built) {
      r.reason = "original does not build";
      return r;
    }
  }
  Prepared var = prepare(config, lang, variant.text);
  if (!var.built) {
    r.status = Status::Fail;
    r.first_failure = 0;
    r.reason = "variant does not build: " + var.error;
    if (config.keep_failed_workspaces) var.ws->keep();
    return r;
  }
  r.status = Status::Pass;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    FixtureOutcome f;
    f.index = i;
    if (auto hit = known.runs.find(inputs[i]); hit != known.runs.end() && !orig) {
      f.original = hit->second;
    } else {
      f.original = execute(config, lang, *orig, inputs[i]);
      original_runs().store(key, inputs[i], f.original);
    }
    f.variant = execute(config, lang, var, inputs[i]);
    f.match = !f.original.timed_out && !f.variant.timed_out &&
              f.original.exit_code == f.variant.exit_code && f.original.out == f.variant.out;
    if (!f.match && r.status == Status::Pass) {
      r.status = Status::Fail;
      r.first_failure = static_cast<long>(i);
      if (f.original.timed_out || f.variant.timed_out) {
        r.reason = "fixture " + std::to_string(i) + ": timeout";
      } else if (f.original.exit_code != f.variant.exit_code) {
        r.reason = "fixture " + std::to_string(i) + ": exit code " +
                   std::to_string(f.original.exit_code) + " vs " +
                   std::to_string(f.variant.exit_code);
      } else {
        r.reason = "fixture " + std::to_string(i) + ": stdout differs";
      }
    }
    r.fixtures.push_back(std::move(f));
  }
  if (r.status == Status::Fail && config.keep_failed_workspaces) {
    if (orig) orig->ws->keep();
    var.ws->keep();
  }
  return r;
}

}  // namespace spaci
