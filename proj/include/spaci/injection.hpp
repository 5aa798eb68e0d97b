#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spaci/attack_surface.hpp"
#include "spaci/source.hpp"
#include "spaci/taxonomy.hpp"

namespace spaci {

enum class Status { Pass, Fail, Skipped };
std::string_view to_string(Status s);

/// Bijective rename of UserDefined symbols.
struct IdentifierMapping {
  std::map<std::string, std::string> pairs;

  IdentifierMapping inverse() const;
  bool is_identity() const;
};

/// Throws PreconditionError when a key is not UserDefined and CollisionError when the
/// mapping is not bijective or a target clashes with a name already in the unit.
void validate_mapping(const SourceUnit& unit, const AttackSurface& surface,
                      const IdentifierMapping& mapping);

/// Maps every UserDefined symbol (first-occurrence order) onto `vocabulary`, suffixing
/// `_1`, `_2`, ... once the vocabulary runs out or a name is taken.
IdentifierMapping make_mapping(const SourceUnit& unit, const AttackSurface& surface,
                               const std::vector<std::string>& vocabulary);

struct Verification {
  Status c1 = Status::Skipped;
  Status c2 = Status::Skipped;
  Status c3 = Status::Fail;
  std::string c1_reason;
  std::string c2_reason;
  std::string c3_reason;
};

struct AdversarialVariant {
  SourceUnit origin;
  std::string strategy_id;
  Operator op = Operator::A;
  std::string text;
  /// Inserted or rewritten regions, in variant coordinates.
  std::vector<Span> injection_sites;
  /// Inserted dead-code blocks, in variant coordinates; deleting them undoes Operator C.
  std::vector<Span> deadcode_sites;
  IdentifierMapping mapping;
  Verification verification;
};

/// Enters the evaluation corpus only with c1 in {Pass, Skipped} and c3 = Pass.
bool admissible(const AdversarialVariant& v);

enum class SitePolicy { FirstDocstring, HeaderComment, AllTrivia };
enum class AnchorPolicy { FirstFunctionBody, BeforeMainLogic };

std::string_view to_string(SitePolicy p);
std::string_view to_string(AnchorPolicy p);

/// Operator A: payload lines placed wholly inside trivia. Throws NoLegalSite for
/// FirstDocstring on a C-family unit without a `/** */` comment.
AdversarialVariant operator_a_encapsulate(const SourceUnit& unit, const Payload& payload,
                                          SitePolicy policy);

/// Operator B: consistent rename of every occurrence of each mapped symbol.
AdversarialVariant operator_b_shadow(const SourceUnit& unit, const IdentifierMapping& mapping);

/// Same, against a previously extracted surface. Throws SpanDriftError when an
/// occurrence span no longer holds the symbol's name.
AdversarialVariant operator_b_shadow(const SourceUnit& unit, const AttackSurface& surface,
                                     const IdentifierMapping& mapping);

/// Operator C: unreachable branch carrying the payload as a string literal. Throws NoAnchor
/// when a C-family unit has no function-body statement boundary.
AdversarialVariant operator_c_interleave(const SourceUnit& unit, const Payload& payload,
                                         AnchorPolicy policy);

/// Applies `second` (an Operator C variant of `first.text`) on top of `first`.
AdversarialVariant compose(const AdversarialVariant& first, const AdversarialVariant& second);

struct InjectionOptions {
  std::uint64_t seed = 0;
  std::string score_target = "100/100";
  std::optional<SitePolicy> site_policy;  // default: FirstDocstring for Python, else HeaderComment
  AnchorPolicy anchor_policy = AnchorPolicy::BeforeMainLogic;
};

/// Renders the strategy's payload for `unit` and applies the class's operator.
AdversarialVariant inject(const SourceUnit& unit, const StrategySpec& spec,
                          const InjectionOptions& options = {});

/// Static check: trivia removed, inverse mapping applied and dead-code sites deleted,
/// the variant's token stream must equal the original's.
Status verify_c3(const AdversarialVariant& variant, std::string* reason = nullptr);

// ---------------------------------------------------------------------------
// Toolchains and sandboxed execution

struct LanguageToolchain {
  /// Compile-status check; `{SRC}` and `{WORK}` are substituted. Empty: no tier 2.
  std::string check;
  /// Build step for execution (compiled languages). `{BIN}` names the output.
  std::string build;
  /// Run step; `{STDIN}` names a file holding the fixture input.
  std::string run;
};

struct ToolchainConfig {
  std::map<Language, LanguageToolchain> tools;
  std::chrono::milliseconds wall_time{5000};
  std::size_t memory_bytes = 512u << 20;
  std::filesystem::path workspace_root;  // empty: system temp directory
  bool keep_failed_workspaces = true;
  bool tier2 = true;

  /// gcc/g++/python3/javac command lines; entries whose program is missing stay empty.
  static ToolchainConfig detect();
  bool has_check(Language lang) const;
  bool can_run(Language lang) const;
};

struct ProcessResult {
  int exit_code = -1;
  int signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs `argv` in `cwd` with stdin from `input`, a wall-clock limit and an address-space
/// limit. Throws ToolchainError when the program cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          const std::filesystem::path& cwd, std::chrono::milliseconds wall_time,
                          std::size_t memory_bytes);

/// Splits a command template on whitespace (single and double quotes group words).
std::vector<std::string> split_command(const std::string& command);

/// Private temporary directory; removed on destruction unless kept.
class Workspace {
 public:
  explicit Workspace(const std::filesystem::path& root);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  void keep() noexcept { keep_ = true; }

 private:
  std::filesystem::path path_;
  bool keep_ = false;
};

/// Compile status of a text under the configured checker, memoized by content.
class CompileChecker {
 public:
  explicit CompileChecker(ToolchainConfig config);

  const ToolchainConfig& config() const noexcept { return config_; }
  /// nullopt when no tier-2 checker is available for `lang`.
  std::optional<bool> compiles(Language lang, const std::string& text);

 private:
  ToolchainConfig config_;
  std::mutex mu_;
  std::map<std::pair<Language, std::uint64_t>, bool> cache_;
};

struct C1Result {
  Status status = Status::Skipped;
  Status tier1 = Status::Skipped;
  Status tier2 = Status::Skipped;
  std::string reason;
};

/// Compile-status invariance. Tier 1 re-parses; tier 2 runs the configured front-end.
C1Result verify_c1(const AdversarialVariant& variant, CompileChecker& checker);
C1Result verify_c1(const AdversarialVariant& variant, const ToolchainConfig& config);

struct FixtureOutcome {
  std::size_t index = 0;
  ProcessResult original;
  ProcessResult variant;
  bool match = false;
};

struct C2Result {
  Status status = Status::Skipped;
  long first_failure = -1;
  std::string reason;
  std::vector<FixtureOutcome> fixtures;
};

/// Execution equivalence over `inputs`: stdout and exit code must match per fixture.
C2Result verify_c2(const AdversarialVariant& variant, const std::vector<std::string>& inputs,
                   const ToolchainConfig& config);

/// File name a submission must carry to build (Java: public class name).
std::string source_file_name(Language lang, const std::string& text);

}  // namespace spaci
