#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spaci/language.hpp"

namespace spaci {

enum class StrategyClass { A_RSP, B_NEPE, C_SSAD, D_CPH, E_LBOC };
enum class Operator { A, B, C };

std::string_view to_string(StrategyClass cls);
std::string_view to_string(Operator op);
std::optional<StrategyClass> parse_strategy_class(std::string_view s);
std::optional<Operator> parse_operator(std::string_view s);

/// The operator every strategy of `cls` must use.
Operator operator_for(StrategyClass cls);

struct StrategySpec {
  std::string id;
  StrategyClass cls = StrategyClass::A_RSP;
  Operator op = Operator::B;
  std::string display_name;
  int version = 1;
  /// Operator A: lines carrying {COMMENT_OPEN}/{COMMENT_CLOSE}. Operator C: plain lines.
  /// Operator B: one adversarial identifier per line.
  std::string template_text;
};

/// Parses one strategy file: `key: value` header lines, a `---` line, then the body.
StrategySpec parse_strategy_file(std::string_view content, std::string_view origin = "");
std::string format_strategy_file(const StrategySpec& spec);

/// The built-in catalog, ordered by (class, id).
const std::vector<StrategySpec>& catalog();

/// Reads every `*.strategy` file under `dir`, validates the class/operator mapping and
/// id uniqueness, and returns the specs ordered by (class, id). Throws spaci::Error.
std::vector<StrategySpec> load_catalog(const std::filesystem::path& dir);

const StrategySpec& find_strategy(std::string_view id);
const StrategySpec* find_strategy(const std::vector<StrategySpec>& specs, std::string_view id);

enum class CommentStyleChoice { Hash, DoubleSlash, Block };

struct Payload {
  std::string strategy_id;
  Operator op = Operator::A;
  /// A: comment lines. C: a string literal expression. B: identifiers joined by spaces.
  std::string rendered_text;
  /// Payload text with placeholders resolved and no delimiters (docstrings reuse it).
  std::string body;
  std::vector<std::string> identifier_vocabulary;
  CommentStyleChoice comment_style = CommentStyleChoice::Hash;
};

struct RenderOptions {
  std::uint64_t seed = 0;
  std::string score_target = "100/100";
};

/// Throws TemplateError when a placeholder is left unresolved.
Payload render_payload(const StrategySpec& spec, Language lang, std::string_view question_id,
                       const RenderOptions& options = {});

/// Few-shot exemplar lines chosen for (language, question, seed, strategy).
std::vector<std::string> few_shot_snippet(Language lang, std::string_view question_id,
                                          std::uint64_t seed, std::string_view strategy_id);

/// Language string literal holding `body`. Python gets a triple-quoted block, so its value is
/// `body` with a newline before and after.
std::string string_literal(Language lang, std::string_view body);

/// Makes one line safe to sit inside a comment of the given style.
std::string sanitize_comment_line(Language lang, CommentStyleChoice style, std::string_view line);

}  // namespace spaci
