#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spaci/source.hpp"

namespace spaci {

enum class TriviaKind { LineComment, BlockComment, Docstring, BlankRun };

std::string_view to_string(TriviaKind kind);

struct TriviaRegion {
  Span span;
  TriviaKind kind;
};

enum class SymbolOrigin { UserDefined, External };

struct Symbol {
  std::string name;
  SymbolOrigin origin = SymbolOrigin::External;
  std::vector<Span> occurrences;  // identifier token spans, in text order
};

/// Insertion point between two statements of a function (or Python module) body.
struct DeadcodeAnchor {
  Span statement;           // first token of the statement that follows the anchor
  std::size_t insert_at;    // byte offset of the insertion point
  std::string indent;       // indentation the inserted statement must use
  bool line_start = true;   // insert_at is the start of a line
  int function = -1;        // index into ParseTree::functions, -1 for module level
};

struct AttackSurface {
  std::vector<TriviaRegion> trivia;
  std::map<std::string, Symbol> symbols;
  std::vector<DeadcodeAnchor> anchors;

  /// UserDefined symbol names ordered by first occurrence.
  std::vector<std::string> user_defined() const;
  bool is_user_defined(const std::string& name) const;
};

/// Throws PreconditionError for Unparseable units.
AttackSurface extract_attack_surface(const SourceUnit& unit);

/// Language-level names that are never renamed (builtins, standard library).
bool is_builtin_name(Language lang, std::string_view name);

/// True when `name` is a keyword of `lang`.
bool is_keyword(Language lang, std::string_view name);

/// True when `name` lexes as one identifier in `lang` and is not a keyword.
bool is_valid_identifier(Language lang, std::string_view name);

struct NormalToken {
  TokenKind kind;
  std::string text;
  friend bool operator==(const NormalToken&, const NormalToken&) = default;
};

/// Significant tokens with comments, docstrings and layout removed.
std::vector<NormalToken> strip_trivia(const SourceUnit& unit);

/// Removes `spans` from `text`, keeping neighbouring tokens apart with a space
/// when they would otherwise touch.
std::string delete_spans(std::string_view text, std::vector<Span> spans);

/// Text of `unit` with every trivia region removed.
std::string delete_all_trivia(const SourceUnit& unit);

/// Index of the first differing token, or -1 when the streams are equal.
long first_difference(const std::vector<NormalToken>& a, const std::vector<NormalToken>& b);

}  // namespace spaci
