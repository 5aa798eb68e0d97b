#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "spaci/language.hpp"

namespace spaci {

/// Half-open byte range [start, end) into a source text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool empty() const noexcept { return end <= start; }
  bool contains(std::size_t offset) const noexcept { return offset >= start && offset < end; }
  bool overlaps(const Span& other) const noexcept {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class TokenKind : std::uint8_t {
  Identifier,
  Keyword,
  Number,
  String,
  Char,
  Operator,
  Comment,
  Preprocessor,
  Newline,  // Python logical line end
  Indent,   // Python
  Dedent,   // Python
  Error,
};

std::string_view to_string(TokenKind kind);

enum class CommentStyle : std::uint8_t { None, Line, Block, Doc };

struct Token {
  TokenKind kind = TokenKind::Error;
  Span span;
  CommentStyle comment = CommentStyle::None;
  bool docstring = false;  // Python string statement in docstring position
  bool fstring = false;    // Python formatted string literal
};

enum class ParseStatus { Clean, Recovered, Unparseable };

std::string_view to_string(ParseStatus status);

struct Diagnostic {
  Span span;
  std::string message;
};

/// Kind of the innermost enclosing body for a statement or declaration.
enum class Scope : std::uint8_t { Module, Namespace, Class, Function, Block, Init };

/// One statement start inside a module or function body.
struct Statement {
  std::size_t first_token = 0;  // index into ParseTree::tokens
  std::size_t insert_at = 0;    // byte offset where new statements may be inserted
  std::string indent;           // leading whitespace of the statement's line
  bool line_start = false;      // statement is the first token on its line
  Scope scope = Scope::Module;  // Module or Function
  int function = -1;            // index into ParseTree::functions, -1 at module level
  bool anchorable = true;       // false when inserting before it would break syntax
};

struct Function {
  std::size_t name_token = 0;
  Span body;                // bytes of the body (Python: indented block, C-family: braces)
  bool block_body = true;   // Python: false for `def f(): return 1`
  bool constructor = false; // Java/C++ constructor
};

struct Declaration {
  std::size_t token = 0;  // identifier token that introduces the name
  bool member = false;    // declared directly in a class body
};

/// Everything the structural pass learns about one text.
struct ParseTree {
  std::vector<Token> tokens;
  std::vector<Diagnostic> diagnostics;
  std::vector<Span> error_regions;
  std::vector<Statement> statements;
  std::vector<Function> functions;
  std::vector<Declaration> declarations;
  /// Names that must never be renamed: member-access targets, keyword-argument names,
  /// names referenced from f-strings or preprocessor directives, imports.
  std::vector<std::string> pinned_names;
  /// Header names from `#include` directives (C and C++).
  std::vector<std::string> includes;
  /// Byte offset after a shebang / encoding header (Python) or BOM.
  std::size_t header_end = 0;
};

/// One student submission.
class SourceUnit {
 public:
  SourceUnit() = default;

  const std::string& submission_id() const noexcept { return submission_id_; }
  const std::string& question_id() const noexcept { return question_id_; }
  const std::string& problem_description() const noexcept { return problem_description_; }
  Language language() const noexcept { return language_; }
  const std::string& text() const noexcept { return text_; }
  ParseStatus parse_status() const noexcept { return status_; }
  const ParseTree& tree() const noexcept { return *tree_; }

  std::string_view token_text(const Token& tok) const {
    return std::string_view(text_).substr(tok.span.start, tok.span.size());
  }
  std::string_view slice(Span s) const {
    return std::string_view(text_).substr(s.start, s.size());
  }

  SourceUnit& with_ids(std::string submission_id, std::string question_id);
  SourceUnit& with_problem(std::string description);

 private:
  friend SourceUnit parse(std::string text, Language language);

  std::string submission_id_;
  std::string question_id_;
  std::string problem_description_;
  Language language_ = Language::Python;
  std::string text_;
  ParseStatus status_ = ParseStatus::Unparseable;
  std::shared_ptr<const ParseTree> tree_ = std::make_shared<ParseTree>();
};

/// Lexes and structurally checks `text`. Never throws for syntax errors: they become
/// diagnostics and a Recovered status. Invalid UTF-8, NUL bytes or text that is mostly
/// unlexable yield Unparseable. Throws PreconditionError on empty text.
SourceUnit parse(std::string text, Language language);

bool is_valid_utf8(std::string_view text);

}  // namespace spaci
