// Error-tolerant lexer and brace-structure pass shared by C, C++ and Java.

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>

#include "text_util.hpp"

namespace spaci::detail {
namespace {

using WordSet = std::unordered_set<std::string_view>;

const WordSet& c_keywords() {
  static const WordSet kw = {
      "auto",     "break",   "case",     "char",     "const",    "continue", "default",
      "do",       "double",  "else",     "enum",     "extern",   "float",    "for",
      "goto",     "if",      "inline",   "int",      "long",     "register", "restrict",
      "return",   "short",   "signed",   "sizeof",   "static",   "struct",   "switch",
      "typedef",  "union",   "unsigned", "void",     "volatile", "while",    "_Bool",
      "_Complex", "_Alignas", "_Alignof", "_Atomic", "_Generic", "_Noreturn",
      "_Static_assert", "_Thread_local"};
  return kw;
}

const WordSet& cpp_keywords() {
  static const WordSet kw = [] {
    WordSet s = c_keywords();
    s.erase("restrict");
    for (std::string_view w :
         {"alignas",      "alignof",   "and",        "and_eq",       "asm",         "bitand",
          "bitor",        "bool",      "catch",      "char8_t",      "char16_t",    "char32_t",
          "class",        "compl",     "concept",    "const_cast",   "consteval",   "constexpr",
          "constinit",    "co_await",  "co_return",  "co_yield",     "decltype",    "delete",
          "dynamic_cast", "explicit",  "export",     "false",        "friend",      "mutable",
          "namespace",    "new",       "noexcept",   "not",          "not_eq",      "nullptr",
          "operator",     "or",        "or_eq",      "private",      "protected",   "public",
          "reinterpret_cast", "requires", "static_assert", "static_cast", "template", "this",
          "thread_local", "throw",     "true",       "try",          "typeid",      "typename",
          "using",        "virtual",   "wchar_t",    "xor",          "xor_eq"})
      s.insert(w);
    return s;
  }();
  return kw;
}

const WordSet& java_keywords() {
  static const WordSet kw = {
      "abstract", "assert",    "boolean",   "break",      "byte",     "case",   "catch",
      "char",     "class",     "const",     "continue",   "default",  "do",     "double",
      "else",     "enum",      "extends",   "final",      "finally",  "float",  "for",
      "goto",     "if",        "implements", "import",    "instanceof", "int",  "interface",
      "long",     "native",    "new",       "package",    "private",  "protected", "public",
      "return",   "short",     "static",    "strictfp",   "super",    "switch", "synchronized",
      "this",     "throw",     "throws",    "transient",  "try",      "void",   "volatile",
      "while",    "true",      "false",     "null"};
  return kw;
}

const WordSet& type_keywords(Language lang) {
  static const WordSet c = {"void",  "char",   "short",    "int",   "long",  "float",
                            "double", "signed", "unsigned", "_Bool", "_Complex"};
  static const WordSet cpp = {"void",  "char",     "short",    "int",      "long",
                              "float", "double",   "signed",   "unsigned", "bool",
                              "auto",  "wchar_t",  "char8_t",  "char16_t", "char32_t"};
  static const WordSet java = {"boolean", "byte", "char",  "short",
                               "int",     "long", "float", "double", "void"};
  return lang == Language::C ? c : (lang == Language::Cpp ? cpp : java);
}

// Qualifiers that may appear inside a declaration's type run.
const WordSet& qualifier_keywords() {
  static const WordSet q = {"const",    "volatile", "static",   "extern",    "register",
                            "inline",   "mutable",  "constexpr", "thread_local", "restrict",
                            "final",    "struct",   "union",    "enum",      "class",
                            "typename", "unsigned", "signed",   "long",      "short",
                            "_Atomic",  "virtual",  "explicit", "friend",    "public",
                            "private",  "protected", "abstract", "synchronized", "transient",
                            "native",   "strictfp", "consteval", "constinit"};
  return q;
}

const WordSet& statement_keywords() {
  static const WordSet s = {"if",    "for",      "while", "return", "switch",
                            "break", "continue", "goto",  "do"};
  return s;
}

constexpr std::array<std::string_view, 41> kOperators = {
    ">>>=", "<<=", "...", "->*", "::", "->", "++", "--", "<<", "<=", ">=", "==", "!=", "&&",
    "||",   "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", ".*", "##", "+",  "-",  "*",
    "/",    "%",   "<",   ">",   "=",  "!",  "&",  "|",  "^",  "~",  "?",  ":",  ";"};

constexpr std::string_view kSingleOps = "(){}[],.#@";

enum class Ctx { File, Namespace, Class, Enum, Function, Block, Init };

class Parser {
 public:
  Parser(std::string_view text, Language lang, ParseTree& tree)
      : text_(text), lang_(lang), tree_(tree) {}

  void run() {
    lex();
    structure();
    tree_.error_regions = regions_from_diagnostics(text_, tree_.diagnostics);
  }

 private:
  // ---- lexing -------------------------------------------------------------

  const WordSet& keywords() const {
    return lang_ == Language::C ? c_keywords()
                                : (lang_ == Language::Cpp ? cpp_keywords() : java_keywords());
  }

  Token& push(TokenKind kind, std::size_t start, std::size_t end) {
    Token t;
    t.kind = kind;
    t.span = {start, end};
    tree_.tokens.push_back(t);
    return tree_.tokens.back();
  }

  void diag(Span span, std::string message) {
    tree_.diagnostics.push_back({span, std::move(message)});
  }

  void lex() {
    const std::size_t n = text_.size();
    std::size_t pos = 0;
    if (text_.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    tree_.header_end = pos;
    bool line_start = true;
    while (pos < n) {
      const unsigned char c = static_cast<unsigned char>(text_[pos]);
      if (c == '\n') {
        line_start = true;
        ++pos;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        ++pos;
        continue;
      }
      if (c == '\\' && lang_ != Language::Java) {
        std::size_t after = pos + 1;
        if (after < n && text_[after] == '\r') ++after;
        if (after < n && text_[after] == '\n') {
          pos = after + 1;
          continue;
        }
      }
      if (c == '/' && pos + 1 < n && text_[pos + 1] == '/') {
        pos = lex_line_comment(pos);
        continue;
      }
      if (c == '/' && pos + 1 < n && text_[pos + 1] == '*') {
        pos = lex_block_comment(pos);
        continue;
      }
      const bool was_line_start = line_start;
      line_start = false;
      if (c == '#' && was_line_start && lang_ != Language::Java) {
        pos = lex_directive(pos);
        line_start = true;
        continue;
      }
      if (is_ident_start(c) || c == '$') {
        std::size_t end = pos;
        while (end < n && (is_ident_char(static_cast<unsigned char>(text_[end])) ||
                           text_[end] == '$'))
          ++end;
        std::string_view word = text_.substr(pos, end - pos);
        if (end < n && lang_ != Language::Java && (text_[end] == '"' || text_[end] == '\'')) {
          if (word == "R" || word == "LR" || word == "uR" || word == "UR" || word == "u8R") {
            if (text_[end] == '"') {
              pos = lex_raw_string(pos, end);
              continue;
            }
          }
          if (word == "L" || word == "u" || word == "U" || word == "u8") {
            pos = text_[end] == '"' ? lex_quoted(pos, end, '"') : lex_quoted(pos, end, '\'');
            continue;
          }
        }
        push(keywords().count(word) ? TokenKind::Keyword : TokenKind::Identifier, pos, end);
        pos = end;
        continue;
      }
      if (is_digit(c) || (c == '.' && pos + 1 < n && is_digit(text_[pos + 1]))) {
        pos = lex_number(pos);
        continue;
      }
      if (c == '"') {
        if (lang_ == Language::Java && text_.substr(pos, 3) == "\"\"\"") {
          pos = lex_text_block(pos);
        } else {
          pos = lex_quoted(pos, pos, '"');
        }
        continue;
      }
      if (c == '\'') {
        pos = lex_quoted(pos, pos, '\'');
        continue;
      }
      bool matched = false;
      for (std::string_view op : kOperators) {
        if (text_.substr(pos, op.size()) == op) {
          // ">>" and ">>=" are split so template closers stay single tokens.
          push(TokenKind::Operator, pos, pos + op.size());
          pos += op.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (kSingleOps.find(static_cast<char>(c)) != std::string_view::npos &&
          !(c == '@' && lang_ != Language::Java) && !(c == '#' && lang_ == Language::Java)) {
        push(TokenKind::Operator, pos, pos + 1);
        ++pos;
        continue;
      }
      std::size_t end = pos + 1;
      while (end < n && (static_cast<unsigned char>(text_[end]) & 0xC0) == 0x80) ++end;
      push(TokenKind::Error, pos, end);
      diag({pos, end}, "stray character in program");
      pos = end;
    }
  }

  std::size_t lex_line_comment(std::size_t pos) {
    std::size_t end = pos;
    const std::size_t n = text_.size();
    while (end < n && text_[end] != '\n') {
      if (text_[end] == '\\' && lang_ != Language::Java) {
        std::size_t after = end + 1;
        if (after < n && text_[after] == '\r') ++after;
        if (after < n && text_[after] == '\n') {
          end = after + 1;
          continue;
        }
      }
      ++end;
    }
    if (end > pos && text_[end - 1] == '\r') --end;
    push(TokenKind::Comment, pos, end).comment = CommentStyle::Line;
    return end;
  }

  std::size_t lex_block_comment(std::size_t pos) {
    std::size_t close = text_.find("*/", pos + 2);
    const bool doc = text_.substr(pos, 3) == "/**" && text_.substr(pos, 4) != "/**/";
    if (close == std::string_view::npos) {
      push(TokenKind::Error, pos, text_.size());
      diag({pos, text_.size()}, "unterminated comment");
      return text_.size();
    }
    push(TokenKind::Comment, pos, close + 2).comment = doc ? CommentStyle::Doc : CommentStyle::Block;
    return close + 2;
  }

  std::size_t lex_directive(std::size_t pos) {
    const std::size_t n = text_.size();
    std::size_t end = pos + 1;
    char quote = 0;
    while (end < n) {
      char c = text_[end];
      if (quote) {
        if (c == '\\') {
          end += 2;
          continue;
        }
        if (c == quote || c == '\n') quote = 0;
        if (c == '\n') break;
        ++end;
        continue;
      }
      if (c == '"' || c == '\'') {
        quote = c;
        ++end;
        continue;
      }
      if (c == '\\') {
        std::size_t after = end + 1;
        if (after < n && text_[after] == '\r') ++after;
        if (after < n && text_[after] == '\n') {
          end = after + 1;
          continue;
        }
      }
      if (c == '\n') break;
      if (c == '/' && end + 1 < n && text_[end + 1] == '/') break;
      if (c == '/' && end + 1 < n && text_[end + 1] == '*') {
        std::size_t close = text_.find("*/", end + 2);
        end = close == std::string_view::npos ? n : close + 2;
        continue;
      }
      ++end;
    }
    std::size_t trimmed = end;
    while (trimmed > pos && (text_[trimmed - 1] == ' ' || text_[trimmed - 1] == '\t' ||
                             text_[trimmed - 1] == '\r'))
      --trimmed;
    push(TokenKind::Preprocessor, pos, trimmed);
    scan_directive(text_.substr(pos, trimmed - pos));
    return end;
  }

  void scan_directive(std::string_view d) {
    // Every identifier mentioned by the preprocessor is off limits for renaming.
    std::size_t i = 1;
    std::string_view first_word;
    std::string_view second_word;
    int word_index = 0;
    while (i < d.size()) {
      unsigned char c = static_cast<unsigned char>(d[i]);
      if (c == '"' || c == '<') {
        if (first_word == "include") {
          char close = c == '"' ? '"' : '>';
          std::size_t j = d.find(close, i + 1);
          std::string_view header =
              d.substr(i + 1, j == std::string_view::npos ? std::string_view::npos : j - i - 1);
          includes_.emplace_back(header);
          i = j == std::string_view::npos ? d.size() : j + 1;
          continue;
        }
      }
      if (is_ident_start(c)) {
        std::size_t j = i;
        while (j < d.size() && is_ident_char(static_cast<unsigned char>(d[j]))) ++j;
        std::string_view w = d.substr(i, j - i);
        if (word_index == 0) first_word = w;
        if (word_index == 1) second_word = w;
        ++word_index;
        tree_.pinned_names.emplace_back(w);
        i = j;
        continue;
      }
      if (is_digit(c)) {
        while (i < d.size() && is_ident_char(static_cast<unsigned char>(d[i]))) ++i;
        continue;
      }
      ++i;
    }
    if (first_word == "define" && !second_word.empty()) macros_.insert(std::string(second_word));
  }

  std::size_t lex_number(std::size_t pos) {
    const std::size_t n = text_.size();
    std::size_t end = pos + 1;
    while (end < n) {
      char c = text_[end];
      if ((c == '+' || c == '-') &&
          std::string_view("eEpP").find(text_[end - 1]) != std::string_view::npos) {
        // exponent sign, but not for hex digits like 0x1e+2 (treated the same by C)
        ++end;
        continue;
      }
      if (c == '\'' && lang_ != Language::Java && end + 1 < n &&
          is_ident_char(static_cast<unsigned char>(text_[end + 1]))) {
        end += 2;
        continue;
      }
      if (is_ident_char(static_cast<unsigned char>(c)) || c == '.') {
        ++end;
        continue;
      }
      break;
    }
    push(TokenKind::Number, pos, end);
    return end;
  }

  std::size_t lex_quoted(std::size_t start, std::size_t quote_pos, char q) {
    const std::size_t n = text_.size();
    std::size_t pos = quote_pos + 1;
    while (pos < n) {
      char c = text_[pos];
      if (c == '\\') {
        pos += 2;
        continue;
      }
      if (c == '\n') break;
      if (c == q) {
        push(q == '"' ? TokenKind::String : TokenKind::Char, start, pos + 1);
        return pos + 1;
      }
      ++pos;
    }
    pos = std::min(pos, n);
    push(TokenKind::Error, start, pos);
    diag({start, std::max(pos, start + 1)},
         q == '"' ? "missing terminating \" character" : "missing terminating ' character");
    return pos;
  }

  std::size_t lex_raw_string(std::size_t start, std::size_t quote_pos) {
    std::size_t open = text_.find('(', quote_pos);
    if (open == std::string_view::npos || open - quote_pos > 17) {
      return lex_quoted(start, quote_pos, '"');
    }
    std::string closer = ")" + std::string(text_.substr(quote_pos + 1, open - quote_pos - 1)) + "\"";
    std::size_t close = text_.find(closer, open + 1);
    if (close == std::string_view::npos) {
      push(TokenKind::Error, start, text_.size());
      diag({start, text_.size()}, "unterminated raw string");
      return text_.size();
    }
    push(TokenKind::String, start, close + closer.size());
    return close + closer.size();
  }

  std::size_t lex_text_block(std::size_t start) {
    std::size_t pos = start + 3;
    while (pos < text_.size()) {
      if (text_[pos] == '\\') {
        pos += 2;
        continue;
      }
      if (text_.substr(pos, 3) == "\"\"\"") {
        push(TokenKind::String, start, pos + 3);
        return pos + 3;
      }
      ++pos;
    }
    push(TokenKind::Error, start, text_.size());
    diag({start, text_.size()}, "unclosed text block");
    return text_.size();
  }

  // ---- structure ----------------------------------------------------------

  struct Frame {
    Ctx ctx;
    std::size_t open = 0;        // index into sig_ of the '{'
    std::size_t stmt_start = 0;  // index into sig_ of the current statement's first token
    int function = -1;
    bool after_do = false;       // block opened right after `do`
    bool enum_constants = true;  // Java enums switch to members after ';'
    std::string class_name;
    bool last_stmt_do = false;
  };

  struct Paren {
    char ch;
    std::size_t index;  // into sig_
    bool control = false;
  };

  const Token& st(std::size_t k) const { return tree_.tokens[sig_[k]]; }
  std::string_view sx(std::size_t k) const {
    const Token& t = st(k);
    return text_.substr(t.span.start, t.span.size());
  }
  bool op(std::size_t k, std::string_view s) const {
    return k < sig_.size() && st(k).kind == TokenKind::Operator && sx(k) == s;
  }
  bool kw(std::size_t k, std::string_view s) const {
    return k < sig_.size() && st(k).kind == TokenKind::Keyword && sx(k) == s;
  }
  bool ident(std::size_t k) const {
    return k < sig_.size() && st(k).kind == TokenKind::Identifier;
  }
  bool type_kw(std::size_t k) const {
    return k < sig_.size() && st(k).kind == TokenKind::Keyword && type_keywords(lang_).count(sx(k));
  }

  void structure() {
    for (std::size_t i = 0; i < tree_.tokens.size(); ++i) {
      if (tree_.tokens[i].kind != TokenKind::Comment) sig_.push_back(i);
    }
    std::vector<Frame> frames(1);
    frames[0].ctx = Ctx::File;
    std::vector<Paren> parens;

    for (std::size_t k = 0; k < sig_.size(); ++k) {
      const Token& t = st(k);
      Frame& fr = frames.back();
      const bool prev_boundary = k == 0 || is_boundary(k - 1, frames);

      if (t.kind == TokenKind::Preprocessor) {
        fr.stmt_start = k + 1;
        continue;
      }

      // statement starts inside function bodies become dead-code anchors
      if (parens.empty() && fr.ctx == Ctx::Function && k == fr.stmt_start) {
        record_statement(k, fr);
      }

      check_token(k, frames, parens, prev_boundary);

      if (t.kind == TokenKind::Operator) {
        std::string_view s = sx(k);
        if (s == "(" || s == "[") {
          Paren p{s[0], k};
          if (s == "(" && k > 0) {
            std::string_view before = sx(k - 1);
            p.control = (st(k - 1).kind == TokenKind::Keyword &&
                         (before == "if" || before == "while" || before == "for" ||
                          before == "switch" || before == "catch" || before == "sizeof" ||
                          before == "synchronized" || before == "decltype" ||
                          before == "alignof" || before == "typeid" || before == "noexcept" ||
                          before == "_Alignof" || before == "_Generic" ||
                          before == "static_assert" || before == "_Static_assert" ||
                          before == "try" || before == "requires")) ||
                        (ident(k - 1) && macros_.count(std::string(before)));
          }
          parens.push_back(p);
          continue;
        }
        if (s == ")" || s == "]") {
          const char want = s == ")" ? '(' : '[';
          if (parens.empty()) {
            diag(t.span, std::string("unmatched '") + s[0] + "'");
            continue;
          }
          if (parens.back().ch != want) {
            diag(t.span, std::string("mismatched '") + s[0] + "'");
          }
          Paren p = parens.back();
          parens.pop_back();
          if (s == ")") check_after_paren(k, p, frames);
          continue;
        }
        if (s == "{") {
          Frame child;
          child.ctx = classify_brace(k, frames, parens);
          child.open = k;
          child.stmt_start = k + 1;
          child.function = fr.function;
          child.after_do = k > 0 && kw(k - 1, "do");
          if (child.ctx == Ctx::Function) {
            child.function = register_function(k, frames.back());
          }
          if (child.ctx == Ctx::Class || child.ctx == Ctx::Enum) child.class_name = class_name_of(k, fr);
          frames.push_back(child);
          saved_parens_.push_back(parens);
          parens.clear();
          continue;
        }
        if (s == "}") {
          if (frames.size() == 1) {
            diag(t.span, "expected declaration before '}' token");
            continue;
          }
          if (!parens.empty()) {
            diag(st(parens.back().index).span,
                 std::string("expected '") + (parens.back().ch == '(' ? ')' : ']') +
                     "' before '}' token");
          }
          Frame closed = frames.back();
          frames.pop_back();
          parens = saved_parens_.back();
          saved_parens_.pop_back();
          close_frame(k, closed, frames.back());
          continue;
        }
        if (s == ";" && parens.empty()) {
          Frame& f = frames.back();
          if (f.ctx == Ctx::Enum) f.enum_constants = false;
          f.last_stmt_do = kw(f.stmt_start, "do");
          f.stmt_start = k + 1;
          continue;
        }
        if (s == ":" && parens.empty() && is_label_colon(k, fr)) {
          fr.stmt_start = k + 1;
          continue;
        }
      }

      collect_declaration(k, frames, parens);
    }

    for (const Paren& p : parens) {
      diag({st(p.index).span.start, std::max(text_.size(), st(p.index).span.start + 1)},
           std::string("'") + p.ch + "' was never closed");
    }
    while (frames.size() > 1) {
      const Frame& f = frames.back();
      diag({st(f.open).span.start, std::max(text_.size(), st(f.open).span.start + 1)},
           "expected '}' at end of input");
      if (f.function >= 0 && f.ctx == Ctx::Function) tree_.functions[f.function].body.end = text_.size();
      frames.pop_back();
      if (!saved_parens_.empty()) {
        for (const Paren& p : saved_parens_.back()) {
          diag({st(p.index).span.start, text_.size()}, std::string("'") + p.ch + "' was never closed");
        }
        saved_parens_.pop_back();
      }
    }
    finish_declarations();
  }

  bool is_boundary(std::size_t k, const std::vector<Frame>&) const {
    const Token& t = st(k);
    if (t.kind == TokenKind::Preprocessor) return true;
    if (t.kind == TokenKind::Operator) {
      std::string_view s = sx(k);
      return s == ";" || s == "{" || s == "}" || s == ")" || s == ":" ||
             (lang_ == Language::Java && s == "->");
    }
    if (t.kind == TokenKind::Keyword) {
      std::string_view s = sx(k);
      return s == "else" || s == "do";
    }
    return false;
  }

  bool is_label_colon(std::size_t k, const Frame& fr) const {
    // access specifiers, case labels, goto labels
    if (k == 0) return false;
    if (kw(k - 1, "public") || kw(k - 1, "private") || kw(k - 1, "protected")) return true;
    if (kw(fr.stmt_start, "case") || kw(fr.stmt_start, "default")) return true;
    if (ident(k - 1) && k - 1 == fr.stmt_start &&
        (fr.ctx == Ctx::Function || fr.ctx == Ctx::Block))
      return true;
    return false;
  }

  void record_statement(std::size_t k, Frame& fr) {
    const Token& t = st(k);
    std::string_view s = sx(k);
    if (t.kind == TokenKind::Operator && s == "}") return;
    if (kw(k, "else") || kw(k, "catch") || kw(k, "finally")) return;
    if (kw(k, "while") && fr.last_stmt_do) return;
    Statement stmt;
    stmt.first_token = sig_[k];
    stmt.scope = Scope::Function;
    stmt.function = fr.function;
    const std::size_t lb = line_begin(text_, t.span.start);
    const bool first_on_line =
        text_.substr(lb, t.span.start - lb).find_first_not_of(" \t\r\f\v") ==
        std::string_view::npos;
    stmt.line_start = first_on_line;
    stmt.insert_at = first_on_line ? lb : t.span.start;
    stmt.indent = first_on_line ? std::string(text_.substr(lb, t.span.start - lb)) : "";
    if (t.kind == TokenKind::Operator && s == ";") stmt.anchorable = true;
    if (lang_ == Language::Java && (kw(k, "super") || kw(k, "this")) && op(k + 1, "("))
      stmt.anchorable = false;
    if (lang_ == Language::Cpp && (kw(k, "case") || kw(k, "default"))) stmt.anchorable = false;
    tree_.statements.push_back(stmt);
  }

  Ctx classify_brace(std::size_t k, const std::vector<Frame>& frames,
                     const std::vector<Paren>& parens) const {
    const Frame& fr = frames.back();
    if (fr.ctx == Ctx::Init || (fr.ctx == Ctx::Enum && fr.enum_constants)) return Ctx::Init;
    if (k == 0) return Ctx::Block;
    const Token& p = st(k - 1);
    std::string_view ps = sx(k - 1);
    if (p.kind == TokenKind::Operator &&
        (ps == "=" || ps == "(" || ps == "," || ps == "[" || ps == "?" || ps == "<<" ||
         ps == "+" || ps == "-" || ps == "==" || ps == "!="))
      return Ctx::Init;
    if (p.kind == TokenKind::Keyword && (ps == "return" || ps == "throw" || ps == "co_return"))
      return Ctx::Init;
    if (!parens.empty()) {
      return p.kind == TokenKind::Operator && ps == ")" ? Ctx::Block : Ctx::Init;
    }
    const bool in_body = fr.ctx == Ctx::Function || fr.ctx == Ctx::Block;
    // scan the current statement
    bool has_paren = false;
    bool has_assign = false;
    std::string_view class_kw;
    int depth = 0;
    for (std::size_t j = fr.stmt_start; j < k; ++j) {
      if (op(j, "(") || op(j, "[")) {
        if (depth == 0 && op(j, "(")) has_paren = true;
        ++depth;
      } else if (op(j, ")") || op(j, "]")) {
        --depth;
      } else if (depth == 0 && op(j, "=")) {
        has_assign = true;
      } else if (depth == 0 && class_kw.empty() && st(j).kind == TokenKind::Keyword &&
                 (sx(j) == "struct" || sx(j) == "class" || sx(j) == "union" || sx(j) == "enum" ||
                  sx(j) == "interface" || sx(j) == "namespace" || sx(j) == "extern")) {
        class_kw = sx(j);
      } else if (lang_ == Language::Java && depth == 0 && class_kw.empty() && ident(j) &&
                 sx(j) == "record" && ident(j + 1)) {
        class_kw = "record";
      } else if (lang_ == Language::Java && depth == 0 && op(j, "@") && ident(j + 1) &&
                 sx(j + 1) == "interface") {
        class_kw = "interface";
      }
    }
    if (in_body) {
      if (p.kind == TokenKind::Operator &&
          (ps == ")" || ps == ";" || ps == "{" || ps == "}" || ps == ":" || ps == "->"))
        return Ctx::Block;
      if (p.kind == TokenKind::Keyword) {
        if (ps == "struct" || ps == "union" || ps == "class") return Ctx::Class;
        if (ps == "enum") return Ctx::Enum;
        return Ctx::Block;
      }
      if (!class_kw.empty() && !has_assign) {
        return class_kw == "enum" ? Ctx::Enum : Ctx::Class;
      }
      if (lang_ == Language::Cpp && p.kind == TokenKind::Operator && ps == "]") return Ctx::Block;
      if (p.kind == TokenKind::Preprocessor) return Ctx::Block;
      if (k == fr.stmt_start) return Ctx::Block;
      return Ctx::Init;
    }
    if (has_assign) return Ctx::Init;
    if (class_kw == "namespace" || class_kw == "extern") return Ctx::Namespace;
    if (!class_kw.empty() && class_kw != "record" && !has_paren) {
      return class_kw == "enum" ? Ctx::Enum : Ctx::Class;
    }
    if (class_kw == "record") return Ctx::Class;
    if (!class_kw.empty() && has_paren) {
      // `struct node *make(int v) {` vs `class A : B<decltype(x)> {`
      std::size_t first_paren = fr.stmt_start;
      while (first_paren < k && !op(first_paren, "(")) ++first_paren;
      bool kw_before_name = true;
      for (std::size_t j = fr.stmt_start; j < first_paren; ++j) {
        if (op(j, ":")) kw_before_name = false;
      }
      if (!kw_before_name) return class_kw == "enum" ? Ctx::Enum : Ctx::Class;
      return Ctx::Function;
    }
    if (has_paren) return Ctx::Function;
    if (p.kind == TokenKind::Keyword && ps == "static" && lang_ == Language::Java)
      return Ctx::Function;
    if (fr.ctx == Ctx::Class && (p.kind == TokenKind::Keyword || ident(k - 1)))
      return lang_ == Language::Java ? Ctx::Function : Ctx::Init;
    if (p.kind == TokenKind::Operator && (ps == ";" || ps == "{" || ps == "}"))
      return Ctx::Block;
    return Ctx::Init;
  }

  std::string class_name_of(std::size_t k, const Frame& fr) const {
    for (std::size_t j = fr.stmt_start; j < k; ++j) {
      if ((kw(j, "class") || kw(j, "struct") || kw(j, "union") || kw(j, "enum") ||
           kw(j, "interface") || (ident(j) && sx(j) == "record")) &&
          ident(j + 1))
        return std::string(sx(j + 1));
    }
    return {};
  }

  int register_function(std::size_t brace, const Frame& fr) {
    Function f;
    f.body = {st(brace).span.start, st(brace).span.end};
    // name: last identifier before the first depth-0 '(' of the statement
    std::size_t name = sig_.size();
    for (std::size_t j = fr.stmt_start; j < brace; ++j) {
      if (op(j, "(")) break;
      if (ident(j) || (kw(j, "operator"))) name = j;
    }
    if (name == sig_.size()) {
      f.name_token = sig_[brace];
    } else {
      f.name_token = sig_[name];
      if (fr.ctx == Ctx::Class && sx(name) == fr.class_name && !fr.class_name.empty())
        f.constructor = true;
      if (name >= 2 && op(name - 1, "::") && ident(name - 2) && sx(name - 2) == sx(name))
        f.constructor = true;
    }
    tree_.functions.push_back(f);
    return static_cast<int>(tree_.functions.size() - 1);
  }

  void close_frame(std::size_t k, const Frame& closed, Frame& parent) {
    const Token& t = st(k);
    if (closed.ctx == Ctx::Function && closed.function >= 0) {
      tree_.functions[closed.function].body.end = t.span.end;
    }
    if (closed.ctx == Ctx::Function || closed.ctx == Ctx::Block) {
      if (k > closed.open + 1) {
        const Token& p = st(k - 1);
        std::string_view ps = sx(k - 1);
        const bool ok = p.kind == TokenKind::Preprocessor ||
                        (p.kind == TokenKind::Operator &&
                         (ps == ";" || ps == "{" || ps == "}" || ps == ":"));
        if (!ok) diag(t.span, "expected ';' before '}' token");
      }
    }
    if (closed.ctx == Ctx::Class && lang_ != Language::Java) {
      const bool ok = k + 1 < sig_.size() && (op(k + 1, ";") || ident(k + 1) || op(k + 1, "*") ||
                                              op(k + 1, ",") || op(k + 1, ")"));
      // `[] {}` lambdas and local classes used as expressions are not tracked
      if (!ok) diag(t.span, "expected ';' after struct definition");
    }
    const bool ends_statement =
        closed.ctx == Ctx::Function || closed.ctx == Ctx::Namespace ||
        (closed.ctx == Ctx::Class && lang_ == Language::Java) ||
        (closed.ctx == Ctx::Block && closed.open == parent.stmt_start) ||
        (closed.ctx == Ctx::Block && ends_control_statement(closed, parent));
    if (ends_statement) {
      parent.last_stmt_do = closed.after_do;
      parent.stmt_start = k + 1;
    }
  }

  // A block closes its statement unless it is a lambda or a braced expression.
  bool ends_control_statement(const Frame& closed, const Frame& parent) const {
    if (closed.open == 0) return true;
    std::size_t j = closed.open - 1;
    if (op(j, ")")) {
      int depth = 0;
      for (std::size_t m = j + 1; m-- > parent.stmt_start;) {
        if (op(m, ")")) ++depth;
        if (op(m, "(") && --depth == 0) {
          if (m == 0) return false;
          std::string_view b = sx(m - 1);
          return st(m - 1).kind == TokenKind::Keyword &&
                 (b == "if" || b == "while" || b == "for" || b == "switch" || b == "catch" ||
                  b == "synchronized" || b == "try");
        }
      }
      return false;
    }
    return kw(j, "else") || kw(j, "do") || kw(j, "try") || kw(j, "finally") ||
           op(j, ";") || op(j, "{") || op(j, "}") || op(j, ":") || (lang_ == Language::Java && op(j, "->"));
  }

  bool operand_like(std::size_t k) const {
    const TokenKind kind = st(k).kind;
    return kind == TokenKind::Identifier || kind == TokenKind::Number ||
           kind == TokenKind::String || kind == TokenKind::Char;
  }

  void check_token(std::size_t k, const std::vector<Frame>& frames,
                   const std::vector<Paren>& parens, bool prev_boundary) {
    const Token& t = st(k);
    const Frame& fr = frames.back();
    const bool in_body = fr.ctx == Ctx::Function || fr.ctx == Ctx::Block;
    if (t.kind == TokenKind::Keyword && statement_keywords().count(sx(k)) && !prev_boundary &&
        !(kw(k, "while") && k > 0 && op(k - 1, "}")) && parens.empty()) {
      diag(t.span, "expected ';' before '" + std::string(sx(k)) + "'");
      return;
    }
    if (kw(k, "else") && k > 0 && !op(k - 1, ";") && !op(k - 1, "}")) {
      diag(t.span, "expected ';' before 'else'");
      return;
    }
    if (k == 0) return;
    const Token& p = st(k - 1);
    if (p.kind == TokenKind::Number && operand_like(k)) {
      diag(t.span, "expected ';' before '" + std::string(sx(k)) + "'");
      return;
    }
    if (operand_like(k - 1) && t.kind == TokenKind::Number) {
      diag(t.span, "expected ';' before numeric constant");
      return;
    }
    if ((p.kind == TokenKind::String || p.kind == TokenKind::Char) &&
        (t.kind == TokenKind::Number || t.kind == TokenKind::Char ||
         (lang_ == Language::Java && (t.kind == TokenKind::Identifier || t.kind == TokenKind::String)))) {
      diag(t.span, "expected ';' before '" + std::string(sx(k)) + "'");
      return;
    }
    if (lang_ == Language::Java && p.kind == TokenKind::Identifier && t.kind == TokenKind::String) {
      diag(t.span, "';' expected");
      return;
    }
    if ((operand_like(k - 1) && type_kw(k)) && !(k >= 2 && op(k - 2, "@"))) {
      diag(t.span, "expected ';' before '" + std::string(sx(k)) + "'");
      return;
    }
    if (in_body && t.kind == TokenKind::Identifier && p.kind == TokenKind::Identifier && k >= 2) {
      const Token& pp = st(k - 2);
      std::string_view pps = sx(k - 2);
      const bool expr_ctx =
          (pp.kind == TokenKind::Operator &&
           (pps == "=" || pps == "+" || pps == "-" || pps == "/" || pps == "%" || pps == "==" ||
            pps == "!=" || pps == "+=" || pps == "-=" || pps == "&&" || pps == "||" ||
            pps == "<=" || pps == ">=" || pps == "?" || pps == "!")) ||
          (pp.kind == TokenKind::Keyword && pps == "return");
      if (expr_ctx) diag(t.span, "expected ';' before '" + std::string(sx(k)) + "'");
    }
  }

  void check_after_paren(std::size_t k, const Paren& p, const std::vector<Frame>& frames) {
    const Frame& fr = frames.back();
    if (fr.ctx != Ctx::Function && fr.ctx != Ctx::Block) return;
    if (p.control || k + 1 >= sig_.size()) return;
    const Token& next = st(k + 1);
    const bool bad_next = next.kind == TokenKind::Identifier || next.kind == TokenKind::Number ||
                          next.kind == TokenKind::String || next.kind == TokenKind::Char ||
                          (next.kind == TokenKind::Keyword &&
                           !WordSet{"const", "noexcept", "mutable", "override", "final", "throw",
                                    "throws", "volatile", "constexpr", "requires", "sizeof",
                                    "new", "this", "true", "false", "nullptr", "null"}
                                .count(sx(k + 1)) &&
                           !type_kw(k + 1));
    if (!bad_next) return;
    // casts: `(int) x`, `(struct node *) p`, `(Foo) obj`
    bool cast = k > p.index + 1;
    for (std::size_t j = p.index + 1; j < k && cast; ++j) {
      const Token& c = st(j);
      cast = c.kind == TokenKind::Identifier ||
             (c.kind == TokenKind::Keyword &&
              (type_kw(j) || qualifier_keywords().count(sx(j)))) ||
             (c.kind == TokenKind::Operator &&
              (sx(j) == "*" || sx(j) == "&" || sx(j) == "::" || sx(j) == "<" || sx(j) == ">" ||
               sx(j) == "," || sx(j) == "[" || sx(j) == "]" || sx(j) == "."));
    }
    if (p.index > 0 && (ident(p.index - 1) || op(p.index - 1, ")") || op(p.index - 1, "]")))
      cast = false;  // a call or a nested call chain
    if (cast) return;
    // lambda parameter lists precede bodies or trailing specifiers handled above
    diag(next.span, "expected ';' before '" + std::string(sx(k + 1)) + "'");
  }

  // ---- declarations -------------------------------------------------------

  void declare(std::size_t k, bool member) {
    tree_.declarations.push_back({sig_[k], member});
  }

  void pin(std::size_t k) {
    if (ident(k)) tree_.pinned_names.emplace_back(sx(k));
  }

  // Walks back over a template argument list ending at `close` (a '>').
  // Returns the index of the matching '<' or npos.
  std::size_t template_open(std::size_t close) const {
    int depth = 0;
    for (std::size_t j = close + 1; j-- > 0;) {
      if (op(j, ">")) ++depth;
      else if (op(j, "<")) {
        if (--depth == 0) return j;
      } else if (op(j, ";") || op(j, "{") || op(j, "}") || op(j, "=") || op(j, "&&") ||
                 op(j, "||")) {
        return std::string_view::npos;
      }
    }
    return std::string_view::npos;
  }

  // True when `k` ends a type: keyword type, identifier, template close, or Java `[]`.
  bool ends_type(std::size_t k, std::size_t* type_begin) const {
    if (type_kw(k) || ident(k)) {
      *type_begin = k;
      return true;
    }
    if (op(k, ">")) {
      std::size_t open = template_open(k);
      if (open == std::string_view::npos || open == 0 || !ident(open - 1)) return false;
      *type_begin = open - 1;
      return true;
    }
    if (op(k, "]") && k > 0 && op(k - 1, "[") && k >= 2) {
      return ends_type(k - 2, type_begin);
    }
    return false;
  }

  bool decl_start(std::size_t k, const Frame& fr) const {
    // walk back across the rest of the type run (qualifiers, scopes, more type words)
    std::size_t j = k;
    while (j > 0) {
      std::size_t prev = j - 1;
      if (st(prev).kind == TokenKind::Keyword &&
          (type_kw(prev) || qualifier_keywords().count(sx(prev)))) {
        j = prev;
        continue;
      }
      if (op(prev, "::") && prev > 0 && ident(prev - 1)) {
        j = prev - 1;
        continue;
      }
      if (op(prev, "::")) {
        j = prev;
        continue;
      }
      if (ident(prev) && prev + 1 == j && (st(j).kind == TokenKind::Keyword)) {
        // `Foo const`
        j = prev;
        continue;
      }
      if (op(prev, "@") || (prev > 0 && op(prev - 1, "@") && ident(prev))) {
        j = prev;
        continue;
      }
      break;
    }
    if (j == 0 || j == fr.stmt_start) return true;
    const std::size_t b = j - 1;
    if (st(b).kind == TokenKind::Preprocessor) return true;
    if (st(b).kind == TokenKind::Operator) {
      std::string_view s = sx(b);
      return s == ";" || s == "{" || s == "}" || s == "(" || s == "," || s == ":" || s == ">" ||
             s == ")";
    }
    return false;
  }

  void collect_declaration(std::size_t k, const std::vector<Frame>& frames,
                           const std::vector<Paren>& parens) {
    if (!ident(k)) {
      if (op(k, "@") && lang_ == Language::Java) pin(k + 1);
      return;
    }
    const Frame& fr = frames.back();
    const bool member_level =
        (fr.ctx == Ctx::Class || (fr.ctx == Ctx::Enum && !fr.enum_constants)) && parens.empty();

    if (k > 0 && (op(k - 1, ".") || op(k - 1, "->") || op(k - 1, "::") || op(k - 1, ".*") ||
                  op(k - 1, "->*"))) {
      pin(k);
      return;
    }
    if (k > 0 && st(k - 1).kind == TokenKind::Keyword) {
      std::string_view p = sx(k - 1);
      if (p == "struct" || p == "class" || p == "union" || p == "enum" || p == "interface" ||
          p == "typename") {
        const bool defining = op(k + 1, "{") || op(k + 1, ":") || op(k + 1, ";") ||
                              op(k + 1, "<") || kw(k + 1, "extends") ||
                              kw(k + 1, "implements") || op(k + 1, ",") || op(k + 1, ">") ||
                              op(k + 1, "=");
        if (defining || p == "typename") {
          declare(k, false);
          if (lang_ == Language::Java && public_top_level(k, frames)) pin(k);
        }
        return;
      }
      if (p == "namespace" || p == "goto") return;
      if (p == "package" || p == "import") return;
    }
    if (lang_ == Language::Java && k > 0 && ident(k - 1) && sx(k - 1) == "record" && op(k + 1, "(")) {
      declare(k, false);
      return;
    }
    // `using X = ...;`
    if (k > 0 && kw(k - 1, "using") && op(k + 1, "=")) {
      declare(k, false);
      return;
    }
    // enum constants
    if (fr.ctx == Ctx::Enum && fr.enum_constants && parens.empty() && k > 0 &&
        (op(k - 1, "{") || op(k - 1, ","))) {
      declare(k, false);
      return;
    }
    // typedef names: last identifier before ';' in a typedef statement
    if (kw(fr.stmt_start, "typedef") && parens.empty() &&
        (op(k + 1, ";") || op(k + 1, ",") || op(k + 1, "["))) {
      declare(k, false);
      return;
    }
    if (kw(fr.stmt_start, "import") || kw(fr.stmt_start, "package")) {
      pin(k);
      return;
    }

    const bool next_ok = k + 1 >= sig_.size() || op(k + 1, "=") || op(k + 1, ";") ||
                         op(k + 1, ",") || op(k + 1, "(") || op(k + 1, "[") || op(k + 1, ")") ||
                         op(k + 1, ":") || op(k + 1, "{");
    if (!next_ok || k == 0) {
      declarator_list(k, fr, parens, member_level);
      return;
    }
    std::size_t p = k - 1;
    while (p > 0 && (op(p, "*") || op(p, "&") || op(p, "&&") || kw(p, "const"))) --p;
    std::size_t type_begin = 0;
    if (!ends_type(p, &type_begin)) {
      declarator_list(k, fr, parens, member_level);
      return;
    }
    const bool pointer = p + 1 != k;
    const bool in_body = fr.ctx == Ctx::Function || fr.ctx == Ctx::Block;
    if (pointer && in_body && !parens.empty() && !parens.back().control) return;
    if (pointer || st(p).kind == TokenKind::Keyword || op(p, ">") || op(p, "]") || ident(p)) {
      if (pointer && !decl_start(type_begin, fr)) return;
      if (st(p).kind == TokenKind::Keyword && !type_kw(p)) return;
      if (!pointer && ident(p) && !decl_start(type_begin, fr) && !op(k + 1, "(") &&
          !(type_begin > 0 && (op(type_begin - 1, "(") || op(type_begin - 1, ",")))) {
        // `a b` deep inside an expression is not a declaration
        if (!(type_begin > 0 && st(type_begin - 1).kind == TokenKind::Keyword)) return;
      }
      declare(k, member_level);
      if (op(k + 1, "(") && sx(k) == "main") pin(k);
    }
  }

  // Second and later names in `int a = 1, b, *c;`.
  void declarator_list(std::size_t k, const Frame& fr, const std::vector<Paren>& parens,
                       bool member_level) {
    if (!parens.empty() || k == 0) return;
    std::size_t p = k - 1;
    while (p > 0 && (op(p, "*") || op(p, "&"))) --p;
    if (!op(p, ",")) return;
    if (!(op(k + 1, "=") || op(k + 1, ";") || op(k + 1, ",") || op(k + 1, "[") || op(k + 1, ":")))
      return;
    // the statement must itself start with a declaration
    for (const Declaration& d : tree_.declarations) {
      if (d.token >= sig_[fr.stmt_start] && d.token < sig_[k]) {
        declare(k, member_level);
        return;
      }
    }
  }

  bool public_top_level(std::size_t k, const std::vector<Frame>& frames) const {
    if (frames.size() != 1) return false;
    for (std::size_t j = frames.back().stmt_start; j < k; ++j) {
      if (kw(j, "public")) return true;
    }
    return false;
  }

  void finish_declarations() {
    // Class members are reached through objects; keep their names fixed.
    std::vector<Declaration> kept;
    for (const Declaration& d : tree_.declarations) {
      if (d.member) {
        const Token& t = tree_.tokens[d.token];
        tree_.pinned_names.emplace_back(text_.substr(t.span.start, t.span.size()));
      }
      kept.push_back(d);
    }
    tree_.declarations = std::move(kept);
    tree_.includes = includes_;
  }

  std::string_view text_;
  Language lang_;
  ParseTree& tree_;
  std::vector<std::size_t> sig_;
  std::vector<std::vector<Paren>> saved_parens_;
  std::set<std::string> macros_;
  std::vector<std::string> includes_;
};

}  // namespace

bool is_c_family_keyword(Language lang, std::string_view word) {
  const WordSet& kw = lang == Language::C
                          ? c_keywords()
                          : (lang == Language::Cpp ? cpp_keywords() : java_keywords());
  return kw.count(word) != 0;
}

ParseTree parse_c_family(std::string_view text, Language lang) {
  ParseTree tree;
  Parser(text, lang, tree).run();
  return tree;
}

}  // namespace spaci::detail
