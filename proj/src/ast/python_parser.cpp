// Error-tolerant Python tokenizer and structural checker.

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>

#include "text_util.hpp"

namespace spaci::detail {
namespace {

const std::unordered_set<std::string_view>& python_keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "False", "None",     "True",   "and",    "as",     "assert", "async",
      "await", "break",    "class",  "continue", "def",  "del",    "elif",
      "else",  "except",   "finally", "for",   "from",   "global", "if",
      "import", "in",      "is",     "lambda", "nonlocal", "not", "or",
      "pass",  "raise",    "return", "try",    "while",  "with",   "yield"};
  return kw;
}

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
  static const std::array<std::string_view, 10> prefixes = {"r", "u", "b", "f", "br", "rb",
                                                            "fr", "rf", "t", "tr"};
  return std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end();
}

constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "="};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void run(ParseTree& tree) {
    tree_ = &tree;
    header_end();
    std::size_t pos = 0;
    const std::size_t n = text_.size();
    if (n >= 3 && text_.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    bool at_line_start = true;
    bool line_has_content = false;

    while (pos < n) {
      if (at_line_start && parens_.empty()) {
        std::size_t p = pos;
        int col = 0;
        while (p < n && (text_[p] == ' ' || text_[p] == '\t' || text_[p] == '\f')) {
          col = text_[p] == '\t' ? (col / 8 + 1) * 8 : (text_[p] == '\f' ? 0 : col + 1);
          ++p;
        }
        if (p >= n) {
          pos = p;
          break;
        }
        if (text_[p] == '#') {
          pos = lex_comment(p);
          continue;
        }
        if (text_[p] == '\n' || text_[p] == '\r') {
          pos = skip_newline(p);
          continue;
        }
        indent_to(col, pos, p);
        pos = p;
        at_line_start = false;
        line_has_content = true;
      }

      const unsigned char c = static_cast<unsigned char>(text_[pos]);
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos;
        continue;
      }
      if (c == '\\') {
        std::size_t after = pos + 1;
        if (after < n && text_[after] == '\r') ++after;
        if (after < n && text_[after] == '\n') {
          pos = after + 1;
          continue;
        }
        error_token(pos, pos + 1, "unexpected character after line continuation");
        ++pos;
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (parens_.empty()) {
          if (line_has_content) push(TokenKind::Newline, pos, pos + 1);
          at_line_start = true;
          line_has_content = false;
        }
        pos = skip_newline(pos);
        continue;
      }
      if (c == '#') {
        pos = lex_comment(pos);
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t end = pos;
        while (end < n && is_ident_char(static_cast<unsigned char>(text_[end]))) ++end;
        std::string_view word = text_.substr(pos, end - pos);
        if (end < n && (text_[end] == '"' || text_[end] == '\'') && is_string_prefix(word)) {
          pos = lex_string(pos, end);
          continue;
        }
        push(python_keywords().count(word) ? TokenKind::Keyword : TokenKind::Identifier, pos,
             end);
        pos = end;
        continue;
      }
      if (is_digit(c) || (c == '.' && pos + 1 < n && is_digit(text_[pos + 1]))) {
        pos = lex_number(pos);
        continue;
      }
      if (c == '"' || c == '\'') {
        pos = lex_string(pos, pos);
        continue;
      }
      bool matched = false;
      for (std::string_view op : kOperators) {
        if (text_.substr(pos, op.size()) == op) {
          handle_bracket(op, pos);
          push(TokenKind::Operator, pos, pos + op.size());
          pos += op.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
      std::size_t end = pos + 1;
      while (end < n && (static_cast<unsigned char>(text_[end]) & 0xC0) == 0x80) ++end;
      error_token(pos, end, "invalid character in source");
      pos = end;
    }

    for (const auto& [ch, offset] : parens_) {
      diag({offset, std::max(offset + 1, n)}, std::string("'") + ch + "' was never closed");
    }
    if (line_has_content) push(TokenKind::Newline, n, n);
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::Dedent, n, n);
    }
  }

  const std::vector<std::string>& fstring_names() const { return fstring_names_; }

 private:
  void header_end() {
    // Shebang and encoding declarations live on the first two lines.
    std::size_t pos = 0;
    if (text_.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    for (int line = 0; line < 2 && pos < text_.size(); ++line) {
      std::string_view rest = text_.substr(pos);
      std::size_t eol = line_after(text_, pos);
      std::string_view ln = text_.substr(pos, eol - pos);
      bool header = (line == 0 && rest.substr(0, 2) == "#!") ||
                    (ln.find("coding") != std::string_view::npos && !ln.empty() &&
                     ln.find_first_not_of(" \t") != std::string_view::npos &&
                     ln[ln.find_first_not_of(" \t")] == '#');
      if (!header) break;
      pos = eol;
    }
    tree_->header_end = pos;
  }

  void indent_to(int col, std::size_t line_pos, std::size_t first) {
    if (col > indents_.back()) {
      indents_.push_back(col);
      push(TokenKind::Indent, line_pos, first);
      return;
    }
    while (col < indents_.back()) {
      indents_.pop_back();
      push(TokenKind::Dedent, first, first);
    }
    if (col != indents_.back()) {
      diag({line_pos, first + 1}, "unindent does not match any outer indentation level");
      indents_.push_back(col);
    }
  }

  std::size_t skip_newline(std::size_t pos) {
    if (text_[pos] == '\r' && pos + 1 < text_.size() && text_[pos + 1] == '\n') return pos + 2;
    return pos + 1;
  }

  std::size_t lex_comment(std::size_t pos) {
    std::size_t end = pos;
    while (end < text_.size() && text_[end] != '\n' && text_[end] != '\r') ++end;
    Token& t = push(TokenKind::Comment, pos, end);
    t.comment = CommentStyle::Line;
    return end;
  }

  std::size_t lex_number(std::size_t pos) {
    const std::size_t n = text_.size();
    std::size_t end = pos;
    auto digits = [&](auto pred) {
      while (end < n && (pred(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) ++end;
    };
    if (text_[pos] == '0' && pos + 1 < n &&
        std::string_view("xXoObB").find(text_[pos + 1]) != std::string_view::npos) {
      end = pos + 2;
      digits([](unsigned char ch) { return std::isxdigit(ch) != 0; });
    } else {
      digits([](unsigned char ch) { return is_digit(ch); });
      if (end < n && text_[end] == '.') {
        ++end;
        digits([](unsigned char ch) { return is_digit(ch); });
      }
      if (end < n && (text_[end] == 'e' || text_[end] == 'E')) {
        std::size_t save = end++;
        if (end < n && (text_[end] == '+' || text_[end] == '-')) ++end;
        if (end < n && is_digit(text_[end])) {
          digits([](unsigned char ch) { return is_digit(ch); });
        } else {
          end = save;
        }
      }
      if (end < n && (text_[end] == 'j' || text_[end] == 'J')) ++end;
    }
    push(TokenKind::Number, pos, end);
    return end;
  }

  std::size_t lex_string(std::size_t start, std::size_t quote_pos) {
    const std::size_t n = text_.size();
    std::string_view prefix = text_.substr(start, quote_pos - start);
    bool is_f = prefix.find_first_of("fFtT") != std::string_view::npos;
    const char q = text_[quote_pos];
    bool triple = quote_pos + 2 < n && text_[quote_pos + 1] == q && text_[quote_pos + 2] == q;
    std::size_t pos = quote_pos + (triple ? 3 : 1);
    std::size_t content_start = pos;
    bool closed = false;
    std::size_t content_end = pos;
    while (pos < n) {
      char c = text_[pos];
      if (c == '\\') {
        pos += 2;
        continue;
      }
      if (triple) {
        if (c == q && pos + 2 < n + 0 && text_[pos + 1] == q && text_[pos + 2] == q) {
          content_end = pos;
          pos += 3;
          closed = true;
          break;
        }
      } else {
        if (c == '\n' || c == '\r') break;
        if (c == q) {
          content_end = pos;
          ++pos;
          closed = true;
          break;
        }
      }
      ++pos;
    }
    if (pos > n) pos = n;
    if (!closed) {
      content_end = pos;
      Token& t = push(TokenKind::Error, start, pos);
      (void)t;
      diag({start, std::max(pos, start + 1)},
           triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
    } else {
      Token& t = push(TokenKind::String, start, pos);
      t.fstring = is_f;
    }
    if (is_f) collect_fstring_names(text_.substr(content_start, content_end - content_start));
    return pos;
  }

  void collect_fstring_names(std::string_view body) {
    int depth = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
      char c = body[i];
      if (c == '{') {
        if (depth == 0 && i + 1 < body.size() && body[i + 1] == '{') {
          ++i;
          continue;
        }
        ++depth;
      } else if (c == '}') {
        if (depth > 0) --depth;
      } else if (depth > 0 && is_ident_start(static_cast<unsigned char>(c)) &&
                 (i == 0 || !is_ident_char(static_cast<unsigned char>(body[i - 1])))) {
        std::size_t j = i;
        while (j < body.size() && is_ident_char(static_cast<unsigned char>(body[j]))) ++j;
        fstring_names_.emplace_back(body.substr(i, j - i));
        i = j - 1;
      }
    }
  }

  void handle_bracket(std::string_view op, std::size_t pos) {
    if (op == "(" || op == "[" || op == "{") {
      parens_.emplace_back(op[0], pos);
      return;
    }
    if (op != ")" && op != "]" && op != "}") return;
    const char want = op == ")" ? '(' : (op == "]" ? '[' : '{');
    if (parens_.empty()) {
      diag({pos, pos + 1}, std::string("unmatched '") + op[0] + "'");
      return;
    }
    if (parens_.back().first != want) {
      diag({pos, pos + 1}, std::string("closing parenthesis '") + op[0] +
                               "' does not match opening parenthesis '" +
                               parens_.back().first + "'");
    }
    parens_.pop_back();
  }

  Token& push(TokenKind kind, std::size_t start, std::size_t end) {
    Token t;
    t.kind = kind;
    t.span = {start, end};
    tree_->tokens.push_back(t);
    return tree_->tokens.back();
  }

  void error_token(std::size_t start, std::size_t end, std::string message) {
    push(TokenKind::Error, start, end);
    diag({start, end}, std::move(message));
  }

  void diag(Span span, std::string message) {
    tree_->diagnostics.push_back({span, std::move(message)});
  }

  std::string_view text_;
  ParseTree* tree_ = nullptr;
  std::vector<int> indents_{0};
  std::vector<std::pair<char, std::size_t>> parens_;
  std::vector<std::string> fstring_names_;
};

// ---------------------------------------------------------------------------
// Structural pass over logical lines.

enum class BlockKind { Module, Class, Function, Other };

struct Block {
  BlockKind kind;
  BlockKind owner;  // nearest enclosing Module/Class/Function
  int function = -1;
  bool first_statement = true;
};

struct Line {
  std::size_t first = 0;  // token index of first significant token
  std::size_t last = 0;   // token index of the Newline (exclusive end of content)
  bool indent = false;    // preceded by an Indent token
  std::size_t dedents = 0;
};

class Structure {
 public:
  Structure(std::string_view text, ParseTree& tree) : text_(text), tree_(tree) {}

  void run() {
    collect_lines();
    std::vector<Block> stack{{BlockKind::Module, BlockKind::Module, -1, true}};
    bool expect_indent = false;
    std::size_t expect_from = 0;
    int pending_function = -1;
    BlockKind pending_kind = BlockKind::Other;
    bool prev_decorator = false;
    bool future_zone = true;

    for (std::size_t li = 0; li < lines_.size(); ++li) {
      const Line& line = lines_[li];
      for (std::size_t d = 0; d < line.dedents && stack.size() > 1; ++d) stack.pop_back();

      if (expect_indent) {
        if (!line.indent) {
          diag(tok(line.first).span, "expected an indented block");
        } else {
          Block b;
          b.kind = pending_kind;
          b.owner = pending_kind == BlockKind::Other ? stack.back().owner : pending_kind;
          b.function = pending_kind == BlockKind::Function ? pending_function
                                                           : stack.back().function;
          if (pending_kind == BlockKind::Function && pending_function >= 0) {
            tree_.functions[pending_function].body.start = tok(line.first).span.start;
          }
          stack.push_back(b);
        }
      } else if (line.indent) {
        diag(tok(line.first).span, "unexpected indent");
      }
      expect_indent = false;
      (void)expect_from;

      Block& block = stack.back();
      const std::size_t first = line.first;
      const std::string_view head = text(first);

      // Docstring: a lone string statement first in a module, class or function body.
      bool is_docstring = false;
      if (block.first_statement && block.kind != BlockKind::Other &&
          tok(first).kind == TokenKind::String && line.last == first + 1 &&
          !tok(first).fstring && !is_bytes(first)) {
        tree_.tokens[first].docstring = true;
        is_docstring = true;
      }
      block.first_statement = false;

      // Statement record for module-level and function-top-level lines.
      if (block.kind == BlockKind::Module || block.kind == BlockKind::Function) {
        Statement st;
        st.first_token = first;
        st.insert_at = line_begin(text_, tok(first).span.start);
        st.indent = std::string(text_.substr(st.insert_at, tok(first).span.start - st.insert_at));
        st.line_start = true;
        st.scope = block.kind == BlockKind::Module ? Scope::Module : Scope::Function;
        st.function = block.kind == BlockKind::Function ? block.function : -1;
        const bool clause = head == "elif" || head == "else" || head == "except" ||
                            head == "finally";
        bool is_future = head == "from" && first + 1 < line.last && text(first + 1) == "__future__";
        if (block.kind == BlockKind::Module && future_zone) {
          if (is_future) {
            st.anchorable = false;
          } else if (!is_docstring) {
            future_zone = false;
          }
        }
        if (clause || is_docstring || prev_decorator || (block.kind == BlockKind::Module &&
                                                         future_zone)) {
          st.anchorable = false;
        }
        tree_.statements.push_back(st);
      }
      prev_decorator = head == "@";

      check_line(line);
      collect_declarations(line, block);

      // Block headers.
      const std::size_t last_sig = line.last - 1;
      const bool ends_with_colon = text(last_sig) == ":" && line.last > first;
      if (ends_with_colon && is_compound_header(line)) {
        expect_indent = true;
        expect_from = li;
        std::size_t kw = first;
        if (text(kw) == "async" && kw + 1 < line.last) ++kw;
        if (text(kw) == "def") {
          pending_kind = BlockKind::Function;
          pending_function = register_function(kw, true);
        } else if (text(kw) == "class") {
          pending_kind = BlockKind::Class;
        } else {
          pending_kind = BlockKind::Other;
        }
        if (li + 1 >= lines_.size()) diag(tok(last_sig).span, "expected an indented block");
      } else {
        std::size_t kw = first;
        if (text(kw) == "async" && kw + 1 < line.last) ++kw;
        if (text(kw) == "def") register_function(kw, false);
      }
    }
    close_function_bodies();
    drop_lone_docstrings();
    pin_misc();
  }

 private:
  const Token& tok(std::size_t i) const { return tree_.tokens[i]; }
  std::string_view text(std::size_t i) const {
    const Token& t = tree_.tokens[i];
    return text_.substr(t.span.start, t.span.size());
  }
  bool is_op(std::size_t i, std::string_view op) const {
    return tok(i).kind == TokenKind::Operator && text(i) == op;
  }
  bool is_bytes(std::size_t i) const {
    std::string_view s = text(i);
    for (char c : s) {
      if (c == '"' || c == '\'') break;
      if (c == 'b' || c == 'B') return true;
    }
    return false;
  }

  void diag(Span span, std::string message) {
    tree_.diagnostics.push_back({span, std::move(message)});
  }

  void collect_lines() {
    Line cur;
    bool open = false;
    std::size_t pending_dedents = 0;
    bool pending_indent = false;
    for (std::size_t i = 0; i < tree_.tokens.size(); ++i) {
      const Token& t = tree_.tokens[i];
      switch (t.kind) {
        case TokenKind::Comment:
          continue;
        case TokenKind::Indent:
          pending_indent = true;
          continue;
        case TokenKind::Dedent:
          ++pending_dedents;
          continue;
        case TokenKind::Newline:
          if (open) {
            cur.last = i;
            lines_.push_back(cur);
            open = false;
          }
          continue;
        default:
          break;
      }
      if (!open) {
        cur = Line{};
        cur.first = i;
        cur.indent = pending_indent;
        cur.dedents = pending_dedents;
        pending_indent = false;
        pending_dedents = 0;
        open = true;
      }
    }
    if (open) {
      cur.last = tree_.tokens.size();
      lines_.push_back(cur);
    }
  }

  // Indices of significant tokens of a line (comments are skipped).
  std::vector<std::size_t> sig(const Line& line) const {
    std::vector<std::size_t> out;
    for (std::size_t i = line.first; i < line.last; ++i) {
      if (tok(i).kind != TokenKind::Comment) out.push_back(i);
    }
    return out;
  }

  bool is_compound_header(const Line& line) const {
    std::string_view h = text(line.first);
    static const std::set<std::string_view> kws = {"if",  "elif",  "else", "for",    "while",
                                                   "def", "class", "try",  "except", "finally",
                                                   "with", "async", "match", "case"};
    if (!kws.count(h)) return false;
    if ((h == "match" || h == "case") && tok(line.first).kind == TokenKind::Identifier) {
      // soft keywords only when used as a statement head
      return line.first + 1 < line.last && !is_op(line.first + 1, "=") &&
             !is_op(line.first + 1, ".") && !is_op(line.first + 1, "(");
    }
    return true;
  }

  bool operand_end(std::size_t i) const {
    const Token& t = tok(i);
    if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Number ||
        t.kind == TokenKind::String)
      return true;
    if (t.kind == TokenKind::Keyword) {
      std::string_view s = text(i);
      return s == "True" || s == "False" || s == "None";
    }
    if (t.kind == TokenKind::Operator) {
      std::string_view s = text(i);
      return s == ")" || s == "]" || s == "}";
    }
    return false;
  }

  bool operand_start(std::size_t i) const {
    const Token& t = tok(i);
    if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Number ||
        t.kind == TokenKind::String)
      return true;
    if (t.kind == TokenKind::Keyword) {
      std::string_view s = text(i);
      return s == "True" || s == "False" || s == "None" || s == "lambda";
    }
    return false;
  }

  static bool is_binary_or_assign(std::string_view s) {
    static const std::set<std::string_view> ops = {
        "=",  "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=",
        "@=", "+",  "-",  "/",  "//", "%",   "**", "<<",  ">>",  "&",   "|",  "^",  "<",
        ">",  "<=", ">=", "==", "!=", "->",  ":=", "."};
    return ops.count(s) != 0;
  }

  void check_line(const Line& line) {
    std::vector<std::size_t> s = sig(line);
    if (s.empty()) return;
    const std::string_view head = text(s[0]);

    if (is_compound_header(line)) {
      int depth = 0;
      bool colon = false;
      int lambdas = 0;
      for (std::size_t k : s) {
        std::string_view t = text(k);
        if (tok(k).kind == TokenKind::Operator) {
          if (t == "(" || t == "[" || t == "{") ++depth;
          if (t == ")" || t == "]" || t == "}") --depth;
          if (t == ":" && depth == 0) {
            if (lambdas > 0) {
              --lambdas;
            } else {
              colon = true;
              break;
            }
          }
        } else if (tok(k).kind == TokenKind::Keyword && t == "lambda" && depth == 0) {
          ++lambdas;
        }
      }
      if (!colon) diag(tok(s.back()).span, "expected ':'");
      if ((head == "else" || head == "try" || head == "finally") &&
          (s.size() < 2 || !is_op(s[1], ":")))
        diag(tok(s.size() > 1 ? s[1] : s[0]).span, "invalid syntax");
      std::size_t kw = 0;
      if (head == "async" && s.size() > 1) kw = 1;
      std::string_view kwt = text(s[kw]);
      if (kwt == "def" || kwt == "class") {
        if (kw + 1 >= s.size() || tok(s[kw + 1]).kind != TokenKind::Identifier) {
          diag(tok(s[std::min(kw + 1, s.size() - 1)]).span, "invalid syntax");
        } else if (kwt == "def" && (kw + 2 >= s.size() || !is_op(s[kw + 2], "("))) {
          diag(tok(s[std::min(kw + 2, s.size() - 1)]).span, "expected '('");
        } else if (kwt == "class" && kw + 2 < s.size() && !is_op(s[kw + 2], "(") &&
                   !is_op(s[kw + 2], ":") && !is_op(s[kw + 2], "[")) {
          diag(tok(s[kw + 2]).span, "invalid syntax");
        }
      }
    }

    for (std::size_t j = 1; j < s.size(); ++j) {
      const std::size_t a = s[j - 1];
      const std::size_t b = s[j];
      if (operand_end(a) && operand_start(b)) {
        const bool strings = tok(a).kind == TokenKind::String && tok(b).kind == TokenKind::String;
        const bool soft_head = j == 1 && (head == "match" || head == "case" || head == "type" ||
                                          head == "print" || head == "exec");
        if (!strings && !soft_head) {
          diag(tok(b).span, "invalid syntax");
        } else if (soft_head && (head == "print" || head == "exec")) {
          diag(tok(b).span, "missing parentheses in call to '" + std::string(head) + "'");
        }
      }
      if (tok(a).kind == TokenKind::Operator && is_binary_or_assign(text(a))) {
        if (tok(b).kind == TokenKind::Operator &&
            (text(b) == ")" || text(b) == "]" || text(b) == "}" || text(b) == "=" ||
             text(b) == "==" || text(b) == ",")) {
          if (!(text(a) == "." && false)) diag(tok(b).span, "invalid syntax");
        }
      }
    }
    std::size_t last = s.back();
    if (tok(last).kind == TokenKind::Operator && is_binary_or_assign(text(last)))
      diag(tok(last).span, "invalid syntax");
    if (tok(last).kind == TokenKind::Operator && (text(last) == "*" || text(last) == "**"))
      diag(tok(last).span, "invalid syntax");
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      if (is_op(s[j], ".") && tok(s[j + 1]).kind != TokenKind::Identifier &&
          !(tok(s[j + 1]).kind == TokenKind::Keyword))
        diag(tok(s[j + 1]).span, "invalid syntax");
    }
  }

  int register_function(std::size_t def_token, bool block_body) {
    std::size_t name = def_token + 1;
    while (name < tree_.tokens.size() && tok(name).kind == TokenKind::Comment) ++name;
    if (name >= tree_.tokens.size() || tok(name).kind != TokenKind::Identifier) return -1;
    Function f;
    f.name_token = name;
    f.block_body = block_body;
    f.body = {tok(def_token).span.end, tok(def_token).span.end};
    tree_.functions.push_back(f);
    return static_cast<int>(tree_.functions.size() - 1);
  }

  void close_function_bodies() {
    // Body end: last token of the last statement belonging to the function.
    for (std::size_t fi = 0; fi < tree_.functions.size(); ++fi) {
      Function& f = tree_.functions[fi];
      if (!f.block_body) continue;
      std::size_t end = f.body.start;
      // walk from body start until indentation returns to or below the def line
      const std::size_t def_line = line_begin(text_, tok(f.name_token).span.start);
      const std::size_t def_indent =
          text_.substr(def_line).find_first_not_of(" \t");
      for (const Line& line : lines_) {
        const std::size_t s = tok(line.first).span.start;
        if (s < f.body.start) continue;
        const std::size_t lb = line_begin(text_, s);
        if (s - lb <= def_indent && s > f.body.start && line_begin(text_, s) == lb &&
            text_.substr(lb, s - lb).find_first_not_of(" \t") == std::string_view::npos &&
            s - lb <= def_indent)
          break;
        std::size_t last = line.last > line.first ? line.last - 1 : line.first;
        end = std::max(end, tok(last).span.end);
      }
      f.body.end = end;
    }
  }

  void declare(std::size_t i, bool member) {
    if (tok(i).kind != TokenKind::Identifier) return;
    tree_.declarations.push_back({i, member});
  }

  void pin(std::size_t i) {
    if (tok(i).kind == TokenKind::Identifier) tree_.pinned_names.emplace_back(text(i));
  }

  void collect_declarations(const Line& line, const Block& block) {
    std::vector<std::size_t> s = sig(line);
    if (s.empty()) return;
    const bool member_level = block.owner == BlockKind::Class;
    std::size_t k0 = 0;
    if (text(s[0]) == "async" && s.size() > 1) k0 = 1;
    const std::string_view head = text(s[k0]);

    if (head == "import" || head == "from") {
      for (std::size_t k : s) pin(k);
      return;
    }

    // Attribute names and keyword-argument names are pinned file-wide.
    std::vector<bool> call_paren;  // stack: is this '(' a call?
    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::size_t i = s[j];
      if (j > 0 && is_op(s[j - 1], ".")) pin(i);
      if (is_op(i, "(") || is_op(i, "[") || is_op(i, "{")) {
        call_paren.push_back(is_op(i, "(") && j > 0 && operand_end(s[j - 1]) &&
                             head != "def" && head != "class");
      } else if (is_op(i, ")") || is_op(i, "]") || is_op(i, "}")) {
        if (!call_paren.empty()) call_paren.pop_back();
      } else if (tok(i).kind == TokenKind::Identifier && !call_paren.empty() &&
                 call_paren.back() && j + 1 < s.size() && is_op(s[j + 1], "=") && j > 0 &&
                 (is_op(s[j - 1], "(") || is_op(s[j - 1], ","))) {
        pin(i);
      }
    }

    if (head == "def" || head == "class") {
      if (k0 + 1 < s.size()) declare(s[k0 + 1], member_level);
      if (head == "def") {
        int depth = 0;
        for (std::size_t j = k0 + 2; j < s.size(); ++j) {
          const std::size_t i = s[j];
          if (is_op(i, "(") || is_op(i, "[") || is_op(i, "{")) {
            ++depth;
            continue;
          }
          if (is_op(i, ")") || is_op(i, "]") || is_op(i, "}")) {
            if (--depth == 0) break;
            continue;
          }
          if (depth == 1 && tok(i).kind == TokenKind::Identifier) {
            const std::size_t p = s[j - 1];
            const bool after = is_op(p, "(") || is_op(p, ",") || is_op(p, "*") ||
                               is_op(p, "**") || is_op(p, "/");
            const bool before = j + 1 < s.size() &&
                                (is_op(s[j + 1], ",") || is_op(s[j + 1], ")") ||
                                 is_op(s[j + 1], "=") || is_op(s[j + 1], ":"));
            if (after && before) declare(i, false);
          }
        }
      }
    }

    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::size_t i = s[j];
      if (tok(i).kind == TokenKind::Keyword && text(i) == "for") {
        // targets up to the matching 'in'
        int depth = 0;
        for (std::size_t m = j + 1; m < s.size(); ++m) {
          const std::size_t t = s[m];
          if (depth == 0 && tok(t).kind == TokenKind::Keyword && text(t) == "in") break;
          if (is_op(t, "(") || is_op(t, "[")) ++depth;
          if (is_op(t, ")") || is_op(t, "]")) --depth;
          if (tok(t).kind == TokenKind::Identifier && !is_op(s[m - 1], ".") &&
              !(m + 1 < s.size() && (is_op(s[m + 1], ".") || is_op(s[m + 1], "[") ||
                                     is_op(s[m + 1], "("))))
            declare(t, member_level && j == k0);
        }
      } else if (tok(i).kind == TokenKind::Keyword && text(i) == "lambda") {
        for (std::size_t m = j + 1; m < s.size(); ++m) {
          const std::size_t t = s[m];
          if (is_op(t, ":")) break;
          if (tok(t).kind == TokenKind::Identifier &&
              (is_op(s[m - 1], ",") || s[m - 1] == i || is_op(s[m - 1], "*") ||
               is_op(s[m - 1], "**")))
            declare(t, false);
        }
      } else if (tok(i).kind == TokenKind::Keyword && text(i) == "as" && j + 1 < s.size()) {
        declare(s[j + 1], member_level);
      } else if (is_op(i, ":=") && j > 0) {
        declare(s[j - 1], false);
      }
    }

    if (tok(s[k0]).kind == TokenKind::Keyword && head != "async") return;

    // Assignment targets: every depth-0 segment before the final '=' (or augmented op).
    static const std::set<std::string_view> assign_ops = {
        "=", "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="};
    int depth = 0;
    std::size_t seg_start = 0;
    std::vector<std::pair<std::size_t, std::size_t>> targets;
    bool annotated = false;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const std::size_t i = s[j];
      if (is_op(i, "(") || is_op(i, "[") || is_op(i, "{")) ++depth;
      if (is_op(i, ")") || is_op(i, "]") || is_op(i, "}")) --depth;
      if (depth != 0 || tok(i).kind != TokenKind::Operator) continue;
      if (text(i) == ":" && targets.empty() && !annotated) {
        targets.emplace_back(seg_start, j);
        annotated = true;
        continue;
      }
      if (assign_ops.count(text(i))) {
        if (!annotated) targets.emplace_back(seg_start, j);
        seg_start = j + 1;
        if (text(i) != "=") break;
      }
    }
    for (auto [b, e] : targets) {
      std::vector<bool> tuple_stack;
      for (std::size_t j = b; j < e; ++j) {
        const std::size_t i = s[j];
        if (is_op(i, "(") || is_op(i, "[")) {
          tuple_stack.push_back(!(j > b && operand_end(s[j - 1])));
          continue;
        }
        if (is_op(i, ")") || is_op(i, "]")) {
          if (!tuple_stack.empty()) tuple_stack.pop_back();
          continue;
        }
        if (tok(i).kind != TokenKind::Identifier) continue;
        if (std::find(tuple_stack.begin(), tuple_stack.end(), false) != tuple_stack.end())
          continue;
        if (j > b && is_op(s[j - 1], ".")) continue;
        if (j + 1 < e && (is_op(s[j + 1], ".") || is_op(s[j + 1], "[") || is_op(s[j + 1], "(")))
          continue;
        declare(i, member_level);
      }
    }
  }

  // A docstring that is the whole body of a def or class is load-bearing: removing
  // it would leave an empty block. Such strings stay ordinary statements.
  void drop_lone_docstrings() {
    for (std::size_t i = 0; i < tree_.tokens.size(); ++i) {
      Token& t = tree_.tokens[i];
      if (!t.docstring) continue;
      if (t.span.start == line_begin(text_, t.span.start)) continue;  // module level
      std::size_t j = i + 1;
      while (j < tree_.tokens.size() && (tree_.tokens[j].kind == TokenKind::Comment ||
                                         tree_.tokens[j].kind == TokenKind::Newline))
        ++j;
      if (j >= tree_.tokens.size() || tree_.tokens[j].kind == TokenKind::Dedent) t.docstring = false;
    }
  }

  void pin_misc() {
    for (const Declaration& d : tree_.declarations) {
      std::string_view name = text(d.token);
      if (name == "self" || name == "cls" ||
          (name.size() > 4 && name.substr(0, 2) == "__" && name.substr(name.size() - 2) == "__"))
        tree_.pinned_names.emplace_back(name);
    }
  }

  std::string_view text_;
  ParseTree& tree_;
  std::vector<Line> lines_;
};

}  // namespace

bool is_python_keyword(std::string_view word) { return python_keywords().count(word) != 0; }

ParseTree parse_python(std::string_view text) {
  ParseTree tree;
  Lexer lexer(text);
  lexer.run(tree);
  for (const std::string& name : lexer.fstring_names()) tree.pinned_names.push_back(name);
  Structure(text, tree).run();
  tree.error_regions = regions_from_diagnostics(text, tree.diagnostics);
  return tree;
}

}  // namespace spaci::detail
