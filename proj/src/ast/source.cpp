#include "spaci/source.hpp"

#include <algorithm>

#include "spaci/error.hpp"
#include "text_util.hpp"

namespace spaci {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Number: return "number";
    case TokenKind::String: return "string";
    case TokenKind::Char: return "char";
    case TokenKind::Operator: return "operator";
    case TokenKind::Comment: return "comment";
    case TokenKind::Preprocessor: return "preprocessor";
    case TokenKind::Newline: return "newline";
    case TokenKind::Indent: return "indent";
    case TokenKind::Dedent: return "dedent";
    case TokenKind::Error: return "error";
  }
  return "error";
}

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::Clean: return "Clean";
    case ParseStatus::Recovered: return "Recovered";
    case ParseStatus::Unparseable: return "Unparseable";
  }
  return "Unparseable";
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
      return false;
    i += extra + 1;
  }
  return true;
}

SourceUnit& SourceUnit::with_ids(std::string submission_id, std::string question_id) {
  submission_id_ = std::move(submission_id);
  question_id_ = std::move(question_id);
  return *this;
}

SourceUnit& SourceUnit::with_problem(std::string description) {
  problem_description_ = std::move(description);
  return *this;
}

namespace {

bool mostly_garbage(std::string_view text, const ParseTree& tree) {
  std::size_t error_bytes = 0;
  for (const Token& t : tree.tokens) {
    if (t.kind == TokenKind::Error && t.span.size() < 4096) error_bytes += t.span.size();
  }
  std::size_t visible = 0;
  for (char c : text) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') ++visible;
  }
  return visible > 0 && error_bytes * 2 > visible;
}

}  // namespace

SourceUnit parse(std::string text, Language language) {
  if (text.empty()) throw PreconditionError("source text is empty");
  SourceUnit unit;
  unit.language_ = language;
  unit.text_ = std::move(text);
  const std::string_view view = unit.text_;
  if (!is_valid_utf8(view) || view.find('\0') != std::string_view::npos) {
    unit.status_ = ParseStatus::Unparseable;
    return unit;
  }
  auto tree = std::make_shared<ParseTree>(language == Language::Python
                                              ? detail::parse_python(view)
                                              : detail::parse_c_family(view, language));
  if (mostly_garbage(view, *tree)) {
    unit.status_ = ParseStatus::Unparseable;
  } else {
    unit.status_ = tree->diagnostics.empty() ? ParseStatus::Clean : ParseStatus::Recovered;
  }
  unit.tree_ = std::move(tree);
  return unit;
}

namespace detail {

std::vector<Span> merge_spans(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  std::vector<Span> out;
  for (const Span& s : spans) {
    if (!out.empty() && s.start <= out.back().end) {
      out.back().end = std::max(out.back().end, s.end);
    } else {
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Span> regions_from_diagnostics(std::string_view text,
                                           const std::vector<Diagnostic>& diags) {
  std::vector<Span> spans;
  for (const Diagnostic& d : diags) {
    const std::size_t start = line_begin(text, d.span.start);
    const std::size_t last = d.span.end > d.span.start ? d.span.end - 1 : d.span.start;
    std::size_t end = line_after(text, std::min(last, text.size()));
    if (end <= start) end = std::min(text.size(), start + 1);
    spans.push_back({start, std::max(end, start)});
  }
  return merge_spans(std::move(spans));
}

}  // namespace detail
}  // namespace spaci
