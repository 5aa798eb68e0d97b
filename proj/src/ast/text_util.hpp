#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "spaci/source.hpp"

namespace spaci::detail {

inline bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

inline bool is_ident_char(unsigned char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline std::size_t line_begin(std::string_view text, std::size_t pos) {
  if (pos > text.size()) pos = text.size();
  while (pos > 0 && text[pos - 1] != '\n') --pos;
  return pos;
}

/// Offset just past the newline that ends the line containing `pos` (or text size).
inline std::size_t line_after(std::string_view text, std::size_t pos) {
  while (pos < text.size() && text[pos] != '\n') ++pos;
  return pos < text.size() ? pos + 1 : pos;
}

/// Sorts and merges overlapping or touching spans.
std::vector<Span> merge_spans(std::vector<Span> spans);

/// Error regions cover whole lines around each diagnostic.
std::vector<Span> regions_from_diagnostics(std::string_view text,
                                           const std::vector<Diagnostic>& diags);

bool is_python_keyword(std::string_view word);
bool is_c_family_keyword(Language lang, std::string_view word);

ParseTree parse_python(std::string_view text);
ParseTree parse_c_family(std::string_view text, Language lang);

}  // namespace spaci::detail
