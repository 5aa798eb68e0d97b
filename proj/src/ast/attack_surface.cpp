#include "spaci/attack_surface.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "spaci/error.hpp"
#include "text_util.hpp"

namespace spaci {

std::string_view to_string(TriviaKind kind) {
  switch (kind) {
    case TriviaKind::LineComment: return "LineComment";
    case TriviaKind::BlockComment: return "BlockComment";
    case TriviaKind::Docstring: return "Docstring";
    case TriviaKind::BlankRun: return "BlankRun";
  }
  return "LineComment";
}

namespace {

using NameSet = std::unordered_set<std::string_view>;

const NameSet& python_builtins() {
  static const NameSet names = {
      "print",      "len",        "range",       "input",       "int",        "str",
      "float",      "list",       "dict",        "set",         "tuple",      "sum",
      "min",        "max",        "abs",         "sorted",      "enumerate",  "zip",
      "map",        "filter",     "open",        "bool",        "type",       "isinstance",
      "round",      "reversed",   "any",         "all",         "ord",        "chr",
      "divmod",     "pow",        "iter",        "next",        "id",         "hash",
      "object",     "super",      "property",    "staticmethod", "classmethod", "repr",
      "format",     "bin",        "hex",         "oct",         "frozenset",  "bytes",
      "bytearray",  "complex",    "slice",       "getattr",     "setattr",    "hasattr",
      "delattr",    "callable",   "vars",        "globals",     "locals",     "dir",
      "help",       "exit",       "quit",        "exec",        "eval",       "compile",
      "memoryview", "issubclass", "ascii",       "breakpoint",  "self",       "cls",
      "Exception",  "BaseException", "ValueError", "TypeError", "KeyError",   "IndexError",
      "ZeroDivisionError", "RuntimeError", "StopIteration", "AttributeError", "NameError",
      "NotImplementedError", "NotImplemented", "AssertionError", "OverflowError",
      "RecursionError", "EOFError", "IOError", "OSError", "ArithmeticError", "LookupError",
      "KeyboardInterrupt", "SystemExit", "ImportError", "ModuleNotFoundError",
      "FileNotFoundError", "MemoryError", "UnicodeError", "Ellipsis", "sys", "math", "os",
      "re", "collections", "itertools", "functools", "heapq", "bisect", "string", "random",
      "_"};
  return names;
}

const NameSet& c_family_builtins() {
  static const NameSet names = {
      // C library
      "main", "printf", "scanf", "puts", "gets", "fgets", "fputs", "putchar", "getchar",
      "malloc", "calloc", "realloc", "free", "strlen", "strcpy", "strncpy", "strcmp", "strncmp",
      "strcat", "strncat", "strchr", "strrchr", "strstr", "strtok", "memcpy", "memset",
      "memmove", "memcmp", "abs", "labs", "llabs", "fabs", "sqrt", "pow", "exp", "log", "log2",
      "log10", "sin", "cos", "tan", "atan", "atan2", "floor", "ceil", "round", "fmod", "atoi",
      "atof", "atol", "atoll", "strtol", "strtoll", "strtoul", "strtod", "rand", "srand",
      "time", "exit", "abort", "qsort", "bsearch", "sprintf", "snprintf", "fprintf", "fscanf",
      "sscanf", "fopen", "fclose", "fread", "fwrite", "fflush", "getline", "stdin", "stdout",
      "stderr", "NULL", "EOF", "size_t", "ssize_t", "FILE", "isdigit", "isalpha", "isalnum",
      "isspace", "isupper", "islower", "toupper", "tolower", "INT_MAX", "INT_MIN", "LLONG_MAX",
      "LLONG_MIN", "UINT_MAX", "bool", "true", "false", "assert", "errno", "int64_t",
      "int32_t", "uint64_t", "uint32_t", "uint8_t", "int8_t", "int16_t", "uint16_t",
      // C++ standard library
      "std", "cout", "cin", "cerr", "clog", "endl", "string", "vector", "map", "set",
      "unordered_map", "unordered_set", "multiset", "multimap", "pair", "make_pair", "tuple",
      "make_tuple", "get", "sort", "stable_sort", "swap", "max", "min", "reverse", "find",
      "count", "accumulate", "begin", "end", "size", "push_back", "pop_back", "queue",
      "priority_queue", "stack", "deque", "list", "array", "bitset", "to_string", "stoi",
      "stol", "stoll", "stod", "getline", "move", "forward", "unique_ptr", "shared_ptr",
      "make_unique", "make_shared", "function", "lower_bound", "upper_bound", "fill", "iota",
      "min_element", "max_element", "numeric_limits", "greater", "less", "hash", "ios",
      "ios_base", "sync_with_stdio", "tie", "fixed", "setprecision", "istringstream",
      "ostringstream", "stringstream", "ifstream", "ofstream", "exception", "runtime_error",
      "invalid_argument", "out_of_range", "optional", "variant", "nullopt", "span", "gcd",
      "lcm", "abs", "distance", "next", "prev", "advance", "transform", "any_of", "all_of",
      "none_of", "memset", "string_view", "size_type", "npos", "data", "first", "second",
      // Java standard library
      "String", "System", "Math", "Integer", "Long", "Double", "Float", "Boolean", "Character",
      "Byte", "Short", "Object", "StringBuilder", "Scanner", "Arrays", "Collections", "List",
      "ArrayList", "LinkedList", "Map", "HashMap", "TreeMap", "Set", "HashSet", "TreeSet",
      "Deque", "ArrayDeque", "Queue", "PriorityQueue", "Iterator", "Exception",
      "RuntimeException", "IllegalArgumentException", "IllegalStateException",
      "ArithmeticException", "NullPointerException", "IndexOutOfBoundsException",
      "NumberFormatException", "IOException", "BufferedReader", "InputStreamReader",
      "PrintWriter", "Override", "Thread", "Runnable", "Comparable", "Comparator", "Optional",
      "Stream", "Collectors", "Iterable", "CharSequence", "Number", "Void", "Record", "Enum",
      "length", "out", "in", "err", "println", "print", "equals", "hashCode", "toString",
      "compareTo", "var", "record", "yield", "sealed", "permits"};
  return names;
}

std::size_t line_end_excl(std::string_view text, std::size_t pos) {
  while (pos < text.size() && text[pos] != '\n') ++pos;
  return pos;
}

bool blank_line(std::string_view line) {
  return line.find_first_not_of(" \t\r\f\v") == std::string_view::npos;
}

bool in_regions(const std::vector<Span>& regions, Span s) {
  for (const Span& r : regions) {
    if (r.overlaps(s) || (s.empty() && r.contains(s.start))) return true;
  }
  return false;
}

std::vector<TriviaRegion> collect_trivia(const SourceUnit& unit) {
  const ParseTree& tree = unit.tree();
  const std::string_view text = unit.text();
  std::vector<TriviaRegion> out;
  for (const Token& t : tree.tokens) {
    if (in_regions(tree.error_regions, t.span)) continue;
    if (t.kind == TokenKind::Comment) {
      TriviaKind kind = t.comment == CommentStyle::Line    ? TriviaKind::LineComment
                        : t.comment == CommentStyle::Doc   ? TriviaKind::Docstring
                                                           : TriviaKind::BlockComment;
      out.push_back({t.span, kind});
    } else if (t.kind == TokenKind::String && t.docstring) {
      out.push_back({t.span, TriviaKind::Docstring});
    }
  }
  // Runs of two or more blank lines that are not inside any token.
  std::size_t pos = 0;
  std::size_t run_start = 0;
  int run = 0;
  auto flush = [&](std::size_t end) {
    if (run >= 2) {
      Span s{run_start, end};
      bool inside = false;
      for (const Token& t : tree.tokens) {
        if (t.span.overlaps(s)) {
          inside = true;
          break;
        }
      }
      if (!inside && !in_regions(tree.error_regions, s)) out.push_back({s, TriviaKind::BlankRun});
    }
    run = 0;
  };
  while (pos < text.size()) {
    const std::size_t eol = line_end_excl(text, pos);
    const std::size_t next = eol < text.size() ? eol + 1 : eol;
    if (blank_line(text.substr(pos, eol - pos)) && eol < text.size()) {
      if (run == 0) run_start = pos;
      ++run;
    } else {
      flush(pos);
    }
    pos = next;
  }
  flush(pos);
  std::sort(out.begin(), out.end(),
            [](const TriviaRegion& a, const TriviaRegion& b) { return a.span < b.span; });
  return out;
}

}  // namespace

bool is_builtin_name(Language lang, std::string_view name) {
  return lang == Language::Python ? python_builtins().count(name) != 0
                                  : c_family_builtins().count(name) != 0;
}

bool is_keyword(Language lang, std::string_view name) {
  return lang == Language::Python ? detail::is_python_keyword(name)
                                  : detail::is_c_family_keyword(lang, name);
}

bool is_valid_identifier(Language lang, std::string_view name) {
  if (name.empty() || !detail::is_ident_start(static_cast<unsigned char>(name[0]))) return false;
  for (char c : name) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || !detail::is_ident_char(u)) return false;
  }
  if (is_keyword(lang, name)) return false;
  if (lang == Language::Python && (name == "match" || name == "case" || name == "type"))
    return false;
  if (lang == Language::Java && (name == "var" || name == "record" || name == "yield" ||
                                 name == "sealed" || name == "permits" || name == "_"))
    return false;
  if (lang != Language::Python && lang != Language::Java && name.size() >= 2 && name[0] == '_' &&
      (name[1] == '_' || (name[1] >= 'A' && name[1] <= 'Z')))
    return false;  // reserved for the implementation
  return true;
}

std::vector<std::string> AttackSurface::user_defined() const {
  std::vector<const Symbol*> syms;
  for (const auto& [name, sym] : symbols) {
    if (sym.origin == SymbolOrigin::UserDefined) syms.push_back(&sym);
  }
  std::sort(syms.begin(), syms.end(), [](const Symbol* a, const Symbol* b) {
    return a->occurrences.front().start < b->occurrences.front().start;
  });
  std::vector<std::string> out;
  for (const Symbol* s : syms) out.push_back(s->name);
  return out;
}

bool AttackSurface::is_user_defined(const std::string& name) const {
  auto it = symbols.find(name);
  return it != symbols.end() && it->second.origin == SymbolOrigin::UserDefined;
}

AttackSurface extract_attack_surface(const SourceUnit& unit) {
  if (unit.parse_status() == ParseStatus::Unparseable)
    throw PreconditionError("cannot extract an attack surface from an unparseable unit");
  const ParseTree& tree = unit.tree();
  const Language lang = unit.language();
  AttackSurface surface;
  surface.trivia = collect_trivia(unit);

  std::set<std::string, std::less<>> declared;
  for (const Declaration& d : tree.declarations) {
    const Token& t = tree.tokens[d.token];
    if (in_regions(tree.error_regions, t.span)) continue;
    declared.insert(std::string(unit.token_text(t)));
  }
  const std::set<std::string, std::less<>> pinned(tree.pinned_names.begin(),
                                                  tree.pinned_names.end());
  std::set<std::string, std::less<>> tainted;
  for (const Token& t : tree.tokens) {
    if (t.kind != TokenKind::Identifier) continue;
    std::string name(unit.token_text(t));
    if (in_regions(tree.error_regions, t.span)) {
      tainted.insert(name);
      continue;
    }
    Symbol& sym = surface.symbols[name];
    sym.name = name;
    sym.occurrences.push_back(t.span);
  }
  for (auto& [name, sym] : surface.symbols) {
    const bool user = declared.count(name) && !pinned.count(name) && !tainted.count(name) &&
                      !is_builtin_name(lang, name) && !is_keyword(lang, name) &&
                      is_valid_identifier(lang, name);
    sym.origin = user ? SymbolOrigin::UserDefined : SymbolOrigin::External;
  }

  for (const Statement& st : tree.statements) {
    if (!st.anchorable) continue;
    const Token& t = tree.tokens[st.first_token];
    if (in_regions(tree.error_regions, t.span) ||
        in_regions(tree.error_regions, Span{st.insert_at, st.insert_at}))
      continue;
    DeadcodeAnchor a;
    a.statement = t.span;
    a.insert_at = st.insert_at;
    a.indent = st.indent;
    a.line_start = st.line_start;
    a.function = st.function;
    surface.anchors.push_back(std::move(a));
  }
  return surface;
}

namespace {

std::string normalize_directive(std::string_view d) {
  std::string out;
  bool space = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    char c = d[i];
    if (c == '\\' && i + 1 < d.size() && (d[i + 1] == '\n' || d[i + 1] == '\r')) {
      space = true;
      continue;
    }
    if (c == '/' && i + 1 < d.size() && d[i + 1] == '*') {
      std::size_t close = d.find("*/", i + 2);
      i = close == std::string_view::npos ? d.size() : close + 1;
      space = true;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<NormalToken> strip_trivia(const SourceUnit& unit) {
  if (unit.parse_status() == ParseStatus::Unparseable)
    throw PreconditionError("cannot strip trivia from an unparseable unit");
  const auto& tokens = unit.tree().tokens;
  std::vector<NormalToken> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind == TokenKind::Comment) continue;
    if (t.docstring) {
      std::size_t j = i + 1;
      while (j < tokens.size() && tokens[j].kind == TokenKind::Comment) ++j;
      if (j < tokens.size() && tokens[j].kind == TokenKind::Newline) i = j;
      continue;
    }
    switch (t.kind) {
      case TokenKind::Newline:
      case TokenKind::Indent:
        out.push_back({t.kind, ""});
        break;
      case TokenKind::Dedent:
        if (!out.empty() && out.back().kind == TokenKind::Indent) {
          out.pop_back();
        } else {
          out.push_back({t.kind, ""});
        }
        break;
      case TokenKind::Preprocessor:
        out.push_back({t.kind, normalize_directive(unit.token_text(t))});
        break;
      default:
        out.push_back({t.kind, std::string(unit.token_text(t))});
    }
  }
  return out;
}

std::string delete_spans(std::string_view text, std::vector<Span> spans) {
  spans = detail::merge_spans(std::move(spans));
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  for (const Span& s : spans) {
    if (s.start < pos || s.end > text.size()) continue;
    out.append(text.substr(pos, s.start - pos));
    pos = s.end;
    if (!out.empty() && pos < text.size() && !is_space(out.back()) && !is_space(text[pos]))
      out.push_back(' ');
  }
  out.append(text.substr(std::min(pos, text.size())));
  return out;
}

std::string delete_all_trivia(const SourceUnit& unit) {
  std::vector<Span> spans;
  for (const TriviaRegion& r : extract_attack_surface(unit).trivia) spans.push_back(r.span);
  return delete_spans(unit.text(), std::move(spans));
}

long first_difference(const std::vector<NormalToken>& a, const std::vector<NormalToken>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(a[i] == b[i])) return static_cast<long>(i);
  }
  return a.size() == b.size() ? -1 : static_cast<long>(n);
}

}  // namespace spaci
