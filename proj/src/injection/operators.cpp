#include <algorithm>
#include <set>
#include <sstream>

#include "ast/text_util.hpp"
#include "spaci/error.hpp"
#include "spaci/injection.hpp"

namespace spaci {

namespace {

struct Edit {
  std::size_t start = 0;  // original coordinates
  std::size_t end = 0;
  std::string replacement;
};

struct Applied {
  std::string text;
  std::vector<Span> sites;  // replacement spans in new coordinates
};

Applied apply_edits(std::string_view text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.start < b.start; });
  Applied out;
  std::size_t pos = 0;
  for (const Edit& e : edits) {
    out.text.append(text.substr(pos, e.start - pos));
    const std::size_t at = out.text.size();
    out.text += e.replacement;
    if (!e.replacement.empty()) out.sites.push_back({at, out.text.size()});
    pos = e.end;
  }
  out.text.append(text.substr(pos));
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      break;
    }
    out.emplace_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::string line_indent(std::string_view text, std::size_t pos) {
  const std::size_t b = detail::line_begin(text, pos);
  std::size_t e = b;
  while (e < text.size() && (text[e] == ' ' || text[e] == '\t')) ++e;
  return std::string(text.substr(b, e - b));
}

AdversarialVariant start_variant(const SourceUnit& unit, std::string strategy_id, Operator op) {
  if (unit.parse_status() == ParseStatus::Unparseable)
    throw PreconditionError("operators cannot be applied to an unparseable unit");
  AdversarialVariant v;
  v.origin = unit;
  v.strategy_id = std::move(strategy_id);
  v.op = op;
  v.text = unit.text();
  return v;
}

void finish(AdversarialVariant& v) {
  v.verification.c3 = verify_c3(v, &v.verification.c3_reason);
}

std::string python_docstring(const std::string& body, const std::string& indent) {
  std::string out = "\"\"\"\n";
  for (const std::string& line : split_lines(body)) {
    std::string esc;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\') {
        esc += "\\\\";
      } else if (line[i] == '"' && line.compare(i, 3, "\"\"\"") == 0) {
        esc += "\\\"\\\"\\\"";
        i += 2;
      } else {
        esc.push_back(line[i]);
      }
    }
    out += (esc.empty() ? std::string() : indent + esc) + "\n";
  }
  return out + indent + "\"\"\"";
}

std::string doc_comment(Language lang, const std::string& body, const std::string& indent) {
  std::string out = "/**\n";
  for (const std::string& line : split_lines(body)) {
    const std::string safe = sanitize_comment_line(lang, CommentStyleChoice::Block, line);
    out += indent + " *" + (safe.empty() ? "" : " " + safe) + "\n";
  }
  return out + indent + " */";
}

std::string comment_block(const Payload& payload, const std::string& indent) {
  std::string out;
  for (const std::string& line : split_lines(payload.rendered_text)) out += indent + line + "\n";
  return out;
}

bool in_error_region(const ParseTree& tree, Span s) {
  for (const Span& r : tree.error_regions) {
    if (r.overlaps(s)) return true;
  }
  return false;
}

std::size_t header_insert_point(const SourceUnit& unit, std::string& prefix) {
  const std::size_t at = unit.tree().header_end;
  if (at > 0 && at <= unit.text().size() && unit.text()[at - 1] != '\n') prefix = "\n";
  return std::min(at, unit.text().size());
}

bool starts_with_word(std::string_view text, std::size_t pos, std::string_view word) {
  if (text.compare(pos, word.size(), word) != 0) return false;
  const std::size_t after = pos + word.size();
  return after >= text.size() || !detail::is_ident_char(text[after]);
}

bool compound_statement(Language lang, std::string_view text, std::size_t pos) {
  static const char* const python[] = {"if", "for", "while", "with", "try", "match", "async"};
  static const char* const c_family[] = {"if", "for", "while", "do", "switch", "try"};
  if (lang == Language::Python) {
    for (const char* w : python) {
      if (starts_with_word(text, pos, w)) return true;
    }
    return false;
  }
  for (const char* w : c_family) {
    if (starts_with_word(text, pos, w)) return true;
  }
  return false;
}

bool stdio_available(const SourceUnit& unit) {
  for (const std::string& inc : unit.tree().includes) {
    if (inc == "stdio.h" || inc == "cstdio" || inc == "bits/stdc++.h") return true;
  }
  return false;
}

std::vector<std::string> literal_pieces(Language lang, const std::string& body) {
  std::vector<std::string> lines = split_lines(body);
  if (lines.empty()) lines.emplace_back();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lines.size(); ++i)
    out.push_back(string_literal(lang, lines[i] + (i + 1 < lines.size() ? "\n" : "")));
  return out;
}

std::string python_deadcode(const Payload& payload, const std::string& indent) {
  const std::string inner = indent + "    ";
  std::vector<std::string> lit = split_lines(string_literal(Language::Python, payload.body));
  std::string out = "\n" + indent + "if (False):\n" + inner + "print(";
  for (std::size_t i = 0; i < lit.size(); ++i) {
    if (i > 0) out += lit[i].empty() ? "\n" : "\n" + inner;
    out += lit[i];
  }
  return out + ")\n\n";
}

std::string c_family_deadcode(const SourceUnit& unit, const Payload& payload,
                              const std::string& indent, bool line_start) {
  const Language lang = unit.language();
  const std::vector<std::string> pieces = literal_pieces(lang, payload.body);
  std::string cond;
  std::string call;
  std::string glue;
  if (lang == Language::Java) {
    cond = "if (false)";
    call = "System.out.println(";
    glue = " +";
  } else {
    cond = "if (0)";
    call = stdio_available(unit) ? "puts(" : "(void)(";
  }
  if (!line_start) {
    std::string joined;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (i > 0) joined += glue + " ";
      joined += pieces[i];
    }
    return cond + " { " + call + joined + "); } ";
  }
  const std::string inner = indent + "    ";
  const std::string align(inner.size() + call.size(), ' ');
  std::string out = indent + cond + " {\n" + inner + call;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out += glue + "\n" + align;
    out += pieces[i];
  }
  return out + ");\n" + indent + "}\n";
}

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Pass: return "Pass";
    case Status::Fail: return "Fail";
    case Status::Skipped: return "Skipped";
  }
  return "Skipped";
}

std::string_view to_string(SitePolicy p) {
  switch (p) {
    case SitePolicy::FirstDocstring: return "FirstDocstring";
    case SitePolicy::HeaderComment: return "HeaderComment";
    case SitePolicy::AllTrivia: return "AllTrivia";
  }
  return "HeaderComment";
}

std::string_view to_string(AnchorPolicy p) {
  return p == AnchorPolicy::FirstFunctionBody ? "FirstFunctionBody" : "BeforeMainLogic";
}

bool admissible(const AdversarialVariant& v) {
  return v.verification.c3 == Status::Pass && v.verification.c1 != Status::Fail;
}

IdentifierMapping IdentifierMapping::inverse() const {
  IdentifierMapping inv;
  for (const auto& [from, to] : pairs) inv.pairs[to] = from;
  return inv;
}

bool IdentifierMapping::is_identity() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.first == p.second; });
}

void validate_mapping(const SourceUnit& unit, const AttackSurface& surface,
                      const IdentifierMapping& mapping) {
  const Language lang = unit.language();
  const std::set<std::string> pinned(unit.tree().pinned_names.begin(),
                                     unit.tree().pinned_names.end());
  std::set<std::string> targets;
  for (const auto& [from, to] : mapping.pairs) {
    if (!surface.is_user_defined(from))
      throw PreconditionError("'" + from + "' is not a user-defined symbol");
    if (!targets.insert(to).second)
      throw CollisionError("two symbols map to '" + to + "'");
    if (from == to) continue;
    if (!is_valid_identifier(lang, to))
      throw CollisionError("'" + to + "' is not a valid identifier");
    if (is_builtin_name(lang, to))
      throw CollisionError("'" + to + "' shadows a language-level name");
    if (surface.symbols.count(to) || pinned.count(to))
      throw CollisionError("'" + to + "' already names a symbol in the unit");
  }
}

IdentifierMapping make_mapping(const SourceUnit& unit, const AttackSurface& surface,
                               const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) throw PreconditionError("empty identifier vocabulary");
  const Language lang = unit.language();
  std::set<std::string> taken(unit.tree().pinned_names.begin(), unit.tree().pinned_names.end());
  for (const auto& [name, sym] : surface.symbols) taken.insert(name);
  auto usable = [&](const std::string& n) {
    return !taken.count(n) && is_valid_identifier(lang, n) && !is_builtin_name(lang, n);
  };
  IdentifierMapping m;
  const std::vector<std::string> names = surface.user_defined();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& base = vocabulary[i % vocabulary.size()];
    std::size_t suffix = i / vocabulary.size();
    std::string candidate = suffix ? base + "_" + std::to_string(suffix) : base;
    while (!usable(candidate)) candidate = base + "_" + std::to_string(++suffix);
    taken.insert(candidate);
    m.pairs[names[i]] = candidate;
  }
  return m;
}

AdversarialVariant operator_a_encapsulate(const SourceUnit& unit, const Payload& payload,
                                          SitePolicy policy) {
  if (payload.op != Operator::A)
    throw PreconditionError("operator A needs an operator A payload");
  AdversarialVariant v = start_variant(unit, payload.strategy_id, Operator::A);
  const ParseTree& tree = unit.tree();
  const std::string_view text = unit.text();
  const Language lang = unit.language();
  if (payload.rendered_text.empty()) {
    finish(v);
    return v;
  }

  std::vector<Edit> edits;
  auto add_header = [&] {
    std::string prefix;
    const std::size_t at = header_insert_point(unit, prefix);
    edits.push_back({at, at, prefix + comment_block(payload, "")});
  };

  switch (policy) {
    case SitePolicy::HeaderComment:
      add_header();
      break;
    case SitePolicy::AllTrivia: {
      add_header();
      for (const TriviaRegion& r : extract_attack_surface(unit).trivia) {
        if (r.kind != TriviaKind::BlankRun) continue;
        edits.push_back({r.span.start, r.span.start,
                         comment_block(payload, line_indent(text, r.span.end))});
      }
      break;
    }
    case SitePolicy::FirstDocstring: {
      if (lang == Language::Python) {
        const Token* doc = nullptr;
        for (const Token& t : tree.tokens) {
          if (t.kind == TokenKind::String && t.docstring && !in_error_region(tree, t.span)) {
            doc = &t;
            break;
          }
        }
        if (doc) {
          edits.push_back({doc->span.start, doc->span.end,
                           python_docstring(payload.body, line_indent(text, doc->span.start))});
          break;
        }
        // No docstring yet: open the first block-bodied function with one.
        for (std::size_t f = 0; f < tree.functions.size() && edits.empty(); ++f) {
          if (!tree.functions[f].block_body) continue;
          for (const Statement& st : tree.statements) {
            if (st.function != static_cast<int>(f) || !st.line_start) continue;
            if (in_error_region(tree, {st.insert_at, st.insert_at + 1})) break;
            edits.push_back({st.insert_at, st.insert_at,
                             st.indent + python_docstring(payload.body, st.indent) + "\n"});
            break;
          }
        }
        if (edits.empty()) {
          std::string prefix;
          const std::size_t at = header_insert_point(unit, prefix);
          edits.push_back({at, at, prefix + python_docstring(payload.body, "") + "\n"});
        }
        break;
      }
      for (const Token& t : tree.tokens) {
        if (t.kind == TokenKind::Comment && t.comment == CommentStyle::Doc &&
            !in_error_region(tree, t.span)) {
          edits.push_back({t.span.start, t.span.end,
                           doc_comment(lang, payload.body, line_indent(text, t.span.start))});
          break;
        }
      }
      if (edits.empty()) throw NoLegalSite("no documentation comment to carry the payload");
      break;
    }
  }

  Applied applied = apply_edits(text, std::move(edits));
  v.text = std::move(applied.text);
  v.injection_sites = std::move(applied.sites);
  finish(v);
  return v;
}

AdversarialVariant operator_b_shadow(const SourceUnit& unit, const IdentifierMapping& mapping) {
  return operator_b_shadow(unit, extract_attack_surface(unit), mapping);
}

AdversarialVariant operator_b_shadow(const SourceUnit& unit, const AttackSurface& surface,
                                     const IdentifierMapping& mapping) {
  AdversarialVariant v = start_variant(unit, "", Operator::B);
  validate_mapping(unit, surface, mapping);
  v.mapping = mapping;
  std::vector<Edit> edits;
  for (const auto& [from, to] : mapping.pairs) {
    if (from == to) continue;
    const Symbol& sym = surface.symbols.at(from);
    for (const Span& s : sym.occurrences) {
      if (s.end > unit.text().size() || unit.slice(s) != from)
        throw SpanDriftError("occurrence of '" + from + "' at byte " + std::to_string(s.start) +
                             " is stale");
      edits.push_back({s.start, s.end, to});
    }
  }
  Applied applied = apply_edits(unit.text(), std::move(edits));
  v.text = std::move(applied.text);
  v.injection_sites = std::move(applied.sites);
  finish(v);
  return v;
}

AdversarialVariant operator_c_interleave(const SourceUnit& unit, const Payload& payload,
                                         AnchorPolicy policy) {
  if (payload.op != Operator::C)
    throw PreconditionError("operator C needs an operator C payload");
  AdversarialVariant v = start_variant(unit, payload.strategy_id, Operator::C);
  const Language lang = unit.language();
  const std::string_view text = unit.text();
  const AttackSurface surface = extract_attack_surface(unit);

  std::vector<const DeadcodeAnchor*> usable;
  for (const DeadcodeAnchor& a : surface.anchors) {
    if (lang == Language::Python && !a.line_start) continue;
    usable.push_back(&a);
  }
  int function = -1;
  for (const DeadcodeAnchor* a : usable) {
    if (a->function >= 0) {
      function = a->function;
      break;
    }
  }
  std::vector<const DeadcodeAnchor*> candidates;
  for (const DeadcodeAnchor* a : usable) {
    if (a->function == function) candidates.push_back(a);
  }
  if (function < 0 && lang != Language::Python) candidates.clear();
  if (candidates.empty()) throw NoAnchor("no statement boundary inside a function body");

  const DeadcodeAnchor* chosen = candidates.front();
  if (policy == AnchorPolicy::BeforeMainLogic) {
    chosen = candidates.back();
    for (const DeadcodeAnchor* a : candidates) {
      if (compound_statement(lang, text, a->statement.start)) {
        chosen = a;
        break;
      }
    }
  }

  const std::string block = lang == Language::Python
                                ? python_deadcode(payload, chosen->indent)
                                : c_family_deadcode(unit, payload, chosen->indent,
                                                    chosen->line_start);
  Applied applied = apply_edits(text, {{chosen->insert_at, chosen->insert_at, block}});
  v.text = std::move(applied.text);
  v.injection_sites = applied.sites;
  v.deadcode_sites = std::move(applied.sites);
  finish(v);
  return v;
}

AdversarialVariant compose(const AdversarialVariant& first, const AdversarialVariant& second) {
  if (second.origin.text() != first.text)
    throw PreconditionError("second variant was not derived from the first");
  if (second.op != Operator::C)
    throw PreconditionError("only insertion-only (operator C) variants compose");
  std::vector<Span> inserted = second.deadcode_sites;
  std::sort(inserted.begin(), inserted.end());
  // Map an intermediate offset into the composed text.
  auto shift = [&](std::size_t p, bool end) {
    std::size_t delta = 0;
    for (const Span& d : inserted) {
      const std::size_t at = d.start - delta;
      if (at < p || (!end && at == p)) delta += d.size();
    }
    return p + delta;
  };
  AdversarialVariant out = second;
  out.origin = first.origin;
  out.strategy_id = first.strategy_id + "+" + second.strategy_id;
  out.mapping = first.mapping;
  for (const Span& s : first.injection_sites)
    out.injection_sites.push_back({shift(s.start, false), shift(s.end, true)});
  for (const Span& s : first.deadcode_sites)
    out.deadcode_sites.push_back({shift(s.start, false), shift(s.end, true)});
  std::sort(out.injection_sites.begin(), out.injection_sites.end());
  std::sort(out.deadcode_sites.begin(), out.deadcode_sites.end());
  finish(out);
  return out;
}

AdversarialVariant inject(const SourceUnit& unit, const StrategySpec& spec,
                          const InjectionOptions& options) {
  RenderOptions ro;
  ro.seed = options.seed;
  ro.score_target = options.score_target;
  const Payload payload = render_payload(spec, unit.language(), unit.question_id(), ro);
  AdversarialVariant v;
  switch (spec.op) {
    case Operator::A: {
      const SitePolicy policy = options.site_policy.value_or(
          unit.language() == Language::Python ? SitePolicy::FirstDocstring
                                              : SitePolicy::HeaderComment);
      v = operator_a_encapsulate(unit, payload, policy);
      break;
    }
    case Operator::B: {
      const AttackSurface surface = extract_attack_surface(unit);
      v = operator_b_shadow(unit, surface,
                            make_mapping(unit, surface, payload.identifier_vocabulary));
      break;
    }
    case Operator::C:
      v = operator_c_interleave(unit, payload, options.anchor_policy);
      break;
  }
  v.strategy_id = spec.id;
  return v;
}

Status verify_c3(const AdversarialVariant& variant, std::string* reason) {
  auto fail = [&](std::string why) {
    if (reason) *reason = std::move(why);
    return Status::Fail;
  };
  const SourceUnit& original = variant.origin;
  if (original.parse_status() == ParseStatus::Unparseable) return fail("original is unparseable");
  const Language lang = original.language();
  static const char* const idiom[] = {"if (False):", "if (0)", "if (false)"};
  for (const Span& s : variant.deadcode_sites) {
    if (s.end > variant.text.size()) return fail("dead-code site out of range");
    std::string_view site = std::string_view(variant.text).substr(s.start, s.size());
    const std::size_t first = site.find_first_not_of(" \t\r\n");
    const std::string_view expected = lang == Language::Python ? idiom[0]
                                      : lang == Language::Java ? idiom[2]
                                                               : idiom[1];
    if (first == std::string_view::npos || site.substr(first, expected.size()) != expected)
      return fail("dead-code site does not hold an unreachable branch");
  }
  std::string text = delete_spans(variant.text, variant.deadcode_sites);
  if (text.empty()) return fail("variant is empty");
  SourceUnit reduced = parse(std::move(text), lang);
  if (reduced.parse_status() == ParseStatus::Unparseable) return fail("variant is unparseable");
  std::vector<NormalToken> got = strip_trivia(reduced);
  const IdentifierMapping inv = variant.mapping.inverse();
  for (NormalToken& t : got) {
    if (t.kind != TokenKind::Identifier) continue;
    auto it = inv.pairs.find(t.text);
    if (it != inv.pairs.end()) t.text = it->second;
  }
  const std::vector<NormalToken> want = strip_trivia(original);
  const long diff = first_difference(want, got);
  if (diff >= 0) {
    std::ostringstream msg;
    msg << "token " << diff << " differs: ";
    msg << (static_cast<std::size_t>(diff) < want.size() ? "'" + want[diff].text + "'" : "<end>");
    msg << " vs ";
    msg << (static_cast<std::size_t>(diff) < got.size() ? "'" + got[diff].text + "'" : "<end>");
    return fail(msg.str());
  }
  if (reason) reason->clear();
  return Status::Pass;
}

}  // namespace spaci
