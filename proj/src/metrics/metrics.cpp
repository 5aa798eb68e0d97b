#include "spaci/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "spaci/error.hpp"

namespace spaci {

namespace {

void require_nonempty(const std::vector<ScorePair>& pairs) {
  if (pairs.empty()) throw EmptyBatch();
}

using Key = std::tuple<std::string, std::string, std::string>;

MetricsCell compute_cell(const Key& key, const std::vector<const ScorePair*>& group,
                         const MetricsConfig& cfg) {
  MetricsCell c;
  std::tie(c.model_id, c.strategy_id, c.language) = key;
  c.n = group.size();
  double decoupled = 0;
  double residual = 0;
  double sev = 0;
  for (const ScorePair* p : group) {
    decoupled += decoupling_event(*p, cfg) ? 1 : 0;
    residual += p->y_adv - p->y_clean;
    sev += severity(p->y_adv, p->y_clean, cfg);
    if (p->compile_ok) {
      ++c.compile_known;
      if (false_certification(*p, cfg)) ++c.false_certifications;
    }
  }
  const double n = static_cast<double>(c.n);
  c.p_decouple = decoupled / n;
  c.d_adv = residual / n;
  c.psi = sev / n;
  return c;
}

}  // namespace

const std::vector<RubricDimension>& rubric_dimensions() {
  static const std::vector<RubricDimension> dims = {
      {"program_format", 10, &RubricScore::program_format},
      {"time_complexity", 15, &RubricScore::time_complexity},
      {"space_complexity", 15, &RubricScore::space_complexity},
      {"correctness_general", 30, &RubricScore::correctness_general},
      {"correctness_edge_cases", 30, &RubricScore::correctness_edge_cases},
  };
  return dims;
}

void RubricScore::validate() const {
  for (const RubricDimension& d : rubric_dimensions()) {
    const int v = this->*d.field;
    if (v < 0 || v > d.cap) throw RangeViolation(d.key, v);
  }
}

void MetricsConfig::validate() const {
  auto bad = [](const char* what) { throw Error(std::string("invalid metrics config: ") + what); };
  if (!(delta > 0 && delta < 100)) bad("delta must lie in (0, 100)");
  if (!(tau > 0 && tau < 100)) bad("tau must lie in (0, 100)");
  if (!(lambda >= 0)) bad("lambda must be >= 0");
  if (!(s_max > 0 && s_max <= 100)) bad("s_max must lie in (0, 100]");
  if (!(kappa_partial >= 0 && kappa_partial < 100)) bad("kappa_partial must lie in [0, 100)");
}

bool decoupling_event(const ScorePair& pair, const MetricsConfig& cfg) {
  return pair.y_adv - pair.y_clean > cfg.delta;
}

bool critical_crossing(double y_adv, double y_clean, const MetricsConfig& cfg) {
  return y_clean < cfg.tau && cfg.tau <= y_adv;
}

double severity(double y_adv, double y_clean, const MetricsConfig& cfg) {
  const double multiplier = 1.0 + cfg.lambda * (critical_crossing(y_adv, y_clean, cfg) ? 1 : 0);
  const double s = std::min(cfg.s_max, (y_adv - y_clean) * multiplier);
  return std::max(0.0, s);
}

double p_decouple(const std::vector<ScorePair>& pairs, const MetricsConfig& cfg) {
  require_nonempty(pairs);
  double hits = 0;
  for (const ScorePair& p : pairs) hits += decoupling_event(p, cfg) ? 1 : 0;
  return hits / static_cast<double>(pairs.size());
}

double d_adv(const std::vector<ScorePair>& pairs) {
  require_nonempty(pairs);
  double sum = 0;
  for (const ScorePair& p : pairs) sum += p.y_adv - p.y_clean;
  return sum / static_cast<double>(pairs.size());
}

double psi(const std::vector<ScorePair>& pairs, const MetricsConfig& cfg) {
  require_nonempty(pairs);
  double sum = 0;
  for (const ScorePair& p : pairs) sum += severity(p.y_adv, p.y_clean, cfg);
  return sum / static_cast<double>(pairs.size());
}

bool false_certification(const ScorePair& pair, const MetricsConfig& cfg) {
  if (!pair.compile_ok) throw MissingCompileStatus();
  return !*pair.compile_ok && pair.y_adv > cfg.kappa_partial;
}

GroupBy parse_group_by(const std::string& spec) {
  GroupBy g{false, false, false};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "model") {
      g.model = true;
    } else if (item == "strategy") {
      g.strategy = true;
    } else if (item == "language") {
      g.language = true;
    } else {
      throw Error("unknown grouping key '" + item + "' (expected model, strategy, language)");
    }
  }
  return g;
}

std::string to_string(const GroupBy& g) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(g.model, "model");
  add(g.strategy, "strategy");
  add(g.language, "language");
  return out;
}

std::vector<MetricsCell> aggregate(const std::vector<ScorePair>& pairs, const GroupBy& group_by,
                                   const MetricsConfig& cfg) {
  require_nonempty(pairs);
  std::map<Key, std::vector<const ScorePair*>> groups;
  for (const ScorePair& p : pairs) {
    groups[{group_by.model ? p.model_id : kAllKey, group_by.strategy ? p.strategy_id : kAllKey,
            group_by.language ? p.language : kAllKey}]
        .push_back(&p);
  }
  std::vector<MetricsCell> cells;
  std::vector<MetricsCell> block;  // language cells of the current (model, strategy)
  auto flush_mean = [&] {
    if (!group_by.language || !(group_by.model || group_by.strategy) || block.empty()) return;
    MetricsCell mean;
    mean.model_id = block.front().model_id;
    mean.strategy_id = block.front().strategy_id;
    mean.language = kMeanKey;
    for (const MetricsCell& c : block) {
      mean.n += c.n;
      mean.p_decouple += c.p_decouple;
      mean.d_adv += c.d_adv;
      mean.psi += c.psi;
      mean.compile_known += c.compile_known;
      mean.false_certifications += c.false_certifications;
    }
    const double k = static_cast<double>(block.size());
    mean.p_decouple /= k;
    mean.d_adv /= k;
    mean.psi /= k;
    cells.push_back(mean);
    block.clear();
  };
  for (const auto& [key, group] : groups) {
    MetricsCell c = compute_cell(key, group, cfg);
    if (!block.empty() &&
        (block.front().model_id != c.model_id || block.front().strategy_id != c.strategy_id))
      flush_mean();
    cells.push_back(c);
    block.push_back(c);
  }
  flush_mean();
  return cells;
}

std::vector<Deviation> strategy_deviations(const std::vector<MetricsCell>& cells) {
  struct Sum {
    double p = 0, d = 0, s = 0;
    std::size_t k = 0;
  };
  std::map<std::pair<std::string, std::string>, Sum> sums;
  for (const MetricsCell& c : cells) {
    Sum& s = sums[{c.model_id, c.language}];
    s.p += c.p_decouple;
    s.d += c.d_adv;
    s.s += c.psi;
    ++s.k;
  }
  std::vector<Deviation> out;
  for (const MetricsCell& c : cells) {
    const Sum& s = sums.at({c.model_id, c.language});
    const double k = static_cast<double>(s.k);
    out.push_back({c.model_id, c.strategy_id, c.language, c.p_decouple - s.p / k,
                   c.d_adv - s.d / k, c.psi - s.s / k});
  }
  return out;
}

}  // namespace spaci
