#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "spaci/error.hpp"
#include "spaci/hash.hpp"
#include "spaci/report.hpp"

namespace spaci {

namespace {

const std::vector<std::string> kCellsHeader = {"model",  "strategy", "language",
                                               "n",      "p_decouple", "d_adv",
                                               "psi",    "compile_known", "false_certifications"};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& header) {
  if (t.header != header) throw SchemaViolation("header", "unexpected CSV header");
  for (const auto& row : t.rows) {
    if (row.size() != header.size()) throw SchemaViolation("row", "CSV row has the wrong width");
  }
}

double to_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw SchemaViolation(what, std::string("bad number in ") + what);
  return v;
}

std::size_t to_size(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw SchemaViolation(what, std::string("bad count in ") + what);
  return static_cast<std::size_t>(std::stoull(s));
}

std::vector<LeaderboardEntry> rank(const std::map<std::string, std::vector<double>>& groups) {
  std::vector<LeaderboardEntry> out;
  for (const auto& [key, vals] : groups) {
    double sum = 0;
    for (double v : vals) sum += v;
    out.push_back({0, key, sum / static_cast<double>(vals.size()), vals.size()});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.mean > b.mean; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0) v = 0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      const std::string& f = row[i];
      if (f.find_first_of(",\"\r\n") == std::string::npos) {
        out << f;
      } else {
        out << '"';
        for (char c : f) {
          if (c == '"') out << '"';
          out << c;
        }
        out << '"';
      }
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out.str();
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw SchemaViolation("csv", "unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  CsvTable t;
  if (rows.empty()) return t;
  t.header = std::move(rows.front());
  t.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

CsvTable cells_table(const std::vector<MetricsCell>& cells) {
  CsvTable t{kCellsHeader, {}};
  for (const MetricsCell& c : cells) {
    t.rows.push_back({c.model_id, c.strategy_id, c.language, std::to_string(c.n),
                      format_number(c.p_decouple), format_number(c.d_adv), format_number(c.psi),
                      std::to_string(c.compile_known), std::to_string(c.false_certifications)});
  }
  return t;
}

std::vector<MetricsCell> cells_from_table(const CsvTable& table) {
  expect_header(table, kCellsHeader);
  std::vector<MetricsCell> out;
  for (const auto& r : table.rows) {
    MetricsCell c;
    c.model_id = r[0];
    c.strategy_id = r[1];
    c.language = r[2];
    c.n = to_size(r[3], "n");
    c.p_decouple = to_double(r[4], "p_decouple");
    c.d_adv = to_double(r[5], "d_adv");
    c.psi = to_double(r[6], "psi");
    c.compile_known = to_size(r[7], "compile_known");
    c.false_certifications = to_size(r[8], "false_certifications");
    out.push_back(std::move(c));
  }
  return out;
}

CsvTable leaderboard_table(const std::vector<LeaderboardEntry>& board, const std::string& key_name,
                           const std::string& metric) {
  CsvTable t{{"rank", key_name, "mean_" + metric, "cells"}, {}};
  for (const LeaderboardEntry& e : board)
    t.rows.push_back({std::to_string(e.rank), e.key, format_number(e.mean), std::to_string(e.cells)});
  return t;
}

std::vector<LeaderboardEntry> leaderboard_from_table(const CsvTable& table) {
  if (table.header.size() != 4 || table.header[0] != "rank" ||
      table.header[2].rfind("mean_", 0) != 0 || table.header[3] != "cells")
    throw SchemaViolation("header", "unexpected leaderboard header");
  expect_header(table, table.header);
  std::vector<LeaderboardEntry> out;
  for (const auto& r : table.rows)
    out.push_back({to_size(r[0], "rank"), r[1], to_double(r[2], "mean"), to_size(r[3], "cells")});
  return out;
}

CsvTable heatmap_table(const Heatmap& h) {
  CsvTable t;
  t.header.push_back("model");
  t.header.insert(t.header.end(), h.columns.begin(), h.columns.end());
  for (std::size_t i = 0; i < h.rows.size(); ++i) {
    std::vector<std::string> row{h.rows[i]};
    for (const auto& v : h.values[i]) row.push_back(v ? format_number(*v) : "");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Heatmap heatmap_from_table(const CsvTable& table, const std::string& metric) {
  if (table.header.empty() || table.header[0] != "model")
    throw SchemaViolation("header", "heatmap header must start with 'model'");
  expect_header(table, table.header);
  Heatmap h;
  h.metric = metric;
  h.columns.assign(table.header.begin() + 1, table.header.end());
  for (const auto& r : table.rows) {
    h.rows.push_back(r[0]);
    std::vector<std::optional<double>> vals;
    for (std::size_t i = 1; i < r.size(); ++i)
      vals.push_back(r[i].empty() ? std::nullopt : std::optional<double>(to_double(r[i], "cell")));
    h.values.push_back(std::move(vals));
  }
  return h;
}

CsvTable deviations_table(const std::vector<Deviation>& devs) {
  CsvTable t{{"model", "strategy", "language", "p_decouple_dev", "d_adv_dev", "psi_dev"}, {}};
  for (const Deviation& d : devs)
    t.rows.push_back({d.model_id, d.strategy_id, d.language, format_number(d.p_decouple),
                      format_number(d.d_adv), format_number(d.psi)});
  return t;
}

CsvTable false_certification_table(const std::vector<MetricsCell>& cells) {
  CsvTable t{{"model", "strategy", "language", "n", "compile_known", "false_certifications", "rate"},
             {}};
  for (const MetricsCell& c : cells) {
    if (c.language == kMeanKey) continue;
    const std::string rate =
        c.compile_known ? format_number(static_cast<double>(c.false_certifications) /
                                        static_cast<double>(c.compile_known))
                        : "";
    t.rows.push_back({c.model_id, c.strategy_id, c.language, std::to_string(c.n),
                      std::to_string(c.compile_known), std::to_string(c.false_certifications), rate});
  }
  return t;
}

std::vector<MetricsCell> summary_cells(const std::vector<MetricsCell>& cells) {
  std::vector<MetricsCell> means;
  for (const MetricsCell& c : cells) {
    if (c.language == kMeanKey) means.push_back(c);
  }
  return means.empty() ? cells : means;
}

Report build_report(const std::vector<MetricsCell>& cells) {
  Report r;
  r.cells = cells;
  const std::vector<MetricsCell> summary = summary_cells(cells);

  std::map<std::string, std::vector<double>> by_model, by_strategy;
  std::vector<std::string> models, strategies;
  for (const MetricsCell& c : summary) {
    by_model[c.model_id].push_back(c.p_decouple);
    by_strategy[c.strategy_id].push_back(c.psi);
    if (std::find(models.begin(), models.end(), c.model_id) == models.end())
      models.push_back(c.model_id);
    if (std::find(strategies.begin(), strategies.end(), c.strategy_id) == strategies.end())
      strategies.push_back(c.strategy_id);
  }
  r.models = rank(by_model);
  r.strategies = rank(by_strategy);
  std::sort(models.begin(), models.end());
  std::sort(strategies.begin(), strategies.end());

  struct Metric {
    const char* name;
    double MetricsCell::*field;
  };
  for (const Metric m : {Metric{"p_decouple", &MetricsCell::p_decouple},
                         Metric{"d_adv", &MetricsCell::d_adv}, Metric{"psi", &MetricsCell::psi}}) {
    Heatmap h;
    h.metric = m.name;
    h.rows = models;
    h.columns = strategies;
    h.values.assign(models.size(), std::vector<std::optional<double>>(strategies.size()));
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> acc;
    for (const MetricsCell& c : summary) {
      const auto i = static_cast<std::size_t>(
          std::lower_bound(models.begin(), models.end(), c.model_id) - models.begin());
      const auto j = static_cast<std::size_t>(
          std::lower_bound(strategies.begin(), strategies.end(), c.strategy_id) - strategies.begin());
      auto& slot = acc[{i, j}];
      slot.first += c.*m.field;
      ++slot.second;
    }
    for (const auto& [ij, sum] : acc)
      h.values[ij.first][ij.second] = sum.first / static_cast<double>(sum.second);
    r.heatmaps.push_back(std::move(h));
  }
  r.deviations = strategy_deviations(cells);
  return r;
}

void write_report(const std::filesystem::path& dir, const Report& report) {
  std::filesystem::create_directories(dir);
  write_text(dir / "cells.csv", to_csv(cells_table(report.cells)));
  write_text(dir / "leaderboard_models.csv",
             to_csv(leaderboard_table(report.models, "model", "p_decouple")));
  write_text(dir / "leaderboard_strategies.csv",
             to_csv(leaderboard_table(report.strategies, "strategy", "psi")));
  for (const Heatmap& h : report.heatmaps)
    write_text(dir / ("heatmap_" + h.metric + ".csv"), to_csv(heatmap_table(h)));
  write_text(dir / "deviations.csv", to_csv(deviations_table(report.deviations)));
  write_text(dir / "false_certification.csv", to_csv(false_certification_table(report.cells)));
}

std::string to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["run_id"] = m.run_id;
  j["command"] = m.command;
  j["corpus"] = m.corpus_path;
  j["strategies"] = m.strategies;
  j["models"] = m.models;
  j["metrics"] = {{"delta", m.metrics.delta},
                  {"tau", m.metrics.tau},
                  {"lambda", m.metrics.lambda},
                  {"s_max", m.metrics.s_max},
                  {"kappa_partial", m.metrics.kappa_partial}};
  j["evaluator"] = m.evaluator;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["extra"] = m.extra;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SchemaViolation("", "manifest is not a JSON object");
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.command = j.value("command", "");
    m.corpus_path = j.value("corpus", "");
    m.strategies = j.value("strategies", std::vector<std::string>{});
    m.models = j.value("models", std::vector<std::string>{});
    const auto& mc = j.at("metrics");
    m.metrics.delta = mc.at("delta").get<double>();
    m.metrics.tau = mc.at("tau").get<double>();
    m.metrics.lambda = mc.at("lambda").get<double>();
    m.metrics.s_max = mc.at("s_max").get<double>();
    m.metrics.kappa_partial = mc.at("kappa_partial").get<double>();
    m.evaluator = j.value("evaluator", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.extra = j.value("extra", std::map<std::string, std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation("", std::string("manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  write_text(path, to_json(m));
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_id_for(std::initializer_list<std::string_view> fields) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_fields(fields)));
  return buf;
}

}  // namespace spaci
