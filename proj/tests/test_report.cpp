#include <gtest/gtest.h>

#include <map>

#include "spaci/error.hpp"
#include "spaci/pipeline.hpp"
#include "spaci/report.hpp"
#include "support.hpp"

using namespace spaci;
using namespace spaci::testing;

namespace {

const std::filesystem::path kWorkedBatch = kTestData / "worked_batch_results.jsonl";

AppConfig fast_config(const std::filesystem::path& out) {
  AppConfig cfg;
  cfg.tier2 = false;
  cfg.out_dir = out;
  cfg.keep_failed_workspaces = false;
  return cfg;
}

std::string cli(const std::string& args) { return std::string(SPACI_CLI) + " " + args; }

int cell_count(const CsvTable& t, std::size_t col, const std::string& value) {
  int n = 0;
  for (const auto& row : t.rows)
    if (row.at(col) == value) ++n;
  return n;
}

}  // namespace

TEST(Csv, QuotingRoundTrip) {
  CsvTable t{{"a", "b"}, {{"plain", "with,comma"}, {"say \"hi\"", "line\nbreak"}, {"", "x"}}};
  CsvTable back = parse_csv(to_csv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(parse_csv("a,b\r\n1,2\r\n").rows, (std::vector<std::vector<std::string>>{{"1", "2"}}));
}

TEST(Csv, NumberFormat) {
  EXPECT_EQ(format_number(0.5), "0.500000");
  EXPECT_EQ(format_number(-0.0), "0.000000");
  EXPECT_EQ(format_number(22.5), "22.500000");
}

TEST(Csv, CellsRoundTrip) {
  std::vector<MetricsCell> cells = {{"m1", "RPA", "python", 4, 0.5, 22.5, 42.5, 4, 1},
                                    {"m1", "RPA", kMeanKey, 4, 0.5, 22.5, 42.5, 4, 1}};
  auto back = cells_from_table(parse_csv(to_csv(cells_table(cells))));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].model_id, "m1");
  EXPECT_EQ(back[0].p_decouple, 0.5);
  EXPECT_EQ(back[1].language, kMeanKey);
  EXPECT_EQ(back[0].false_certifications, 1u);
  CsvTable bad = cells_table(cells);
  bad.header[0] = "judge";
  EXPECT_THROW(cells_from_table(bad), SchemaViolation);
}

TEST(Csv, LeaderboardAndHeatmapRoundTrip) {
  std::vector<MetricsCell> cells = {{"m1", "RPA", kMeanKey, 4, 0.5, 22.5, 42.5, 4, 0},
                                    {"m1", "SRA", kMeanKey, 4, 0.25, 10, 12, 4, 0},
                                    {"m2", "RPA", kMeanKey, 4, 0.75, 30, 50, 4, 0}};
  Report r = build_report(cells);
  ASSERT_EQ(r.models.size(), 2u);
  EXPECT_EQ(r.models[0].key, "m2");
  EXPECT_EQ(r.strategies[0].key, "RPA");
  auto board = leaderboard_from_table(parse_csv(to_csv(leaderboard_table(r.models, "model", "p_decouple"))));
  ASSERT_EQ(board.size(), 2u);
  EXPECT_EQ(board[0].key, "m2");
  EXPECT_DOUBLE_EQ(board[1].mean, 0.375);

  ASSERT_EQ(r.heatmaps.size(), 3u);
  Heatmap h = heatmap_from_table(parse_csv(to_csv(heatmap_table(r.heatmaps[0]))), "p_decouple");
  EXPECT_EQ(h.rows, r.heatmaps[0].rows);
  EXPECT_EQ(h.columns, r.heatmaps[0].columns);
  EXPECT_EQ(h.values, r.heatmaps[0].values);
  EXPECT_FALSE(h.values[1][1].has_value());
}

TEST(Records, VariantRoundTrip) {
  SourceUnit u = unit_of(kRenameExample);
  AdversarialVariant v = inject(u, find_strategy("EMJ"));
  VariantRecord rec;
  rec.origin = {"s1", "q1", Language::Python, "desk", kRenameExample, "double it", std::string("easy")};
  rec.strategy_id = v.strategy_id;
  rec.op = v.op;
  rec.text = v.text;
  rec.injection_sites = v.injection_sites;
  rec.deadcode_sites = v.deadcode_sites;
  rec.mapping = v.mapping;
  rec.verification = v.verification;
  rec.origin_compile_ok = true;
  VariantRecord back = variant_from_json_line(to_json_line(rec));
  EXPECT_EQ(back.variant_id(), "s1::EMJ");
  EXPECT_EQ(back.text, rec.text);
  EXPECT_EQ(back.injection_sites, rec.injection_sites);
  EXPECT_EQ(back.mapping.pairs, rec.mapping.pairs);
  EXPECT_EQ(back.verification.c3, Status::Pass);
  EXPECT_EQ(verify_c3(back.to_variant()), Status::Pass);
}

TEST(Records, ManifestRoundTrip) {
  RunManifest m;
  m.run_id = run_id_for({"a", "b"});
  m.command = "score";
  m.strategies = {"RPA"};
  m.seed = 9;
  m.extra["k"] = "v";
  RunManifest back = manifest_from_json(to_json(m));
  EXPECT_EQ(back.run_id, m.run_id);
  EXPECT_EQ(back.run_id.size(), 16u);
  EXPECT_EQ(back.extra, m.extra);
  EXPECT_EQ(back.seed, 9u);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(app_config_from_json("{\"metrics\": {\"delta\": 15}, \"colour\": 1}"), SchemaViolation);
  AppConfig c = app_config_from_json("{\"metrics\": {\"delta\": 10}, \"seed\": 4}");
  EXPECT_EQ(c.metrics.delta, 10);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_THROW(app_config_from_json("{\"evaluator\": {\"temperature\": 0.5}}"), Error);
}

TEST(Score, WorkedBatchSingleCell) {
  TempDir dir("score");
  ScoreSummary s = run_score(kWorkedBatch, dir.path, parse_group_by(""), {});
  ASSERT_EQ(s.report.cells.size(), 1u);
  EXPECT_EQ(s.report.cells[0].p_decouple, 0.50);
  EXPECT_EQ(s.report.cells[0].d_adv, 22.5);
  EXPECT_EQ(s.report.cells[0].psi, 42.5);
  auto cells = cells_from_table(read_csv(dir.path / "cells.csv"));
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].psi, 42.5);
  for (const char* f : {"leaderboard_models.csv", "leaderboard_strategies.csv", "heatmap_p_decouple.csv",
                        "heatmap_d_adv.csv", "heatmap_psi.csv", "deviations.csv", "false_certification.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir.path / f)) << f;
}

TEST(Score, GroupByLanguage) {
  TempDir dir("bylang");
  std::string text = read_file(kWorkedBatch);
  std::string mixed;
  int line = 0;
  for (std::size_t p = 0, q; p < text.size(); p = q + 1, ++line) {
    q = text.find('\n', p);
    std::string l = text.substr(p, q - p);
    if (line >= 4) l.replace(l.find("\"python\""), 8, "\"java\"");
    mixed += l + "\n";
  }
  write_file(dir.path / "r.jsonl", mixed);
  ScoreSummary s = run_score(dir.path / "r.jsonl", dir.path, parse_group_by("language"), {});
  std::vector<std::string> langs;
  for (const auto& c : s.report.cells) langs.push_back(c.language);
  std::sort(langs.begin(), langs.end());
  EXPECT_EQ(langs, (std::vector<std::string>{"java", "python"}));

  ScoreSummary full = run_score(dir.path / "r.jsonl", dir.path, {}, {});
  ASSERT_EQ(full.report.cells.size(), 3u);
  EXPECT_EQ(full.report.cells.back().language, kMeanKey);
}

TEST(Score, Idempotent) {
  TempDir a("idem-a"), b("idem-b");
  run_score(kWorkedBatch, a.path, {}, {});
  run_score(kWorkedBatch, b.path, {}, {});
  for (const auto& e : std::filesystem::directory_iterator(a.path))
    EXPECT_EQ(read_file(e.path()), read_file(b.path / e.path().filename())) << e.path();
}

TEST(Score, NoPairsIsEmptyBatch) {
  TempDir dir("nopairs");
  std::string text = read_file(kWorkedBatch);
  write_file(dir.path / "r.jsonl", text.substr(0, text.find('\n') + 1));
  EXPECT_THROW(run_score(dir.path / "r.jsonl", dir.path, {}, {}), EmptyBatch);
}

TEST(Inject, EmptyStrategyListIsUsageError) {
  InjectRequest req;
  req.records = desk_records();
  EXPECT_THROW(run_inject(req, fast_config("out")), PreconditionError);
  req.strategies = {"NOPE"};
  EXPECT_THROW(run_inject(req, fast_config("out")), Error);
}

TEST(Inject, UnparseableRecordSkippedAndCounted) {
  InjectRequest req;
  req.records = desk_records(Language::Python);
  req.records.front().text = "print('\xff')\n";
  req.strategies = {"RPA", "SRA"};
  req.check_c2 = false;
  InjectSummary s = run_inject(req, fast_config("out"));
  EXPECT_EQ(s.records, 10u);
  EXPECT_EQ(s.unparseable, 1u);
  EXPECT_EQ(s.attempted, 18u);
  EXPECT_EQ(s.c3.pass, 18u);
  auto j = nlohmann::json::parse(summary_json(s));
  EXPECT_EQ(j.at("unparseable"), 1);
}

TEST(Inject, DeskCorpusAllStrategiesTier1) {
  InjectRequest req;
  req.records = desk_records();
  for (const auto& s : catalog()) req.strategies.push_back(s.id);
  req.check_c2 = false;
  InjectSummary s = run_inject(req, fast_config("out"));
  EXPECT_EQ(s.attempted, 680u);
  EXPECT_EQ(s.c3.pass, 680u);
  EXPECT_EQ(s.c1.fail, 0u);
  EXPECT_EQ(s.admitted, 680u);
}

TEST(Pipeline, MockEvaluateAndScore) {
  TempDir dir("pipe");
  AppConfig cfg = fast_config(dir.path);
  InjectRequest req;
  req.records = desk_records();
  for (const auto& s : catalog()) req.strategies.push_back(s.id);
  req.check_c2 = false;
  InjectSummary inj = run_inject(req, cfg);

  cfg.mock.compliance_bias = 30;
  cfg.mock.seed = 1;
  MockEvaluator mock(cfg.mock);
  VirtualClock clock;
  EvaluateRequest ev{req.records, inj.variants, {"judge-a", "judge-b"}, dir.path, false, &clock};
  EvaluateSummary es = run_evaluate(ev, cfg, mock);
  EXPECT_EQ(es.tasks.size(), 2u * (40 + 680));
  EXPECT_EQ(es.batch.yield(), 1.0);
  auto results = read_results(es.results_path);
  EXPECT_EQ(results.size(), es.tasks.size());

  ScoreSummary sc = run_score(es.results_path, dir.path / "report", {}, cfg.metrics);
  std::map<std::string, double> psi;
  for (const auto& e : sc.report.strategies) psi[e.key] = e.mean;
  ASSERT_EQ(psi.size(), 17u);
  for (const auto& c : catalog())
    for (const auto& d : catalog()) {
      bool hi = c.cls == StrategyClass::C_SSAD || c.cls == StrategyClass::E_LBOC;
      if (hi && d.cls == StrategyClass::D_CPH) EXPECT_GT(psi[c.id], psi[d.id]) << c.id << " " << d.id;
    }
  CsvTable heat = read_csv(dir.path / "report" / "heatmap_psi.csv");
  EXPECT_EQ(heat.rows.size(), 2u);
  EXPECT_EQ(heat.header.size(), 18u);
}

TEST(Pipeline, MockFailuresStillYield) {
  TempDir dir("pipe-fail");
  AppConfig cfg = fast_config(dir.path);
  cfg.mock.failure_rate = 0.2;
  MockEvaluator mock(cfg.mock);
  VirtualClock clock;
  EvaluateRequest ev{desk_records(), {}, {"judge"}, dir.path, false, &clock};
  EvaluateSummary es = run_evaluate(ev, cfg, mock);
  EXPECT_GE(es.batch.yield(), 0.99);
}

TEST(Cli, EndToEnd) {
  TempDir dir("cli");
  const std::string out = "--out-dir " + dir.path.string() + " ";
  auto [o1, rc1] = shell(cli(out + "inject --corpus " + kDeskCorpus.string() +
                             " --strategies RPA,EMJ,SRA --languages python --no-tier2 --no-c2"));
  ASSERT_EQ(rc1, 0) << o1;
  EXPECT_EQ(read_variants(dir.path / "variants.jsonl").size(), 30u);
  auto [o2, rc2] = shell(cli(out + "--mock --seed 3 evaluate --corpus " + kDeskCorpus.string() +
                             " --variants " + (dir.path / "variants.jsonl").string()));
  ASSERT_EQ(rc2, 0) << o2;
  EXPECT_NE(o2.find("100"), std::string::npos) << o2;
  auto [o3, rc3] = shell(cli(out + "score --group-by language"));
  ASSERT_EQ(rc3, 0) << o3;
  auto cells = cells_from_table(read_csv(dir.path / "report" / "cells.csv"));
  EXPECT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].language, "python");
  auto [o4, rc4] = shell(cli(out + "verify --no-c2 --variants " + (dir.path / "variants.jsonl").string()));
  EXPECT_EQ(rc4, 0) << o4;
}

TEST(Cli, EmptyStrategiesExitCode) {
  TempDir dir("cli-empty");
  auto [o, rc] = shell(cli("--out-dir " + dir.path.string() + " inject --corpus " + kDeskCorpus.string() +
                           " --strategies '' --no-tier2 --no-c2 2>&1"));
  EXPECT_EQ(rc, 2) << o;
}

TEST(Cli, SampleCommand) {
  TempDir dir("cli-sample");
  auto [o, rc] = shell(cli("--out-dir " + dir.path.string() + " --seed 5 sample --corpus " +
                           kDeskCorpus.string() + " -n 20"));
  ASSERT_EQ(rc, 0) << o;
  auto rs = load_corpus(dir.path / "sample.jsonl").records;
  EXPECT_EQ(rs.size(), 20u);
}
