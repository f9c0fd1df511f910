#include "scicomm/report.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "scicomm/errors.hpp"
#include "scicomm/jsonl.hpp"

using namespace scicomm;
using testutil::TempDir;
using testutil::data_dir;
using testutil::read_file;
using testutil::write_file;

namespace {

ReportConfig mini_config(const std::string& out_dir) {
  const auto root = data_dir() / "minicorpus";
  ReportConfig c;
  c.findings_path = (root / "findings.jsonl").string();
  c.pairs_path = (root / "pairs.jsonl").string();
  c.causality_path = (root / "annotations_causality.jsonl").string();
  c.certainty_path = (root / "annotations_certainty.jsonl").string();
  c.generality_path = (root / "annotations_generality.jsonl").string();
  c.bws_tuples_path = (root / "bws_tuples.jsonl").string();
  c.bws_judgments_path = (root / "bws_judgments.jsonl").string();
  c.out_dir = out_dir;
  c.command_line = "test";
  return c;
}

json load_json(const std::filesystem::path& p) { return read_json_file(p); }

}  // namespace

TEST_CASE("kv config files parse") {
  TempDir tmp;
  const auto path = write_file(tmp.file("run.conf"),
                               "# a comment\n"
                               "\n"
                               "findings = data/findings.jsonl\n"
                               "   ims_threshold=4.5   \n"
                               "out = out dir with spaces\n");
  KvConfig kv = KvConfig::parse_file(path.string());
  CHECK(kv.values.size() == 3);
  CHECK(kv.require("findings") == "data/findings.jsonl");
  CHECK(kv.require("ims_threshold") == "4.5");
  CHECK(kv.require("out") == "out dir with spaces");
  CHECK(kv.get_or("seed", "0") == "0");
  CHECK(kv.has("out"));
  CHECK_FALSE(kv.has("seed"));
  CHECK_THROWS_AS(kv.require("missing"), ConfigError);

  const auto bad = write_file(tmp.file("bad.conf"), "no equals sign\n");
  CHECK_THROWS_AS(KvConfig::parse_file(bad.string()), ParseError);
  const auto empty_key = write_file(tmp.file("ek.conf"), "= value\n");
  CHECK_THROWS_AS(KvConfig::parse_file(empty_key.string()), ParseError);
  CHECK_THROWS_AS(KvConfig::parse_file(tmp.file("absent.conf").string()),
                  InputError);
}

TEST_CASE("report config wraps kv values") {
  KvConfig kv;
  kv.values = {{"findings", "f"},   {"pairs", "p"},      {"causality", "c"},
               {"certainty", "ce"}, {"generality", "g"}, {"bws_tuples", "t"},
               {"bws_judgments", "j"}};
  ReportConfig c = report_config_from_kv(kv);
  CHECK(c.findings_path == "f");
  CHECK(c.ims_threshold == doctest::Approx(4.0));
  CHECK(c.exclude_easy == true);
  CHECK(c.seed == 0);
  CHECK(c.out_dir.empty());

  kv.values["ims_threshold"] = "4.25";
  kv.values["exclude_easy"] = "false";
  kv.values["seed"] = "99";
  kv.values["out"] = "reports";
  c = report_config_from_kv(kv);
  CHECK(c.ims_threshold == doctest::Approx(4.25));
  CHECK(c.exclude_easy == false);
  CHECK(c.seed == 99);
  CHECK(c.out_dir == "reports");

  kv.values["ims_threshold"] = "often";
  CHECK_THROWS_AS(report_config_from_kv(kv), ConfigError);
  kv.values["ims_threshold"] = "4.0";
  kv.values["exclude_easy"] = "yes";
  CHECK_THROWS_AS(report_config_from_kv(kv), ConfigError);
  kv.values["exclude_easy"] = "true";
  kv.values.erase("pairs");
  CHECK_THROWS_AS(report_config_from_kv(kv), ConfigError);
}

TEST_CASE("timestamps are ISO 8601 UTC") {
  const std::string ts = utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts[16] == ':');
  CHECK(ts[19] == 'Z');
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u, 11u, 12u, 14u, 15u, 17u, 18u})
    CHECK(std::isdigit(static_cast<unsigned char>(ts[i])));
}

TEST_CASE("manifests serialize every field") {
  RunManifest m;
  m.command_line = "scicomm report --config run.conf";
  m.config_digest = "abc123";
  m.seed = 7;
  m.input_digests = {{"a.jsonl", "deadbeef"}, {"b.jsonl", "cafe"}};
  m.started_at = "2024-01-01T00:00:00Z";
  m.finished_at = "2024-01-01T00:00:05Z";
  const json doc = manifest_to_json(m);
  CHECK(doc.at("command_line") == "scicomm report --config run.conf");
  CHECK(doc.at("config_digest") == "abc123");
  CHECK(doc.at("seed") == 7);
  CHECK(doc.at("input_digests").at("a.jsonl") == "deadbeef");
  CHECK(doc.at("version") == kVersion);
  CHECK(doc.at("started_at") == "2024-01-01T00:00:00Z");
  CHECK(doc.at("finished_at") == "2024-01-01T00:00:05Z");

  TempDir tmp;
  const auto path = tmp.file("manifest.json");
  write_manifest(m, path.string());
  CHECK(load_json(path) == doc);
}

TEST_CASE("report run reproduces the corpus tables") {
  TempDir tmp;
  const auto out = tmp.file("report");
  ReportOutputs res = run_report(mini_config(out.string()));

  const std::vector<std::string> names = {
      "agreement.csv",     "breakdown.csv",     "sankey_causality.json",
      "sankey_certainty.json", "cooccurrence.json", "sens_scores.jsonl",
      "changes.jsonl",     "summary.json",      "manifest.json"};
  REQUIRE(res.files.size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(res.files[i] == (out / names[i]).string());
    CHECK(std::filesystem::exists(res.files[i]));
  }

  SUBCASE("agreement table is a wall of perfect scores") {
    // every annotator agrees with every other on every instance, so each
    // defined cell must print as 1.0000
    const std::string expected =
        "discipline,causality_iaf1,causality_kappa,certainty_iaf1,"
        "certainty_kappa,certainty_rho,generality_iaf1,generality_kappa,"
        "sensationalism_rho,sensationalism_r\n"
        "bio,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000\n"
        "cs,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000\n"
        "med,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000\n"
        "psy,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000\n"
        "avg,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000,1.0000\n";
    CHECK(read_file(out / "agreement.csv") == expected);
  }

  SUBCASE("breakdown percentages match the hand count") {
    const std::string expected =
        "group,n,caus_up,cert_up,gen_up,gen_down,sens_up\n"
        "news,6,33.3333,33.3333,16.6667,33.3333,33.3333\n"
        "tweet,6,16.6667,33.3333,33.3333,16.6667,16.6667\n"
        "bio,3,66.6667,66.6667,33.3333,33.3333,33.3333\n"
        "cs,3,0.0000,0.0000,0.0000,33.3333,33.3333\n"
        "med,3,33.3333,66.6667,33.3333,0.0000,0.0000\n"
        "psy,3,0.0000,0.0000,33.3333,33.3333,33.3333\n";
    CHECK(read_file(out / "breakdown.csv") == expected);
    CHECK_FALSE(res.warnings.empty());   // every group is below 20 pairs
  }

  SUBCASE("causality sankey carries the full flow table") {
    const json doc = load_json(out / "sankey_causality.json");
    CHECK(doc.at("dimension") == "causality");
    CHECK(doc.at("labels") ==
          json({"no_relation_mentioned", "correlation", "causation",
                "explicitly_no_relation"}));
    CHECK(doc.at("total") == 12);
    CHECK(doc.at("same_label_fraction").get<double>() ==
          doctest::Approx(5.0 / 12.0));
    std::map<std::pair<std::string, std::string>, long> flows;
    long flow_total = 0;
    for (const auto& f : doc.at("flows")) {
      flows[{f.at("from"), f.at("to")}] = f.at("count").get<long>();
      flow_total += f.at("count").get<long>();
    }
    CHECK(flow_total == 12);
    CHECK(flows.size() == 9);
    CHECK(flows.at({"correlation", "causation"}) == 2);
    CHECK(flows.at({"causation", "causation"}) == 2);
    CHECK(flows.at({"explicitly_no_relation", "causation"}) == 1);
    CHECK(flows.at({"correlation", "correlation"}) == 2);
    CHECK(flows.at({"no_relation_mentioned", "causation"}) == 1);
    CHECK(flows.at({"causation", "correlation"}) == 1);
    CHECK(flows.at({"no_relation_mentioned", "no_relation_mentioned"}) == 1);
    CHECK(flows.at({"explicitly_no_relation", "correlation"}) == 1);
    CHECK(flows.at({"no_relation_mentioned", "explicitly_no_relation"}) == 1);
  }

  SUBCASE("certainty sankey keeps all four levels") {
    const json doc = load_json(out / "sankey_certainty.json");
    CHECK(doc.at("dimension") == "certainty");
    CHECK(doc.at("labels") == json({"1", "2", "3", "4"}));
    CHECK(doc.at("total") == 12);
    CHECK(doc.at("same_label_fraction").get<double>() ==
          doctest::Approx(5.0 / 12.0));
    std::map<std::pair<std::string, std::string>, long> flows;
    for (const auto& f : doc.at("flows"))
      flows[{f.at("from"), f.at("to")}] = f.at("count").get<long>();
    CHECK(flows.size() == 11);
    CHECK(flows.at({"2", "4"}) == 1);
    CHECK(flows.at({"2", "2"}) == 2);
    CHECK(flows.at({"1", "3"}) == 1);
    CHECK(flows.at({"2", "1"}) == 1);
    CHECK(flows.at({"4", "2"}) == 1);
    CHECK(flows.at({"1", "1"}) == 1);
    CHECK(flows.at({"3", "3"}) == 1);
    CHECK(flows.at({"2", "3"}) == 1);
    CHECK(flows.at({"3", "4"}) == 1);
    CHECK(flows.at({"3", "2"}) == 1);
    CHECK(flows.at({"4", "4"}) == 1);
  }

  SUBCASE("cooccurrence counts") {
    const json doc = load_json(out / "cooccurrence.json");
    CHECK(doc.at("flags") == json({"caus_up", "cert_up", "gen_up", "sens_up"}));
    CHECK(doc.at("counts") == json({{3, 2, 1, 1},
                                    {2, 4, 2, 1},
                                    {1, 2, 3, 2},
                                    {1, 1, 2, 3}}));
  }

  SUBCASE("sens scores cover every finding") {
    const auto rows = read_jsonl(out / "sens_scores.jsonl");
    CHECK(rows.size() == 24);
    std::map<std::string, double> score;
    for (const auto& r : rows)
      score[r.at("item_id")] = r.at("score").get<double>();
    CHECK(score.at("pf01") == doctest::Approx(-1.0));
    CHECK(score.at("rf01") == doctest::Approx(1.0));
    CHECK(score.at("pf07") == doctest::Approx(1.0));
    CHECK(score.at("rf08") == doctest::Approx(-1.0));
    CHECK(score.at("pf02") == doctest::Approx(0.0));
  }

  SUBCASE("change rows carry labels, scores and flags") {
    const auto rows = read_jsonl(out / "changes.jsonl");
    REQUIRE(rows.size() == 12);
    std::map<std::string, json> by_id;
    for (const auto& r : rows) by_id[r.at("pair_id")] = r;
    const json& pr01 = by_id.at("pr01");
    CHECK(pr01.at("paper_causality") == "correlation");
    CHECK(pr01.at("reported_causality") == "causation");
    CHECK(pr01.at("paper_certainty") == 2);
    CHECK(pr01.at("reported_certainty") == 4);
    CHECK(pr01.at("generality") == "reported_more_general");
    CHECK(pr01.at("paper_sens").get<double>() == doctest::Approx(-1.0));
    CHECK(pr01.at("reported_sens").get<double>() == doctest::Approx(1.0));
    CHECK(pr01.at("caus_up") == true);
    CHECK(pr01.at("cert_up") == true);
    CHECK(pr01.at("gen_up") == true);
    CHECK(pr01.at("gen_down") == false);
    CHECK(pr01.at("sens_up") == true);
    const json& pr04 = by_id.at("pr04");   // fully faithful pair
    CHECK(pr04.at("caus_up") == false);
    CHECK(pr04.at("cert_up") == false);
    CHECK(pr04.at("gen_up") == false);
    CHECK(pr04.at("gen_down") == false);
    CHECK(pr04.at("sens_up") == false);
  }

  SUBCASE("summary captures composition and the filter") {
    const json doc = load_json(out / "summary.json");
    CHECK(doc.at("n_pairs_input") == 12);
    CHECK(doc.at("n_pairs_filtered") == 12);
    CHECK(doc.at("by_discipline") ==
          json({{"bio", 3}, {"cs", 3}, {"med", 3}, {"psy", 3}}));
    CHECK(doc.at("by_outlet") == json({{"news", 6}, {"tweet", 6}}));
    CHECK(doc.at("same_relation_fraction").get<double>() ==
          doctest::Approx(5.0 / 12.0));
    CHECK(doc.at("sens_sd").get<double>() ==
          doctest::Approx(std::sqrt(19.0 / 18.0)));
    CHECK(doc.at("ims_threshold").get<double>() == doctest::Approx(4.0));
    CHECK(doc.at("exclude_easy") == true);
  }

  SUBCASE("manifest digests every input") {
    const json doc = load_json(out / "manifest.json");
    CHECK(doc.at("version") == kVersion);
    CHECK(doc.at("seed") == 0);
    CHECK(doc.at("command_line") == "test");
    const auto& digests = doc.at("input_digests");
    CHECK(digests.size() == 7);
    const ReportConfig c = mini_config(out.string());
    for (const std::string& p :
         {c.findings_path, c.pairs_path, c.causality_path, c.certainty_path,
          c.generality_path, c.bws_tuples_path, c.bws_judgments_path}) {
      REQUIRE(digests.contains(p));
      CHECK(digests.at(p) == file_digest(p));
    }
  }
}

TEST_CASE("rerunning the report is byte-identical") {
  TempDir tmp;
  auto c1 = mini_config(tmp.file("r1").string());
  auto c2 = mini_config(tmp.file("r2").string());
  c1.seed = 5;
  c2.seed = 5;
  run_report(c1);
  run_report(c2);
  for (const char* name :
       {"agreement.csv", "breakdown.csv", "sankey_causality.json",
        "sankey_certainty.json", "cooccurrence.json", "sens_scores.jsonl",
        "changes.jsonl", "summary.json"}) {
    CHECK(read_file(tmp.file("r1") / name) == read_file(tmp.file("r2") / name));
  }
  // manifests may differ only in their timestamps
  json m1 = load_json(tmp.file("r1") / "manifest.json");
  json m2 = load_json(tmp.file("r2") / "manifest.json");
  m1.erase("started_at");
  m1.erase("finished_at");
  m2.erase("started_at");
  m2.erase("finished_at");
  CHECK(m1 == m2);
}

TEST_CASE("the ims filter reaches the summary") {
  TempDir tmp;
  auto c = mini_config(tmp.file("r").string());
  c.ims_threshold = 4.65;
  run_report(c);
  const json doc = load_json(tmp.file("r") / "summary.json");
  CHECK(doc.at("n_pairs_input") == 12);
  CHECK(doc.at("n_pairs_filtered") == 6);
  CHECK(doc.at("ims_threshold").get<double>() == doctest::Approx(4.65));
}

TEST_CASE("degenerate runs fail loudly") {
  TempDir tmp;
  auto c = mini_config(tmp.file("r").string());
  c.ims_threshold = 5.0;   // strictly-above filter removes everything
  CHECK_THROWS_WITH_AS(run_report(c), "no pairs survive the IMS/easy filter",
                       ValidationError);

  auto missing = mini_config(tmp.file("r2").string());
  missing.findings_path = tmp.file("absent.jsonl").string();
  try {
    run_report(missing);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("absent.jsonl") != std::string::npos);
  }

  auto no_out = mini_config("");
  CHECK_THROWS_AS(run_report(no_out), ConfigError);
}
