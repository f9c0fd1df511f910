#include "scicomm/distortion.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "scicomm/errors.hpp"

using namespace scicomm;
using testutil::data_dir;

namespace {

// causality indices
constexpr int kNoRel = 0, kCorr = 1, kCaus = 2, kExNo = 3;
// generality indices
constexpr int kRepMore = 0, kPaperMore = 1, kSame = 2;

struct Mini {
  FindingSet findings;
  PairSet pairs;
  AggregatedLabels caus, cert, gen;
  SensScoreTable sens;
};

// The fixture is unanimous, so majority vote reproduces the planted labels.
Mini load_mini() {
  const auto dir = data_dir() / "minicorpus";
  Mini m;
  m.findings = load_findings(dir / "findings.jsonl");
  m.pairs = load_pairs(dir / "pairs.jsonl", m.findings);
  m.caus = majority_vote(load_annotations(dir / "annotations_causality.jsonl",
                                          Task::causality));
  m.cert = majority_vote(load_annotations(dir / "annotations_certainty.jsonl",
                                          Task::certainty));
  m.gen = majority_vote(load_annotations(dir / "annotations_generality.jsonl",
                                         Task::generality));
  WarningLog warn;
  TupleSet tuples = load_tuples(dir / "bws_tuples.jsonl", warn);
  auto judgments = load_bws_judgments(dir / "bws_judgments.jsonl", warn);
  m.sens = score_bws(tuples, judgments);
  return m;
}

ChangeRecord make_record(int pc, int rc, int pl, int rl, int gen,
                         std::optional<double> ps = std::nullopt,
                         std::optional<double> rs = std::nullopt) {
  ChangeRecord r;
  r.pair_id = "p";
  r.paper_causality = pc;
  r.reported_causality = rc;
  r.paper_certainty = pl;
  r.reported_certainty = rl;
  r.generality = gen;
  r.paper_sens = ps;
  r.reported_sens = rs;
  return r;
}

}  // namespace

TEST_CASE("detect_changes assembles one pair") {
  Mini m = load_mini();
  const FindingPair* pr01 = m.pairs.find("pr01");
  REQUIRE(pr01 != nullptr);
  ChangeRecord r = detect_changes(*pr01, m.caus, m.cert, m.gen, &m.sens);
  CHECK(r.paper_causality == kCorr);
  CHECK(r.reported_causality == kCaus);
  CHECK(r.paper_certainty == 2);
  CHECK(r.reported_certainty == 4);
  CHECK(r.generality == kRepMore);
  CHECK(*r.paper_sens == doctest::Approx(-1.0));
  CHECK(*r.reported_sens == doctest::Approx(1.0));
  CHECK(*r.sens_diff() == doctest::Approx(2.0));

  // without a score table the sens fields stay null
  ChangeRecord bare = detect_changes(*pr01, m.caus, m.cert, m.gen, nullptr);
  CHECK_FALSE(bare.paper_sens.has_value());
  CHECK_FALSE(bare.sens_diff().has_value());
}

TEST_CASE("detect_changes names the missing label") {
  Mini m = load_mini();
  AggregatedLabels sparse_cert;
  sparse_cert.space = m.cert.space;
  sparse_cert.add("pf01", 1);  // reported side missing
  const FindingPair* pr01 = m.pairs.find("pr01");
  CHECK_THROWS_AS(detect_changes(*pr01, m.caus, sparse_cert, m.gen, nullptr),
                  MissingLabelError);
  try {
    detect_changes(*pr01, m.caus, sparse_cert, m.gen, nullptr);
  } catch (const MissingLabelError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("certainty") != std::string::npos);
    CHECK(msg.find("rf01") != std::string::npos);
  }
}

TEST_CASE("critical_flags clause by clause") {
  // causal upgrade only from correlation / explicit-no-relation
  CHECK(critical_flags(make_record(kCorr, kCaus, 2, 2, kSame), 1.0).caus_up);
  CHECK(critical_flags(make_record(kExNo, kCaus, 2, 2, kSame), 1.0).caus_up);
  CHECK_FALSE(critical_flags(make_record(kCaus, kCorr, 2, 2, kSame), 1.0).caus_up);
  CHECK_FALSE(critical_flags(make_record(kNoRel, kCaus, 2, 2, kSame), 1.0).caus_up);
  CHECK_FALSE(critical_flags(make_record(kCaus, kCaus, 2, 2, kSame), 1.0).caus_up);

  CHECK(critical_flags(make_record(kCorr, kCorr, 2, 3, kSame), 1.0).cert_up);
  CHECK_FALSE(critical_flags(make_record(kCorr, kCorr, 3, 3, kSame), 1.0).cert_up);
  CHECK_FALSE(critical_flags(make_record(kCorr, kCorr, 3, 1, kSame), 1.0).cert_up);

  const CriticalFlags up =
      critical_flags(make_record(kCorr, kCorr, 2, 2, kRepMore), 1.0);
  CHECK(up.gen_up);
  CHECK_FALSE(up.gen_down);
  const CriticalFlags down =
      critical_flags(make_record(kCorr, kCorr, 2, 2, kPaperMore), 1.0);
  CHECK(down.gen_down);
  CHECK_FALSE(down.gen_up);

  // sens_up is strict and needs both scores
  CHECK(critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.0, 0.5), 0.4)
            .sens_up);
  CHECK_FALSE(critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.0, 0.5), 0.5)
                  .sens_up);
  CHECK_FALSE(critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.0, 0.0), 0.0)
                  .sens_up);
  CHECK_FALSE(
      critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, std::nullopt, 0.9), 0.1)
          .sens_up);

  // raising the threshold can only clear the flag
  for (double sd : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    const bool lo = critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.0, 0.5),
                                   sd)
                        .sens_up;
    const bool hi = critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.0, 0.5),
                                   sd + 0.2)
                        .sens_up;
    if (hi) CHECK(lo);
  }

  // fully unchanged pair: no flags at all
  const CriticalFlags none =
      critical_flags(make_record(kCorr, kCorr, 2, 2, kSame, 0.3, 0.3), 0.0);
  CHECK_FALSE(none.caus_up);
  CHECK_FALSE(none.cert_up);
  CHECK_FALSE(none.gen_up);
  CHECK_FALSE(none.gen_down);
  CHECK_FALSE(none.sens_up);
}

TEST_CASE("compute_sens_sd") {
  std::vector<ChangeRecord> same{make_record(0, 0, 1, 1, kSame, 0.0, 0.2),
                                 make_record(0, 0, 1, 1, kSame, 0.1, 0.3)};
  CHECK(compute_sens_sd(same) == doctest::Approx(0.0));
  std::vector<ChangeRecord> spread{make_record(0, 0, 1, 1, kSame, 0.0, 0.0),
                                   make_record(0, 0, 1, 1, kSame, 0.0, 0.4)};
  CHECK(compute_sens_sd(spread) == doctest::Approx(0.2));
  std::vector<ChangeRecord> empty{make_record(0, 0, 1, 1, kSame),
                                  make_record(0, 0, 1, 1, kSame)};
  CHECK_THROWS_AS(compute_sens_sd(empty), InsufficientDataError);
}

TEST_CASE("minicorpus end-to-end distortion numbers") {
  Mini m = load_mini();
  std::vector<ChangeRecord> changes =
      detect_all_changes(m.pairs, m.caus, m.cert, m.gen, &m.sens);
  REQUIRE(changes.size() == 12);

  const double sd = compute_sens_sd(changes);
  CHECK(sd == doctest::Approx(std::sqrt(19.0 / 18.0)).epsilon(1e-12));

  std::vector<CriticalFlags> flags;
  for (const auto& c : changes) flags.push_back(critical_flags(c, sd));
  std::map<std::string, const CriticalFlags*> by_id;
  for (const auto& f : flags) by_id[f.pair_id] = &f;

  const auto expect = [&](const char* id, bool caus, bool cert, bool gu,
                          bool gd, bool su) {
    REQUIRE(by_id.count(id) == 1);
    const CriticalFlags& f = *by_id[id];
    CHECK(f.caus_up == caus);
    CHECK(f.cert_up == cert);
    CHECK(f.gen_up == gu);
    CHECK(f.gen_down == gd);
    CHECK(f.sens_up == su);
  };
  expect("pr01", true, true, true, false, true);
  expect("pr02", false, false, false, false, false);
  expect("pr03", true, true, false, true, false);
  expect("pr04", false, false, false, false, false);
  expect("pr05", false, false, false, false, true);
  expect("pr06", false, false, false, true, false);
  expect("pr07", true, false, false, false, false);
  expect("pr08", false, true, false, false, false);
  expect("pr09", false, true, true, false, false);
  expect("pr10", false, false, true, false, true);
  expect("pr11", false, false, false, false, false);
  expect("pr12", false, false, false, true, false);
}

TEST_CASE("minicorpus causality transitions") {
  Mini m = load_mini();
  std::vector<ChangeRecord> changes =
      detect_all_changes(m.pairs, m.caus, m.cert, m.gen, &m.sens);
  TransitionMatrix t = transition_matrix(changes, ChangeDimension::causality);
  REQUIRE(t.labels.size() == 4);
  CHECK(t.total == 12);
  CHECK(t.counts[kCorr][kCaus] == 2);
  CHECK(t.counts[kCaus][kCaus] == 2);
  CHECK(t.counts[kExNo][kCaus] == 1);
  CHECK(t.counts[kCorr][kCorr] == 2);
  CHECK(t.counts[kNoRel][kCaus] == 1);
  CHECK(t.counts[kCaus][kCorr] == 1);
  CHECK(t.counts[kNoRel][kNoRel] == 1);
  CHECK(t.counts[kExNo][kCorr] == 1);
  CHECK(t.counts[kNoRel][kExNo] == 1);
  CHECK(t.same_label_fraction == doctest::Approx(5.0 / 12.0));
  // row sums equal the paper-side label histogram
  const auto sums = t.row_sums();
  CHECK(sums[kNoRel] == 3);
  CHECK(sums[kCorr] == 4);
  CHECK(sums[kCaus] == 3);
  CHECK(sums[kExNo] == 2);
  const auto pct = t.row_percentages();
  CHECK(pct[kCorr][kCaus] == doctest::Approx(50.0));
  CHECK(pct[kExNo][kCaus] == doctest::Approx(50.0));
}

TEST_CASE("certainty transitions, full and collapsed") {
  Mini m = load_mini();
  std::vector<ChangeRecord> changes =
      detect_all_changes(m.pairs, m.caus, m.cert, m.gen, &m.sens);
  TransitionMatrix full = transition_matrix(changes, ChangeDimension::certainty);
  REQUIRE(full.labels.size() == 4);
  CHECK(full.labels[0] == "1");
  CHECK(full.counts[1][3] == 1);  // 2 -> 4
  CHECK(full.counts[1][1] == 2);
  CHECK(full.counts[3][3] == 1);
  CHECK(full.same_label_fraction == doctest::Approx(5.0 / 12.0));

  TransitionMatrix two = transition_matrix(changes, ChangeDimension::certainty,
                                           CertaintyCollapse::two_level);
  REQUIRE(two.labels.size() == 2);
  CHECK(two.labels[0] == "uncertain");
  CHECK(two.labels[1] == "certain");
  CHECK(two.counts[0][1] == 3);  // uncertain -> certain
  CHECK(two.counts[1][1] == 3);
  CHECK(two.counts[0][0] == 4);
  CHECK(two.counts[1][0] == 2);  // certain -> uncertain
  CHECK(two.same_label_fraction == doctest::Approx(7.0 / 12.0));
}

TEST_CASE("single record yields one off-diagonal count") {
  std::vector<ChangeRecord> one{make_record(kCorr, kCaus, 2, 2, kSame)};
  TransitionMatrix t = transition_matrix(one, ChangeDimension::causality);
  long total = 0;
  for (const auto& row : t.counts)
    for (long c : row) total += c;
  CHECK(total == 1);
  CHECK(t.counts[kCorr][kCaus] == 1);
  CHECK(t.same_label_fraction == doctest::Approx(0.0));
}

TEST_CASE("cooccurrence on the fixture") {
  Mini m = load_mini();
  std::vector<ChangeRecord> changes =
      detect_all_changes(m.pairs, m.caus, m.cert, m.gen, &m.sens);
  const double sd = compute_sens_sd(changes);
  std::vector<CriticalFlags> flags;
  for (const auto& c : changes) flags.push_back(critical_flags(c, sd));
  CooccurrenceMatrix co = cooccurrence(flags);
  // order: caus_up, cert_up, gen_up, sens_up
  CHECK(co.flag_names[0] == "caus_up");
  CHECK(co.counts[0][0] == 3);
  CHECK(co.counts[1][1] == 4);
  CHECK(co.counts[2][2] == 3);
  CHECK(co.counts[3][3] == 3);
  CHECK(co.counts[0][1] == 2);
  CHECK(co.counts[0][2] == 1);
  CHECK(co.counts[0][3] == 1);
  CHECK(co.counts[1][2] == 2);
  CHECK(co.counts[1][3] == 1);
  CHECK(co.counts[2][3] == 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(co.counts[i][j] == co.counts[j][i]);       // symmetric
      CHECK(co.counts[i][i] >= co.counts[i][j]);       // diagonal dominates
    }
}

TEST_CASE("cooccurrence degenerate inputs") {
  CooccurrenceMatrix zero = cooccurrence({});
  for (const auto& row : zero.counts)
    for (long c : row) CHECK(c == 0);
  CriticalFlags all;
  all.pair_id = "p";
  all.caus_up = all.cert_up = all.gen_up = all.sens_up = true;
  CooccurrenceMatrix ones = cooccurrence({all});
  for (const auto& row : ones.counts)
    for (long c : row) CHECK(c == 1);
}

TEST_CASE("breakdown by outlet and discipline") {
  Mini m = load_mini();
  std::vector<ChangeRecord> changes =
      detect_all_changes(m.pairs, m.caus, m.cert, m.gen, &m.sens);
  const double sd = compute_sens_sd(changes);
  std::vector<CriticalFlags> flags;
  for (const auto& c : changes) flags.push_back(critical_flags(c, sd));

  BreakdownTable by_outlet = breakdown(flags, m.pairs, m.findings,
                                       BreakdownBy::outlet);
  REQUIRE(by_outlet.groups == std::vector<std::string>{"news", "tweet"});
  CHECK(by_outlet.group_sizes[0] == 6);
  const auto& news = by_outlet.percent[0];
  CHECK(news[0] == doctest::Approx(100.0 / 3.0));  // caus_up 2/6
  CHECK(news[1] == doctest::Approx(100.0 / 3.0));
  CHECK(news[2] == doctest::Approx(100.0 / 6.0));
  CHECK(news[3] == doctest::Approx(100.0 / 3.0));
  CHECK(news[4] == doctest::Approx(100.0 / 3.0));
  const auto& tweet = by_outlet.percent[1];
  CHECK(tweet[0] == doctest::Approx(100.0 / 6.0));
  CHECK(tweet[1] == doctest::Approx(100.0 / 3.0));
  CHECK(tweet[2] == doctest::Approx(100.0 / 3.0));
  CHECK(tweet[3] == doctest::Approx(100.0 / 6.0));
  CHECK(tweet[4] == doctest::Approx(100.0 / 6.0));
  CHECK_FALSE(by_outlet.warnings.empty());  // groups under 20 pairs

  BreakdownTable by_disc = breakdown(flags, m.pairs, m.findings,
                                     BreakdownBy::discipline);
  REQUIRE(by_disc.groups ==
          std::vector<std::string>{"bio", "cs", "med", "psy"});
  const auto& bio = by_disc.percent[0];
  CHECK(bio[0] == doctest::Approx(200.0 / 3.0));
  CHECK(bio[1] == doctest::Approx(200.0 / 3.0));
  const auto& cs = by_disc.percent[1];
  CHECK(cs[0] == doctest::Approx(0.0));
  CHECK(cs[1] == doctest::Approx(0.0));
  CHECK(cs[4] == doctest::Approx(100.0 / 3.0));
  const auto& med = by_disc.percent[2];
  CHECK(med[1] == doctest::Approx(200.0 / 3.0));
  CHECK(med[4] == doctest::Approx(0.0));
  for (const auto& row : by_disc.percent)
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
}

TEST_CASE("breakdown rejects flags with no matching pair") {
  Mini m = load_mini();
  CriticalFlags stray;
  stray.pair_id = "pr99";
  CHECK_THROWS_AS(breakdown({stray}, m.pairs, m.findings, BreakdownBy::outlet),
                  DanglingReferenceError);
}
