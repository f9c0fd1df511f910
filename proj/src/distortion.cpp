#include "scicomm/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scicomm/errors.hpp"
#include "scicomm/stats.hpp"

namespace scicomm {

namespace {

int require_label(const AggregatedLabels& agg, const std::string& instance_id,
                  const char* task) {
  const int* label = agg.find(instance_id);
  if (label == nullptr) throw MissingLabelError(task, instance_id);
  return *label;
}

}  // namespace

ChangeRecord detect_changes(const FindingPair& pair,
                            const AggregatedLabels& causality,
                            const AggregatedLabels& certainty,
                            const AggregatedLabels& generality,
                            const SensScoreTable* sens) {
  ChangeRecord rec;
  rec.pair_id = pair.pair_id;
  rec.paper_causality = require_label(causality, pair.paper_finding_id, "causality");
  rec.reported_causality =
      require_label(causality, pair.reported_finding_id, "causality");
  // Certainty labels are stored as 0-based indices of the "1".."4" space.
  rec.paper_certainty =
      require_label(certainty, pair.paper_finding_id, "certainty") + 1;
  rec.reported_certainty =
      require_label(certainty, pair.reported_finding_id, "certainty") + 1;
  // Generality is annotated once per pair.
  rec.generality = require_label(generality, pair.pair_id, "generality");
  if (sens != nullptr) {
    rec.paper_sens = sens->score(pair.paper_finding_id);
    rec.reported_sens = sens->score(pair.reported_finding_id);
  }
  return rec;
}

std::vector<ChangeRecord> detect_all_changes(const PairSet& pairs,
                                             const AggregatedLabels& causality,
                                             const AggregatedLabels& certainty,
                                             const AggregatedLabels& generality,
                                             const SensScoreTable* sens) {
  std::vector<ChangeRecord> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs)
    out.push_back(detect_changes(p, causality, certainty, generality, sens));
  return out;
}

CriticalFlags critical_flags(const ChangeRecord& record, double sens_sd) {
  CriticalFlags f;
  f.pair_id = record.pair_id;
  f.caus_up = (record.paper_causality == kCorrelation ||
               record.paper_causality == kExplicitlyNoRelation) &&
              record.reported_causality == kCausation;
  f.cert_up = record.reported_certainty > record.paper_certainty;
  f.gen_up = record.generality == kReportedMoreGeneral;
  f.gen_down = record.generality == kPaperMoreGeneral;
  if (auto d = record.sens_diff()) f.sens_up = *d > sens_sd;
  return f;
}

double compute_sens_sd(const std::vector<ChangeRecord>& records) {
  std::vector<double> diffs;
  for (const auto& r : records)
    if (auto d = r.sens_diff()) diffs.push_back(*d);
  if (diffs.empty())
    throw InsufficientDataError("no pairs with sensationalism scores on both sides");
  return population_sd(diffs);
}

std::vector<long> TransitionMatrix::row_sums() const {
  std::vector<long> sums(counts.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (long c : counts[i]) sums[i] += c;
  return sums;
}

std::vector<std::vector<double>> TransitionMatrix::row_percentages() const {
  const std::vector<long> sums = row_sums();
  std::vector<std::vector<double>> pct(counts.size(),
                                       std::vector<double>(labels.size(), 0.0));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (sums[i] == 0) continue;
    for (std::size_t j = 0; j < counts[i].size(); ++j)
      pct[i][j] = 100.0 * static_cast<double>(counts[i][j]) /
                  static_cast<double>(sums[i]);
  }
  return pct;
}

namespace {

TransitionMatrix build_matrix(const std::vector<std::pair<int, int>>& moves,
                              const std::vector<std::string>& labels) {
  TransitionMatrix m;
  m.labels = labels;
  std::size_t k = labels.size();
  m.counts.assign(k, std::vector<long>(k, 0));
  long same = 0;
  for (const auto& [from, to] : moves) {
    m.counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] += 1;
    if (from == to) ++same;
    ++m.total;
  }
  m.same_label_fraction =
      m.total > 0 ? static_cast<double>(same) / static_cast<double>(m.total) : 0.0;
  return m;
}

int collapse_certainty_two_level(int level) { return level <= 2 ? 0 : 1; }

}  // namespace

TransitionMatrix transition_matrix(const std::vector<ChangeRecord>& records,
                                   ChangeDimension dimension,
                                   CertaintyCollapse collapse) {
  std::vector<std::pair<int, int>> moves;
  moves.reserve(records.size());
  std::vector<std::string> labels;
  if (dimension == ChangeDimension::causality) {
    labels = task_label_space(Task::causality).names;
    for (const auto& r : records)
      moves.emplace_back(r.paper_causality, r.reported_causality);
  } else if (collapse == CertaintyCollapse::two_level) {
    labels = {"uncertain", "certain"};
    for (const auto& r : records)
      moves.emplace_back(collapse_certainty_two_level(r.paper_certainty),
                         collapse_certainty_two_level(r.reported_certainty));
  } else {
    labels = task_label_space(Task::certainty).names;
    for (const auto& r : records)
      moves.emplace_back(r.paper_certainty - 1, r.reported_certainty - 1);
  }
  return build_matrix(moves, labels);
}

TransitionMatrix count_transitions(const std::vector<std::pair<int, int>>& moves,
                                   const std::vector<std::string>& labels) {
  for (const auto& [from, to] : moves) {
    if (from < 0 || to < 0 || from >= static_cast<int>(labels.size()) ||
        to >= static_cast<int>(labels.size()))
      throw SchemaError("transition label index out of range");
  }
  return build_matrix(moves, labels);
}

CooccurrenceMatrix cooccurrence(const std::vector<CriticalFlags>& flags) {
  CooccurrenceMatrix m;
  m.flag_names = {"caus_up", "cert_up", "gen_up", "sens_up"};
  for (auto& row : m.counts) row.fill(0);
  for (const auto& f : flags) {
    const std::array<bool, 4> v = {f.caus_up, f.cert_up, f.gen_up, f.sens_up};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!v[i]) continue;
      for (std::size_t j = 0; j < 4; ++j)
        if (v[j]) m.counts[i][j] += 1;
    }
  }
  return m;
}

BreakdownTable breakdown(const std::vector<CriticalFlags>& flags,
                         const PairSet& pairs, const FindingSet& findings,
                         BreakdownBy by) {
  std::map<std::string, const FindingPair*> pair_index;
  for (const auto& p : pairs.pairs) pair_index[p.pair_id] = &p;

  // group -> [flag totals..., n]
  std::map<std::string, std::array<long, 5>> hits;
  std::map<std::string, long> sizes;
  BreakdownTable table;
  for (const auto& f : flags) {
    auto pit = pair_index.find(f.pair_id);
    if (pit == pair_index.end())
      throw DanglingReferenceError("flags reference unknown pair '" + f.pair_id + "'");
    const FindingPair& pair = *pit->second;
    std::string group;
    if (by == BreakdownBy::outlet) {
      group = to_string(pair.outlet);
    } else {
      auto fit = findings.by_id.find(pair.paper_finding_id);
      if (fit == findings.by_id.end())
        throw DanglingReferenceError("pair '" + pair.pair_id +
                                     "' references unknown finding '" +
                                     pair.paper_finding_id + "'");
      group = to_string(findings.findings[fit->second].discipline);
    }
    auto& h = hits[group];
    if (f.caus_up) h[0] += 1;
    if (f.cert_up) h[1] += 1;
    if (f.gen_up) h[2] += 1;
    if (f.gen_down) h[3] += 1;
    if (f.sens_up) h[4] += 1;
    sizes[group] += 1;
  }
  for (const auto& [group, h] : hits) {
    long n = sizes[group];
    table.groups.push_back(group);
    table.group_sizes.push_back(n);
    std::array<double, 5> pct{};
    for (std::size_t i = 0; i < 5; ++i)
      pct[i] = 100.0 * static_cast<double>(h[i]) / static_cast<double>(n);
    table.percent.push_back(pct);
    if (n < 20)
      table.warnings.add("small_group:" + group,
                         "group '" + group + "' has only " + std::to_string(n) +
                             " pairs; percentages are unstable");
  }
  return table;
}

}  // namespace scicomm
