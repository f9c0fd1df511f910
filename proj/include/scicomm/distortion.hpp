#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scicomm/corpus.hpp"
#include "scicomm/bws.hpp"
#include "scicomm/mace.hpp"

namespace scicomm {

// How every annotated dimension moved from the paper finding to the reported
// finding of one pair.
struct ChangeRecord {
  std::string pair_id;
  int paper_causality = 0;
  int reported_causality = 0;
  int paper_certainty = 1;      // ordinal 1..4
  int reported_certainty = 1;
  int generality = kSameLevel;
  std::optional<double> paper_sens;
  std::optional<double> reported_sens;

  std::optional<double> sens_diff() const {
    if (paper_sens && reported_sens) return *reported_sens - *paper_sens;
    return std::nullopt;
  }
};

struct CriticalFlags {
  std::string pair_id;
  bool caus_up = false;
  bool cert_up = false;
  bool gen_up = false;
  bool gen_down = false;
  bool sens_up = false;
};

inline constexpr std::array<const char*, 5> kFlagNames = {
    "caus_up", "cert_up", "gen_up", "gen_down", "sens_up"};

ChangeRecord detect_changes(const FindingPair& pair,
                            const AggregatedLabels& causality,
                            const AggregatedLabels& certainty,
                            const AggregatedLabels& generality,
                            const SensScoreTable* sens);

std::vector<ChangeRecord> detect_all_changes(const PairSet& pairs,
                                             const AggregatedLabels& causality,
                                             const AggregatedLabels& certainty,
                                             const AggregatedLabels& generality,
                                             const SensScoreTable* sens);

// caus_up: correlation or explicit no-relation reported as causation.
// cert_up: any strict increase on the 4-point scale.
// gen_up / gen_down: the generality label itself.
// sens_up: score difference strictly above sens_sd (both scores non-null).
CriticalFlags critical_flags(const ChangeRecord& record, double sens_sd);

// Population standard deviation of paired score differences.
double compute_sens_sd(const std::vector<ChangeRecord>& records);

enum class ChangeDimension { causality, certainty };

// Two-level certainty used for the collapsed reporting variant:
// levels 1-2 -> uncertain, levels 3-4 -> certain.
enum class CertaintyCollapse { none, two_level };

struct TransitionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<long>> counts;   // counts[paper][reported]
  long total = 0;
  double same_label_fraction = 0.0;

  std::vector<long> row_sums() const;
  // Row-normalized counts as percentages; empty rows stay all-zero.
  std::vector<std::vector<double>> row_percentages() const;
};

TransitionMatrix transition_matrix(const std::vector<ChangeRecord>& records,
                                   ChangeDimension dimension,
                                   CertaintyCollapse collapse = CertaintyCollapse::none);

// Generic variant used by the large-scale pipeline: counts paper -> reported
// transitions of pre-assigned label indices over an explicit label space.
TransitionMatrix count_transitions(const std::vector<std::pair<int, int>>& moves,
                                   const std::vector<std::string>& labels);

// Symmetric co-occurrence counts over {caus_up, cert_up, gen_up, sens_up};
// the diagonal holds per-flag totals.
struct CooccurrenceMatrix {
  std::array<std::string, 4> flag_names;
  std::array<std::array<long, 4>, 4> counts;
};

CooccurrenceMatrix cooccurrence(const std::vector<CriticalFlags>& flags);

enum class BreakdownBy { outlet, discipline };

struct BreakdownTable {
  std::vector<std::string> groups;
  std::vector<std::array<double, 5>> percent;   // per group, order of kFlagNames
  std::vector<long> group_sizes;
  WarningLog warnings;
};

// Percentage of pairs in each group affected by each critical distortion.
BreakdownTable breakdown(const std::vector<CriticalFlags>& flags,
                         const PairSet& pairs, const FindingSet& findings,
                         BreakdownBy by);

}  // namespace scicomm
