#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scicomm/corpus.hpp"

namespace scicomm {

struct AnnotatorPairStats {
  std::string annotator_a;   // lexicographically smaller id
  std::string annotator_b;
  int shared_n = 0;
  double value = 0.0;
};

struct GroupAverage {
  std::string group;
  double value = 0.0;
  int pairs_used = 0;
  int pairs_excluded = 0;    // undefined metric on qualifying overlap
};

struct PairwiseAgreementReport {
  std::string metric;                     // "ia_f1", "kappa" or "spearman"
  std::vector<AnnotatorPairStats> pairs;  // overall scope, canonical order
  double average = 0.0;                   // over qualifying pairs, overall
  int pairs_used = 0;
  int pairs_excluded = 0;
  std::vector<GroupAverage> groups;       // present when a grouping was given
  WarningLog warnings;
};

// instance id -> group name (e.g. discipline).
using InstanceGrouping = std::unordered_map<std::string, std::string>;

// Macro F1 treating one annotator as gold and the other as predictions,
// macro-averaged over the labels either annotator used on their shared
// instances. Symmetric in annotator order.
PairwiseAgreementReport pairwise_ia_f1(const AnnotationSet& annotations,
                                       int min_overlap = 2,
                                       const InstanceGrouping* grouping = nullptr);

// Cohen's kappa from the two annotators' marginals on shared instances.
// Pairs with chance agreement 1 are excluded from the average with a warning.
PairwiseAgreementReport pairwise_kappa(const AnnotationSet& annotations,
                                       int min_overlap = 2,
                                       const InstanceGrouping* grouping = nullptr);

// Tie-corrected Spearman rho on ordinal ratings, averaged with Fisher-Z.
// Pairs where either annotator is constant are excluded with a warning.
PairwiseAgreementReport pairwise_spearman_fisher(
    const AnnotationSet& annotations, int min_overlap = 2,
    const InstanceGrouping* grouping = nullptr);

// tanh(mean(atanh(r))), with each r clamped to +/-0.999999 first.
double fisher_z_mean(const std::vector<double>& correlations);

}  // namespace scicomm
