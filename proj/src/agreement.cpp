#include "scicomm/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "scicomm/stats.hpp"

namespace scicomm {

namespace {

constexpr double kFisherClamp = 0.999999;

// (annotator -> instance -> label) with deterministic iteration order.
using LabelsByAnnotator = std::map<std::string, std::map<std::string, int>>;

LabelsByAnnotator index_by_annotator(const AnnotationSet& annotations,
                                     const InstanceGrouping* grouping,
                                     const std::string& group) {
  LabelsByAnnotator index;
  for (const auto& rec : annotations.records) {
    if (grouping) {
      auto it = grouping->find(rec.instance_id);
      if (it == grouping->end() || it->second != group) continue;
    }
    index[rec.annotator_id][rec.instance_id] = rec.value;
  }
  return index;
}

struct SharedLabels {
  std::vector<int> a;
  std::vector<int> b;
};

SharedLabels shared_instances(const std::map<std::string, int>& a,
                              const std::map<std::string, int>& b) {
  SharedLabels shared;
  for (const auto& [instance, label_a] : a) {
    auto it = b.find(instance);
    if (it != b.end()) {
      shared.a.push_back(label_a);
      shared.b.push_back(it->second);
    }
  }
  return shared;
}

std::optional<double> macro_f1_union(const std::vector<int>& gold,
                                     const std::vector<int>& pred) {
  std::set<int> label_union(gold.begin(), gold.end());
  label_union.insert(pred.begin(), pred.end());
  double sum = 0.0;
  for (int label : label_union) {
    int tp = 0, gold_n = 0, pred_n = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == label;
      const bool p = pred[i] == label;
      tp += g && p;
      gold_n += g;
      pred_n += p;
    }
    // union membership guarantees gold_n + pred_n > 0
    sum += 2.0 * tp / static_cast<double>(gold_n + pred_n);
  }
  return sum / static_cast<double>(label_union.size());
}

std::optional<double> cohens_kappa(const std::vector<int>& a,
                                   const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> marg_a, marg_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marg_a[a[i]] += 1.0;
    marg_b[b[i]] += 1.0;
    agree += a[i] == b[i];
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, count_a] : marg_a) {
    auto it = marg_b.find(label);
    if (it != marg_b.end()) p_e += (count_a / n) * (it->second / n);
  }
  if (p_e >= 1.0) return std::nullopt;
  return (p_o - p_e) / (1.0 - p_e);
}

std::optional<double> spearman_pair(const std::vector<int>& a,
                                    const std::vector<int>& b) {
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  return try_spearman(x, y);
}

enum class AverageKind { arithmetic, fisher };

struct ScopeResult {
  std::vector<AnnotatorPairStats> pairs;
  double average = 0.0;
  int used = 0;
  int excluded = 0;
  bool any_qualifying = false;
};

template <typename MetricFn>
ScopeResult compute_scope(const LabelsByAnnotator& index, int min_overlap,
                          MetricFn metric, AverageKind kind) {
  ScopeResult out;
  std::vector<double> values;
  for (auto it_a = index.begin(); it_a != index.end(); ++it_a) {
    for (auto it_b = std::next(it_a); it_b != index.end(); ++it_b) {
      const auto shared = shared_instances(it_a->second, it_b->second);
      if (static_cast<int>(shared.a.size()) < min_overlap) continue;
      out.any_qualifying = true;
      const auto value = metric(shared.a, shared.b);
      if (!value) {
        out.excluded++;
        continue;
      }
      out.pairs.push_back({it_a->first, it_b->first,
                           static_cast<int>(shared.a.size()), *value});
      values.push_back(*value);
    }
  }
  out.used = static_cast<int>(values.size());
  if (!values.empty()) {
    if (kind == AverageKind::fisher) {
      out.average = fisher_z_mean(values);
    } else {
      double sum = 0.0;
      for (double v : values) sum += v;
      out.average = sum / static_cast<double>(values.size());
    }
  } else {
    out.average = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

template <typename MetricFn>
PairwiseAgreementReport build_report(const std::string& metric_name,
                                     const AnnotationSet& annotations,
                                     int min_overlap, MetricFn metric,
                                     AverageKind kind,
                                     const InstanceGrouping* grouping,
                                     const std::string& undefined_warning) {
  PairwiseAgreementReport report;
  report.metric = metric_name;

  const auto overall_index = index_by_annotator(annotations, nullptr, "");
  const auto overall = compute_scope(overall_index, min_overlap, metric, kind);
  if (!overall.any_qualifying) {
    throw NoQualifyingPairsError("no annotator pair shares at least " +
                                 std::to_string(min_overlap) + " instances");
  }
  report.pairs = overall.pairs;
  report.average = overall.average;
  report.pairs_used = overall.used;
  report.pairs_excluded = overall.excluded;
  if (overall.excluded > 0) {
    report.warnings.add(metric_name + "-undefined", undefined_warning);
  }

  if (grouping) {
    std::set<std::string> groups;
    for (const auto& [instance, group] : *grouping) groups.insert(group);
    for (const auto& group : groups) {
      const auto group_index = index_by_annotator(annotations, grouping, group);
      const auto scope = compute_scope(group_index, min_overlap, metric, kind);
      GroupAverage avg;
      avg.group = group;
      avg.value = scope.average;
      avg.pairs_used = scope.used;
      avg.pairs_excluded = scope.excluded;
      if (!scope.any_qualifying) {
        report.warnings.add("group-" + group,
                            "group '" + group + "' has no qualifying pairs");
      }
      report.groups.push_back(std::move(avg));
    }
  }
  return report;
}

}  // namespace

PairwiseAgreementReport pairwise_ia_f1(const AnnotationSet& annotations,
                                       int min_overlap,
                                       const InstanceGrouping* grouping) {
  return build_report("ia_f1", annotations, min_overlap, macro_f1_union,
                      AverageKind::arithmetic, grouping, "");
}

PairwiseAgreementReport pairwise_kappa(const AnnotationSet& annotations,
                                       int min_overlap,
                                       const InstanceGrouping* grouping) {
  return build_report(
      "kappa", annotations, min_overlap, cohens_kappa, AverageKind::arithmetic,
      grouping,
      "kappa undefined for at least one pair (chance agreement 1); those "
      "pairs were excluded from the average");
}

PairwiseAgreementReport pairwise_spearman_fisher(
    const AnnotationSet& annotations, int min_overlap,
    const InstanceGrouping* grouping) {
  if (annotations.task && *annotations.task != Task::certainty) {
    throw ConfigError("pairwise_spearman_fisher expects an ordinal task");
  }
  return build_report(
      "spearman", annotations, min_overlap, spearman_pair, AverageKind::fisher,
      grouping,
      "ConstantVectorWarning: at least one pair had a constant rating vector; "
      "those pairs were excluded from the average");
}

double fisher_z_mean(const std::vector<double>& correlations) {
  if (correlations.empty()) {
    throw EmptyInputError("fisher_z_mean: empty input");
  }
  double sum = 0.0;
  for (double r : correlations) {
    const double clamped = std::clamp(r, -kFisherClamp, kFisherClamp);
    sum += std::atanh(clamped);
  }
  return std::tanh(sum / static_cast<double>(correlations.size()));
}

}  // namespace scicomm
