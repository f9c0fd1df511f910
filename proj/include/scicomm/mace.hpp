#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "scicomm/corpus.hpp"

namespace scicomm {

struct MaceConfig {
  int iterations = 50;
  int restarts = 10;
  double smoothing = 0.01;   // additive smoothing on expected counts
  double tolerance = 1e-6;   // convergence threshold on the log-likelihood
  std::uint64_t seed = 0;
};

// Fitted annotator-competence model. Each annotation is either a copy of the
// latent true label (probability = competence of the annotator) or a draw
// from the annotator's private spam distribution.
struct MaceModel {
  LabelSpace space;
  std::vector<std::string> annotator_ids;            // sorted
  std::vector<double> competence;                    // per annotator, in [0,1]
  std::vector<std::vector<double>> spam_dist;        // per annotator over labels
  std::vector<std::string> instance_ids;             // first-appearance order
  std::vector<std::vector<double>> posterior;        // per instance over labels
  double log_likelihood = 0.0;                       // marginal, selected restart
  // Per-iteration EM objective of the selected restart: marginal log-likelihood
  // plus the log-density kernel of the smoothing prior. The marginal alone can
  // dip slightly when the M-step applies additive smoothing; the penalized
  // objective is the quantity EM actually ascends, so it is monotone.
  std::vector<double> ll_history;
  std::vector<std::vector<double>> restart_histories;
  std::vector<double> restart_final_lls;             // marginal, per restart
  bool converged = false;
  WarningLog warnings;

  int annotator_index(const std::string& id) const;
  const std::vector<double>& posterior_for(const std::string& instance_id) const;

 private:
  mutable std::unordered_map<std::string, std::size_t> instance_index_;
};

MaceModel fit_mace(const AnnotationSet& annotations, const MaceConfig& config);

struct AggregatedLabels {
  LabelSpace space;
  std::vector<std::pair<std::string, int>> labels;   // (instance_id, label index)
  std::unordered_map<std::string, int> lookup;

  std::size_t size() const { return labels.size(); }
  const int* find(const std::string& instance_id) const;
  void add(const std::string& instance_id, int label);
};

// Argmax of the per-instance posterior; exact ties go to the label that
// appears first in tie_break (a priority ordering of label indices).
AggregatedLabels aggregate_labels(const MaceModel& model,
                                  const std::vector<int>& tie_break = {});

// Modal label per instance with the same deterministic tie rule.
AggregatedLabels majority_vote(const AnnotationSet& annotations,
                               const std::vector<int>& tie_break = {});

// JSONL rows {instance_id, label, posterior?}; labels resolved against space.
AggregatedLabels load_aggregated_labels(const std::string& path,
                                        const LabelSpace& space);
void save_aggregated_labels(const std::string& path, const AggregatedLabels& agg,
                            const MaceModel* model = nullptr);

}  // namespace scicomm
