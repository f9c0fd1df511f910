#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scicomm/corpus.hpp"
#include "scicomm/errors.hpp"
#include "scicomm/rng.hpp"

namespace scicomm {

// Collapsed label spaces used for classifier evaluation:
// causality {causation, correlation, unclear_relation},
// certainty {certain, somewhat_certain, uncertain},
// generality unchanged.
LabelSpace collapsed_label_space(Task task);

// Maps a full-space label index onto the collapsed space of the task.
// For certainty the input is a 0-based index of the "1".."4" space.
int collapse_label(Task task, int label);

struct PredictionRecord {
  std::string instance_id;
  Task task = Task::causality;
  std::optional<int> label;        // index into collapsed space
  std::optional<double> score;
  std::optional<std::string> raw_text;
};

struct PredictionSet {
  std::optional<Task> task;
  std::vector<PredictionRecord> records;
  WarningLog warnings;
};

PredictionSet load_predictions(const std::string& path);
void save_predictions(const PredictionSet& preds, const LabelSpace& space,
                      const std::string& path);

struct SplitResult {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Deterministic shuffled split; with stratify_by, per-class train counts are
// round(ratio * class size), so proportions hold within one instance.
SplitResult split_train_test(
    const std::vector<std::string>& instance_ids, double ratio, uint64_t seed,
    const std::map<std::string, std::string>* stratify_by = nullptr);

struct ClassMetrics {
  std::string label;
  long gold_n = 0;
  long pred_n = 0;
  long tp = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  long n = 0;
  WarningLog warnings;
};

// Precision/recall/F1 over the full label space; classes absent from both
// gold and pred score 0 and raise a warning.
MetricsReport classification_metrics(const std::vector<int>& gold,
                                     const std::vector<int>& pred,
                                     const LabelSpace& space);

double pearson_r(const std::vector<double>& gold, const std::vector<double>& pred);

// label name -> surface strings matched case-insensitively on word boundaries
using AliasTable = std::map<std::string, std::vector<std::string>>;

AliasTable default_alias_table(Task task);
AliasTable load_alias_table(const std::string& path, Task task);
void save_alias_table(const AliasTable& aliases, const std::string& path);

// Picks the alias occurrence closest to the first occurrence of the cue
// (ties: earliest occurrence, then alias list order); cue missing from the
// text means distance is measured from the start of the text.
std::string extract_label_from_text(const std::string& text,
                                    const AliasTable& aliases,
                                    const std::string& cue);

}  // namespace scicomm
