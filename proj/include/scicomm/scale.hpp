#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scicomm/corpus.hpp"
#include "scicomm/distortion.hpp"
#include "scicomm/errors.hpp"

namespace scicomm {

struct SourceScore {
  std::string finding_id;
  Source source = Source::paper;
  double score = 0.0;   // in [-1, 1]
};

// Streams records from a JSONL file of {finding_id, source, score} rows so the
// multi-million-row corpora never have to fit in memory.
void for_each_source_score(const std::string& path,
                           const std::function<void(const SourceScore&)>& fn);

struct SourceHistogram {
  long n = 0;
  std::vector<long> counts;
  std::vector<double> density;   // counts / (n * bin_width); zero when n = 0
};

struct DensityHistogram {
  int bins = 50;
  double lo = -1.0;
  double hi = 1.0;
  std::map<std::string, SourceHistogram> per_source;   // keyed by source name

  double bin_width() const { return (hi - lo) / bins; }
  std::vector<double> bin_edges() const;
};

class HistogramAccumulator {
 public:
  explicit HistogramAccumulator(int bins = 50);
  void add(const SourceScore& record);
  DensityHistogram finish() const;

 private:
  DensityHistogram hist_;
};

DensityHistogram density_histogram(const std::vector<SourceScore>& scores,
                                   int bins = 50);

// Triangular kernel smoothing over neighboring bins, emitted alongside the raw
// histogram (whether the original figure smoothed is unknown).
std::vector<double> smooth_density(const std::vector<double>& density);

struct Coefficient {
  double estimate = 0.0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
};

struct RegressionResult {
  Source baseline = Source::paper;
  std::map<std::string, Coefficient> coefficients;   // intercept + non-baseline
  long n = 0;
  int bootstrap_n = 0;
  std::string ci_method = "percentile bootstrap";
};

// OLS of score on dummy-coded source with percentile-bootstrap 95% CIs.
// bootstrap_n = 0 yields point estimates with null CIs.
RegressionResult source_regression(const std::vector<SourceScore>& scores,
                                   Source baseline = Source::paper,
                                   int bootstrap_n = 1000, uint64_t seed = 0);

struct LabeledPair {
  std::string pair_id;
  Outlet outlet = Outlet::news;
  int paper_label = 0;      // collapsed-space index
  int reported_label = 0;
};

// Per-outlet transition matrices over a collapsed label space.
std::map<std::string, TransitionMatrix> largescale_transitions(
    const std::vector<LabeledPair>& pairs, const std::vector<std::string>& labels);

std::vector<LabeledPair> load_labeled_pairs(const std::string& path,
                                            const LabelSpace& space,
                                            WarningLog& warnings);

}  // namespace scicomm
