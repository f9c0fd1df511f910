#include "scicomm/scale.hpp"

#include <algorithm>
#include <cmath>

#include "scicomm/jsonl.hpp"
#include "scicomm/rng.hpp"
#include "scicomm/stats.hpp"

namespace scicomm {

void for_each_source_score(const std::string& path,
                           const std::function<void(const SourceScore&)>& fn) {
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    SourceScore rec;
    if (!obj.contains("finding_id") || !obj["finding_id"].is_string())
      throw ParseError(path, line_no, "missing string field 'finding_id'");
    rec.finding_id = obj["finding_id"].get<std::string>();
    if (!obj.contains("source") || !obj["source"].is_string())
      throw ParseError(path, line_no, "missing string field 'source'");
    rec.source = source_from_string(obj["source"].get<std::string>());
    if (!obj.contains("score") || !obj["score"].is_number())
      throw ParseError(path, line_no, "missing numeric field 'score'");
    rec.score = obj["score"].get<double>();
    if (rec.score < -1.0 || rec.score > 1.0)
      throw SchemaError(path + " line " + std::to_string(line_no) +
                        ": score outside [-1, 1]");
    fn(rec);
  });
}

std::vector<double> DensityHistogram::bin_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b)
    edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  return edges;
}

HistogramAccumulator::HistogramAccumulator(int bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  hist_.bins = bins;
}

void HistogramAccumulator::add(const SourceScore& record) {
  auto& sh = hist_.per_source[to_string(record.source)];
  if (sh.counts.empty()) sh.counts.assign(static_cast<std::size_t>(hist_.bins), 0);
  double t = (record.score - hist_.lo) / (hist_.hi - hist_.lo);
  int bin = static_cast<int>(t * hist_.bins);
  bin = std::clamp(bin, 0, hist_.bins - 1);   // score = hi lands in the top bin
  sh.counts[static_cast<std::size_t>(bin)] += 1;
  sh.n += 1;
}

DensityHistogram HistogramAccumulator::finish() const {
  DensityHistogram out = hist_;
  const double width = out.bin_width();
  for (auto& [name, sh] : out.per_source) {
    sh.density.assign(sh.counts.size(), 0.0);
    if (sh.n == 0) continue;
    for (std::size_t b = 0; b < sh.counts.size(); ++b)
      sh.density[b] = static_cast<double>(sh.counts[b]) /
                      (static_cast<double>(sh.n) * width);
  }
  return out;
}

DensityHistogram density_histogram(const std::vector<SourceScore>& scores,
                                   int bins) {
  HistogramAccumulator acc(bins);
  for (const auto& s : scores) acc.add(s);
  return acc.finish();
}

std::vector<double> smooth_density(const std::vector<double>& density) {
  const std::size_t n = density.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Triangular kernel (1, 2, 1)/4 with reflected edges.
    const double left = density[i > 0 ? i - 1 : i];
    const double right = density[i + 1 < n ? i + 1 : i];
    out[i] = 0.25 * left + 0.5 * density[i] + 0.25 * right;
  }
  return out;
}

namespace {

// Dummy-coded OLS has a closed form: the intercept is the baseline-source
// mean and each coefficient is that source's mean minus the baseline mean.
struct GroupMeans {
  std::array<double, 3> sum = {0.0, 0.0, 0.0};
  std::array<long, 3> count = {0, 0, 0};

  void add(Source s, double score) {
    const auto i = static_cast<std::size_t>(s);
    sum[i] += score;
    count[i] += 1;
  }
  double mean(Source s) const {
    const auto i = static_cast<std::size_t>(s);
    return sum[i] / static_cast<double>(count[i]);
  }
};

std::map<std::string, double> fit_point(const std::vector<SourceScore>& scores,
                                        const std::vector<std::size_t>& index,
                                        Source baseline,
                                        const std::vector<Source>& others) {
  GroupMeans g;
  for (std::size_t idx : index) g.add(scores[idx].source, scores[idx].score);
  for (Source s : others)
    if (g.count[static_cast<std::size_t>(s)] == 0)
      throw SingularDesignError("source '" + to_string(s) +
                                "' missing from a bootstrap resample");
  if (g.count[static_cast<std::size_t>(baseline)] == 0)
    throw SingularDesignError("baseline source '" + to_string(baseline) +
                              "' missing from a bootstrap resample");
  std::map<std::string, double> est;
  est["intercept"] = g.mean(baseline);
  for (Source s : others) est[to_string(s)] = g.mean(s) - g.mean(baseline);
  return est;
}

}  // namespace

RegressionResult source_regression(const std::vector<SourceScore>& scores,
                                   Source baseline, int bootstrap_n,
                                   uint64_t seed) {
  if (bootstrap_n < 0) throw ConfigError("bootstrap_n must be non-negative");
  GroupMeans g;
  for (const auto& s : scores) g.add(s.source, s.score);

  std::vector<Source> others;
  int present = 0;
  for (Source s : {Source::paper, Source::news, Source::tweet}) {
    const long n = g.count[static_cast<std::size_t>(s)];
    if (n > 0) ++present;
    if (s != baseline && n > 0) others.push_back(s);
  }
  if (g.count[static_cast<std::size_t>(baseline)] == 0)
    throw SingularDesignError("baseline source '" + to_string(baseline) +
                              "' has no records");
  if (present < 2)
    throw SingularDesignError("regression needs at least 2 sources present");
  for (Source s : {Source::paper, Source::news, Source::tweet}) {
    const long n = g.count[static_cast<std::size_t>(s)];
    if (n > 0 && n < 10)
      throw InsufficientDataError("source '" + to_string(s) + "' has only " +
                                  std::to_string(n) +
                                  " records; need at least 10");
  }

  std::vector<std::size_t> all(scores.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto point = fit_point(scores, all, baseline, others);

  RegressionResult result;
  result.baseline = baseline;
  result.n = static_cast<long>(scores.size());
  result.bootstrap_n = bootstrap_n;
  for (const auto& [name, est] : point) result.coefficients[name].estimate = est;
  if (bootstrap_n == 0) return result;

  std::map<std::string, std::vector<double>> draws;
  std::vector<std::size_t> resample(scores.size());
  uint64_t stream = 0;
  for (int b = 0; b < bootstrap_n; ++b) {
    // A resample can drop a rare source entirely; redraw from the next stream
    // in that case so every replicate estimates the same coefficients.
    for (;;) {
      Rng rng(Rng::derive(seed, stream++));
      for (auto& idx : resample) idx = rng.below(scores.size());
      try {
        const auto est = fit_point(scores, resample, baseline, others);
        for (const auto& [name, v] : est) draws[name].push_back(v);
        break;
      } catch (const SingularDesignError&) {
      }
    }
  }
  for (auto& [name, v] : draws) {
    std::sort(v.begin(), v.end());
    result.coefficients[name].ci_low = quantile(v, 0.025);
    result.coefficients[name].ci_high = quantile(v, 0.975);
  }
  return result;
}

std::map<std::string, TransitionMatrix> largescale_transitions(
    const std::vector<LabeledPair>& pairs, const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::pair<int, int>>> per_outlet;
  for (const auto& p : pairs)
    per_outlet[to_string(p.outlet)].emplace_back(p.paper_label, p.reported_label);
  std::map<std::string, TransitionMatrix> out;
  for (const auto& [outlet, moves] : per_outlet)
    out[outlet] = count_transitions(moves, labels);
  return out;
}

std::vector<LabeledPair> load_labeled_pairs(const std::string& path,
                                            const LabelSpace& space,
                                            WarningLog& warnings) {
  std::vector<LabeledPair> out;
  static const std::vector<std::string> known = {"pair_id", "outlet",
                                                 "paper_label", "reported_label"};
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    LabeledPair rec;
    if (!obj.contains("pair_id") || !obj["pair_id"].is_string())
      throw ParseError(path, line_no, "missing string field 'pair_id'");
    rec.pair_id = obj["pair_id"].get<std::string>();
    if (!obj.contains("outlet") || !obj["outlet"].is_string())
      throw ParseError(path, line_no, "missing string field 'outlet'");
    rec.outlet = outlet_from_string(obj["outlet"].get<std::string>());
    for (const char* key : {"paper_label", "reported_label"}) {
      if (!obj.contains(key) || !obj[key].is_string())
        throw ParseError(path, line_no,
                         std::string("missing string field '") + key + "'");
    }
    rec.paper_label = space.require(obj["paper_label"].get<std::string>());
    rec.reported_label = space.require(obj["reported_label"].get<std::string>());
    warn_unknown_fields(obj, known, "labeled pair", warnings);
    out.push_back(std::move(rec));
  });
  if (out.empty()) throw EmptyInputError(path + ": no labeled pairs");
  return out;
}

}  // namespace scicomm
