#include "scicomm/mace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scicomm/jsonl.hpp"
#include "scicomm/rng.hpp"

namespace scicomm {

namespace {

struct Observation {
  int annotator;
  int label;
};

struct Dataset {
  std::vector<std::string> instance_ids;
  std::vector<std::vector<Observation>> observations;  // per instance
  std::vector<std::string> annotator_ids;
  std::size_t n_labels = 0;
};

Dataset index_annotations(const AnnotationSet& annotations) {
  Dataset data;
  data.n_labels = annotations.space.size();
  data.annotator_ids = annotations.annotator_ids();
  std::unordered_map<std::string, int> annotator_index;
  for (std::size_t i = 0; i < data.annotator_ids.size(); ++i) {
    annotator_index[data.annotator_ids[i]] = static_cast<int>(i);
  }
  std::unordered_map<std::string, std::size_t> instance_index;
  for (const auto& rec : annotations.records) {
    auto it = instance_index.find(rec.instance_id);
    std::size_t idx;
    if (it == instance_index.end()) {
      idx = data.instance_ids.size();
      instance_index.emplace(rec.instance_id, idx);
      data.instance_ids.push_back(rec.instance_id);
      data.observations.emplace_back();
    } else {
      idx = it->second;
    }
    data.observations[idx].push_back(
        {annotator_index.at(rec.annotator_id), rec.value});
  }
  return data;
}

struct Params {
  std::vector<double> theta;                   // competence per annotator
  std::vector<std::vector<double>> xi;         // spam distribution per annotator
};

struct EStepResult {
  std::vector<std::vector<double>> posterior;
  double log_likelihood = 0.0;
  // expected counts for the M-step
  std::vector<double> copy_count;
  std::vector<double> spam_count;
  std::vector<std::vector<double>> spam_emit;
};

EStepResult e_step(const Dataset& data, const Params& p) {
  const std::size_t n_labels = data.n_labels;
  const std::size_t n_annotators = data.annotator_ids.size();
  EStepResult out;
  out.posterior.assign(data.instance_ids.size(), std::vector<double>(n_labels, 0.0));
  out.copy_count.assign(n_annotators, 0.0);
  out.spam_count.assign(n_annotators, 0.0);
  out.spam_emit.assign(n_annotators, std::vector<double>(n_labels, 0.0));

  const double log_prior = -std::log(static_cast<double>(n_labels));
  std::vector<double> log_score(n_labels);
  for (std::size_t i = 0; i < data.instance_ids.size(); ++i) {
    const auto& obs = data.observations[i];
    std::fill(log_score.begin(), log_score.end(), 0.0);
    for (const auto& o : obs) {
      const double theta = p.theta[static_cast<std::size_t>(o.annotator)];
      const double spam =
          (1.0 - theta) * p.xi[static_cast<std::size_t>(o.annotator)]
                              [static_cast<std::size_t>(o.label)];
      for (std::size_t t = 0; t < n_labels; ++t) {
        const double factor =
            (static_cast<int>(t) == o.label) ? theta + spam : spam;
        log_score[t] += std::log(factor);
      }
    }
    const double max_log = *std::max_element(log_score.begin(), log_score.end());
    double sum = 0.0;
    for (std::size_t t = 0; t < n_labels; ++t) {
      sum += std::exp(log_score[t] - max_log);
    }
    const double log_norm = max_log + std::log(sum);
    out.log_likelihood += log_norm + log_prior;

    auto& post = out.posterior[i];
    for (std::size_t t = 0; t < n_labels; ++t) {
      post[t] = std::exp(log_score[t] - log_norm);
    }
    // renormalize so rows sum to 1 within 1e-9 regardless of rounding
    double psum = 0.0;
    for (double v : post) psum += v;
    for (double& v : post) v /= psum;

    for (const auto& o : obs) {
      const std::size_t j = static_cast<std::size_t>(o.annotator);
      const std::size_t a = static_cast<std::size_t>(o.label);
      const double theta = p.theta[j];
      const double spam = (1.0 - theta) * p.xi[j][a];
      // P(copied | T = a) for this annotation; zero for any other true label
      const double copy_given_match = theta / (theta + spam);
      const double e_copy = post[a] * copy_given_match;
      out.copy_count[j] += e_copy;
      out.spam_count[j] += 1.0 - e_copy;
      out.spam_emit[j][a] += 1.0 - e_copy;
    }
  }
  return out;
}

void m_step(const EStepResult& e, double smoothing, Params& p) {
  const std::size_t n_annotators = p.theta.size();
  const std::size_t n_labels = p.xi.empty() ? 0 : p.xi[0].size();
  for (std::size_t j = 0; j < n_annotators; ++j) {
    const double copied = e.copy_count[j] + smoothing;
    const double spammed = e.spam_count[j] + smoothing;
    p.theta[j] = copied / (copied + spammed);
    double denom = static_cast<double>(n_labels) * smoothing;
    for (std::size_t l = 0; l < n_labels; ++l) denom += e.spam_emit[j][l];
    for (std::size_t l = 0; l < n_labels; ++l) {
      p.xi[j][l] = (e.spam_emit[j][l] + smoothing) / denom;
    }
  }
}

// Log-density kernel of the prior implied by additive smoothing: the M-step
// update is the MAP estimate under Beta(1+δ, 1+δ) on θ_j and Dir(1+δ) on ξ_j.
double prior_kernel(const Params& p, double smoothing) {
  double k = 0.0;
  for (std::size_t j = 0; j < p.theta.size(); ++j) {
    k += std::log(p.theta[j]) + std::log(1.0 - p.theta[j]);
    for (double v : p.xi[j]) k += std::log(v);
  }
  return smoothing * k;
}

Params init_params(const Dataset& data, Rng& rng) {
  Params p;
  p.theta.resize(data.annotator_ids.size());
  p.xi.resize(data.annotator_ids.size());
  for (std::size_t j = 0; j < p.theta.size(); ++j) {
    p.theta[j] = rng.uniform(0.3, 0.9);
    p.xi[j] = rng.dirichlet_uniform(data.n_labels);
  }
  return p;
}

std::vector<int> default_tie_break(std::size_t n_labels,
                                   const std::vector<int>& requested) {
  if (!requested.empty()) return requested;
  std::vector<int> order(n_labels);
  for (std::size_t i = 0; i < n_labels; ++i) order[i] = static_cast<int>(i);
  return order;
}

int break_ties(const std::vector<int>& candidates, const std::vector<int>& order) {
  for (int label : order) {
    for (int c : candidates) {
      if (c == label) return label;
    }
  }
  return candidates.front();
}

}  // namespace

int MaceModel::annotator_index(const std::string& id) const {
  for (std::size_t i = 0; i < annotator_ids.size(); ++i) {
    if (annotator_ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<double>& MaceModel::posterior_for(
    const std::string& instance_id) const {
  if (instance_index_.empty()) {
    for (std::size_t i = 0; i < instance_ids.size(); ++i) {
      instance_index_.emplace(instance_ids[i], i);
    }
  }
  auto it = instance_index_.find(instance_id);
  if (it == instance_index_.end()) {
    throw MissingLabelError("posterior", instance_id);
  }
  return posterior[it->second];
}

MaceModel fit_mace(const AnnotationSet& annotations, const MaceConfig& config) {
  if (annotations.records.empty()) {
    throw EmptyInputError("fit_mace: no annotations");
  }
  if (config.iterations < 1 || config.restarts < 1) {
    throw ConfigError("fit_mace: iterations and restarts must be positive");
  }
  const Dataset data = index_annotations(annotations);

  MaceModel best;
  best.space = annotations.space;
  best.annotator_ids = data.annotator_ids;
  best.instance_ids = data.instance_ids;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool any_converged = false;

  for (int r = 0; r < config.restarts; ++r) {
    Rng rng(Rng::derive(config.seed, static_cast<std::uint64_t>(r)));
    Params params = init_params(data, rng);

    std::vector<double> history;
    EStepResult e = e_step(data, params);
    history.push_back(e.log_likelihood + prior_kernel(params, config.smoothing));
    bool converged = false;
    for (int it = 1; it < config.iterations; ++it) {
      m_step(e, config.smoothing, params);
      e = e_step(data, params);
      history.push_back(e.log_likelihood + prior_kernel(params, config.smoothing));
      const double delta = history[history.size() - 1] - history[history.size() - 2];
      if (std::abs(delta) < config.tolerance) {
        converged = true;
        break;
      }
    }
    any_converged = any_converged || converged;

    best.restart_histories.push_back(history);
    best.restart_final_lls.push_back(e.log_likelihood);
    if (e.log_likelihood > best_ll) {
      best_ll = e.log_likelihood;
      best.competence = params.theta;
      best.spam_dist = params.xi;
      best.posterior = std::move(e.posterior);
      best.log_likelihood = e.log_likelihood;
      best.ll_history = history;
      best.converged = converged;
    }
  }
  if (!best.converged) {
    best.warnings.add("NonConvergenceWarning",
                      "NonConvergenceWarning: selected restart hit the "
                      "iteration limit before the log-likelihood settled "
                      "below tolerance");
  }
  return best;
}

const int* AggregatedLabels::find(const std::string& instance_id) const {
  auto it = lookup.find(instance_id);
  return it == lookup.end() ? nullptr : &it->second;
}

void AggregatedLabels::add(const std::string& instance_id, int label) {
  labels.emplace_back(instance_id, label);
  lookup.emplace(instance_id, label);
}

AggregatedLabels aggregate_labels(const MaceModel& model,
                                  const std::vector<int>& tie_break) {
  AggregatedLabels out;
  out.space = model.space;
  const auto order = default_tie_break(model.space.size(), tie_break);
  for (std::size_t i = 0; i < model.instance_ids.size(); ++i) {
    const auto& post = model.posterior[i];
    const double max_p = *std::max_element(post.begin(), post.end());
    std::vector<int> candidates;
    for (std::size_t t = 0; t < post.size(); ++t) {
      if (post[t] == max_p) candidates.push_back(static_cast<int>(t));
    }
    out.add(model.instance_ids[i], break_ties(candidates, order));
  }
  return out;
}

AggregatedLabels majority_vote(const AnnotationSet& annotations,
                               const std::vector<int>& tie_break) {
  if (annotations.records.empty()) {
    throw EmptyInputError("majority_vote: no annotations");
  }
  AggregatedLabels out;
  out.space = annotations.space;
  const auto order = default_tie_break(annotations.space.size(), tie_break);

  std::vector<std::string> instance_order;
  std::unordered_map<std::string, std::vector<int>> counts;
  for (const auto& rec : annotations.records) {
    auto it = counts.find(rec.instance_id);
    if (it == counts.end()) {
      instance_order.push_back(rec.instance_id);
      it = counts.emplace(rec.instance_id,
                          std::vector<int>(annotations.space.size(), 0)).first;
    }
    it->second[static_cast<std::size_t>(rec.value)]++;
  }
  for (const auto& id : instance_order) {
    const auto& c = counts.at(id);
    const int max_c = *std::max_element(c.begin(), c.end());
    std::vector<int> candidates;
    for (std::size_t t = 0; t < c.size(); ++t) {
      if (c[t] == max_c) candidates.push_back(static_cast<int>(t));
    }
    out.add(id, break_ties(candidates, order));
  }
  return out;
}

AggregatedLabels load_aggregated_labels(const std::string& path,
                                        const LabelSpace& space) {
  AggregatedLabels out;
  out.space = space;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    if (!obj.contains("instance_id") || !obj["instance_id"].is_string())
      throw ParseError(path, line_no, "missing string field 'instance_id'");
    if (!obj.contains("label") || !obj["label"].is_string())
      throw ParseError(path, line_no, "missing string field 'label'");
    const std::string id = obj["instance_id"].get<std::string>();
    if (out.lookup.count(id))
      throw DuplicateIdError("duplicate instance '" + id + "' in " + path);
    out.add(id, static_cast<int>(space.require(obj["label"].get<std::string>())));
  });
  if (out.labels.empty()) throw EmptyInputError(path + ": no labels");
  return out;
}

void save_aggregated_labels(const std::string& path, const AggregatedLabels& agg,
                            const MaceModel* model) {
  std::vector<json> rows;
  rows.reserve(agg.labels.size());
  for (const auto& [id, label] : agg.labels) {
    json obj;
    obj["instance_id"] = id;
    obj["label"] = agg.space.name(static_cast<std::size_t>(label));
    if (model != nullptr) obj["posterior"] = model->posterior_for(id);
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

}  // namespace scicomm
