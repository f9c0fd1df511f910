#pragma once

#include <map>
#include <string>
#include <vector>

#include "scicomm/bws.hpp"
#include "scicomm/corpus.hpp"
#include "scicomm/errors.hpp"

namespace scicomm {

// Generative counterpart of the aggregation model: each annotator copies the
// planted truth with probability competence[j], otherwise samples spam_dist[j].
struct SimConfig {
  int n_instances = 0;
  std::vector<std::string> label_space;
  int n_annotators = 0;
  std::vector<double> competence;                 // per annotator, in [0,1]
  std::vector<std::vector<double>> spam_dist;     // per annotator, simplex
  int annotations_per_instance = 0;
  uint64_t seed = 0;
};

void validate_config(const SimConfig& config);
SimConfig load_sim_config(const std::string& path);
void save_sim_config(const SimConfig& config, const std::string& path);

struct SimResult {
  std::map<std::string, int> truth;   // instance id -> label index
  AnnotationSet annotations;
};

// Truth is uniform over the label space; annotator subsets per instance are
// sampled without replacement. Instances use counter-derived seeds, so the
// output is reproducible and per-instance generation is order-independent.
SimResult simulate_annotations(const SimConfig& config);

// Per tuple: most = argmax latent, least = argmin (ties broken by item id);
// with probability flip_prob each choice is replaced by a uniformly random
// tuple item distinct from the other choice (most is resampled first).
std::vector<BwsJudgment> simulate_bws(const std::map<std::string, double>& latent,
                                      const TupleSet& tuples, double flip_prob,
                                      uint64_t seed, int n_sets = 1);

void save_truth(const std::map<std::string, int>& truth, const LabelSpace& space,
                const std::string& path);

}  // namespace scicomm
