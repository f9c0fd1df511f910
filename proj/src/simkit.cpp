#include "scicomm/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scicomm/jsonl.hpp"
#include "scicomm/rng.hpp"

namespace scicomm {

void validate_config(const SimConfig& config) {
  if (config.n_instances < 1)
    throw ConfigError("n_instances must be at least 1");
  if (config.label_space.size() < 2)
    throw ConfigError("label_space needs at least 2 labels");
  for (const auto& l : config.label_space)
    if (l.empty()) throw ConfigError("label names must be non-empty");
  if (config.n_annotators < 1)
    throw ConfigError("n_annotators must be at least 1");
  if (config.competence.size() != static_cast<std::size_t>(config.n_annotators))
    throw ConfigError("competence needs one entry per annotator");
  for (double c : config.competence)
    if (!(c >= 0.0 && c <= 1.0))
      throw ConfigError("competence values must lie in [0, 1]");
  if (config.spam_dist.size() != static_cast<std::size_t>(config.n_annotators))
    throw ConfigError("spam_dist needs one row per annotator");
  for (const auto& row : config.spam_dist) {
    if (row.size() != config.label_space.size())
      throw ConfigError("spam_dist rows must match the label space size");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ConfigError("spam_dist entries must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("spam_dist rows must sum to 1");
  }
  if (config.annotations_per_instance < 1 ||
      config.annotations_per_instance > config.n_annotators)
    throw ConfigError(
        "annotations_per_instance must lie in [1, n_annotators]");
}

SimConfig load_sim_config(const std::string& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw ParseError(path, 0, "config must be a JSON object");
  SimConfig config;
  try {
    config.n_instances = doc.at("n_instances").get<int>();
    config.label_space = doc.at("label_space").get<std::vector<std::string>>();
    config.n_annotators = doc.at("n_annotators").get<int>();
    // A scalar competence is broadcast to every annotator.
    const json& comp = doc.at("competence");
    if (comp.is_number()) {
      config.competence.assign(static_cast<std::size_t>(config.n_annotators),
                               comp.get<double>());
    } else {
      config.competence = comp.get<std::vector<double>>();
    }
    if (doc.contains("spam_dist")) {
      const json& spam = doc["spam_dist"];
      if (!spam.empty() && spam[0].is_number()) {
        // One shared row, broadcast.
        auto row = spam.get<std::vector<double>>();
        config.spam_dist.assign(static_cast<std::size_t>(config.n_annotators), row);
      } else {
        config.spam_dist = spam.get<std::vector<std::vector<double>>>();
      }
    } else {
      // Default: uniform spamming.
      const double p = 1.0 / static_cast<double>(config.label_space.size());
      config.spam_dist.assign(
          static_cast<std::size_t>(config.n_annotators),
          std::vector<double>(config.label_space.size(), p));
    }
    config.annotations_per_instance = doc.at("annotations_per_instance").get<int>();
    config.seed = doc.value("seed", static_cast<uint64_t>(0));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  validate_config(config);
  return config;
}

void save_sim_config(const SimConfig& config, const std::string& path) {
  json obj;
  obj["n_instances"] = config.n_instances;
  obj["label_space"] = config.label_space;
  obj["n_annotators"] = config.n_annotators;
  obj["competence"] = config.competence;
  obj["spam_dist"] = config.spam_dist;
  obj["annotations_per_instance"] = config.annotations_per_instance;
  obj["seed"] = config.seed;
  write_json(path, obj);
}

namespace {

std::string instance_name(int i) { return "i" + std::to_string(i + 1); }
std::string annotator_name(int j) { return "a" + std::to_string(j + 1); }

}  // namespace

SimResult simulate_annotations(const SimConfig& config) {
  validate_config(config);
  SimResult result;
  result.annotations.space = LabelSpace{config.label_space};
  // A label space that matches a real task makes the output loadable by the
  // aggregation CLI.
  for (Task task : {Task::causality, Task::certainty, Task::generality}) {
    if (task_label_space(task).names == config.label_space)
      result.annotations.task = task;
  }

  // Stream 0 draws the truths; instance i uses stream i + 1.
  Rng truth_rng(Rng::derive(config.seed, 0));
  std::vector<int> truths(static_cast<std::size_t>(config.n_instances));
  for (int i = 0; i < config.n_instances; ++i) {
    truths[static_cast<std::size_t>(i)] =
        static_cast<int>(truth_rng.below(config.label_space.size()));
    result.truth[instance_name(i)] = truths[static_cast<std::size_t>(i)];
  }

  std::vector<int> pool(static_cast<std::size_t>(config.n_annotators));
  for (int i = 0; i < config.n_instances; ++i) {
    Rng rng(Rng::derive(config.seed, static_cast<uint64_t>(i) + 1));
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(pool);
    std::vector<int> chosen(pool.begin(),
                            pool.begin() + config.annotations_per_instance);
    std::sort(chosen.begin(), chosen.end());
    const int truth = truths[static_cast<std::size_t>(i)];
    for (int j : chosen) {
      const bool copy = rng.uniform() < config.competence[static_cast<std::size_t>(j)];
      int value = truth;
      if (!copy)
        value = static_cast<int>(
            rng.categorical(config.spam_dist[static_cast<std::size_t>(j)]));
      result.annotations.add(
          AnnotationRecord{instance_name(i), annotator_name(j), value});
    }
  }
  return result;
}

std::vector<BwsJudgment> simulate_bws(const std::map<std::string, double>& latent,
                                      const TupleSet& tuples, double flip_prob,
                                      uint64_t seed, int n_sets) {
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw ConfigError("flip_prob must lie in [0, 1]");
  if (n_sets < 1) throw ConfigError("n_sets must be at least 1");
  for (const auto& t : tuples.tuples)
    for (const auto& id : t.item_ids)
      if (latent.find(id) == latent.end())
        throw MissingLatentError("item '" + id + "' has no latent score");

  std::vector<BwsJudgment> out;
  out.reserve(tuples.tuples.size() * static_cast<std::size_t>(n_sets));
  const std::size_t n_tuples = tuples.tuples.size();
  for (int s = 0; s < n_sets; ++s) {
    const std::string annotator = "sim_a" + std::to_string(s + 1);
    for (std::size_t k = 0; k < n_tuples; ++k) {
      const BwsTuple& t = tuples.tuples[k];
      Rng rng(Rng::derive(seed, static_cast<uint64_t>(s) * n_tuples + k));

      // Ties resolve to the lexicographically smallest item id; least skips
      // the chosen most so degenerate all-tied tuples still yield a legal pair.
      std::string most = t.item_ids[0];
      for (const auto& id : t.item_ids) {
        const double v = latent.at(id);
        if (v > latent.at(most) || (v == latent.at(most) && id < most)) most = id;
      }
      std::string least;
      for (const auto& id : t.item_ids) {
        if (id == most) continue;
        if (least.empty() || latent.at(id) < latent.at(least) ||
            (latent.at(id) == latent.at(least) && id < least))
          least = id;
      }

      const auto pick_other = [&](const std::string& avoid) {
        std::vector<std::string> options;
        for (const auto& id : t.item_ids)
          if (id != avoid) options.push_back(id);
        return options[rng.below(options.size())];
      };
      if (rng.uniform() < flip_prob) most = pick_other(least);
      if (rng.uniform() < flip_prob) least = pick_other(most);

      out.push_back(BwsJudgment{t.tuple_id, annotator, most, least});
    }
  }
  return out;
}

void save_truth(const std::map<std::string, int>& truth, const LabelSpace& space,
                const std::string& path) {
  std::vector<json> rows;
  rows.reserve(truth.size());
  for (const auto& [id, label] : truth) {
    json obj;
    obj["instance_id"] = id;
    obj["label"] = space.name(static_cast<std::size_t>(label));
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

}  // namespace scicomm
