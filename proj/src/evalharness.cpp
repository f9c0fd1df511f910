#include "scicomm/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "scicomm/jsonl.hpp"
#include "scicomm/stats.hpp"

namespace scicomm {

LabelSpace collapsed_label_space(Task task) {
  switch (task) {
    case Task::causality:
      return LabelSpace{{"causation", "correlation", "unclear_relation"}};
    case Task::certainty:
      return LabelSpace{{"certain", "somewhat_certain", "uncertain"}};
    case Task::generality:
      return task_label_space(Task::generality);
  }
  throw SchemaError("unknown task");
}

int collapse_label(Task task, int label) {
  const LabelSpace full = task_label_space(task);
  if (label < 0 || label >= static_cast<int>(full.size()))
    throw UnknownLabelError("label index " + std::to_string(label) +
                            " outside the " + to_string(task) + " space");
  switch (task) {
    case Task::causality:
      // causation -> causation, correlation -> correlation, the two
      // no-relation variants -> unclear_relation.
      if (label == kCausation) return 0;
      if (label == kCorrelation) return 1;
      return 2;
    case Task::certainty:
      // indices 0..3 are levels 1..4; 4 -> certain, 3 -> somewhat_certain,
      // 1-2 -> uncertain.
      if (label == 3) return 0;
      if (label == 2) return 1;
      return 2;
    case Task::generality:
      return label;
  }
  throw SchemaError("unknown task");
}

PredictionSet load_predictions(const std::string& path) {
  PredictionSet out;
  static const std::vector<std::string> known = {"instance_id", "task", "label",
                                                 "score", "raw_text"};
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    PredictionRecord rec;
    if (!obj.contains("instance_id") || !obj["instance_id"].is_string())
      throw ParseError(path, line_no, "missing string field 'instance_id'");
    rec.instance_id = obj["instance_id"].get<std::string>();
    if (!obj.contains("task") || !obj["task"].is_string())
      throw ParseError(path, line_no, "missing string field 'task'");
    rec.task = task_from_string(obj["task"].get<std::string>());
    if (out.task && *out.task != rec.task)
      throw SchemaError(path + ": mixed tasks in one prediction file");
    out.task = rec.task;
    const bool has_label = obj.contains("label");
    const bool has_score = obj.contains("score");
    if (has_label == has_score)
      throw ParseError(path, line_no,
                       "each record needs exactly one of 'label' or 'score'");
    if (has_label) {
      if (!obj["label"].is_string())
        throw ParseError(path, line_no, "'label' must be a string");
      const LabelSpace space = collapsed_label_space(rec.task);
      rec.label = space.require(obj["label"].get<std::string>());
    } else {
      if (!obj["score"].is_number())
        throw ParseError(path, line_no, "'score' must be a number");
      rec.score = obj["score"].get<double>();
    }
    if (obj.contains("raw_text")) {
      if (!obj["raw_text"].is_string())
        throw ParseError(path, line_no, "'raw_text' must be a string");
      rec.raw_text = obj["raw_text"].get<std::string>();
    }
    warn_unknown_fields(obj, known, "prediction", out.warnings);
    out.records.push_back(std::move(rec));
  });
  if (out.records.empty()) throw EmptyInputError(path + ": no predictions");
  return out;
}

void save_predictions(const PredictionSet& preds, const LabelSpace& space,
                      const std::string& path) {
  std::vector<json> rows;
  rows.reserve(preds.records.size());
  for (const auto& rec : preds.records) {
    json obj;
    obj["instance_id"] = rec.instance_id;
    obj["task"] = to_string(rec.task);
    if (rec.label) obj["label"] = space.name(*rec.label);
    if (rec.score) obj["score"] = *rec.score;
    if (rec.raw_text) obj["raw_text"] = *rec.raw_text;
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

SplitResult split_train_test(const std::vector<std::string>& instance_ids,
                             double ratio, uint64_t seed,
                             const std::map<std::string, std::string>* stratify_by) {
  if (instance_ids.empty()) throw EmptyInputError("no instance ids to split");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must lie strictly between 0 and 1");

  // class -> members, preserving input order inside each class
  std::map<std::string, std::vector<std::string>> strata;
  if (stratify_by != nullptr) {
    for (const auto& id : instance_ids) {
      auto it = stratify_by->find(id);
      if (it == stratify_by->end())
        throw MissingLabelError("stratify_by", id);
      strata[it->second].push_back(id);
    }
  } else {
    strata[""] = instance_ids;
  }

  SplitResult result;
  Rng rng(seed);
  for (auto& [cls, members] : strata) {
    rng.shuffle(members);
    std::size_t n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(members.size()) + 0.5));
    n_train = std::min(n_train, members.size());
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < n_train ? result.train_ids : result.test_ids).push_back(members[i]);
  }
  std::sort(result.train_ids.begin(), result.train_ids.end());
  std::sort(result.test_ids.begin(), result.test_ids.end());
  return result;
}

MetricsReport classification_metrics(const std::vector<int>& gold,
                                     const std::vector<int>& pred,
                                     const LabelSpace& space) {
  if (gold.size() != pred.size())
    throw IdMismatchError("gold and prediction sets differ in size");
  if (gold.empty()) throw EmptyInputError("no labels to score");

  MetricsReport report;
  report.n = static_cast<long>(gold.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < space.size(); ++c) {
    ClassMetrics m;
    m.label = space.name(c);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = gold[i] == static_cast<int>(c);
      const bool p = pred[i] == static_cast<int>(c);
      if (g) ++m.gold_n;
      if (p) ++m.pred_n;
      if (g && p) ++m.tp;
    }
    if (m.gold_n == 0 && m.pred_n == 0)
      report.warnings.add("absent_class:" + m.label,
                          "class '" + m.label +
                              "' absent from gold and predictions; F1 set to 0");
    m.precision = m.pred_n > 0 ? static_cast<double>(m.tp) / m.pred_n : 0.0;
    m.recall = m.gold_n > 0 ? static_cast<double>(m.tp) / m.gold_n : 0.0;
    m.f1 = (m.gold_n + m.pred_n) > 0
               ? 2.0 * static_cast<double>(m.tp) / (m.gold_n + m.pred_n)
               : 0.0;
    f1_sum += m.f1;
    report.per_class.push_back(std::move(m));
  }
  report.macro_f1 = f1_sum / static_cast<double>(space.size());
  return report;
}

double pearson_r(const std::vector<double>& gold, const std::vector<double>& pred) {
  if (gold.size() != pred.size())
    throw IdMismatchError("gold and prediction scores differ in size");
  return pearson(gold, pred);
}

AliasTable default_alias_table(Task task) {
  // Canonical names plus guideline phrasings; editable via the JSON config.
  switch (task) {
    case Task::causality:
      return {{"causation", {"causation", "causal", "causes"}},
              {"correlation", {"correlation", "correlational", "correlated"}},
              {"unclear_relation",
               {"unclear relation", "unclear", "no relation", "not mentioned"}}};
    case Task::certainty:
      return {{"certain", {"certain", "confident"}},
              {"somewhat_certain", {"somewhat certain", "fairly certain"}},
              {"uncertain", {"uncertain", "somewhat uncertain", "not certain"}}};
    case Task::generality:
      return {{"reported_more_general",
               {"reported more general", "more general", "broader"}},
              {"paper_more_general",
               {"paper more general", "less general", "narrower"}},
              {"same_level", {"same level", "equally general", "same"}}};
  }
  throw SchemaError("unknown task");
}

AliasTable load_alias_table(const std::string& path, Task task) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw ParseError(path, 0, "alias file must be a JSON object");
  const json* section = &doc;
  if (doc.contains(to_string(task))) section = &doc[to_string(task)];
  AliasTable table;
  const LabelSpace space = collapsed_label_space(task);
  for (auto it = section->begin(); it != section->end(); ++it) {
    space.require(it.key());
    if (!it.value().is_array())
      throw ParseError(path, 0, "aliases for '" + it.key() + "' must be an array");
    std::vector<std::string> surfaces;
    for (const auto& s : it.value()) {
      if (!s.is_string())
        throw ParseError(path, 0, "alias entries must be strings");
      surfaces.push_back(s.get<std::string>());
    }
    table[it.key()] = std::move(surfaces);
  }
  if (table.empty()) throw EmptyInputError(path + ": no aliases for task");
  return table;
}

void save_alias_table(const AliasTable& aliases, const std::string& path) {
  json obj = json::object();
  for (const auto& [label, surfaces] : aliases) obj[label] = surfaces;
  write_json(path, obj);
}

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// All positions where `needle` occurs in `hay` bounded by non-word characters.
std::vector<std::size_t> word_occurrences(const std::string& hay,
                                          const std::string& needle) {
  std::vector<std::size_t> hits;
  if (needle.empty()) return hits;
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right_ok = end >= hay.size() || !is_word_char(hay[end]);
    if (left_ok && right_ok) hits.push_back(pos);
    ++pos;
  }
  return hits;
}

}  // namespace

std::string extract_label_from_text(const std::string& text,
                                    const AliasTable& aliases,
                                    const std::string& cue) {
  if (aliases.empty()) throw EmptyInputError("alias table is empty");
  const std::string hay = lowercase(text);

  std::size_t anchor = 0;
  if (!cue.empty()) {
    const auto cue_hits = word_occurrences(hay, lowercase(cue));
    if (!cue_hits.empty()) anchor = cue_hits.front();
  }

  struct Candidate {
    std::size_t distance;
    std::size_t position;
    std::size_t alias_rank;
    std::string label;
  };
  std::optional<Candidate> best;
  std::size_t rank = 0;
  for (const auto& [label, surfaces] : aliases) {
    for (const auto& surface : surfaces) {
      for (std::size_t pos : word_occurrences(hay, lowercase(surface))) {
        const std::size_t distance =
            pos >= anchor ? pos - anchor : anchor - pos;
        Candidate cand{distance, pos, rank, label};
        if (!best || cand.distance < best->distance ||
            (cand.distance == best->distance && cand.position < best->position) ||
            (cand.distance == best->distance && cand.position == best->position &&
             cand.alias_rank < best->alias_rank))
          best = cand;
      }
      ++rank;
    }
  }
  if (!best) throw NoLabelFoundError("no label alias occurs in the text");
  return best->label;
}

}  // namespace scicomm
