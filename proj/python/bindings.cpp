#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scicomm/agreement.hpp"
#include "scicomm/bws.hpp"
#include "scicomm/corpus.hpp"
#include "scicomm/distortion.hpp"
#include "scicomm/evalharness.hpp"
#include "scicomm/mace.hpp"
#include "scicomm/report.hpp"
#include "scicomm/scale.hpp"
#include "scicomm/simkit.hpp"
#include "scicomm/stats.hpp"

namespace py = pybind11;
using namespace scicomm;

namespace {

// (instance_id, annotator_id, label_name) triples -> AnnotationSet
AnnotationSet make_annotation_set(
    const std::vector<std::tuple<std::string, std::string, std::string>>& records,
    const std::vector<std::string>& labels) {
  AnnotationSet set;
  set.space = LabelSpace{labels};
  for (const auto& [instance, annotator, label] : records)
    set.add(AnnotationRecord{instance, annotator,
                             static_cast<int>(set.space.require(label))});
  return set;
}

TupleSet make_tuple_set(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& tuples) {
  TupleSet set;
  for (const auto& [id, items] : tuples) {
    if (items.size() != 4)
      throw SchemaError("tuple '" + id + "' must have exactly 4 items");
    BwsTuple t;
    t.tuple_id = id;
    for (std::size_t i = 0; i < 4; ++i) t.item_ids[i] = items[i];
    set.add(std::move(t));
  }
  return set;
}

std::vector<BwsJudgment> make_judgments(
    const std::vector<std::tuple<std::string, std::string, std::string, std::string>>&
        judgments) {
  std::vector<BwsJudgment> out;
  out.reserve(judgments.size());
  for (const auto& [tuple_id, annotator, most, least] : judgments)
    out.push_back(BwsJudgment{tuple_id, annotator, most, least});
  return out;
}

py::dict agreement_to_dict(const PairwiseAgreementReport& report) {
  py::dict out;
  out["metric"] = report.metric;
  out["average"] = report.average;
  out["pairs_used"] = report.pairs_used;
  out["pairs_excluded"] = report.pairs_excluded;
  py::list pairs;
  for (const auto& p : report.pairs) {
    py::dict d;
    d["annotator_a"] = p.annotator_a;
    d["annotator_b"] = p.annotator_b;
    d["shared_n"] = p.shared_n;
    d["value"] = p.value;
    pairs.append(d);
  }
  out["pairs"] = pairs;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "analytics for annotated science-communication corpora";
  m.attr("__version__") = kVersion;

  py::register_exception<InputError>(m, "InputError");
  py::register_exception<ValidationError>(m, "ValidationError");

  m.def("task_labels",
        [](const std::string& task) {
          return task_label_space(task_from_string(task)).names;
        },
        py::arg("task"));
  m.def("collapsed_labels",
        [](const std::string& task) {
          return collapsed_label_space(task_from_string(task)).names;
        },
        py::arg("task"));
  m.def("collapse_label",
        [](const std::string& task, const std::string& label) {
          const Task t = task_from_string(task);
          const int idx =
              static_cast<int>(task_label_space(t).require(label));
          return collapsed_label_space(t).name(
              static_cast<std::size_t>(collapse_label(t, idx)));
        },
        py::arg("task"), py::arg("label"));

  m.def("fisher_z_mean", &fisher_z_mean, py::arg("correlations"));
  m.def("pearson", &pearson, py::arg("x"), py::arg("y"));
  m.def("spearman", &spearman, py::arg("x"), py::arg("y"));

  m.def("fit_mace",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>&
               records,
           const std::vector<std::string>& labels, uint64_t seed, int iterations,
           int restarts) {
          AnnotationSet set = make_annotation_set(records, labels);
          MaceConfig config;
          config.seed = seed;
          config.iterations = iterations;
          config.restarts = restarts;
          MaceModel model = fit_mace(set, config);
          AggregatedLabels agg = aggregate_labels(model);
          py::dict out;
          py::dict py_labels;
          for (const auto& [id, label] : agg.labels)
            py_labels[py::str(id)] =
                agg.space.name(static_cast<std::size_t>(label));
          py::dict competence;
          for (std::size_t j = 0; j < model.annotator_ids.size(); ++j)
            competence[py::str(model.annotator_ids[j])] = model.competence[j];
          out["labels"] = py_labels;
          out["competence"] = competence;
          out["log_likelihood"] = model.log_likelihood;
          out["converged"] = model.converged;
          return out;
        },
        py::arg("annotations"), py::arg("labels"), py::arg("seed") = 0,
        py::arg("iterations") = 50, py::arg("restarts") = 10);

  m.def("majority_vote",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>&
               records,
           const std::vector<std::string>& labels) {
          AnnotationSet set = make_annotation_set(records, labels);
          AggregatedLabels agg = majority_vote(set);
          py::dict out;
          for (const auto& [id, label] : agg.labels)
            out[py::str(id)] = agg.space.name(static_cast<std::size_t>(label));
          return out;
        },
        py::arg("annotations"), py::arg("labels"));

  m.def("generate_tuples",
        [](const std::vector<std::string>& items, double multiplier,
           uint64_t seed) {
          TupleSet set = generate_tuples(items, multiplier, seed);
          std::vector<std::pair<std::string, std::vector<std::string>>> out;
          for (const auto& t : set.tuples)
            out.emplace_back(t.tuple_id,
                             std::vector<std::string>(t.item_ids.begin(),
                                                      t.item_ids.end()));
          return out;
        },
        py::arg("items"), py::arg("multiplier") = 1.5, py::arg("seed") = 0);

  m.def("score_bws",
        [](const std::vector<std::pair<std::string, std::vector<std::string>>>&
               tuples,
           const std::vector<std::tuple<std::string, std::string, std::string,
                                        std::string>>& judgments) {
          SensScoreTable table =
              score_bws(make_tuple_set(tuples), make_judgments(judgments));
          py::dict out;
          for (const auto& id : table.item_ids) {
            const ItemScore& s = table.rows.at(id);
            py::dict d;
            d["score"] = s.score ? py::cast(*s.score) : py::none();
            d["n_appearances"] = s.n_appearances;
            d["n_most"] = s.n_most;
            d["n_least"] = s.n_least;
            out[py::str(id)] = d;
          }
          return out;
        },
        py::arg("tuples"), py::arg("judgments"));

  m.def("split_half_reliability",
        [](const std::vector<std::pair<std::string, std::vector<std::string>>>&
               tuples,
           const std::vector<std::tuple<std::string, std::string, std::string,
                                        std::string>>& judgments,
           int repeats, uint64_t seed) {
          ReliabilityResult r = split_half_reliability(
              make_tuple_set(tuples), make_judgments(judgments), repeats, seed);
          py::dict out;
          out["spearman"] = r.spearman;
          out["pearson"] = r.pearson;
          out["repeats_used"] = r.repeats_used;
          return out;
        },
        py::arg("tuples"), py::arg("judgments"), py::arg("repeats") = 50,
        py::arg("seed") = 0);

  m.def("pairwise_ia_f1",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>&
               records,
           const std::vector<std::string>& labels, int min_overlap) {
          return agreement_to_dict(
              pairwise_ia_f1(make_annotation_set(records, labels), min_overlap));
        },
        py::arg("annotations"), py::arg("labels"), py::arg("min_overlap") = 2);
  m.def("pairwise_kappa",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>&
               records,
           const std::vector<std::string>& labels, int min_overlap) {
          return agreement_to_dict(
              pairwise_kappa(make_annotation_set(records, labels), min_overlap));
        },
        py::arg("annotations"), py::arg("labels"), py::arg("min_overlap") = 2);

  m.def("split_train_test",
        [](const std::vector<std::string>& ids, double ratio, uint64_t seed,
           const std::optional<std::map<std::string, std::string>>& stratify_by) {
          SplitResult r = split_train_test(
              ids, ratio, seed, stratify_by ? &*stratify_by : nullptr);
          return std::make_pair(r.train_ids, r.test_ids);
        },
        py::arg("instance_ids"), py::arg("ratio") = 0.8, py::arg("seed") = 0,
        py::arg("stratify_by") = py::none());

  m.def("classification_metrics",
        [](const std::vector<std::string>& gold, const std::vector<std::string>& pred,
           const std::string& task) {
          const LabelSpace space = collapsed_label_space(task_from_string(task));
          std::vector<int> g, p;
          for (const auto& l : gold) g.push_back(static_cast<int>(space.require(l)));
          for (const auto& l : pred) p.push_back(static_cast<int>(space.require(l)));
          MetricsReport report = classification_metrics(g, p, space);
          py::dict out;
          py::dict per_class;
          for (const auto& c : report.per_class) {
            py::dict d;
            d["precision"] = c.precision;
            d["recall"] = c.recall;
            d["f1"] = c.f1;
            per_class[py::str(c.label)] = d;
          }
          out["per_class"] = per_class;
          out["macro_f1"] = report.macro_f1;
          out["n"] = report.n;
          return out;
        },
        py::arg("gold"), py::arg("pred"), py::arg("task"));

  m.def("extract_label_from_text", &extract_label_from_text, py::arg("text"),
        py::arg("aliases"), py::arg("cue"));
  m.def("default_aliases",
        [](const std::string& task) {
          return default_alias_table(task_from_string(task));
        },
        py::arg("task"));

  m.def("source_regression",
        [](const std::vector<std::pair<std::string, double>>& scores,
           const std::string& baseline, int bootstrap_n, uint64_t seed) {
          std::vector<SourceScore> rows;
          rows.reserve(scores.size());
          for (std::size_t i = 0; i < scores.size(); ++i)
            rows.push_back(SourceScore{"f" + std::to_string(i + 1),
                                       source_from_string(scores[i].first),
                                       scores[i].second});
          RegressionResult r = source_regression(
              rows, source_from_string(baseline), bootstrap_n, seed);
          py::dict out;
          for (const auto& [term, c] : r.coefficients) {
            py::dict d;
            d["estimate"] = c.estimate;
            d["ci_low"] = c.ci_low ? py::cast(*c.ci_low) : py::none();
            d["ci_high"] = c.ci_high ? py::cast(*c.ci_high) : py::none();
            out[py::str(term)] = d;
          }
          return out;
        },
        py::arg("scores"), py::arg("baseline") = "paper",
        py::arg("bootstrap_n") = 1000, py::arg("seed") = 0);

  m.def("simulate_annotations",
        [](int n_instances, const std::vector<std::string>& labels,
           const std::vector<double>& competence,
           const std::vector<std::vector<double>>& spam_dist,
           int annotations_per_instance, uint64_t seed) {
          SimConfig config;
          config.n_instances = n_instances;
          config.label_space = labels;
          config.n_annotators = static_cast<int>(competence.size());
          config.competence = competence;
          config.spam_dist = spam_dist;
          config.annotations_per_instance = annotations_per_instance;
          config.seed = seed;
          SimResult r = simulate_annotations(config);
          std::vector<std::tuple<std::string, std::string, std::string>> rows;
          for (const auto& rec : r.annotations.records)
            rows.emplace_back(rec.instance_id, rec.annotator_id,
                              r.annotations.space.name(
                                  static_cast<std::size_t>(rec.value)));
          py::dict truth;
          for (const auto& [id, label] : r.truth)
            truth[py::str(id)] =
                r.annotations.space.name(static_cast<std::size_t>(label));
          return py::make_tuple(truth, rows);
        },
        py::arg("n_instances"), py::arg("labels"), py::arg("competence"),
        py::arg("spam_dist"), py::arg("annotations_per_instance"),
        py::arg("seed") = 0);

  m.def("critical_flags",
        [](const std::string& paper_causality, const std::string& reported_causality,
           int paper_certainty, int reported_certainty,
           const std::string& generality, std::optional<double> paper_sens,
           std::optional<double> reported_sens, double sens_sd) {
          const LabelSpace caus = task_label_space(Task::causality);
          const LabelSpace gen = task_label_space(Task::generality);
          ChangeRecord rec;
          rec.pair_id = "p";
          rec.paper_causality = static_cast<int>(caus.require(paper_causality));
          rec.reported_causality =
              static_cast<int>(caus.require(reported_causality));
          rec.paper_certainty = paper_certainty;
          rec.reported_certainty = reported_certainty;
          rec.generality = static_cast<int>(gen.require(generality));
          rec.paper_sens = paper_sens;
          rec.reported_sens = reported_sens;
          CriticalFlags f = critical_flags(rec, sens_sd);
          py::dict out;
          out["caus_up"] = f.caus_up;
          out["cert_up"] = f.cert_up;
          out["gen_up"] = f.gen_up;
          out["gen_down"] = f.gen_down;
          out["sens_up"] = f.sens_up;
          return out;
        },
        py::arg("paper_causality"), py::arg("reported_causality"),
        py::arg("paper_certainty"), py::arg("reported_certainty"),
        py::arg("generality"), py::arg("paper_sens") = py::none(),
        py::arg("reported_sens") = py::none(), py::arg("sens_sd") = 0.0);
}
