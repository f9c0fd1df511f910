// scicomm: analytics CLI for annotated science-communication corpora.
// Exit codes: 0 ok, 2 input error, 3 validation error, 4 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "scicomm/agreement.hpp"
#include "scicomm/bws.hpp"
#include "scicomm/corpus.hpp"
#include "scicomm/distortion.hpp"
#include "scicomm/errors.hpp"
#include "scicomm/evalharness.hpp"
#include "scicomm/jsonl.hpp"
#include "scicomm/mace.hpp"
#include "scicomm/report.hpp"
#include "scicomm/rng.hpp"
#include "scicomm/scale.hpp"
#include "scicomm/simkit.hpp"
#include "scicomm/stats.hpp"

namespace fs = std::filesystem;
using namespace scicomm;

namespace {

struct GlobalOpts {
  uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string format = "json";
  bool quiet = false;
};

GlobalOpts g;
std::string g_command_line;

void note(const std::string& message) {
  if (!g.quiet) std::cerr << message << '\n';
}

void report_warnings(const WarningLog& warnings) {
  for (const auto& m : warnings.messages()) note("warning: " + m);
}

uint64_t effective_seed() {
  if (g.seed_given) return g.seed;
  std::random_device rd;
  g.seed = (static_cast<uint64_t>(rd()) << 32) | rd();
  g.seed_given = true;
  // Always announced so the run can be reproduced.
  std::cerr << "seed: " << g.seed << '\n';
  return g.seed;
}

fs::path require_out() {
  if (g.out.empty())
    throw InputError("this subcommand writes files; pass --out <dir>");
  fs::create_directories(g.out);
  return fs::path(g.out);
}

// Prints a flat summary either as JSON or as `key,value` CSV rows.
void emit_summary(const json& summary) {
  if (g.quiet) return;
  if (g.format == "csv") {
    for (auto it = summary.begin(); it != summary.end(); ++it) {
      std::cout << it.key() << ',';
      if (it.value().is_string())
        std::cout << it.value().get<std::string>();
      else
        std::cout << it.value().dump();
      std::cout << '\n';
    }
  } else {
    std::cout << summary.dump(2) << '\n';
  }
}

RunManifest start_manifest(const std::vector<std::string>& inputs) {
  RunManifest manifest;
  manifest.command_line = g_command_line;
  manifest.seed = g.seed_given ? g.seed : 0;
  manifest.started_at = utc_timestamp();
  for (const auto& path : inputs) manifest.input_digests[path] = file_digest(path);
  return manifest;
}

void finish_manifest(RunManifest manifest, const fs::path& out_dir) {
  manifest.seed = g.seed_given ? g.seed : 0;
  manifest.finished_at = utc_timestamp();
  write_manifest(manifest, (out_dir / "manifest.json").string());
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string findings, pairs;
  std::string causality, certainty, generality;
  double ims_threshold = 4.0;
  bool include_easy = false;
};

int cmd_ingest(const IngestArgs& args) {
  std::vector<std::string> inputs = {args.findings, args.pairs};
  for (const auto& p : {args.causality, args.certainty, args.generality})
    if (!p.empty()) inputs.push_back(p);
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest(inputs);

  FindingSet findings = load_findings(args.findings);
  report_warnings(findings.warnings);
  PairSet pairs = load_pairs(args.pairs, findings);
  report_warnings(pairs.warnings);
  PairSet filtered = filter_pairs(pairs, args.ims_threshold, !args.include_easy);

  json ann_counts = json::object();
  const auto check_annotations = [&](const std::string& path, Task task) {
    if (path.empty()) return;
    AnnotationSet ann = load_annotations(path, task);
    report_warnings(ann.warnings);
    for (const auto& rec : ann.records) {
      const std::string& id = rec.instance_id;
      const bool known = task == Task::generality ? pairs.by_id.count(id) > 0
                                                  : findings.by_id.count(id) > 0;
      if (!known)
        throw DanglingReferenceError(path + ": annotation for unknown " +
                                     (task == Task::generality ? "pair '" : "finding '") +
                                     id + "'");
    }
    ann_counts[to_string(task)] = ann.records.size();
  };
  check_annotations(args.causality, Task::causality);
  check_annotations(args.certainty, Task::certainty);
  check_annotations(args.generality, Task::generality);

  save_findings((out_dir / "findings.jsonl").string(), findings);
  save_pairs((out_dir / "pairs.jsonl").string(), pairs);
  save_pairs((out_dir / "pairs_filtered.jsonl").string(), filtered);

  CorpusComposition comp = composition(filtered, findings);
  json summary;
  summary["n_findings"] = findings.findings.size();
  summary["n_pairs"] = pairs.pairs.size();
  summary["n_pairs_filtered"] = filtered.pairs.size();
  summary["by_discipline"] = comp.by_discipline;
  summary["by_outlet"] = comp.by_outlet;
  summary["ims_threshold"] = args.ims_threshold;
  summary["exclude_easy"] = !args.include_easy;
  if (!ann_counts.empty()) summary["n_annotations"] = ann_counts;
  write_json((out_dir / "ingest_report.json").string(), summary);
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// ------------------------------------------------------------- aggregate

struct AggregateArgs {
  std::string task;
  std::string in;
  int iterations = 50;
  int restarts = 10;
  double smoothing = 0.01;
  double tolerance = 1e-6;
  bool majority = false;
};

int cmd_aggregate(const AggregateArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.in});
  const Task task = task_from_string(args.task);
  AnnotationSet ann = load_annotations(args.in, task);
  report_warnings(ann.warnings);

  json summary;
  summary["task"] = args.task;
  summary["n_annotations"] = ann.records.size();
  summary["n_instances"] = ann.instance_ids().size();
  summary["n_annotators"] = ann.annotator_ids().size();

  if (args.majority) {
    AggregatedLabels agg = majority_vote(ann);
    save_aggregated_labels((out_dir / "labels.jsonl").string(), agg);
    summary["method"] = "majority_vote";
  } else {
    MaceConfig config;
    config.iterations = args.iterations;
    config.restarts = args.restarts;
    config.smoothing = args.smoothing;
    config.tolerance = args.tolerance;
    config.seed = effective_seed();
    MaceModel model = fit_mace(ann, config);
    report_warnings(model.warnings);
    AggregatedLabels agg = aggregate_labels(model);
    save_aggregated_labels((out_dir / "labels.jsonl").string(), agg, &model);

    json model_doc;
    model_doc["log_likelihood"] = model.log_likelihood;
    model_doc["converged"] = model.converged;
    model_doc["iterations_run"] = model.ll_history.size();
    json annotators = json::array();
    for (std::size_t j = 0; j < model.annotator_ids.size(); ++j)
      annotators.push_back({{"annotator_id", model.annotator_ids[j]},
                            {"competence", model.competence[j]},
                            {"spam_dist", model.spam_dist[j]}});
    model_doc["annotators"] = annotators;
    write_json((out_dir / "model.json").string(), model_doc);
    summary["method"] = "mace";
    summary["log_likelihood"] = model.log_likelihood;
    summary["converged"] = model.converged;
  }
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// ------------------------------------------------------------------ bws

struct BwsGenerateArgs {
  std::string items;
  double multiplier = 1.5;
};

std::vector<std::string> read_item_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) items.push_back(line);
  }
  return items;
}

int cmd_bws_generate(const BwsGenerateArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.items});
  std::vector<std::string> items = read_item_lines(args.items);
  TupleSet tuples = generate_tuples(items, args.multiplier, effective_seed());
  save_tuples((out_dir / "tuples.jsonl").string(), tuples);
  json summary;
  summary["n_items"] = items.size();
  summary["n_tuples"] = tuples.tuples.size();
  summary["multiplier"] = args.multiplier;
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

struct BwsScoreArgs {
  std::string tuples, judgments;
};

int cmd_bws_score(const BwsScoreArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.tuples, args.judgments});
  WarningLog warnings;
  TupleSet tuples = load_tuples(args.tuples, warnings);
  std::vector<BwsJudgment> judgments = load_bws_judgments(args.judgments, warnings);
  report_warnings(warnings);
  SensScoreTable table = score_bws(tuples, judgments);
  save_scores((out_dir / "scores.jsonl").string(), table);
  json summary;
  summary["n_tuples"] = tuples.tuples.size();
  summary["n_judgments"] = judgments.size();
  summary["n_items"] = table.item_ids.size();
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

struct BwsReliabilityArgs {
  std::string tuples, judgments;
  int repeats = 50;
};

int cmd_bws_reliability(const BwsReliabilityArgs& args) {
  WarningLog warnings;
  TupleSet tuples = load_tuples(args.tuples, warnings);
  std::vector<BwsJudgment> judgments = load_bws_judgments(args.judgments, warnings);
  report_warnings(warnings);
  ReliabilityResult r =
      split_half_reliability(tuples, judgments, args.repeats, effective_seed());
  report_warnings(r.warnings);
  json summary;
  summary["spearman"] = r.spearman;
  summary["pearson"] = r.pearson;
  summary["repeats_requested"] = r.repeats_requested;
  summary["repeats_used"] = r.repeats_used;
  if (!g.out.empty()) {
    const fs::path out_dir = require_out();
    RunManifest manifest = start_manifest({args.tuples, args.judgments});
    write_json((out_dir / "reliability.json").string(), summary);
    finish_manifest(manifest, out_dir);
  }
  emit_summary(summary);
  return 0;
}

// ------------------------------------------------------------ agreement

struct AgreementArgs {
  std::string task;
  std::string in;
  std::string group_by;
  std::string findings;
  std::string pairs;
  int min_overlap = 2;
};

int cmd_agreement(const AgreementArgs& args) {
  const Task task = task_from_string(args.task);
  AnnotationSet ann = load_annotations(args.in, task);
  report_warnings(ann.warnings);

  InstanceGrouping grouping;
  const InstanceGrouping* grouping_ptr = nullptr;
  if (!args.group_by.empty()) {
    if (args.group_by != "discipline" && args.group_by != "outlet")
      throw InputError("--group-by must be 'discipline' or 'outlet'");
    if (args.findings.empty())
      throw InputError("--group-by needs --findings (and --pairs for generality)");
    FindingSet findings = load_findings(args.findings);
    if (task == Task::generality) {
      if (args.pairs.empty())
        throw InputError("generality instances are pairs; pass --pairs");
      PairSet pairs = load_pairs(args.pairs, findings);
      for (const auto& p : pairs.pairs) {
        if (args.group_by == "outlet") {
          grouping[p.pair_id] = to_string(p.outlet);
        } else {
          const Finding& paper =
              findings.findings[findings.by_id.at(p.paper_finding_id)];
          grouping[p.pair_id] = to_string(paper.discipline);
        }
      }
    } else {
      for (const auto& f : findings.findings) {
        grouping[f.id] = args.group_by == "outlet"
                             ? (f.source == Source::paper ? "paper"
                                : f.source == Source::news ? "news"
                                                           : "tweet")
                             : to_string(f.discipline);
      }
    }
    grouping_ptr = &grouping;
  }

  PairwiseAgreementReport f1 = pairwise_ia_f1(ann, args.min_overlap, grouping_ptr);
  PairwiseAgreementReport kappa =
      pairwise_kappa(ann, args.min_overlap, grouping_ptr);
  report_warnings(f1.warnings);
  report_warnings(kappa.warnings);
  std::optional<PairwiseAgreementReport> rho;
  if (task == Task::certainty) {
    rho = pairwise_spearman_fisher(ann, args.min_overlap, grouping_ptr);
    report_warnings(rho->warnings);
  }

  std::ostringstream csv;
  csv << "group,ia_f1,kappa" << (rho ? ",rho" : "") << ",pairs_used\n";
  const auto row = [&](const std::string& group, double v_f1, double v_kappa,
                       std::optional<double> v_rho, int used) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f", group.c_str(), v_f1, v_kappa);
    csv << buf;
    if (rho) {
      if (v_rho)
        std::snprintf(buf, sizeof(buf), ",%.4f", *v_rho);
      else
        std::snprintf(buf, sizeof(buf), ",");
      csv << buf;
    }
    csv << ',' << used << '\n';
  };
  row("all", f1.average, kappa.average,
      rho ? std::optional<double>(rho->average) : std::nullopt, f1.pairs_used);
  for (std::size_t i = 0; i < f1.groups.size(); ++i) {
    const std::string& group = f1.groups[i].group;
    std::optional<double> group_rho;
    if (rho)
      for (const auto& rg : rho->groups)
        if (rg.group == group && rg.pairs_used > 0) group_rho = rg.value;
    double group_kappa = 0.0;
    for (const auto& kg : kappa.groups)
      if (kg.group == group) group_kappa = kg.value;
    row(group, f1.groups[i].value, group_kappa, group_rho, f1.groups[i].pairs_used);
  }

  if (!g.out.empty()) {
    const fs::path out_dir = require_out();
    std::vector<std::string> inputs = {args.in};
    if (!args.findings.empty()) inputs.push_back(args.findings);
    if (!args.pairs.empty()) inputs.push_back(args.pairs);
    RunManifest manifest = start_manifest(inputs);
    std::ofstream out(out_dir / "agreement.csv", std::ios::binary);
    out << csv.str();
    out.close();
    finish_manifest(manifest, out_dir);
  }
  if (!g.quiet) std::cout << csv.str();
  return 0;
}

// -------------------------------------------------------------- changes

struct ChangesArgs {
  std::string pairs, findings, labels_dir, sens;
  std::string by = "both";
};

int cmd_changes(const ChangesArgs& args) {
  const fs::path out_dir = require_out();
  const fs::path labels(args.labels_dir);
  const std::string caus_path = (labels / "causality.jsonl").string();
  const std::string cert_path = (labels / "certainty.jsonl").string();
  const std::string gen_path = (labels / "generality.jsonl").string();
  std::vector<std::string> inputs = {args.pairs, args.findings, caus_path,
                                     cert_path, gen_path};
  if (!args.sens.empty()) inputs.push_back(args.sens);
  RunManifest manifest = start_manifest(inputs);

  FindingSet findings = load_findings(args.findings);
  PairSet pairs = load_pairs(args.pairs, findings);
  AggregatedLabels caus =
      load_aggregated_labels(caus_path, task_label_space(Task::causality));
  AggregatedLabels cert =
      load_aggregated_labels(cert_path, task_label_space(Task::certainty));
  AggregatedLabels gen =
      load_aggregated_labels(gen_path, task_label_space(Task::generality));
  SensScoreTable sens;
  if (!args.sens.empty()) sens = load_scores(args.sens);

  std::vector<ChangeRecord> changes = detect_all_changes(
      pairs, caus, cert, gen, args.sens.empty() ? nullptr : &sens);
  double sens_sd = 0.0;
  std::vector<CriticalFlags> flags;
  if (!args.sens.empty()) sens_sd = compute_sens_sd(changes);
  for (const auto& c : changes) flags.push_back(critical_flags(c, sens_sd));

  std::ofstream csv(out_dir / "breakdown.csv", std::ios::binary);
  csv << "group,n,caus_up,cert_up,gen_up,gen_down,sens_up\n";
  const auto rows = [&](BreakdownBy by) {
    BreakdownTable t = breakdown(flags, pairs, findings, by);
    report_warnings(t.warnings);
    for (std::size_t i = 0; i < t.groups.size(); ++i) {
      csv << t.groups[i] << ',' << t.group_sizes[i];
      char buf[16];
      for (double pct : t.percent[i]) {
        std::snprintf(buf, sizeof(buf), ",%.4f", pct);
        csv << buf;
      }
      csv << '\n';
    }
  };
  if (args.by == "outlet" || args.by == "both") rows(BreakdownBy::outlet);
  if (args.by == "discipline" || args.by == "both") rows(BreakdownBy::discipline);
  if (args.by != "outlet" && args.by != "discipline" && args.by != "both")
    throw InputError("--by must be 'outlet', 'discipline' or 'both'");
  csv.close();

  const auto write_sankey = [&](const TransitionMatrix& m, const std::string& name) {
    json flows = json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i)
      for (std::size_t j = 0; j < m.labels.size(); ++j)
        if (m.counts[i][j] > 0)
          flows.push_back({{"from", m.labels[i]},
                           {"to", m.labels[j]},
                           {"count", m.counts[i][j]}});
    json doc;
    doc["dimension"] = name;
    doc["labels"] = m.labels;
    doc["total"] = m.total;
    doc["same_label_fraction"] = m.same_label_fraction;
    doc["flows"] = flows;
    write_json((out_dir / ("sankey_" + name + ".json")).string(), doc);
  };
  TransitionMatrix caus_matrix = transition_matrix(changes, ChangeDimension::causality);
  write_sankey(caus_matrix, "causality");
  write_sankey(transition_matrix(changes, ChangeDimension::certainty), "certainty");

  CooccurrenceMatrix co = cooccurrence(flags);
  {
    json doc;
    doc["flags"] = co.flag_names;
    json counts = json::array();
    for (const auto& r : co.counts) counts.push_back(r);
    doc["counts"] = counts;
    write_json((out_dir / "cooccurrence.json").string(), doc);
  }

  {
    std::vector<json> out_rows;
    const LabelSpace caus_space = task_label_space(Task::causality);
    const LabelSpace gen_space = task_label_space(Task::generality);
    for (std::size_t i = 0; i < changes.size(); ++i) {
      const ChangeRecord& c = changes[i];
      const CriticalFlags& f = flags[i];
      json obj;
      obj["pair_id"] = c.pair_id;
      obj["paper_causality"] = caus_space.name(c.paper_causality);
      obj["reported_causality"] = caus_space.name(c.reported_causality);
      obj["paper_certainty"] = c.paper_certainty;
      obj["reported_certainty"] = c.reported_certainty;
      obj["generality"] = gen_space.name(c.generality);
      obj["paper_sens"] = c.paper_sens ? json(*c.paper_sens) : json(nullptr);
      obj["reported_sens"] = c.reported_sens ? json(*c.reported_sens) : json(nullptr);
      obj["caus_up"] = f.caus_up;
      obj["cert_up"] = f.cert_up;
      obj["gen_up"] = f.gen_up;
      obj["gen_down"] = f.gen_down;
      obj["sens_up"] = f.sens_up;
      out_rows.push_back(std::move(obj));
    }
    write_jsonl((out_dir / "changes.jsonl").string(), out_rows);
  }

  json summary;
  summary["n_pairs"] = changes.size();
  summary["same_relation_fraction"] = caus_matrix.same_label_fraction;
  if (!args.sens.empty()) summary["sens_sd"] = sens_sd;
  write_json((out_dir / "summary.json").string(), summary);
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gold, pred, task;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const Task task = task_from_string(args.task);
  PredictionSet gold = load_predictions(args.gold);
  PredictionSet pred = load_predictions(args.pred);
  report_warnings(gold.warnings);
  report_warnings(pred.warnings);
  if ((gold.task && *gold.task != task) || (pred.task && *pred.task != task))
    throw IdMismatchError("gold/prediction files are for a different task");

  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& rec : pred.records) by_id[rec.instance_id] = &rec;
  if (by_id.size() != pred.records.size())
    throw DuplicateIdError("duplicate instance ids in predictions");

  json summary;
  summary["task"] = args.task;
  const bool scored = gold.records.front().score.has_value();
  if (scored) {
    std::vector<double> g_scores, p_scores;
    for (const auto& rec : gold.records) {
      auto it = by_id.find(rec.instance_id);
      if (it == by_id.end() || !it->second->score || !rec.score)
        throw IdMismatchError("predictions missing score for instance '" +
                              rec.instance_id + "'");
      g_scores.push_back(*rec.score);
      p_scores.push_back(*it->second->score);
    }
    summary["pearson_r"] = pearson_r(g_scores, p_scores);
    summary["n"] = g_scores.size();
  } else {
    const LabelSpace space = collapsed_label_space(task);
    std::vector<int> g_labels, p_labels;
    for (const auto& rec : gold.records) {
      auto it = by_id.find(rec.instance_id);
      if (it == by_id.end() || !it->second->label || !rec.label)
        throw IdMismatchError("predictions missing label for instance '" +
                              rec.instance_id + "'");
      g_labels.push_back(*rec.label);
      p_labels.push_back(*it->second->label);
    }
    MetricsReport metrics = classification_metrics(g_labels, p_labels, space);
    report_warnings(metrics.warnings);
    json per_class = json::object();
    for (const auto& m : metrics.per_class)
      per_class[m.label] = {{"precision", m.precision},
                            {"recall", m.recall},
                            {"f1", m.f1},
                            {"gold_n", m.gold_n},
                            {"pred_n", m.pred_n}};
    summary["per_class"] = per_class;
    summary["macro_f1"] = metrics.macro_f1;
    summary["n"] = metrics.n;
  }
  if (!g.out.empty()) {
    const fs::path out_dir = require_out();
    RunManifest manifest = start_manifest({args.gold, args.pred});
    write_json((out_dir / "metrics.json").string(), summary);
    finish_manifest(manifest, out_dir);
  }
  emit_summary(summary);
  return 0;
}

// -------------------------------------------------------------- extract

struct ExtractArgs {
  std::string in, aliases, cue, task;
};

int cmd_extract(const ExtractArgs& args) {
  const fs::path out_dir = require_out();
  std::vector<std::string> inputs = {args.in};
  if (!args.aliases.empty()) inputs.push_back(args.aliases);
  RunManifest manifest = start_manifest(inputs);
  const Task task = task_from_string(args.task);
  const AliasTable aliases = args.aliases.empty()
                                 ? default_alias_table(task)
                                 : load_alias_table(args.aliases, task);

  std::vector<json> rows;
  long failed = 0;
  for_each_jsonl(args.in, [&](std::size_t line_no, const json& obj) {
    if (!obj.contains("instance_id") || !obj["instance_id"].is_string())
      throw ParseError(args.in, line_no, "missing string field 'instance_id'");
    if (!obj.contains("raw_text") || !obj["raw_text"].is_string())
      throw ParseError(args.in, line_no, "missing string field 'raw_text'");
    json out_obj;
    out_obj["instance_id"] = obj["instance_id"];
    out_obj["task"] = to_string(task);
    try {
      out_obj["label"] =
          extract_label_from_text(obj["raw_text"].get<std::string>(), aliases,
                                  args.cue);
    } catch (const NoLabelFoundError&) {
      // Bulk parsing keeps going; unparseable generations come out as null.
      out_obj["label"] = nullptr;
      ++failed;
    }
    rows.push_back(std::move(out_obj));
  });
  write_jsonl((out_dir / "extracted.jsonl").string(), rows);

  json summary;
  summary["n"] = rows.size();
  summary["n_extracted"] = rows.size() - failed;
  summary["n_failed"] = failed;
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// ----------------------------------------------------------- largescale

struct LargescaleArgs {
  std::string in;
  int bins = 50;
  bool smooth = false;
  std::string baseline = "paper";
  int bootstrap_n = 1000;
  std::string dimension = "causality";
};

int cmd_largescale_density(const LargescaleArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.in});
  HistogramAccumulator acc(args.bins);
  for_each_source_score(args.in, [&](const SourceScore& rec) { acc.add(rec); });
  DensityHistogram hist = acc.finish();

  json doc;
  doc["bins"] = hist.bins;
  doc["lo"] = hist.lo;
  doc["hi"] = hist.hi;
  doc["bin_edges"] = hist.bin_edges();
  json per_source = json::object();
  for (const auto& [name, sh] : hist.per_source) {
    json entry;
    entry["n"] = sh.n;
    entry["counts"] = sh.counts;
    entry["density"] = sh.density;
    if (args.smooth) entry["density_smoothed"] = smooth_density(sh.density);
    per_source[name] = entry;
  }
  doc["per_source"] = per_source;
  doc["smoothing"] = args.smooth ? "triangular" : "none";
  write_json((out_dir / "histogram.json").string(), doc);

  json summary;
  for (const auto& [name, sh] : hist.per_source) summary["n_" + name] = sh.n;
  summary["bins"] = hist.bins;
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

int cmd_largescale_regress(const LargescaleArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.in});
  std::vector<SourceScore> scores;
  for_each_source_score(args.in,
                        [&](const SourceScore& rec) { scores.push_back(rec); });
  RegressionResult result =
      source_regression(scores, source_from_string(args.baseline),
                        args.bootstrap_n, effective_seed());

  std::ofstream csv(out_dir / "coefficients.csv", std::ios::binary);
  csv << "term,estimate,ci_low,ci_high\n";
  char buf[128];
  for (const auto& [term, c] : result.coefficients) {
    if (c.ci_low) {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", term.c_str(),
                    c.estimate, *c.ci_low, *c.ci_high);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%.6f,,\n", term.c_str(), c.estimate);
    }
    csv << buf;
  }
  csv.close();

  json summary;
  summary["n"] = result.n;
  summary["bootstrap_n"] = result.bootstrap_n;
  summary["baseline"] = to_string(result.baseline);
  summary["ci_method"] = result.ci_method;
  for (const auto& [term, c] : result.coefficients)
    summary[term] = c.ci_low ? json({{"estimate", c.estimate},
                                     {"ci_low", *c.ci_low},
                                     {"ci_high", *c.ci_high}})
                             : json({{"estimate", c.estimate}});
  write_json((out_dir / "regression.json").string(), summary);
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

int cmd_largescale_transitions(const LargescaleArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.in});
  const Task task = task_from_string(args.dimension);
  const LabelSpace space = collapsed_label_space(task);
  WarningLog warnings;
  std::vector<LabeledPair> pairs = load_labeled_pairs(args.in, space, warnings);
  report_warnings(warnings);
  auto matrices = largescale_transitions(pairs, space.names);

  json summary;
  for (const auto& [outlet, m] : matrices) {
    json flows = json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i)
      for (std::size_t j = 0; j < m.labels.size(); ++j)
        if (m.counts[i][j] > 0)
          flows.push_back({{"from", m.labels[i]},
                           {"to", m.labels[j]},
                           {"count", m.counts[i][j]}});
    json doc;
    doc["dimension"] = args.dimension;
    doc["outlet"] = outlet;
    doc["labels"] = m.labels;
    doc["total"] = m.total;
    doc["same_label_fraction"] = m.same_label_fraction;
    doc["flows"] = flows;
    write_json((out_dir / ("transitions_" + outlet + ".json")).string(), doc);
    summary["n_" + outlet] = m.total;
    summary["same_label_fraction_" + outlet] = m.same_label_fraction;
  }
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// ------------------------------------------------------------------ sim

struct SimArgs {
  std::string config;
};

int cmd_sim_annotations(const SimArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.config});
  SimConfig config = load_sim_config(args.config);
  if (g.seed_given) config.seed = g.seed;
  SimResult result = simulate_annotations(config);
  save_annotations((out_dir / "annotations.jsonl").string(), result.annotations);
  save_truth(result.truth, result.annotations.space,
             (out_dir / "truth.jsonl").string());
  json summary;
  summary["n_instances"] = config.n_instances;
  summary["n_annotations"] = result.annotations.records.size();
  summary["seed"] = config.seed;
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

int cmd_sim_bws(const SimArgs& args) {
  const fs::path out_dir = require_out();
  RunManifest manifest = start_manifest({args.config});
  const json doc = read_json_file(args.config);
  if (!doc.is_object())
    throw ParseError(args.config, 0, "config must be a JSON object");
  int n_items = 0;
  double multiplier = 1.5, flip_prob = 0.0;
  int n_sets = 1;
  uint64_t seed = 0;
  try {
    n_items = doc.at("n_items").get<int>();
    multiplier = doc.value("multiplier", 1.5);
    flip_prob = doc.value("flip_prob", 0.0);
    n_sets = doc.value("n_sets", 1);
    seed = doc.value("seed", static_cast<uint64_t>(0));
  } catch (const json::exception& e) {
    throw ConfigError(args.config + ": " + std::string(e.what()));
  }
  if (g.seed_given) seed = g.seed;
  if (n_items < 4) throw ConfigError("n_items must be at least 4");

  std::vector<std::string> items;
  items.reserve(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_items; ++i) items.push_back("item" + std::to_string(i + 1));
  Rng latent_rng(Rng::derive(seed, 9001));
  std::map<std::string, double> latent;
  for (const auto& id : items) latent[id] = latent_rng.uniform(-1.0, 1.0);

  TupleSet tuples = generate_tuples(items, multiplier, Rng::derive(seed, 9002));
  std::vector<BwsJudgment> judgments =
      simulate_bws(latent, tuples, flip_prob, Rng::derive(seed, 9003), n_sets);

  {
    std::vector<json> rows;
    for (const auto& id : items)
      rows.push_back({{"item_id", id}, {"latent", latent[id]}});
    write_jsonl((out_dir / "latent.jsonl").string(), rows);
  }
  save_tuples((out_dir / "tuples.jsonl").string(), tuples);
  save_bws_judgments((out_dir / "judgments.jsonl").string(), judgments);

  json summary;
  summary["n_items"] = n_items;
  summary["n_tuples"] = tuples.tuples.size();
  summary["n_judgments"] = judgments.size();
  summary["flip_prob"] = flip_prob;
  summary["seed"] = seed;
  finish_manifest(manifest, out_dir);
  emit_summary(summary);
  return 0;
}

// --------------------------------------------------------------- report

int cmd_report(const std::string& config_path) {
  KvConfig kv = KvConfig::parse_file(config_path);
  ReportConfig config = report_config_from_kv(kv);
  if (g.seed_given) config.seed = g.seed;
  if (!g.out.empty()) config.out_dir = g.out;
  if (config.out_dir.empty())
    throw InputError("no output directory: set 'out' in the config or pass --out");
  config.command_line = g_command_line;
  config.config_digest = file_digest(config_path);
  ReportOutputs outputs = run_report(config);
  report_warnings(outputs.warnings);
  json summary;
  summary["out_dir"] = config.out_dir;
  summary["files"] = outputs.files;
  emit_summary(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream cmd;
  for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
  g_command_line = cmd.str();

  CLI::App app{"analytics for annotated science-communication corpora"};
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "RNG seed (omit for a generated, announced seed)")
      ->each([](const std::string&) { g.seed_given = true; });
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "stdout summary format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--quiet", g.quiet, "suppress stdout summaries and warnings");
  app.fallthrough();

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "validate and normalize a corpus");
  ingest->add_option("--findings", ingest_args.findings)->required();
  ingest->add_option("--pairs", ingest_args.pairs)->required();
  ingest->add_option("--causality", ingest_args.causality,
                     "causality annotations to validate");
  ingest->add_option("--certainty", ingest_args.certainty);
  ingest->add_option("--generality", ingest_args.generality);
  ingest->add_option("--ims-threshold", ingest_args.ims_threshold);
  ingest->add_flag("--include-easy", ingest_args.include_easy);

  AggregateArgs agg_args;
  auto* aggregate = app.add_subcommand("aggregate", "aggregate annotations");
  aggregate->add_option("--task", agg_args.task)->required();
  aggregate->add_option("--in", agg_args.in)->required();
  aggregate->add_option("--iterations", agg_args.iterations);
  aggregate->add_option("--restarts", agg_args.restarts);
  aggregate->add_option("--smoothing", agg_args.smoothing);
  aggregate->add_option("--tolerance", agg_args.tolerance);
  aggregate->add_flag("--majority", agg_args.majority, "majority vote instead");

  auto* bws = app.add_subcommand("bws", "best-worst scaling");
  bws->require_subcommand(1);
  BwsGenerateArgs bwsgen_args;
  auto* bws_generate = bws->add_subcommand("generate", "balanced tuple design");
  bws_generate->add_option("--items", bwsgen_args.items, "one item id per line")
      ->required();
  bws_generate->add_option("--multiplier", bwsgen_args.multiplier);
  BwsScoreArgs bwsscore_args;
  auto* bws_score = bws->add_subcommand("score", "score judgments");
  bws_score->add_option("--tuples", bwsscore_args.tuples)->required();
  bws_score->add_option("--judgments", bwsscore_args.judgments)->required();
  BwsReliabilityArgs bwsrel_args;
  auto* bws_reliability = bws->add_subcommand("reliability", "split-half reliability");
  bws_reliability->add_option("--tuples", bwsrel_args.tuples)->required();
  bws_reliability->add_option("--judgments", bwsrel_args.judgments)->required();
  bws_reliability->add_option("--repeats", bwsrel_args.repeats);

  AgreementArgs agr_args;
  auto* agreement = app.add_subcommand("agreement", "pairwise agreement stats");
  agreement->add_option("--task", agr_args.task)->required();
  agreement->add_option("--in", agr_args.in)->required();
  agreement->add_option("--group-by", agr_args.group_by, "discipline or outlet");
  agreement->add_option("--findings", agr_args.findings);
  agreement->add_option("--pairs", agr_args.pairs);
  agreement->add_option("--min-overlap", agr_args.min_overlap);

  ChangesArgs chg_args;
  auto* changes = app.add_subcommand("changes", "per-pair distortion analysis");
  changes->add_option("--pairs", chg_args.pairs)->required();
  changes->add_option("--findings", chg_args.findings)->required();
  changes->add_option("--labels-dir", chg_args.labels_dir,
                      "directory with causality/certainty/generality.jsonl")
      ->required();
  changes->add_option("--sens", chg_args.sens, "BWS score table");
  changes->add_option("--by", chg_args.by, "outlet, discipline or both");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score external predictions");
  evaluate->add_option("--gold", eval_args.gold)->required();
  evaluate->add_option("--pred", eval_args.pred)->required();
  evaluate->add_option("--task", eval_args.task)->required();

  ExtractArgs ext_args;
  auto* extract = app.add_subcommand("extract", "parse labels out of generations");
  extract->add_option("--in", ext_args.in)->required();
  extract->add_option("--aliases", ext_args.aliases, "JSON alias table");
  extract->add_option("--cue", ext_args.cue)->required();
  extract->add_option("--task", ext_args.task)->required();

  LargescaleArgs ls_args;
  auto* largescale = app.add_subcommand("largescale", "corpus-scale analysis");
  largescale->require_subcommand(1);
  auto* ls_density = largescale->add_subcommand("density", "score histograms");
  ls_density->add_option("--in", ls_args.in)->required();
  ls_density->add_option("--bins", ls_args.bins);
  ls_density->add_flag("--smooth", ls_args.smooth, "also emit smoothed densities");
  auto* ls_regress = largescale->add_subcommand("regress", "source-effect OLS");
  ls_regress->add_option("--in", ls_args.in)->required();
  ls_regress->add_option("--baseline", ls_args.baseline);
  ls_regress->add_option("--bootstrap", ls_args.bootstrap_n);
  auto* ls_transitions =
      largescale->add_subcommand("transitions", "per-outlet label flows");
  ls_transitions->add_option("--in", ls_args.in)->required();
  ls_transitions->add_option("--dimension", ls_args.dimension);

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "synthetic data from known truth");
  sim->require_subcommand(1);
  auto* sim_annotations = sim->add_subcommand("annotations", "categorical labels");
  sim_annotations->add_option("--config", sim_args.config)->required();
  auto* sim_bws = sim->add_subcommand("bws", "latent scores and judgments");
  sim_bws->add_option("--config", sim_args.config)->required();

  std::string report_config;
  auto* report = app.add_subcommand("report", "full pipeline report directory");
  report->add_option("--config", report_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args);
    if (*aggregate) return cmd_aggregate(agg_args);
    if (*bws_generate) return cmd_bws_generate(bwsgen_args);
    if (*bws_score) return cmd_bws_score(bwsscore_args);
    if (*bws_reliability) return cmd_bws_reliability(bwsrel_args);
    if (*agreement) return cmd_agreement(agr_args);
    if (*changes) return cmd_changes(chg_args);
    if (*evaluate) return cmd_evaluate(eval_args);
    if (*extract) return cmd_extract(ext_args);
    if (*ls_density) return cmd_largescale_density(ls_args);
    if (*ls_regress) return cmd_largescale_regress(ls_args);
    if (*ls_transitions) return cmd_largescale_transitions(ls_args);
    if (*sim_annotations) return cmd_sim_annotations(sim_args);
    if (*sim_bws) return cmd_sim_bws(sim_args);
    if (*report) return cmd_report(report_config);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 4;
}
