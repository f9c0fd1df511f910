#include "scicomm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "scicomm/agreement.hpp"
#include "scicomm/bws.hpp"
#include "scicomm/corpus.hpp"
#include "scicomm/distortion.hpp"
#include "scicomm/mace.hpp"
#include "scicomm/rng.hpp"

namespace scicomm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path);
  KvConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, line_no, "expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(path, line_no, "empty key");
    config.values[key] = value;
  }
  return config;
}

const std::string& KvConfig::require(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KvConfig::get_or(const std::string& key,
                             const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_to_json(const RunManifest& manifest) {
  json obj;
  obj["command_line"] = manifest.command_line;
  obj["config_digest"] = manifest.config_digest;
  obj["seed"] = manifest.seed;
  obj["input_digests"] = manifest.input_digests;
  obj["version"] = manifest.version;
  obj["started_at"] = manifest.started_at;
  obj["finished_at"] = manifest.finished_at;
  return obj;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  write_json(path, manifest_to_json(manifest));
}

ReportConfig report_config_from_kv(const KvConfig& kv) {
  ReportConfig config;
  config.findings_path = kv.require("findings");
  config.pairs_path = kv.require("pairs");
  config.causality_path = kv.require("causality");
  config.certainty_path = kv.require("certainty");
  config.generality_path = kv.require("generality");
  config.bws_tuples_path = kv.require("bws_tuples");
  config.bws_judgments_path = kv.require("bws_judgments");
  try {
    config.ims_threshold = std::stod(kv.get_or("ims_threshold", "4.0"));
    if (kv.has("seed")) config.seed = std::stoull(kv.require("seed"));
  } catch (const std::logic_error&) {
    throw ConfigError("ims_threshold and seed must be numeric");
  }
  const std::string easy = kv.get_or("exclude_easy", "true");
  if (easy != "true" && easy != "false")
    throw ConfigError("exclude_easy must be 'true' or 'false'");
  config.exclude_easy = easy == "true";
  if (kv.has("out")) config.out_dir = kv.require("out");
  return config;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

struct TaskAgreement {
  // discipline -> metric value; metric undefined for the group -> absent
  std::map<std::string, double> ia_f1;
  std::map<std::string, double> kappa;
  std::map<std::string, double> spearman;   // certainty only
};

void collect_groups(const PairwiseAgreementReport& rep,
                    std::map<std::string, double>& out) {
  for (const auto& g : rep.groups)
    if (g.pairs_used > 0) out[g.group] = g.value;
}

std::optional<double> average_cells(const std::map<std::string, double>& cells,
                                    const std::vector<std::string>& groups,
                                    bool fisher) {
  std::vector<double> values;
  for (const auto& g : groups) {
    auto it = cells.find(g);
    if (it != cells.end()) values.push_back(it->second);
  }
  if (values.empty()) return std::nullopt;
  if (fisher) return fisher_z_mean(values);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string cell(const std::map<std::string, double>& cells,
                 const std::string& group) {
  auto it = cells.find(group);
  return it == cells.end() ? "" : fmt(it->second);
}

}  // namespace

ReportOutputs run_report(const ReportConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("no output directory configured");
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const auto out_path = [&](const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
  };

  RunManifest manifest;
  manifest.command_line = config.command_line;
  manifest.config_digest = config.config_digest;
  manifest.seed = config.seed;
  manifest.started_at = utc_timestamp();
  for (const std::string& path :
       {config.findings_path, config.pairs_path, config.causality_path,
        config.certainty_path, config.generality_path, config.bws_tuples_path,
        config.bws_judgments_path})
    manifest.input_digests[path] = file_digest(path);

  ReportOutputs outputs;

  // --- Load and filter the corpus.
  FindingSet findings = load_findings(config.findings_path);
  PairSet all_pairs = load_pairs(config.pairs_path, findings);
  PairSet pairs = filter_pairs(all_pairs, config.ims_threshold, config.exclude_easy);
  if (pairs.pairs.empty())
    throw ValidationError("no pairs survive the IMS/easy filter");

  // --- Aggregate the categorical tasks.
  AnnotationSet caus_ann = load_annotations(config.causality_path, Task::causality);
  AnnotationSet cert_ann = load_annotations(config.certainty_path, Task::certainty);
  AnnotationSet gen_ann = load_annotations(config.generality_path, Task::generality);

  MaceConfig mace_config;
  mace_config.seed = Rng::derive(config.seed, 101);
  AggregatedLabels caus = aggregate_labels(fit_mace(caus_ann, mace_config));
  mace_config.seed = Rng::derive(config.seed, 102);
  AggregatedLabels cert = aggregate_labels(fit_mace(cert_ann, mace_config));
  mace_config.seed = Rng::derive(config.seed, 103);
  AggregatedLabels gen = aggregate_labels(fit_mace(gen_ann, mace_config));

  // --- Score sensationalism.
  TupleSet tuples = load_tuples(config.bws_tuples_path, outputs.warnings);
  std::vector<BwsJudgment> judgments =
      load_bws_judgments(config.bws_judgments_path, outputs.warnings);
  SensScoreTable sens = score_bws(tuples, judgments);

  // --- Agreement (Table 1 layout: one row per discipline plus the average).
  const std::vector<std::string> disciplines = {"bio", "cs", "med", "psy"};
  InstanceGrouping finding_group;
  for (const auto& f : findings.findings)
    finding_group[f.id] = to_string(f.discipline);
  InstanceGrouping pair_group;
  for (const auto& p : all_pairs.pairs) {
    const Finding& paper =
        findings.findings[findings.by_id.at(p.paper_finding_id)];
    pair_group[p.pair_id] = to_string(paper.discipline);
  }

  const auto task_agreement = [&](const AnnotationSet& ann, bool with_rho) {
    TaskAgreement a;
    collect_groups(pairwise_ia_f1(ann, 2, &finding_group), a.ia_f1);
    collect_groups(pairwise_kappa(ann, 2, &finding_group), a.kappa);
    if (with_rho)
      collect_groups(pairwise_spearman_fisher(ann, 2, &finding_group), a.spearman);
    return a;
  };
  TaskAgreement caus_agree = task_agreement(caus_ann, false);
  TaskAgreement cert_agree = task_agreement(cert_ann, true);
  TaskAgreement gen_agree;
  collect_groups(pairwise_ia_f1(gen_ann, 2, &pair_group), gen_agree.ia_f1);
  collect_groups(pairwise_kappa(gen_ann, 2, &pair_group), gen_agree.kappa);

  // Split-half reliability per discipline over the tuples fully inside it.
  std::map<std::string, double> sens_rho, sens_r;
  const auto item_discipline = [&](const std::string& id) -> std::string {
    auto it = findings.by_id.find(id);
    if (it == findings.by_id.end()) return "";
    return to_string(findings.findings[it->second].discipline);
  };
  for (const auto& d : disciplines) {
    TupleSet subset;
    for (const auto& t : tuples.tuples) {
      bool inside = true;
      for (const auto& id : t.item_ids)
        if (item_discipline(id) != d) inside = false;
      if (inside) subset.add(t);
    }
    if (subset.tuples.empty()) {
      outputs.warnings.add("no_tuples:" + d,
                           "no all-" + d + " tuples; split-half cell left empty");
      continue;
    }
    std::vector<BwsJudgment> subset_judgments;
    for (const auto& j : judgments)
      if (subset.find(j.tuple_id) != nullptr) subset_judgments.push_back(j);
    try {
      ReliabilityResult r = split_half_reliability(subset, subset_judgments, 50,
                                                   Rng::derive(config.seed, 104));
      sens_rho[d] = r.spearman;
      sens_r[d] = r.pearson;
    } catch (const Error& e) {
      outputs.warnings.add("split_half:" + d,
                           std::string("split-half undefined for ") + d + ": " +
                               e.what());
    }
  }

  {
    std::ofstream csv(out_path("agreement.csv"), std::ios::binary);
    if (!csv) throw InputError("cannot write " + out_path("agreement.csv"));
    csv << "discipline,causality_iaf1,causality_kappa,certainty_iaf1,"
           "certainty_kappa,certainty_rho,generality_iaf1,generality_kappa,"
           "sensationalism_rho,sensationalism_r\n";
    const auto row = [&](const std::string& g) {
      csv << g << ',' << cell(caus_agree.ia_f1, g) << ','
          << cell(caus_agree.kappa, g) << ',' << cell(cert_agree.ia_f1, g) << ','
          << cell(cert_agree.kappa, g) << ',' << cell(cert_agree.spearman, g)
          << ',' << cell(gen_agree.ia_f1, g) << ',' << cell(gen_agree.kappa, g)
          << ',' << cell(sens_rho, g) << ',' << cell(sens_r, g) << '\n';
    };
    for (const auto& d : disciplines) row(d);
    const auto avg_cell = [&](const std::map<std::string, double>& cells,
                              bool fisher) {
      auto v = average_cells(cells, disciplines, fisher);
      return v ? fmt(*v) : std::string();
    };
    csv << "avg," << avg_cell(caus_agree.ia_f1, false) << ','
        << avg_cell(caus_agree.kappa, false) << ','
        << avg_cell(cert_agree.ia_f1, false) << ','
        << avg_cell(cert_agree.kappa, false) << ','
        << avg_cell(cert_agree.spearman, true) << ','
        << avg_cell(gen_agree.ia_f1, false) << ','
        << avg_cell(gen_agree.kappa, false) << ','
        << avg_cell(sens_rho, true) << ',' << avg_cell(sens_r, true) << '\n';
  }
  outputs.files.push_back(out_path("agreement.csv"));

  // --- Distortion pipeline.
  std::vector<ChangeRecord> changes =
      detect_all_changes(pairs, caus, cert, gen, &sens);
  const double sens_sd = compute_sens_sd(changes);
  std::vector<CriticalFlags> flags;
  flags.reserve(changes.size());
  for (const auto& c : changes) flags.push_back(critical_flags(c, sens_sd));

  // Table 2 layout: outlets first, then disciplines.
  {
    BreakdownTable by_outlet = breakdown(flags, pairs, findings, BreakdownBy::outlet);
    BreakdownTable by_disc =
        breakdown(flags, pairs, findings, BreakdownBy::discipline);
    for (const auto& w : by_outlet.warnings.messages()) outputs.warnings.add(w, w);
    for (const auto& w : by_disc.warnings.messages()) outputs.warnings.add(w, w);
    std::ofstream csv(out_path("breakdown.csv"), std::ios::binary);
    if (!csv) throw InputError("cannot write " + out_path("breakdown.csv"));
    csv << "group,n,caus_up,cert_up,gen_up,gen_down,sens_up\n";
    const auto rows = [&](const BreakdownTable& t) {
      for (std::size_t i = 0; i < t.groups.size(); ++i) {
        csv << t.groups[i] << ',' << t.group_sizes[i];
        for (double pct : t.percent[i]) csv << ',' << fmt(pct);
        csv << '\n';
      }
    };
    rows(by_outlet);
    rows(by_disc);
  }
  outputs.files.push_back(out_path("breakdown.csv"));

  // --- Sankey flows and co-occurrence.
  const auto write_sankey = [&](const TransitionMatrix& m, const std::string& name) {
    json flows = json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i)
      for (std::size_t j = 0; j < m.labels.size(); ++j)
        if (m.counts[i][j] > 0)
          flows.push_back(
              {{"from", m.labels[i]}, {"to", m.labels[j]}, {"count", m.counts[i][j]}});
    json doc;
    doc["dimension"] = name;
    doc["labels"] = m.labels;
    doc["total"] = m.total;
    doc["same_label_fraction"] = m.same_label_fraction;
    doc["flows"] = flows;
    write_json(out_path("sankey_" + name + ".json"), doc);
    outputs.files.push_back(out_path("sankey_" + name + ".json"));
    return m.same_label_fraction;
  };
  const TransitionMatrix caus_matrix =
      transition_matrix(changes, ChangeDimension::causality);
  const TransitionMatrix cert_matrix =
      transition_matrix(changes, ChangeDimension::certainty);
  write_sankey(caus_matrix, "causality");
  write_sankey(cert_matrix, "certainty");

  {
    CooccurrenceMatrix co = cooccurrence(flags);
    json doc;
    doc["flags"] = co.flag_names;
    json rows = json::array();
    for (const auto& row : co.counts) rows.push_back(row);
    doc["counts"] = rows;
    write_json(out_path("cooccurrence.json"), doc);
  }
  outputs.files.push_back(out_path("cooccurrence.json"));

  save_scores(out_path("sens_scores.jsonl"), sens);
  outputs.files.push_back(out_path("sens_scores.jsonl"));

  {
    std::vector<json> rows;
    rows.reserve(changes.size());
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
      rows.push_back(std::move(obj));
    }
    write_jsonl(out_path("changes.jsonl"), rows);
  }
  outputs.files.push_back(out_path("changes.jsonl"));

  {
    CorpusComposition comp = composition(pairs, findings);
    json doc;
    doc["n_pairs_input"] = all_pairs.pairs.size();
    doc["n_pairs_filtered"] = pairs.pairs.size();
    doc["by_discipline"] = comp.by_discipline;
    doc["by_outlet"] = comp.by_outlet;
    doc["same_relation_fraction"] = caus_matrix.same_label_fraction;
    doc["sens_sd"] = sens_sd;
    doc["ims_threshold"] = config.ims_threshold;
    doc["exclude_easy"] = config.exclude_easy;
    write_json(out_path("summary.json"), doc);
  }
  outputs.files.push_back(out_path("summary.json"));

  manifest.finished_at = utc_timestamp();
  write_manifest(manifest, out_path("manifest.json"));
  outputs.files.push_back(out_path("manifest.json"));
  return outputs;
}

}  // namespace scicomm
