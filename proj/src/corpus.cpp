#include "scicomm/corpus.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "scicomm/jsonl.hpp"

namespace scicomm {

namespace {

const std::array<std::string, 3> kSourceNames = {"paper", "news", "tweet"};
const std::array<std::string, 4> kDisciplineNames = {"bio", "cs", "med", "psy"};
const std::array<std::string, 2> kOutletNames = {"news", "tweet"};
const std::array<std::string, 3> kTaskNames = {"causality", "certainty", "generality"};

template <typename Enum, std::size_t N>
Enum enum_from_string(const std::array<std::string, N>& names,
                      const std::string& s, const std::string& field) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw SchemaError("unknown value '" + s + "' for field '" + field + "'");
}

std::string get_string(const json& obj, const std::string& field,
                       const std::string& kind) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw SchemaError(kind + " record missing string field '" + field + "'");
  }
  return it->get<std::string>();
}

}  // namespace

const std::string& to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }
const std::string& to_string(Discipline d) { return kDisciplineNames[static_cast<std::size_t>(d)]; }
const std::string& to_string(Outlet o) { return kOutletNames[static_cast<std::size_t>(o)]; }
const std::string& to_string(Task t) { return kTaskNames[static_cast<std::size_t>(t)]; }

Source source_from_string(const std::string& s) {
  return enum_from_string<Source>(kSourceNames, s, "source");
}
Discipline discipline_from_string(const std::string& s) {
  return enum_from_string<Discipline>(kDisciplineNames, s, "discipline");
}
Outlet outlet_from_string(const std::string& s) {
  return enum_from_string<Outlet>(kOutletNames, s, "outlet");
}
Task task_from_string(const std::string& s) {
  return enum_from_string<Task>(kTaskNames, s, "task");
}

int LabelSpace::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int LabelSpace::require(const std::string& label, const std::string& context) const {
  const int idx = index_of(label);
  if (idx < 0) {
    throw SchemaError("unknown label '" + label + "' for " + context);
  }
  return idx;
}

const LabelSpace& task_label_space(Task task) {
  static const LabelSpace causality{{"no_relation_mentioned", "correlation",
                                     "causation", "explicitly_no_relation"}};
  static const LabelSpace certainty{{"1", "2", "3", "4"}};
  static const LabelSpace generality{
      {"reported_more_general", "paper_more_general", "same_level"}};
  switch (task) {
    case Task::causality: return causality;
    case Task::certainty: return certainty;
    case Task::generality: return generality;
  }
  return causality;
}

const Finding* FindingSet::find(const std::string& id) const {
  auto it = by_id.find(id);
  return it == by_id.end() ? nullptr : &findings[it->second];
}

const Finding& FindingSet::require(const std::string& id) const {
  const Finding* f = find(id);
  if (!f) throw DanglingReferenceError("unknown finding id '" + id + "'");
  return *f;
}

void FindingSet::add(Finding finding) {
  if (finding.id.empty()) throw SchemaError("finding with empty id");
  if (finding.text.empty()) {
    throw SchemaError("finding '" + finding.id + "' has empty text");
  }
  if (by_id.count(finding.id)) {
    throw DuplicateIdError("duplicate finding id '" + finding.id + "'");
  }
  by_id.emplace(finding.id, findings.size());
  findings.push_back(std::move(finding));
}

const FindingPair* PairSet::find(const std::string& pair_id) const {
  auto it = by_id.find(pair_id);
  return it == by_id.end() ? nullptr : &pairs[it->second];
}

void PairSet::add(FindingPair pair) {
  if (pair.pair_id.empty()) throw SchemaError("pair with empty pair_id");
  if (by_id.count(pair.pair_id)) {
    throw DuplicateIdError("duplicate pair id '" + pair.pair_id + "'");
  }
  if (pair.ims < 1.0 || pair.ims > 5.0) {
    throw SchemaError("pair '" + pair.pair_id + "' has ims " +
                      std::to_string(pair.ims) + " outside [1,5]");
  }
  by_id.emplace(pair.pair_id, pairs.size());
  pairs.push_back(std::move(pair));
}

void AnnotationSet::add(AnnotationRecord record) {
  if (record.value < 0 || static_cast<std::size_t>(record.value) >= space.size()) {
    throw SchemaError("annotation value index out of range for instance '" +
                      record.instance_id + "'");
  }
  auto& per_instance = seen_[record.instance_id];
  if (per_instance.count(record.annotator_id)) {
    throw DuplicateAnnotationError("annotator '" + record.annotator_id +
                                   "' labeled instance '" + record.instance_id +
                                   "' more than once");
  }
  per_instance.emplace(record.annotator_id, true);
  records.push_back(std::move(record));
}

std::vector<std::string> AnnotationSet::instance_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& rec : records) {
    if (seen.insert(rec.instance_id).second) ids.push_back(rec.instance_id);
  }
  return ids;
}

std::vector<std::string> AnnotationSet::annotator_ids() const {
  std::set<std::string> ids;
  for (const auto& rec : records) ids.insert(rec.annotator_id);
  return {ids.begin(), ids.end()};
}

std::unordered_map<std::string, std::vector<std::size_t>> AnnotationSet::by_instance() const {
  std::unordered_map<std::string, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    index[records[i].instance_id].push_back(i);
  }
  return index;
}

FindingSet load_findings(const std::filesystem::path& path) {
  FindingSet set;
  static const std::vector<std::string> known = {"id", "text", "source",
                                                 "discipline", "paper_id"};
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    warn_unknown_fields(obj, known, "finding", set.warnings);
    Finding f;
    f.id = get_string(obj, "id", "finding");
    f.text = get_string(obj, "text", "finding");
    f.source = source_from_string(get_string(obj, "source", "finding"));
    f.discipline = discipline_from_string(get_string(obj, "discipline", "finding"));
    if (obj.contains("paper_id") && !obj["paper_id"].is_null()) {
      if (!obj["paper_id"].is_string()) {
        throw SchemaError("finding '" + f.id + "': paper_id must be a string");
      }
      f.paper_id = obj["paper_id"].get<std::string>();
    }
    set.add(std::move(f));
  });
  return set;
}

PairSet load_pairs(const std::filesystem::path& path, const FindingSet& findings) {
  PairSet set;
  static const std::vector<std::string> known = {
      "pair_id", "paper_finding_id", "reported_finding_id", "outlet", "ims", "easy"};
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    warn_unknown_fields(obj, known, "pair", set.warnings);
    FindingPair p;
    p.pair_id = get_string(obj, "pair_id", "pair");
    p.paper_finding_id = get_string(obj, "paper_finding_id", "pair");
    p.reported_finding_id = get_string(obj, "reported_finding_id", "pair");
    p.outlet = outlet_from_string(get_string(obj, "outlet", "pair"));
    if (!obj.contains("ims") || !obj["ims"].is_number()) {
      throw SchemaError("pair '" + p.pair_id + "' missing numeric field 'ims'");
    }
    p.ims = obj["ims"].get<double>();
    if (!obj.contains("easy") || !obj["easy"].is_boolean()) {
      throw SchemaError("pair '" + p.pair_id + "' missing boolean field 'easy'");
    }
    p.easy = obj["easy"].get<bool>();

    const Finding* paper = findings.find(p.paper_finding_id);
    if (!paper) {
      throw DanglingReferenceError("pair '" + p.pair_id +
                                   "' references unknown paper finding '" +
                                   p.paper_finding_id + "'");
    }
    const Finding* reported = findings.find(p.reported_finding_id);
    if (!reported) {
      throw DanglingReferenceError("pair '" + p.pair_id +
                                   "' references unknown reported finding '" +
                                   p.reported_finding_id + "'");
    }
    if (paper->source != Source::paper) {
      throw SchemaError("pair '" + p.pair_id + "': finding '" + paper->id +
                        "' is not a paper finding");
    }
    const Source expected =
        p.outlet == Outlet::news ? Source::news : Source::tweet;
    if (reported->source != expected) {
      throw OutletMismatchError("pair '" + p.pair_id + "': outlet is '" +
                                to_string(p.outlet) +
                                "' but reported finding source is '" +
                                to_string(reported->source) + "'");
    }
    set.add(std::move(p));
  });
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path, Task task) {
  AnnotationSet set;
  set.task = task;
  set.space = task_label_space(task);
  static const std::vector<std::string> known = {"task", "instance_id",
                                                 "annotator_id", "value"};
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    warn_unknown_fields(obj, known, "annotation", set.warnings);
    const std::string rec_task = get_string(obj, "task", "annotation");
    if (task_from_string(rec_task) != task) {
      throw SchemaError("annotation record for task '" + rec_task +
                        "' in a file loaded as '" + to_string(task) + "'");
    }
    AnnotationRecord rec;
    rec.instance_id = get_string(obj, "instance_id", "annotation");
    rec.annotator_id = get_string(obj, "annotator_id", "annotation");
    if (!obj.contains("value")) {
      throw SchemaError("annotation record missing field 'value'");
    }
    const json& value = obj["value"];
    if (task == Task::certainty) {
      if (!value.is_number_integer()) {
        throw SchemaError("certainty value must be an integer 1..4");
      }
      const int level = value.get<int>();
      if (level < 1 || level > 4) {
        throw SchemaError("certainty value " + std::to_string(level) +
                          " outside the 1..4 scale");
      }
      rec.value = level - 1;
    } else {
      if (!value.is_string()) {
        throw SchemaError("annotation value for task '" + rec_task +
                          "' must be a string label");
      }
      rec.value = set.space.require(value.get<std::string>(),
                                    "task '" + rec_task + "'");
    }
    set.add(std::move(rec));
  });
  return set;
}

void save_findings(const std::filesystem::path& path, const FindingSet& findings) {
  std::vector<json> rows;
  rows.reserve(findings.size());
  for (const auto& f : findings.findings) {
    json row{{"id", f.id},
             {"text", f.text},
             {"source", to_string(f.source)},
             {"discipline", to_string(f.discipline)}};
    if (f.paper_id) row["paper_id"] = *f.paper_id;
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

void save_pairs(const std::filesystem::path& path, const PairSet& pairs) {
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs.pairs) {
    rows.push_back(json{{"pair_id", p.pair_id},
                        {"paper_finding_id", p.paper_finding_id},
                        {"reported_finding_id", p.reported_finding_id},
                        {"outlet", to_string(p.outlet)},
                        {"ims", p.ims},
                        {"easy", p.easy}});
  }
  write_jsonl(path, rows);
}

void save_annotations(const std::filesystem::path& path,
                      const AnnotationSet& annotations) {
  std::vector<json> rows;
  rows.reserve(annotations.size());
  const Task task = annotations.task.value_or(Task::causality);
  for (const auto& rec : annotations.records) {
    json row{{"task", annotations.task ? to_string(task) : "custom"},
             {"instance_id", rec.instance_id},
             {"annotator_id", rec.annotator_id}};
    if (annotations.task && task == Task::certainty) {
      row["value"] = rec.value + 1;
    } else {
      row["value"] = annotations.space.name(rec.value);
    }
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

PairSet filter_pairs(const PairSet& pairs, double ims_threshold, bool exclude_easy) {
  PairSet out;
  for (const auto& p : pairs.pairs) {
    if (p.ims <= ims_threshold) continue;
    if (exclude_easy && p.easy) continue;
    out.add(p);
  }
  return out;
}

CorpusComposition composition(const PairSet& pairs, const FindingSet& findings) {
  CorpusComposition comp;
  comp.total = pairs.size();
  for (const auto& p : pairs.pairs) {
    const Finding& paper = findings.require(p.paper_finding_id);
    comp.by_discipline[to_string(paper.discipline)]++;
    comp.by_outlet[to_string(p.outlet)]++;
  }
  return comp;
}

}  // namespace scicomm
