#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scicomm/errors.hpp"

namespace scicomm {

enum class Source { paper, news, tweet };
enum class Discipline { bio, cs, med, psy };
enum class Outlet { news, tweet };
enum class Task { causality, certainty, generality };

const std::string& to_string(Source s);
const std::string& to_string(Discipline d);
const std::string& to_string(Outlet o);
const std::string& to_string(Task t);

Source source_from_string(const std::string& s);
Discipline discipline_from_string(const std::string& s);
Outlet outlet_from_string(const std::string& s);
Task task_from_string(const std::string& s);

// Closed label space an annotation task draws from. Labels are handled as
// indices into `names`; certainty keeps its ordinal meaning (index = level-1).
struct LabelSpace {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  const std::string& name(int index) const { return names.at(static_cast<std::size_t>(index)); }
  int index_of(const std::string& label) const;       // -1 when unknown
  int require(const std::string& label, const std::string& context = "label") const;
};

// Canonical spaces: causality {no_relation_mentioned, correlation, causation,
// explicitly_no_relation}, certainty {1..4 ordinal}, generality
// {reported_more_general, paper_more_general, same_level}.
const LabelSpace& task_label_space(Task task);

// Causality label indices in canonical order.
inline constexpr int kNoRelationMentioned = 0;
inline constexpr int kCorrelation = 1;
inline constexpr int kCausation = 2;
inline constexpr int kExplicitlyNoRelation = 3;

// Generality label indices in canonical order.
inline constexpr int kReportedMoreGeneral = 0;
inline constexpr int kPaperMoreGeneral = 1;
inline constexpr int kSameLevel = 2;

struct Finding {
  std::string id;
  std::string text;
  Source source = Source::paper;
  Discipline discipline = Discipline::bio;
  std::optional<std::string> paper_id;
};

struct FindingSet {
  std::vector<Finding> findings;
  std::unordered_map<std::string, std::size_t> by_id;
  WarningLog warnings;

  std::size_t size() const { return findings.size(); }
  const Finding* find(const std::string& id) const;
  const Finding& require(const std::string& id) const;
  void add(Finding finding);
};

struct FindingPair {
  std::string pair_id;
  std::string paper_finding_id;
  std::string reported_finding_id;
  Outlet outlet = Outlet::news;
  double ims = 0.0;
  bool easy = false;
};

struct PairSet {
  std::vector<FindingPair> pairs;
  std::unordered_map<std::string, std::size_t> by_id;
  WarningLog warnings;

  std::size_t size() const { return pairs.size(); }
  const FindingPair* find(const std::string& pair_id) const;
  void add(FindingPair pair);
};

struct AnnotationRecord {
  std::string instance_id;   // finding id (causality/certainty) or pair id (generality)
  std::string annotator_id;
  int value = 0;             // index into the set's label space
};

struct AnnotationSet {
  std::optional<Task> task;  // unset for synthetic label spaces
  LabelSpace space;
  std::vector<AnnotationRecord> records;
  WarningLog warnings;

  std::size_t size() const { return records.size(); }
  void add(AnnotationRecord record);  // throws DuplicateAnnotationError

  // Instance ids in first-appearance order.
  std::vector<std::string> instance_ids() const;
  // Annotator ids sorted lexicographically.
  std::vector<std::string> annotator_ids() const;
  std::unordered_map<std::string, std::vector<std::size_t>> by_instance() const;

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, bool>> seen_;
};

FindingSet load_findings(const std::filesystem::path& path);
PairSet load_pairs(const std::filesystem::path& path, const FindingSet& findings);
AnnotationSet load_annotations(const std::filesystem::path& path, Task task);

void save_findings(const std::filesystem::path& path, const FindingSet& findings);
void save_pairs(const std::filesystem::path& path, const PairSet& pairs);
void save_annotations(const std::filesystem::path& path, const AnnotationSet& annotations);

// Keeps pairs with ims strictly above the threshold, dropping pairs flagged
// easy unless exclude_easy is false. Order is preserved.
PairSet filter_pairs(const PairSet& pairs, double ims_threshold = 4.0,
                     bool exclude_easy = true);

// Counts by discipline (of the paper finding) and outlet.
struct CorpusComposition {
  std::size_t total = 0;
  std::unordered_map<std::string, std::size_t> by_discipline;
  std::unordered_map<std::string, std::size_t> by_outlet;
};

CorpusComposition composition(const PairSet& pairs, const FindingSet& findings);

}  // namespace scicomm
