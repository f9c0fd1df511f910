#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scicomm/errors.hpp"

namespace scicomm {

struct BwsTuple {
  std::string tuple_id;
  std::array<std::string, 4> item_ids;

  bool contains(const std::string& item) const {
    for (const auto& id : item_ids) {
      if (id == item) return true;
    }
    return false;
  }
};

struct TupleSet {
  std::vector<BwsTuple> tuples;
  std::unordered_map<std::string, std::size_t> by_id;

  std::size_t size() const { return tuples.size(); }
  const BwsTuple* find(const std::string& tuple_id) const;
  void add(BwsTuple tuple);   // enforces 4 distinct items and set-uniqueness

  // All item ids in first-appearance order.
  std::vector<std::string> item_ids() const;
};

struct BwsJudgment {
  std::string tuple_id;
  std::string annotator_id;
  std::string most_id;
  std::string least_id;
};

struct ItemScore {
  std::optional<double> score;   // null when the item was never covered by a judgment
  int n_appearances = 0;         // judgments covering a tuple containing the item
  int n_most = 0;
  int n_least = 0;
};

struct SensScoreTable {
  std::vector<std::string> item_ids;   // stable order
  std::unordered_map<std::string, ItemScore> rows;

  const ItemScore* find(const std::string& item_id) const;
  std::optional<double> score(const std::string& item_id) const;
};

// Balanced randomized quad-tuple design: round(multiplier * N) tuples, item
// appearance counts differ by at most one, no repeated item within a tuple,
// no duplicate tuple as a set. Deterministic given seed.
TupleSet generate_tuples(const std::vector<std::string>& item_ids,
                         double multiplier, std::uint64_t seed);

// score = (#chosen most - #chosen least) / #annotated appearances.
SensScoreTable score_bws(const TupleSet& tuples,
                         const std::vector<BwsJudgment>& judgments);

struct ReliabilityResult {
  double spearman = 0.0;
  double pearson = 0.0;
  int repeats_requested = 0;
  int repeats_used = 0;
  WarningLog warnings;
};

// Splits each tuple's judgments into random halves, scores both halves
// independently and correlates the score vectors; averages over repeats with
// Fisher-Z averaging. Requires >= 2 judgments on every tuple.
ReliabilityResult split_half_reliability(const TupleSet& tuples,
                                         const std::vector<BwsJudgment>& judgments,
                                         int repeats, std::uint64_t seed);

// JSONL: tuples {tuple_id, items: [4 ids]}; judgments {tuple_id, annotator_id,
// most, least}; scores {item_id, score, n_appearances, n_most, n_least}.
TupleSet load_tuples(const std::filesystem::path& path, WarningLog& warnings);
void save_tuples(const std::filesystem::path& path, const TupleSet& tuples);
std::vector<BwsJudgment> load_bws_judgments(const std::filesystem::path& path,
                                            WarningLog& warnings);
void save_bws_judgments(const std::filesystem::path& path,
                        const std::vector<BwsJudgment>& judgments);
void save_scores(const std::filesystem::path& path, const SensScoreTable& table);
SensScoreTable load_scores(const std::filesystem::path& path);

}  // namespace scicomm
