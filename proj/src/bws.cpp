#include "scicomm/bws.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scicomm/agreement.hpp"
#include "scicomm/jsonl.hpp"
#include "scicomm/rng.hpp"
#include "scicomm/stats.hpp"

namespace scicomm {

namespace {

std::array<std::string, 4> sorted_key(const std::array<std::string, 4>& ids) {
  auto key = ids;
  std::sort(key.begin(), key.end());
  return key;
}

constexpr int kMaxDesignRetries = 1000;

}  // namespace

const BwsTuple* TupleSet::find(const std::string& tuple_id) const {
  auto it = by_id.find(tuple_id);
  return it == by_id.end() ? nullptr : &tuples[it->second];
}

void TupleSet::add(BwsTuple tuple) {
  if (tuple.tuple_id.empty()) throw SchemaError("tuple with empty tuple_id");
  if (by_id.count(tuple.tuple_id)) {
    throw DuplicateIdError("duplicate tuple id '" + tuple.tuple_id + "'");
  }
  const auto key = sorted_key(tuple.item_ids);
  for (std::size_t i = 0; i + 1 < key.size(); ++i) {
    if (key[i] == key[i + 1]) {
      throw SchemaError("tuple '" + tuple.tuple_id + "' repeats item '" +
                        key[i] + "'");
    }
  }
  for (const auto& existing : tuples) {
    if (sorted_key(existing.item_ids) == key) {
      throw DuplicateIdError("tuple '" + tuple.tuple_id +
                             "' duplicates the item set of '" +
                             existing.tuple_id + "'");
    }
  }
  by_id.emplace(tuple.tuple_id, tuples.size());
  tuples.push_back(std::move(tuple));
}

std::vector<std::string> TupleSet::item_ids() const {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& t : tuples) {
    for (const auto& id : t.item_ids) {
      if (seen.insert(id).second) ids.push_back(id);
    }
  }
  return ids;
}

const ItemScore* SensScoreTable::find(const std::string& item_id) const {
  auto it = rows.find(item_id);
  return it == rows.end() ? nullptr : &it->second;
}

std::optional<double> SensScoreTable::score(const std::string& item_id) const {
  const ItemScore* row = find(item_id);
  return row ? row->score : std::nullopt;
}

TupleSet generate_tuples(const std::vector<std::string>& item_ids,
                         double multiplier, std::uint64_t seed) {
  const std::size_t n = item_ids.size();
  if (n < 4) {
    throw TooFewItemsError("generate_tuples: need at least 4 items, got " +
                           std::to_string(n));
  }
  {
    std::set<std::string> dedup(item_ids.begin(), item_ids.end());
    if (dedup.size() != n) {
      throw SchemaError("generate_tuples: item ids are not unique");
    }
  }
  const auto n_tuples = static_cast<std::size_t>(
      std::llround(multiplier * static_cast<double>(n)));
  if (n_tuples == 0) {
    throw InfeasibleDesignError("generate_tuples: multiplier too small");
  }
  // Distinct 4-subsets available; bail out early when the count alone makes
  // duplicate-free designs impossible.
  const double distinct = static_cast<double>(n) * (n - 1) * (n - 2) * (n - 3) / 24.0;
  if (distinct < static_cast<double>(n_tuples)) {
    throw InfeasibleDesignError(
        "generate_tuples: only " + std::to_string(static_cast<long long>(distinct)) +
        " distinct quad-tuples exist for " + std::to_string(n) +
        " items, need " + std::to_string(n_tuples));
  }

  Rng rng(seed);
  const std::size_t slots = 4 * n_tuples;
  const std::size_t base = slots / n;
  const std::size_t extra = slots % n;

  for (int attempt = 0; attempt < kMaxDesignRetries; ++attempt) {
    // appearance targets: `extra` random items get one more slot
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::string> pool;
    pool.reserve(slots);
    for (std::size_t rank = 0; rank < n; ++rank) {
      const std::size_t count = base + (rank < extra ? 1 : 0);
      for (std::size_t c = 0; c < count; ++c) pool.push_back(item_ids[order[rank]]);
    }
    rng.shuffle(pool);

    TupleSet out;
    std::set<std::array<std::string, 4>> seen_sets;
    bool failed = false;
    std::size_t cursor = 0;
    for (std::size_t t = 0; t < n_tuples && !failed; ++t) {
      std::array<std::string, 4> members;
      for (int k = 0; k < 4 && !failed; ++k) {
        std::size_t s = cursor;
        while (s < pool.size()) {
          bool already = false;
          for (int m = 0; m < k; ++m) {
            if (members[static_cast<std::size_t>(m)] == pool[s]) {
              already = true;
              break;
            }
          }
          if (!already) break;
          ++s;
        }
        if (s == pool.size()) {
          failed = true;
          break;
        }
        std::swap(pool[cursor], pool[s]);
        members[static_cast<std::size_t>(k)] = pool[cursor];
        ++cursor;
      }
      if (failed) break;
      if (!seen_sets.insert(sorted_key(members)).second) {
        failed = true;
        break;
      }
      BwsTuple tuple;
      tuple.tuple_id = "t" + std::to_string(t + 1);
      tuple.item_ids = members;
      out.add(std::move(tuple));
    }
    if (!failed) return out;
  }
  throw InfeasibleDesignError(
      "generate_tuples: no valid design found within " +
      std::to_string(kMaxDesignRetries) + " attempts");
}

SensScoreTable score_bws(const TupleSet& tuples,
                         const std::vector<BwsJudgment>& judgments) {
  SensScoreTable table;
  table.item_ids = tuples.item_ids();
  for (const auto& id : table.item_ids) table.rows.emplace(id, ItemScore{});

  for (const auto& j : judgments) {
    const BwsTuple* tuple = tuples.find(j.tuple_id);
    if (!tuple) {
      throw UnknownTupleError("judgment references unknown tuple '" +
                              j.tuple_id + "'");
    }
    if (j.most_id == j.least_id) {
      throw IllegalChoiceError("judgment on tuple '" + j.tuple_id +
                               "' picks the same item as most and least");
    }
    if (!tuple->contains(j.most_id) || !tuple->contains(j.least_id)) {
      throw IllegalChoiceError("judgment on tuple '" + j.tuple_id +
                               "' picks an item outside the tuple");
    }
    for (const auto& id : tuple->item_ids) table.rows[id].n_appearances++;
    table.rows[j.most_id].n_most++;
    table.rows[j.least_id].n_least++;
  }

  for (auto& [id, row] : table.rows) {
    if (row.n_appearances > 0) {
      row.score = static_cast<double>(row.n_most - row.n_least) /
                  static_cast<double>(row.n_appearances);
    }
  }
  return table;
}

ReliabilityResult split_half_reliability(const TupleSet& tuples,
                                         const std::vector<BwsJudgment>& judgments,
                                         int repeats, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("split_half_reliability: repeats must be >= 1");

  std::unordered_map<std::string, std::vector<std::size_t>> per_tuple;
  for (std::size_t i = 0; i < judgments.size(); ++i) {
    per_tuple[judgments[i].tuple_id].push_back(i);
  }
  for (const auto& t : tuples.tuples) {
    auto it = per_tuple.find(t.tuple_id);
    if (it == per_tuple.end() || it->second.size() < 2) {
      throw InsufficientJudgmentsError(
          "split_half_reliability: tuple '" + t.tuple_id +
          "' has fewer than 2 judgments");
    }
  }

  ReliabilityResult result;
  result.repeats_requested = repeats;
  std::vector<double> spearmans;
  std::vector<double> pearsons;

  const auto items = tuples.item_ids();
  for (int r = 0; r < repeats; ++r) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(r)));
    std::vector<BwsJudgment> half_a;
    std::vector<BwsJudgment> half_b;
    for (const auto& t : tuples.tuples) {
      auto indices = per_tuple.at(t.tuple_id);
      rng.shuffle(indices);
      const std::size_t cut = (indices.size() + 1) / 2;  // ceil(k/2) into half A
      for (std::size_t k = 0; k < indices.size(); ++k) {
        (k < cut ? half_a : half_b).push_back(judgments[indices[k]]);
      }
    }
    const auto table_a = score_bws(tuples, half_a);
    const auto table_b = score_bws(tuples, half_b);

    std::vector<double> scores_a;
    std::vector<double> scores_b;
    for (const auto& id : items) {
      const auto sa = table_a.score(id);
      const auto sb = table_b.score(id);
      if (sa && sb) {
        scores_a.push_back(*sa);
        scores_b.push_back(*sb);
      }
    }
    const auto rho = try_spearman(scores_a, scores_b);
    const auto r_p = try_pearson(scores_a, scores_b);
    if (!rho || !r_p) {
      result.warnings.add("undefined-repeat",
                          "a split produced a constant score vector; repeat "
                          "excluded from the average");
      continue;
    }
    spearmans.push_back(*rho);
    pearsons.push_back(*r_p);
  }

  if (spearmans.empty()) {
    throw InsufficientDataError(
        "split_half_reliability: every repeat produced an undefined correlation");
  }
  result.repeats_used = static_cast<int>(spearmans.size());

  // Identical halves give exactly +/-1 in every repeat; return that limit
  // directly since the Fisher transform would clamp it to 0.999999.
  auto average = [](const std::vector<double>& values) {
    const bool all_one = std::all_of(values.begin(), values.end(),
                                     [](double v) { return v == 1.0; });
    const bool all_neg_one = std::all_of(values.begin(), values.end(),
                                         [](double v) { return v == -1.0; });
    if (all_one) return 1.0;
    if (all_neg_one) return -1.0;
    return fisher_z_mean(values);
  };
  result.spearman = average(spearmans);
  result.pearson = average(pearsons);
  return result;
}

TupleSet load_tuples(const std::filesystem::path& path, WarningLog& warnings) {
  TupleSet out;
  static const std::vector<std::string> known = {"tuple_id", "items"};
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    BwsTuple t;
    if (!obj.contains("tuple_id") || !obj["tuple_id"].is_string())
      throw ParseError(path.string(), line_no, "missing string field 'tuple_id'");
    t.tuple_id = obj["tuple_id"].get<std::string>();
    if (!obj.contains("items") || !obj["items"].is_array() ||
        obj["items"].size() != 4)
      throw ParseError(path.string(), line_no,
                       "'items' must be an array of exactly 4 item ids");
    for (std::size_t i = 0; i < 4; ++i) {
      if (!obj["items"][i].is_string())
        throw ParseError(path.string(), line_no, "'items' entries must be strings");
      t.item_ids[i] = obj["items"][i].get<std::string>();
    }
    warn_unknown_fields(obj, known, "tuple", warnings);
    out.add(std::move(t));
  });
  if (out.tuples.empty()) throw EmptyInputError(path.string() + ": no tuples");
  return out;
}

void save_tuples(const std::filesystem::path& path, const TupleSet& tuples) {
  std::vector<json> rows;
  rows.reserve(tuples.tuples.size());
  for (const auto& t : tuples.tuples) {
    json obj;
    obj["tuple_id"] = t.tuple_id;
    obj["items"] = t.item_ids;
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

std::vector<BwsJudgment> load_bws_judgments(const std::filesystem::path& path,
                                            WarningLog& warnings) {
  std::vector<BwsJudgment> out;
  static const std::vector<std::string> known = {"tuple_id", "annotator_id",
                                                 "most", "least"};
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    BwsJudgment j;
    for (const char* key : {"tuple_id", "annotator_id", "most", "least"}) {
      if (!obj.contains(key) || !obj[key].is_string())
        throw ParseError(path.string(), line_no,
                         std::string("missing string field '") + key + "'");
    }
    j.tuple_id = obj["tuple_id"].get<std::string>();
    j.annotator_id = obj["annotator_id"].get<std::string>();
    j.most_id = obj["most"].get<std::string>();
    j.least_id = obj["least"].get<std::string>();
    warn_unknown_fields(obj, known, "judgment", warnings);
    out.push_back(std::move(j));
  });
  if (out.empty()) throw EmptyInputError(path.string() + ": no judgments");
  return out;
}

void save_bws_judgments(const std::filesystem::path& path,
                        const std::vector<BwsJudgment>& judgments) {
  std::vector<json> rows;
  rows.reserve(judgments.size());
  for (const auto& j : judgments) {
    json obj;
    obj["tuple_id"] = j.tuple_id;
    obj["annotator_id"] = j.annotator_id;
    obj["most"] = j.most_id;
    obj["least"] = j.least_id;
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

void save_scores(const std::filesystem::path& path, const SensScoreTable& table) {
  std::vector<json> rows;
  rows.reserve(table.item_ids.size());
  for (const auto& id : table.item_ids) {
    const ItemScore& s = table.rows.at(id);
    json obj;
    obj["item_id"] = id;
    if (s.score)
      obj["score"] = *s.score;
    else
      obj["score"] = nullptr;
    obj["n_appearances"] = s.n_appearances;
    obj["n_most"] = s.n_most;
    obj["n_least"] = s.n_least;
    rows.push_back(std::move(obj));
  }
  write_jsonl(path, rows);
}

SensScoreTable load_scores(const std::filesystem::path& path) {
  SensScoreTable table;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    if (!obj.contains("item_id") || !obj["item_id"].is_string())
      throw ParseError(path.string(), line_no, "missing string field 'item_id'");
    const std::string id = obj["item_id"].get<std::string>();
    if (table.rows.count(id))
      throw DuplicateIdError("duplicate item '" + id + "' in " + path.string());
    ItemScore s;
    if (obj.contains("score") && obj["score"].is_number())
      s.score = obj["score"].get<double>();
    s.n_appearances = obj.value("n_appearances", 0);
    s.n_most = obj.value("n_most", 0);
    s.n_least = obj.value("n_least", 0);
    table.item_ids.push_back(id);
    table.rows[id] = s;
  });
  if (table.item_ids.empty()) throw EmptyInputError(path.string() + ": no scores");
  return table;
}

}  // namespace scicomm
