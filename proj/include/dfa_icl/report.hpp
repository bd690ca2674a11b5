#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfa_icl/errors.hpp"
#include "dfa_icl/evaluation.hpp"
#include "dfa_icl/serialization.hpp"
#include "dfa_icl/taskgen.hpp"

namespace dfa_icl {

/// Per-predictor DFA scores plus the count of unevaluated instances (transport
/// failures), which appear in neither numerator nor denominator.
struct PredictorScores {
  std::vector<DfaScore> scores;  // ascending dfa_id
  int unevaluated = 0;
};

using ScoreTable = std::map<std::string, PredictorScores>;

/// Scores every prediction against ground truth. `sets` must carry the
/// hidden transducer targets; `dfas` is indexed by dfa_id order of `sets`.
inline ScoreTable score_predictions(const std::vector<Dfa>& dfas, const std::vector<TaskSet>& sets,
                                    const std::vector<PredictionRecord>& predictions) {
  if (dfas.size() != sets.size()) throw std::invalid_argument("score_predictions: dfas and task sets differ in length");
  std::map<int, std::size_t> slot;
  for (std::size_t k = 0; k < sets.size(); ++k) slot[sets[k].dfa_id] = k;

  std::map<std::string, std::map<int, DfaScore>> tallies;
  std::map<std::string, int> unevaluated;
  for (const auto& p : predictions) {
    auto it = slot.find(p.dfa_id);
    if (it == slot.end()) throw MismatchedDfaSets("prediction for unknown DFA " + std::to_string(p.dfa_id));
    const TaskSet& set = sets[it->second];
    if (p.instance_idx < 0 || static_cast<std::size_t>(p.instance_idx) >= set.size())
      throw std::out_of_range("prediction for unknown instance " + std::to_string(p.instance_idx));
    auto& score = tallies[p.predictor][p.dfa_id];
    score.dfa_id = p.dfa_id;
    unevaluated[p.predictor] += 0;
    if (p.unevaluated()) {
      ++unevaluated[p.predictor];
      continue;
    }
    const auto i = static_cast<std::size_t>(p.instance_idx);
    score.add(set.config.kind == TaskKind::SequenceCompletion
                  ? score_sc(dfas[it->second], set.sc_instances[i].prefix, p.answer)
                  : score_transducer(set.transducer_instances[i].target, p.answer));
  }
  ScoreTable table;
  for (auto& [predictor, by_dfa] : tallies) {
    auto& entry = table[predictor];
    entry.unevaluated = unevaluated[predictor];
    for (auto& [id, s] : by_dfa) entry.scores.push_back(s);
  }
  return table;
}

inline std::string scores_to_jsonl(const ScoreTable& table) {
  std::vector<json> records;
  for (const auto& [predictor, entry] : table)
    for (const auto& s : entry.scores) records.push_back(score_to_json(s, predictor));
  std::string out = to_jsonl(records);
  // Per-predictor unevaluated totals ride along as one summary record each.
  for (const auto& [predictor, entry] : table)
    if (entry.unevaluated > 0)
      out += json{{"predictor", predictor}, {"unevaluated_total", entry.unevaluated}}.dump() + "\n";
  return out;
}

inline ScoreTable scores_from_jsonl(std::string_view text) {
  ScoreTable table;
  for (const auto& j : parse_jsonl(text)) {
    const auto predictor = j.at("predictor").get<std::string>();
    if (j.contains("unevaluated_total")) {
      table[predictor].unevaluated = j.at("unevaluated_total").get<int>();
      continue;
    }
    table[predictor].scores.push_back(score_from_json(j));
  }
  for (auto& [predictor, entry] : table)
    std::sort(entry.scores.begin(), entry.scores.end(), [](const DfaScore& a, const DfaScore& b) { return a.dfa_id < b.dfa_id; });
  return table;
}

struct ReportOptions {
  int resamples = 10'000;
  std::uint64_t seed = 0;
};

inline std::string format_cell(const AggregateReport& r) {
  if (r.na_flag) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f (%.1f-%.1f)", r.mean, r.ci_low, r.ci_high);
  return buf;
}

namespace detail {

inline json table_row(const AggregateReport& r, int unevaluated) {
  json row = aggregate_to_json(r);
  row["unevaluated"] = unevaluated;
  row["display"] = format_cell(r);
  row["rank"] = nullptr;
  return row;
}

/// Competition ranking ("1, 2, 2, 4") by mean descending; N/A rows are not
/// ranked.
inline void assign_ranks(json& rows) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!rows[i].at("na_flag").get<bool>()) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].at("mean").get<double>() > rows[b].at("mean").get<double>();
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const bool tied = k > 0 && rows[order[k]].at("mean") == rows[order[k - 1]].at("mean");
    rows[order[k]]["rank"] = tied ? rows[order[k - 1]].at("rank").get<int>() : static_cast<int>(k + 1);
  }
}

inline void sort_rows(json& rows) {
  std::vector<json> v(rows.begin(), rows.end());
  std::stable_sort(v.begin(), v.end(), [](const json& a, const json& b) {
    const bool ra = !a.at("rank").is_null();
    const bool rb = !b.at("rank").is_null();
    if (ra != rb) return ra;
    if (ra && a.at("rank") != b.at("rank")) return a.at("rank").get<int>() < b.at("rank").get<int>();
    return a.at("predictor").get<std::string>() < b.at("predictor").get<std::string>();
  });
  rows = json(v);
}

}  // namespace detail

/// Model predictors are named "<model>@<format>". For every model scored
/// under both basic and basic-cot, the better of the two means is the
/// headline number.
inline constexpr std::string_view kBestOfFormats[2] = {"basic", "basic-cot"};

/// results_table.json: one row per predictor (mean, CI, rank, N/A flag) and
/// best-of rows for models. Predictors with no defined accuracy at all are
/// listed under "empty".
inline json results_table(const ScoreTable& table, TaskKind kind, const ReportOptions& options = {}) {
  json rows = json::array();
  json empty = json::array();
  std::map<std::string, AggregateReport> by_predictor;
  for (const auto& [predictor, entry] : table) {
    try {
      const auto r = aggregate(entry.scores, predictor, options.resamples, options.seed);
      by_predictor[predictor] = r;
      rows.push_back(detail::table_row(r, entry.unevaluated));
    } catch (const EmptyInput&) {
      empty.push_back(predictor);
    }
  }
  detail::assign_ranks(rows);
  detail::sort_rows(rows);

  json best = json::array();
  std::map<std::string, std::vector<const AggregateReport*>> models;
  for (const auto& [predictor, r] : by_predictor) {
    const auto at = predictor.rfind('@');
    if (at == std::string::npos) continue;
    const std::string_view format = std::string_view(predictor).substr(at + 1);
    if (format == kBestOfFormats[0] || format == kBestOfFormats[1]) models[predictor.substr(0, at)].push_back(&r);
  }
  for (const auto& [model, runs] : models) {
    if (runs.size() != 2) continue;
    const AggregateReport* pick = runs[0]->mean >= runs[1]->mean ? runs[0] : runs[1];
    json row = detail::table_row(*pick, table.at(pick->predictor).unevaluated);
    row["source"] = pick->predictor;
    row["predictor"] = model + "@best";
    best.push_back(std::move(row));
  }
  detail::assign_ranks(best);
  detail::sort_rows(best);

  return json{{"task_kind", std::string(to_string(kind))},
              {"bootstrap", {{"resamples", options.resamples}, {"seed", std::to_string(options.seed)}, {"ci", "percentile-95"}}},
              {"rows", std::move(rows)},
              {"best_of_basic_and_basic_cot", std::move(best)},
              {"empty", std::move(empty)}};
}

inline std::string format_results_table(const json& results) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %-22s %5s %8s\n", "predictor", "accuracy % (95% CI)", "rank", "N/A %");
  out += line;
  auto emit = [&](const json& rows) {
    for (const auto& r : rows) {
      const std::string rank = r.at("rank").is_null() ? "-" : std::to_string(r.at("rank").get<int>());
      std::snprintf(line, sizeof line, "%-28s %-22s %5s %8.1f\n", r.at("predictor").get<std::string>().c_str(),
                    r.at("display").get<std::string>().c_str(), rank.c_str(), r.at("non_answer_rate").get<double>());
      out += line;
    }
  };
  emit(results.at("rows"));
  if (!results.at("best_of_basic_and_basic_cot").empty()) {
    out += "best of basic / basic-cot:\n";
    emit(results.at("best_of_basic_and_basic_cot"));
  }
  return out;
}

/// significance.json: paired bootstrap p-values for every predictor pair
/// (a < b by name). Pairs over different DFA sets carry an error instead.
inline json significance_table(const ScoreTable& table, const ReportOptions& options = {}) {
  json pairs = json::array();
  for (auto a = table.begin(); a != table.end(); ++a) {
    for (auto b = std::next(a); b != table.end(); ++b) {
      json entry{{"a", a->first}, {"b", b->first}};
      try {
        entry["p_value"] = round_sig10(paired_significance(a->second.scores, b->second.scores, options.resamples, options.seed));
      } catch (const Error& e) {
        entry["p_value"] = nullptr;
        entry["error"] = e.what();
      }
      pairs.push_back(std::move(entry));
    }
  }
  return json{{"test", "paired-bootstrap-two-tailed"},
              {"resamples", options.resamples},
              {"seed", std::to_string(options.seed)},
              {"pairs", std::move(pairs)}};
}

/// difficulty.json: class per DFA, class histogram and, for every predictor
/// present, its mean accuracy within each class.
inline json difficulty_report(const ScoreTable& table, int num_instances) {
  std::array<const PredictorScores*, kDifficultyRungs.size()> rungs{};
  for (std::size_t k = 0; k < kDifficultyRungs.size(); ++k) {
    auto it = table.find(std::string(kDifficultyRungs[k]));
    if (it == table.end())
      throw MissingArtifact("difficulty needs scores for " + std::string(kDifficultyRungs[k]) + " (run the baseline first)");
    rungs[k] = &it->second;
  }
  std::map<int, std::array<int, kDifficultyRungs.size()>> correct;
  for (std::size_t k = 0; k < rungs.size(); ++k)
    for (const auto& s : rungs[k]->scores) correct[s.dfa_id][k] = s.correct;

  json per_dfa = json::array();
  std::map<int, DifficultyClass> class_of;
  std::map<DifficultyClass, int> histogram;
  for (const auto& [id, counts] : correct) {
    const DifficultyClass c = difficulty_class(counts, num_instances);
    class_of[id] = c;
    ++histogram[c];
    per_dfa.push_back({{"dfa_id", id}, {"class", std::string(to_string(c))}, {"rung_correct", counts}});
  }
  json hist = json::object();
  for (DifficultyClass c : kDifficultyLadder) hist[std::string(to_string(c))] = histogram[c];

  json per_class = json::object();
  for (const auto& [predictor, entry] : table) {
    std::map<DifficultyClass, std::pair<double, int>> sums;
    for (const auto& s : entry.scores) {
      auto it = class_of.find(s.dfa_id);
      const auto acc = s.accuracy();
      if (it == class_of.end() || !acc) continue;
      sums[it->second].first += *acc * 100.0;
      sums[it->second].second += 1;
    }
    json row = json::object();
    for (DifficultyClass c : kDifficultyLadder) {
      const auto& [sum, n] = sums[c];
      row[std::string(to_string(c))] = n > 0 ? json(round_sig10(sum / n)) : json(nullptr);
    }
    per_class[predictor] = std::move(row);
  }
  return json{{"ladder", kDifficultyRungs},
              {"threshold", {{"correct", 28}, {"of", 30}}},
              {"num_instances", num_instances},
              {"histogram", std::move(hist)},
              {"per_class_accuracy", std::move(per_class)},
              {"dfas", std::move(per_dfa)}};
}

}  // namespace dfa_icl
