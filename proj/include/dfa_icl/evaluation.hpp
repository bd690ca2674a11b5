#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/dfa.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/prompts.hpp"
#include "dfa_icl/rng.hpp"

namespace dfa_icl {

enum class Outcome { Correct, Incorrect, NonAnswer };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Correct: return "correct";
    case Outcome::Incorrect: return "incorrect";
    case Outcome::NonAnswer: return "non-answer";
  }
  return "?";
}

/// Correct iff the answer is a 1..5 letter completion the DFA accepts after
/// the prefix.
inline Outcome score_sc(const Dfa& dfa, std::string_view prefix, const ParsedAnswer& answer) {
  if (answer.is_non_answer()) return Outcome::NonAnswer;
  if (!answer.is_completion()) return Outcome::Incorrect;
  const auto& c = answer.completion;
  if (c.empty() || c.size() > 5 || !is_symbol_string(c)) return Outcome::Incorrect;
  return accepts(dfa, std::string(prefix) + c) ? Outcome::Correct : Outcome::Incorrect;
}

inline Outcome score_transducer(OutputBit target, const ParsedAnswer& answer) {
  if (answer.is_non_answer()) return Outcome::NonAnswer;
  if (!answer.is_bit()) return Outcome::Incorrect;
  return answer.bit == target ? Outcome::Correct : Outcome::Incorrect;
}

/// Per-DFA tally. Non-answers are excluded from the accuracy denominator, so
/// 25 correct, 1 incorrect and 4 non-answers is 25/26.
struct DfaScore {
  int dfa_id = 0;
  int correct = 0;
  int incorrect = 0;
  int non_answers = 0;

  void add(Outcome o) {
    switch (o) {
      case Outcome::Correct: ++correct; break;
      case Outcome::Incorrect: ++incorrect; break;
      case Outcome::NonAnswer: ++non_answers; break;
    }
  }
  int evaluated() const { return correct + incorrect + non_answers; }
  std::optional<double> accuracy() const {
    if (correct + incorrect == 0) return std::nullopt;
    return static_cast<double>(correct) / (correct + incorrect);
  }
  friend bool operator==(const DfaScore&, const DfaScore&) = default;
};

inline constexpr double kNonAnswerFlagPercent = 25.0;

struct AggregateReport {
  std::string predictor;
  double mean = 0;  // percent
  double ci_low = 0;
  double ci_high = 0;
  int n_dfas = 0;  // DFAs with a defined accuracy
  double non_answer_rate = 0;  // percent of evaluated instances
  bool na_flag = false;
};

namespace detail {

/// Nearest-rank percentile of an ascending sample (no interpolation, so the
/// endpoints are always attainable resample means).
inline double percentile(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank, sorted.size()) - 1];
}

/// Means of `resamples` bootstrap resamples of `values`. Resample r draws
/// from Rng(seed).derive(r), so any partitioning of r gives the same result.
inline std::vector<double> bootstrap_means(const std::vector<double>& values, int resamples, std::uint64_t seed) {
  std::vector<double> means(static_cast<std::size_t>(resamples));
  const Rng master(seed);
  for (int r = 0; r < resamples; ++r) {
    Rng rng = master.derive(static_cast<std::uint64_t>(r));
    double sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.below(values.size())];
    means[static_cast<std::size_t>(r)] = sum / static_cast<double>(values.size());
  }
  return means;
}

}  // namespace detail

/// Mean per-DFA accuracy with a 95% percentile bootstrap interval over DFAs.
/// DFAs whose instances were all non-answers are left out of the mean but
/// counted in the non-answer rate.
inline AggregateReport aggregate(const std::vector<DfaScore>& scores, std::string predictor = {},
                                 int bootstrap_resamples = 10'000, std::uint64_t seed = 0) {
  if (bootstrap_resamples < 1) throw std::invalid_argument("aggregate needs at least one resample");
  std::vector<double> accuracies;
  long long evaluated = 0;
  long long non_answers = 0;
  for (const auto& s : scores) {
    evaluated += s.evaluated();
    non_answers += s.non_answers;
    if (auto a = s.accuracy()) accuracies.push_back(*a * 100.0);
  }
  if (accuracies.empty()) throw EmptyInput("aggregate: no DFA with a defined accuracy");

  AggregateReport report;
  report.predictor = std::move(predictor);
  report.n_dfas = static_cast<int>(accuracies.size());
  double sum = 0;
  for (double a : accuracies) sum += a;
  report.mean = sum / static_cast<double>(accuracies.size());
  auto means = detail::bootstrap_means(accuracies, bootstrap_resamples, seed);
  std::sort(means.begin(), means.end());
  report.ci_low = std::min(detail::percentile(means, 0.025), report.mean);
  report.ci_high = std::max(detail::percentile(means, 0.975), report.mean);
  report.non_answer_rate = evaluated > 0 ? 100.0 * static_cast<double>(non_answers) / static_cast<double>(evaluated) : 0;
  report.na_flag = report.non_answer_rate >= kNonAnswerFlagPercent;
  return report;
}

/// Two-tailed paired bootstrap over per-DFA accuracy differences:
/// p = 2 * min(P(mean* <= 0), P(mean* >= 0)), capped at 1. DFAs where either
/// side has no defined accuracy are dropped from the pairing.
inline double paired_significance(const std::vector<DfaScore>& a, const std::vector<DfaScore>& b,
                                  int resamples = 10'000, std::uint64_t seed = 0) {
  if (resamples < 1) throw std::invalid_argument("paired_significance needs at least one resample");
  std::map<int, const DfaScore*> by_id;
  for (const auto& s : a) by_id[s.dfa_id] = &s;
  if (by_id.size() != a.size() || a.size() != b.size())
    throw MismatchedDfaSets("score vectors cover different DFA sets");
  std::vector<double> diffs;
  diffs.reserve(a.size());
  // Pair in ascending dfa_id order so argument order cannot change the draw.
  std::map<int, const DfaScore*> b_by_id;
  for (const auto& s : b) b_by_id[s.dfa_id] = &s;
  for (const auto& [id, sa] : by_id) {
    auto it = b_by_id.find(id);
    if (it == b_by_id.end()) throw MismatchedDfaSets("DFA " + std::to_string(id) + " missing from second vector");
    const auto acc_a = sa->accuracy();
    const auto acc_b = it->second->accuracy();
    if (acc_a && acc_b) diffs.push_back(*acc_a - *acc_b);
  }
  if (diffs.empty()) throw EmptyInput("paired_significance: no DFA scored by both predictors");

  const auto means = detail::bootstrap_means(diffs, resamples, seed);
  long long at_most_zero = 0;
  long long at_least_zero = 0;
  for (double m : means) {
    if (m <= 0) ++at_most_zero;
    if (m >= 0) ++at_least_zero;
  }
  const double p = 2.0 * static_cast<double>(std::min(at_most_zero, at_least_zero)) / resamples;
  return std::min(1.0, p);
}

// --- difficulty ladder -----------------------------------------------------

enum class DifficultyClass { Null, Gram2, Gram3, Gram4, Gram5, BruteForce, Unsolved };

inline constexpr std::array<DifficultyClass, 7> kDifficultyLadder{
    DifficultyClass::Null,  DifficultyClass::Gram2,      DifficultyClass::Gram3,   DifficultyClass::Gram4,
    DifficultyClass::Gram5, DifficultyClass::BruteForce, DifficultyClass::Unsolved};

inline std::string_view to_string(DifficultyClass c) {
  switch (c) {
    case DifficultyClass::Null: return "Null";
    case DifficultyClass::Gram2: return "2-Gram";
    case DifficultyClass::Gram3: return "3-Gram";
    case DifficultyClass::Gram4: return "4-Gram";
    case DifficultyClass::Gram5: return "5-Gram";
    case DifficultyClass::BruteForce: return "BruteForce";
    case DifficultyClass::Unsolved: return "Unsolved";
  }
  return "?";
}

/// Predictor ids of the six rungs, in ladder order.
inline constexpr std::array<std::string_view, 6> kDifficultyRungs{"null-t", "2-gram-t", "3-gram-t",
                                                                  "4-gram-t", "5-gram-t", "brute-force-t"};

/// First rung whose correct count reaches 28 of 30 (the same fraction for
/// other instance counts); Unsolved if none does.
inline DifficultyClass difficulty_class(const std::array<int, 6>& rung_correct, int num_instances = 30) {
  for (std::size_t k = 0; k < rung_correct.size(); ++k)
    if (rung_correct[k] * 30 >= 28 * num_instances) return kDifficultyLadder[k];
  return DifficultyClass::Unsolved;
}

}  // namespace dfa_icl
