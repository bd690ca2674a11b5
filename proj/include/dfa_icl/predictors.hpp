#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/baselines.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/parallel.hpp"
#include "dfa_icl/rng.hpp"
#include "dfa_icl/serialization.hpp"
#include "dfa_icl/taskgen.hpp"

namespace dfa_icl {

enum class BaselineKind { Random, CommonSuffix, NgramS, BruteForceS, Null, NgramT, InfinityGram, BruteForceT };

/// A resolved baseline name. Ids are kebab-case with a task suffix:
/// random-s, common-suffix-s, 4-gram-s, brute-force-s, null-t, 4-gram-t,
/// infinity-gram-t, brute-force-t.
struct BaselineSpec {
  BaselineKind kind = BaselineKind::Random;
  int n = 0;  // n-gram order

  TaskKind task() const {
    switch (kind) {
      case BaselineKind::Random:
      case BaselineKind::CommonSuffix:
      case BaselineKind::NgramS:
      case BaselineKind::BruteForceS: return TaskKind::SequenceCompletion;
      default: return TaskKind::Transducer;
    }
  }

  std::string id() const {
    switch (kind) {
      case BaselineKind::Random: return "random-s";
      case BaselineKind::CommonSuffix: return "common-suffix-s";
      case BaselineKind::NgramS: return std::to_string(n) + "-gram-s";
      case BaselineKind::BruteForceS: return "brute-force-s";
      case BaselineKind::Null: return "null-t";
      case BaselineKind::NgramT: return std::to_string(n) + "-gram-t";
      case BaselineKind::InfinityGram: return "infinity-gram-t";
      case BaselineKind::BruteForceT: return "brute-force-t";
    }
    return "?";
  }

  bool needs_targets() const { return kind == BaselineKind::Null; }
  friend bool operator==(const BaselineSpec&, const BaselineSpec&) = default;
};

/// Resolves a baseline name for a run of the given task kind. The task
/// suffix may be omitted ("4-gram" on a transducer run is 4-gram-t); a
/// suffix that contradicts the run's task kind is rejected.
inline BaselineSpec parse_baseline(std::string_view name, TaskKind run_kind) {
  const std::string original(name);
  std::string_view stem = name;
  std::optional<TaskKind> suffix;
  if (stem.ends_with("-s")) {
    suffix = TaskKind::SequenceCompletion;
    stem.remove_suffix(2);
  } else if (stem.ends_with("-t")) {
    suffix = TaskKind::Transducer;
    stem.remove_suffix(2);
  }
  const TaskKind kind = suffix.value_or(run_kind);
  const bool sc = kind == TaskKind::SequenceCompletion;

  BaselineSpec spec;
  if (stem == "random" && sc) {
    spec.kind = BaselineKind::Random;
  } else if (stem == "common-suffix" && sc) {
    spec.kind = BaselineKind::CommonSuffix;
  } else if (stem == "brute-force") {
    spec.kind = sc ? BaselineKind::BruteForceS : BaselineKind::BruteForceT;
  } else if (stem == "null" && !sc) {
    spec.kind = BaselineKind::Null;
  } else if ((stem == "infinity-gram" || stem == "inf-gram") && !sc) {
    spec.kind = BaselineKind::InfinityGram;
  } else if (stem.ends_with("-gram")) {
    const std::string_view digits = stem.substr(0, stem.size() - 5);
    int n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || n < 1)
      throw UnknownPredictor("unknown predictor: " + original);
    spec.kind = sc ? BaselineKind::NgramS : BaselineKind::NgramT;
    spec.n = n;
  } else {
    throw UnknownPredictor("unknown predictor: " + original);
  }
  if (spec.task() != run_kind)
    throw UnknownPredictor("predictor " + original + " does not apply to " + std::string(to_string(run_kind)) + " runs");
  return spec;
}

/// Stream for the Random baseline's draws, separate from task generation.
inline constexpr std::uint64_t kRandomBaselineStream = 0x5a4d;

/// Predictions of one baseline on one task set, in instance order. Null_T
/// reads the set's own targets; every other baseline sees only what a
/// prompt would show.
inline std::vector<ParsedAnswer> predict_taskset(const BaselineSpec& spec, const TaskSet& set, std::uint64_t master_seed,
                                                 NgramTieRule tie_rule = NgramTieRule::RightmostOccurrence) {
  if (spec.task() != set.config.kind)
    throw UnknownPredictor(spec.id() + " does not apply to " + std::string(to_string(set.config.kind)) + " tasks");
  std::vector<ParsedAnswer> out;
  out.reserve(set.size());
  if (set.config.kind == TaskKind::SequenceCompletion) {
    const Rng random_root = Rng(master_seed).derive(kRandomBaselineStream).derive(static_cast<std::uint64_t>(set.dfa_id));
    for (std::size_t i = 0; i < set.sc_instances.size(); ++i) {
      const auto& in = set.sc_instances[i];
      std::string c;
      switch (spec.kind) {
        case BaselineKind::Random: {
          Rng rng = random_root.derive(i);
          c = random_s(rng);
          break;
        }
        case BaselineKind::CommonSuffix: c = common_suffix_s(in.examples); break;
        case BaselineKind::NgramS: c = ngram_s(spec.n, in.examples, in.prefix); break;
        case BaselineKind::BruteForceS: c = brute_force_s(in.examples, in.prefix); break;
        default: break;
      }
      out.push_back(ParsedAnswer::make_completion(std::move(c)));
    }
    return out;
  }

  std::vector<OutputBit> targets;
  for (const auto& in : set.transducer_instances) targets.push_back(in.target);
  const OutputBit constant = null_t(targets);
  for (const auto& in : set.transducer_instances) {
    OutputBit b;
    switch (spec.kind) {
      case BaselineKind::Null: b = constant; break;
      case BaselineKind::NgramT: b = ngram_t(spec.n, in, tie_rule); break;
      case BaselineKind::InfinityGram: b = inf_gram_t(in, tie_rule); break;
      case BaselineKind::BruteForceT: b = brute_force_t(in); break;
      default: break;
    }
    out.push_back(ParsedAnswer::make_bit(b));
  }
  return out;
}

/// Runs a baseline over every task set, `jobs` DFAs at a time. Output order
/// is (dfa order, instance order) regardless of jobs. Latency is recorded as
/// 0 so reruns are byte-identical.
inline std::vector<PredictionRecord> run_baseline(const BaselineSpec& spec, const std::vector<TaskSet>& sets,
                                                  std::uint64_t master_seed, NgramTieRule tie_rule, int jobs = 1) {
  std::vector<std::vector<ParsedAnswer>> per_set(sets.size());
  parallel_for(sets.size(), jobs, [&](std::size_t k) { per_set[k] = predict_taskset(spec, sets[k], master_seed, tie_rule); });
  std::vector<PredictionRecord> records;
  const std::string id = spec.id();
  for (std::size_t k = 0; k < sets.size(); ++k)
    for (std::size_t i = 0; i < per_set[k].size(); ++i)
      records.push_back({sets[k].dfa_id, static_cast<int>(i), id, std::move(per_set[k][i]), 0.0, {}});
  return records;
}

}  // namespace dfa_icl
