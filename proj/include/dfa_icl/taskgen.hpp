#pragma once

#include <algorithm>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/dfa.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/rng.hpp"

namespace dfa_icl {

enum class TaskKind { SequenceCompletion, Transducer };

inline std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::SequenceCompletion ? "sc" : "transducer";
}

inline TaskKind task_kind_from_string(std::string_view s) {
  if (s == "sc" || s == "sequence-completion") return TaskKind::SequenceCompletion;
  if (s == "transducer" || s == "t") return TaskKind::Transducer;
  throw std::invalid_argument("unknown task kind: " + std::string(s));
}

struct TaskConfig {
  TaskKind kind = TaskKind::SequenceCompletion;
  int num_instances = 30;
  // Sequence completion.
  int num_examples = 30;
  int example_length = 10;
  int prefix_length = 5;
  int completion_length = 5;
  // Transducer: symbols per trace (the last output is the target).
  int sequence_length = 30;
  // Per sampled object (one example, one prefix/completion pair).
  int max_rejections = 50;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct SequenceCompletionInstance {
  std::vector<std::string> examples;
  std::string prefix;

  friend bool operator==(const SequenceCompletionInstance&, const SequenceCompletionInstance&) = default;
};

struct TransducerInstance {
  std::string symbols;
  std::vector<OutputBit> revealed;
  OutputBit target;

  friend bool operator==(const TransducerInstance&, const TransducerInstance&) = default;
};

/// Instances for one DFA. Exactly one of the two instance vectors is used,
/// selected by config.kind.
struct TaskSet {
  int dfa_id = 0;
  TaskConfig config;
  std::vector<SequenceCompletionInstance> sc_instances;
  std::vector<TransducerInstance> transducer_instances;

  std::size_t size() const {
    return config.kind == TaskKind::SequenceCompletion ? sc_instances.size() : transducer_instances.size();
  }
  friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

inline std::string random_symbols(Rng& rng, int length) {
  std::string s(static_cast<std::size_t>(length), 'a');
  for (char& c : s) c = Symbol(static_cast<int>(rng.below(kAlphabetSize))).to_char();
  return s;
}

/// Uniform proposal from {a,b,c}^length, rejected until the DFA accepts.
/// `rejected`, when given, receives the number of rejected proposals.
inline std::string sample_example(const Dfa& dfa, Rng& rng, int length = 10, int max_rejections = 50,
                                  int* rejected = nullptr) {
  for (int rejections = 0;;) {
    std::string s = random_symbols(rng, length);
    if (rejected) *rejected = rejections;
    if (accepts(dfa, s)) return s;
    if (++rejections >= max_rejections) throw SamplingExhausted(rejections, "sample_example");
  }
}

inline bool is_prefix_of_any(std::string_view prefix, const std::vector<std::string>& examples) {
  return std::any_of(examples.begin(), examples.end(),
                     [&](const std::string& e) { return std::string_view(e).starts_with(prefix); });
}

/// Samples (prefix, completion) jointly and keeps only the prefix. The pair is
/// rejected when prefix+completion is not accepted or the prefix starts one of
/// the examples.
inline std::string sample_prefix(const Dfa& dfa, const std::vector<std::string>& examples, Rng& rng,
                                 int prefix_length = 5, int completion_length = 5, int max_rejections = 50) {
  for (int rejections = 0;;) {
    std::string prefix = random_symbols(rng, prefix_length);
    std::string completion = random_symbols(rng, completion_length);
    if (accepts(dfa, prefix + completion) && !is_prefix_of_any(prefix, examples)) return prefix;
    if (++rejections >= max_rejections) throw SamplingExhausted(rejections, "sample_prefix");
  }
}

inline SequenceCompletionInstance sample_sc_instance(const Dfa& dfa, Rng& rng, const TaskConfig& config) {
  SequenceCompletionInstance instance;
  instance.examples.reserve(static_cast<std::size_t>(config.num_examples));
  for (int i = 0; i < config.num_examples; ++i)
    instance.examples.push_back(sample_example(dfa, rng, config.example_length, config.max_rejections));
  instance.prefix =
      sample_prefix(dfa, instance.examples, rng, config.prefix_length, config.completion_length, config.max_rejections);
  return instance;
}

inline constexpr int kMaxInstanceAttempts = 10'000;

/// Pilot-then-sample procedure. A pilot failure rejects the DFA; after a
/// successful pilot, a failing instance is redrawn from its own stream.
/// The pilot is drawn from rng.derive(kPilotStream) and discarded.
inline TaskSet sample_sc_taskset(const Dfa& dfa, const Rng& rng, TaskConfig config = {}) {
  config.kind = TaskKind::SequenceCompletion;
  try {
    Rng pilot = rng.derive(kPilotStream);
    (void)sample_sc_instance(dfa, pilot, config);
  } catch (const SamplingExhausted& e) {
    throw DfaRejected(std::string("pilot instance failed: ") + e.what());
  }

  TaskSet set;
  set.config = config;
  set.sc_instances.reserve(static_cast<std::size_t>(config.num_instances));
  for (int i = 0; i < config.num_instances; ++i) {
    Rng stream = rng.derive(static_cast<std::uint64_t>(i));
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxInstanceAttempts) throw SamplingDefect("sample_sc_taskset: instance resampling did not terminate");
      try {
        set.sc_instances.push_back(sample_sc_instance(dfa, stream, config));
        break;
      } catch (const SamplingExhausted&) {
      }
    }
  }
  return set;
}

inline TransducerInstance make_transducer_instance(const Dfa& dfa, std::string symbols) {
  if (symbols.empty()) throw std::invalid_argument("transducer instance needs at least one symbol");
  TransducerTrace trace = transduce(dfa, symbols);
  TransducerInstance instance;
  instance.target = trace.outputs.back();
  trace.outputs.pop_back();
  instance.revealed = std::move(trace.outputs);
  instance.symbols = std::move(symbols);
  return instance;
}

/// Rejects the DFA when all targets agree.
inline TaskSet sample_transducer_taskset(const Dfa& dfa, const Rng& rng, TaskConfig config = {}) {
  config.kind = TaskKind::Transducer;
  TaskSet set;
  set.config = config;
  set.transducer_instances.reserve(static_cast<std::size_t>(config.num_instances));
  int positives = 0;
  for (int i = 0; i < config.num_instances; ++i) {
    Rng stream = rng.derive(static_cast<std::uint64_t>(i));
    set.transducer_instances.push_back(make_transducer_instance(dfa, random_symbols(stream, config.sequence_length)));
    positives += set.transducer_instances.back().target.as_int();
  }
  if (positives == 0 || positives == config.num_instances)
    throw DfaRejected("all transducer targets equal " + std::to_string(positives == 0 ? 0 : 1));
  return set;
}

inline TaskSet sample_taskset(const Dfa& dfa, const Rng& rng, const TaskConfig& config) {
  return config.kind == TaskKind::SequenceCompletion ? sample_sc_taskset(dfa, rng, config)
                                                     : sample_transducer_taskset(dfa, rng, config);
}

/// One benchmark slot: a surviving DFA plus its task set.
struct BenchmarkEntry {
  int dfa_id = 0;
  Dfa dfa;
  int attempt = 0;  // index of the DFA attempt that survived
  TaskSet tasks;
};

inline constexpr int kMaxDfaAttempts = 10'000;

/// Fills slot dfa_id of a benchmark. Rejected DFAs are redrawn from the next
/// attempt stream, so every slot ends up with exactly one surviving DFA.
inline BenchmarkEntry generate_entry(std::uint64_t master_seed, int dfa_id, const TaskConfig& config,
                                     int num_states = 3) {
  const Rng slot = Rng(master_seed).derive(static_cast<std::uint64_t>(dfa_id));
  for (int attempt = 0; attempt < kMaxDfaAttempts; ++attempt) {
    const Rng attempt_stream = slot.derive(static_cast<std::uint64_t>(attempt));
    Rng dfa_stream = attempt_stream.derive(kDfaStream);
    Dfa dfa = sample_dfa(dfa_stream, num_states);
    try {
      TaskSet tasks = sample_taskset(dfa, attempt_stream.derive(kTaskStream), config);
      tasks.dfa_id = dfa_id;
      return BenchmarkEntry{dfa_id, std::move(dfa), attempt, std::move(tasks)};
    } catch (const DfaRejected&) {
    }
  }
  throw SamplingDefect("generate_entry: no DFA survived task sampling");
}

// --- regex tokenization control -------------------------------------------

inline constexpr std::string_view kRegexControlPattern = "^ab(abc)+$";

struct RegexControlItem {
  std::string text;
  bool label = false;

  friend bool operator==(const RegexControlItem&, const RegexControlItem&) = default;
};

inline bool matches_regex_control(std::string_view s) {
  static const std::regex pattern("ab(abc)+");
  return std::regex_match(s.begin(), s.end(), pattern);
}

/// Valid strings ab(abc)^k for k in 1..5 (lengths 5..17), each mutated at one
/// position with probability 1/2. Labels are recomputed by matching.
inline std::vector<RegexControlItem> sample_regex_control(Rng& rng, int count = 100) {
  std::vector<RegexControlItem> items;
  items.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const int repeats = 1 + static_cast<int>(rng.below(5));
    std::string text = "ab";
    for (int k = 0; k < repeats; ++k) text += "abc";
    if (rng.coin()) {
      const auto pos = static_cast<std::size_t>(rng.below(text.size()));
      const int old = text[pos] - 'a';
      const int shift = 1 + static_cast<int>(rng.below(kAlphabetSize - 1));
      text[pos] = static_cast<char>('a' + (old + shift) % kAlphabetSize);
    }
    const bool label = matches_regex_control(text);
    items.push_back({std::move(text), label});
  }
  return items;
}

}  // namespace dfa_icl
