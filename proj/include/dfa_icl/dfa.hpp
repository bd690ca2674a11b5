#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/errors.hpp"
#include "dfa_icl/rng.hpp"

namespace dfa_icl {

inline constexpr int kAlphabetSize = 3;

/// Input letter a, b or c. Stored as its index 0..2.
class Symbol {
 public:
  constexpr Symbol() = default;
  constexpr explicit Symbol(int index) : index_(static_cast<std::uint8_t>(index)) {
    if (index < 0 || index >= kAlphabetSize) throw std::out_of_range("symbol index out of range");
  }

  static constexpr Symbol from_char(char c) {
    if (c < 'a' || c > 'c') throw std::invalid_argument(std::string("not an input symbol: '") + c + "'");
    return Symbol(c - 'a');
  }

  constexpr int index() const noexcept { return index_; }
  constexpr char to_char() const noexcept { return static_cast<char>('a' + index_); }
  friend constexpr bool operator==(Symbol, Symbol) = default;

 private:
  std::uint8_t index_ = 0;
};

constexpr bool is_symbol_char(char c) noexcept { return c >= 'a' && c <= 'c'; }

/// Strings over the input alphabet are kept as plain text ("abcab").
inline bool is_symbol_string(std::string_view s) noexcept {
  return std::all_of(s.begin(), s.end(), is_symbol_char);
}

/// Accept (1) / reject (0) bit emitted after each step.
class OutputBit {
 public:
  constexpr OutputBit() = default;
  constexpr explicit OutputBit(bool accepting) : value_(accepting) {}
  static constexpr OutputBit from_char(char c) {
    if (c != '0' && c != '1') throw std::invalid_argument(std::string("not an output bit: '") + c + "'");
    return OutputBit(c == '1');
  }
  constexpr bool value() const noexcept { return value_; }
  constexpr int as_int() const noexcept { return value_ ? 1 : 0; }
  constexpr char to_char() const noexcept { return value_ ? '1' : '0'; }
  friend constexpr bool operator==(OutputBit, OutputBit) = default;

 private:
  bool value_ = false;
};

using StateIndex = int;

/// Complete DFA over {a, b, c}. Transitions are stored row-major by
/// (state, symbol), which is also the canonical serialization order.
class Dfa {
 public:
  Dfa() = default;

  Dfa(int num_states, StateIndex start, std::vector<StateIndex> transitions, std::vector<bool> accept)
      : num_states_(num_states), start_(start), transitions_(std::move(transitions)), accept_(std::move(accept)) {
    if (num_states_ < 1) throw std::invalid_argument("DFA needs at least one state");
    if (start_ < 0 || start_ >= num_states_) throw std::invalid_argument("start state out of range");
    if (transitions_.size() != static_cast<std::size_t>(num_states_ * kAlphabetSize))
      throw std::invalid_argument("transition table must have num_states * 3 entries");
    for (StateIndex t : transitions_)
      if (t < 0 || t >= num_states_) throw std::invalid_argument("transition target out of range");
    if (accept_.size() != static_cast<std::size_t>(num_states_))
      throw std::invalid_argument("accept vector must have num_states entries");
  }

  int num_states() const noexcept { return num_states_; }
  StateIndex start() const noexcept { return start_; }
  const std::vector<StateIndex>& transitions() const noexcept { return transitions_; }
  const std::vector<bool>& accept() const noexcept { return accept_; }

  bool accepting(StateIndex state) const {
    check_state(state);
    return accept_[state];
  }

  StateIndex step(StateIndex state, Symbol sym) const {
    check_state(state);
    return transitions_[state * kAlphabetSize + sym.index()];
  }

  int accept_count() const { return static_cast<int>(std::count(accept_.begin(), accept_.end(), true)); }

  friend bool operator==(const Dfa&, const Dfa&) = default;

 private:
  void check_state(StateIndex state) const {
    if (state < 0 || state >= num_states_) throw std::out_of_range("state index out of range");
  }

  int num_states_ = 0;
  StateIndex start_ = 0;
  std::vector<StateIndex> transitions_;
  std::vector<bool> accept_;
};

inline StateIndex step(const Dfa& dfa, StateIndex state, Symbol sym) { return dfa.step(state, sym); }

inline StateIndex run(const Dfa& dfa, std::string_view s, StateIndex from) {
  StateIndex state = from;
  for (char c : s) state = dfa.step(state, Symbol::from_char(c));
  return state;
}

inline StateIndex run(const Dfa& dfa, std::string_view s) { return run(dfa, s, dfa.start()); }

inline bool accepts(const Dfa& dfa, std::string_view s) { return dfa.accepting(run(dfa, s)); }

struct TransducerTrace {
  std::string symbols;
  std::vector<OutputBit> outputs;

  friend bool operator==(const TransducerTrace&, const TransducerTrace&) = default;
};

inline TransducerTrace transduce(const Dfa& dfa, std::string_view s) {
  TransducerTrace trace{std::string(s), {}};
  trace.outputs.reserve(s.size());
  StateIndex state = dfa.start();
  for (char c : s) {
    state = dfa.step(state, Symbol::from_char(c));
    trace.outputs.emplace_back(dfa.accepting(state));
  }
  return trace;
}

inline std::set<StateIndex> reachable_states(const Dfa& dfa) {
  std::set<StateIndex> seen{dfa.start()};
  std::vector<StateIndex> frontier{dfa.start()};
  while (!frontier.empty()) {
    StateIndex s = frontier.back();
    frontier.pop_back();
    for (int sym = 0; sym < kAlphabetSize; ++sym) {
      StateIndex t = dfa.step(s, Symbol(sym));
      if (seen.insert(t).second) frontier.push_back(t);
    }
  }
  return seen;
}

/// Validity rule for benchmark DFAs: every state reachable from start, and at
/// least one accepting and one rejecting state.
inline bool is_valid_benchmark_dfa(const Dfa& dfa) {
  const int accepting = dfa.accept_count();
  return accepting >= 1 && accepting <= dfa.num_states() - 1 &&
         static_cast<int>(reachable_states(dfa).size()) == dfa.num_states();
}

inline constexpr int kMaxDfaSamplingAttempts = 10'000;

/// Rejection sampler: uniform start, uniform targets, fair-coin accept bits;
/// redraws the whole DFA until it passes is_valid_benchmark_dfa.
inline Dfa sample_dfa(Rng& rng, int num_states = 3) {
  if (num_states < 2) throw std::invalid_argument("sample_dfa needs at least 2 states");
  for (int attempt = 0; attempt < kMaxDfaSamplingAttempts; ++attempt) {
    const auto start = static_cast<StateIndex>(rng.below(num_states));
    std::vector<StateIndex> transitions(static_cast<std::size_t>(num_states * kAlphabetSize));
    for (auto& t : transitions) t = static_cast<StateIndex>(rng.below(num_states));
    std::vector<bool> accept(static_cast<std::size_t>(num_states));
    for (std::size_t s = 0; s < accept.size(); ++s) accept[s] = rng.coin();
    Dfa dfa(num_states, start, std::move(transitions), std::move(accept));
    if (is_valid_benchmark_dfa(dfa)) return dfa;
  }
  throw SamplingDefect("sample_dfa: no valid DFA after " + std::to_string(kMaxDfaSamplingAttempts) + " attempts");
}

/// Canonical encoding: start, transition targets row-major, accept bits.
inline std::vector<int> canonical_encoding(const Dfa& dfa) {
  std::vector<int> code;
  code.reserve(1 + dfa.transitions().size() + dfa.accept().size());
  code.push_back(dfa.start());
  code.insert(code.end(), dfa.transitions().begin(), dfa.transitions().end());
  for (bool a : dfa.accept()) code.push_back(a ? 1 : 0);
  return code;
}

inline std::string canonical_string(const Dfa& dfa) {
  std::string out;
  for (int v : canonical_encoding(dfa)) out += static_cast<char>('0' + v);
  return out;
}

}  // namespace dfa_icl
