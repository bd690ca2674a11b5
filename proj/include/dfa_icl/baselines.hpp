#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/dfa.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/rng.hpp"
#include "dfa_icl/taskgen.hpp"

namespace dfa_icl {

inline constexpr int kMaxCompletionLength = 5;

// --- sequence completion ---------------------------------------------------

inline std::string random_s(Rng& rng) { return random_symbols(rng, kMaxCompletionLength); }

namespace detail {

/// Plurality winner, ties to the lexicographically smallest candidate.
/// std::map iterates in lexicographic order, so the first maximum wins.
inline std::string plurality(const std::map<std::string, long long>& votes) {
  std::string best;
  long long best_votes = -1;
  for (const auto& [candidate, n] : votes) {
    if (n > best_votes) {
      best = candidate;
      best_votes = n;
    }
  }
  return best;
}

}  // namespace detail

/// Completion maximizing (#examples ending in it) * length. Ignores the prefix.
inline std::string common_suffix_s(const std::vector<std::string>& examples) {
  if (examples.empty()) throw std::invalid_argument("common_suffix_s needs at least one example");
  std::map<std::string, long long> counts;
  for (const auto& e : examples) {
    const int max_len = std::min<int>(kMaxCompletionLength, static_cast<int>(e.size()));
    for (int len = 1; len <= max_len; ++len) ++counts[e.substr(e.size() - len)];
  }
  std::string best;
  long long best_score = -1;
  for (const auto& [candidate, n] : counts) {
    const long long score = n * static_cast<long long>(candidate.size());
    if (score > best_score) {
      best = candidate;
      best_score = score;
    }
  }
  return best;
}

/// Backoff n-gram completion. The context is the last n-1 prefix characters;
/// each occurrence of it inside an example that leaves 1..5 trailing
/// characters votes for those characters. n = 1 votes with every terminal
/// suffix of length 1..5.
inline std::string ngram_s(int n, const std::vector<std::string>& examples, std::string_view prefix) {
  if (n < 1) throw std::invalid_argument("ngram_s needs n >= 1");
  for (int order = n; order >= 1; --order) {
    const std::size_t ctx_len = std::min<std::size_t>(static_cast<std::size_t>(order - 1), prefix.size());
    const std::string_view context = prefix.substr(prefix.size() - ctx_len);
    std::map<std::string, long long> votes;
    for (const auto& e : examples) {
      const std::size_t len = e.size();
      for (std::size_t rest = 1; rest <= kMaxCompletionLength && rest <= len; ++rest) {
        const std::size_t end = len - rest;
        if (end < ctx_len) break;
        if (std::string_view(e).substr(end - ctx_len, ctx_len) == context) ++votes[e.substr(end)];
      }
    }
    if (!votes.empty()) return detail::plurality(votes);
  }
  throw std::invalid_argument("ngram_s: no example leaves a completion of length 1..5");
}

// --- transducer ------------------------------------------------------------

/// Interleaved trace s1 o1 s2 o2 ... s(L-1) o(L-1) sL.
inline std::string interleave(const TransducerInstance& instance) {
  if (instance.revealed.size() + 1 != instance.symbols.size())
    throw std::invalid_argument("transducer instance needs exactly one unrevealed output");
  std::string s;
  s.reserve(instance.symbols.size() * 2);
  for (std::size_t i = 0; i < instance.revealed.size(); ++i) {
    s += instance.symbols[i];
    s += instance.revealed[i].to_char();
  }
  s += instance.symbols.back();
  return s;
}

/// The constant prediction that scores best on these targets; ties predict 1.
inline OutputBit null_t(const std::vector<OutputBit>& targets) {
  std::size_t ones = 0;
  for (OutputBit t : targets) ones += static_cast<std::size_t>(t.as_int());
  return OutputBit(2 * ones >= targets.size());
}

/// What a tied n-gram vote falls back to.
enum class NgramTieRule {
  RightmostOccurrence,  // follower of the most recent matching occurrence
  LastRevealedOutput,   // the last revealed output bit
};

inline std::string_view to_string(NgramTieRule rule) {
  return rule == NgramTieRule::RightmostOccurrence ? "rightmost-occurrence" : "last-revealed-output";
}

namespace detail {

struct FollowerVote {
  int zeros = 0;
  int ones = 0;
  char rightmost = 0;  // follower of the latest kept occurrence, 0 if none
  bool empty() const { return zeros + ones == 0; }
};

/// Followers of every earlier occurrence of the trailing ctx_len characters.
/// Only output characters are kept; the current position has no follower and
/// is excluded automatically.
inline FollowerVote follower_vote(std::string_view trace, std::size_t ctx_len) {
  FollowerVote vote;
  const std::string_view context = trace.substr(trace.size() - ctx_len);
  for (std::size_t pos = 0; pos + ctx_len < trace.size(); ++pos) {
    if (trace.substr(pos, ctx_len) != context) continue;
    const char follower = trace[pos + ctx_len];
    if (follower != '0' && follower != '1') continue;
    (follower == '1' ? vote.ones : vote.zeros) += 1;
    vote.rightmost = follower;
  }
  return vote;
}

inline OutputBit resolve(const FollowerVote& vote, NgramTieRule rule, const TransducerInstance& instance) {
  if (vote.ones != vote.zeros) return OutputBit(vote.ones > vote.zeros);
  if (rule == NgramTieRule::LastRevealedOutput && !instance.revealed.empty()) return instance.revealed.back();
  return OutputBit::from_char(vote.rightmost);
}

inline OutputBit base_case(const TransducerInstance& instance) {
  int ones = 0;
  for (OutputBit b : instance.revealed) ones += b.as_int();
  const int zeros = static_cast<int>(instance.revealed.size()) - ones;
  if (ones != zeros) return OutputBit(ones > zeros);
  return instance.revealed.empty() ? OutputBit(true) : instance.revealed.back();
}

}  // namespace detail

/// Backoff n-gram over the interleaved trace.
inline OutputBit ngram_t(int n, const TransducerInstance& instance,
                         NgramTieRule tie_rule = NgramTieRule::RightmostOccurrence) {
  if (n < 1) throw std::invalid_argument("ngram_t needs n >= 1");
  const std::string trace = interleave(instance);
  for (int order = n; order >= 2; --order) {
    const std::size_t ctx_len = std::min<std::size_t>(static_cast<std::size_t>(order - 1), trace.size());
    const auto vote = detail::follower_vote(trace, ctx_len);
    if (!vote.empty()) return detail::resolve(vote, tie_rule, instance);
  }
  return detail::base_case(instance);
}

/// Length of the longest trailing substring that also occurs earlier with an
/// output character after it.
inline std::size_t longest_earlier_match(const TransducerInstance& instance) {
  const std::string trace = interleave(instance);
  std::size_t best = 0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (detail::follower_vote(trace, k).empty()) break;
    best = k;
  }
  return best;
}

/// n-gram with n chosen as one more than the longest earlier match, so the
/// vote uses only occurrences of the longest matching context.
inline OutputBit inf_gram_t(const TransducerInstance& instance,
                            NgramTieRule tie_rule = NgramTieRule::RightmostOccurrence) {
  const std::size_t k = longest_earlier_match(instance);
  return ngram_t(static_cast<int>(k) + 1, instance, tie_rule);
}

// --- brute force -----------------------------------------------------------
//
// Both oracles range over all 3 * 3^9 * 2^3 = 472,392 raw 3-state DFAs. The
// accept set is factored out: for a fixed (start, transition table) the
// evidence constrains only the accept bits of visited states, so the number
// of consistent accept sets, and how many of them accept a candidate, is a
// closed-form power of two. Vote totals equal per-DFA enumeration exactly.

class BruteForceTables {
 public:
  static constexpr int kStates = 3;
  static constexpr int kTables = 19683;  // 3^9
  static constexpr int kCompletions = 243;  // 3^5

  static const BruteForceTables& instance() {
    static const BruteForceTables tables;
    return tables;
  }

  std::uint8_t next(int table, int state, int symbol) const { return next_[table * 9 + state * 3 + symbol]; }
  std::uint8_t reachable_mask(int table, int start) const { return reach_[table * 3 + start]; }

  /// End state after reading completion number `c` (base-3, first letter most
  /// significant) from `state`.
  std::uint8_t completion_end(int table, int state, int c) const {
    return completion_end_[(static_cast<std::size_t>(table) * 3 + state) * kCompletions + c];
  }

  int run(int table, int state, std::string_view s) const {
    for (char ch : s) state = next(table, state, ch - 'a');
    return state;
  }

 private:
  BruteForceTables() : next_(kTables * 9), reach_(kTables * 3), completion_end_(std::size_t{kTables} * 3 * kCompletions) {
    for (int t = 0; t < kTables; ++t) {
      int code = t;
      for (int k = 8; k >= 0; --k) {
        next_[t * 9 + k] = static_cast<std::uint8_t>(code % 3);
        code /= 3;
      }
      for (int start = 0; start < 3; ++start) {
        unsigned mask = 1U << start;
        for (int round = 0; round < 3; ++round)
          for (int q = 0; q < 3; ++q)
            if (mask & (1U << q))
              for (int sym = 0; sym < 3; ++sym) mask |= 1U << next(t, q, sym);
        reach_[t * 3 + start] = static_cast<std::uint8_t>(mask);
      }
      for (int q = 0; q < 3; ++q) {
        std::uint8_t* out = &completion_end_[(static_cast<std::size_t>(t) * 3 + q) * kCompletions];
        for (int c = 0; c < kCompletions; ++c) {
          int state = q;
          for (int pos = 4, code2 = c, div = 81; pos >= 0; --pos, div /= 3) {
            state = next(t, state, (code2 / div) % 3);
          }
          out[c] = static_cast<std::uint8_t>(state);
        }
      }
    }
  }

  std::vector<std::uint8_t> next_;
  std::vector<std::uint8_t> reach_;
  std::vector<std::uint8_t> completion_end_;
};

/// Completion number -> text ("aaaaa" is 0, "ccccc" is 242).
inline std::string completion_text(int c) {
  std::string s(5, 'a');
  for (int pos = 4; pos >= 0; --pos, c /= 3) s[pos] = static_cast<char>('a' + c % 3);
  return s;
}

struct BruteForceSResult {
  std::string completion;
  std::uint64_t consistent_dfas = 0;
  std::array<std::uint64_t, BruteForceTables::kCompletions> accept_counts{};
};

/// Counts, over every raw 3-state DFA accepting all examples, how many accept
/// prefix + c for each length-5 completion c; returns the argmax (ties to the
/// lexicographically smallest completion).
inline BruteForceSResult brute_force_s_detailed(const std::vector<std::string>& examples, std::string_view prefix) {
  for (const auto& e : examples)
    if (!is_symbol_string(e)) throw std::invalid_argument("example contains a non-symbol character");
  if (!is_symbol_string(prefix)) throw std::invalid_argument("prefix contains a non-symbol character");
  const auto& bf = BruteForceTables::instance();
  BruteForceSResult result;
  std::uint64_t everywhere = 0;  // consistent DFAs that accept every completion
  for (int t = 0; t < BruteForceTables::kTables; ++t) {
    for (int start = 0; start < 3; ++start) {
      const unsigned reach = bf.reachable_mask(t, start);
      unsigned required = 0;  // states examples end in: must accept
      for (const auto& e : examples) {
        required |= 1U << bf.run(t, start, e);
        if (required == reach) break;
      }
      const int free_bits = 3 - std::popcount(required);
      const std::uint64_t all = std::uint64_t{1} << free_bits;
      result.consistent_dfas += all;
      if (required == reach) {
        // Completion end states are reachable, hence required to accept.
        everywhere += all;
        continue;
      }
      const int after_prefix = bf.run(t, start, prefix);
      for (int c = 0; c < BruteForceTables::kCompletions; ++c) {
        const int end = bf.completion_end(t, after_prefix, c);
        result.accept_counts[c] += (required >> end) & 1U ? all : all / 2;
      }
    }
  }
  if (result.consistent_dfas == 0) throw NoConsistentDfa("no 3-state DFA accepts every example");
  int best = 0;
  for (int c = 0; c < BruteForceTables::kCompletions; ++c) {
    result.accept_counts[c] += everywhere;
    if (result.accept_counts[c] > result.accept_counts[best]) best = c;
  }
  result.completion = completion_text(best);
  return result;
}

inline std::string brute_force_s(const std::vector<std::string>& examples, std::string_view prefix) {
  return brute_force_s_detailed(examples, prefix).completion;
}

struct BruteForceTResult {
  OutputBit prediction;
  std::uint64_t votes_zero = 0;
  std::uint64_t votes_one = 0;
  std::uint64_t consistent_dfas() const { return votes_zero + votes_one; }
};

/// Majority next output over all raw 3-state DFAs reproducing the revealed
/// outputs on symbols[0..revealed.size()); ties predict 1. `symbols` must be
/// exactly one longer than `revealed`.
inline BruteForceTResult brute_force_t_detailed(std::string_view symbols, const std::vector<OutputBit>& revealed) {
  if (symbols.size() != revealed.size() + 1) throw std::invalid_argument("brute_force_t: need one unrevealed symbol");
  if (!is_symbol_string(symbols)) throw std::invalid_argument("symbols contain a non-symbol character");
  const auto& bf = BruteForceTables::instance();
  std::vector<int> syms(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) syms[i] = symbols[i] - 'a';
  BruteForceTResult result;
  for (int t = 0; t < BruteForceTables::kTables; ++t) {
    for (int start = 0; start < 3; ++start) {
      unsigned assigned = 0;
      unsigned value = 0;
      int q = start;
      bool consistent = true;
      for (std::size_t i = 0; i < revealed.size(); ++i) {
        q = bf.next(t, q, syms[i]);
        const unsigned bit = revealed[i].value() ? 1U : 0U;
        if (assigned & (1U << q)) {
          if (((value >> q) & 1U) != bit) {
            consistent = false;
            break;
          }
        } else {
          assigned |= 1U << q;
          value |= bit << q;
        }
      }
      if (!consistent) continue;
      q = bf.next(t, q, syms.back());
      const std::uint64_t all = std::uint64_t{1} << (3 - std::popcount(assigned));
      if (assigned & (1U << q)) {
        ((value >> q) & 1U ? result.votes_one : result.votes_zero) += all;
      } else {
        result.votes_one += all / 2;
        result.votes_zero += all / 2;
      }
    }
  }
  if (result.consistent_dfas() == 0) throw NoConsistentDfa("no 3-state DFA reproduces the revealed outputs");
  result.prediction = OutputBit(result.votes_one >= result.votes_zero);
  return result;
}

inline OutputBit brute_force_t(const TransducerInstance& instance) {
  return brute_force_t_detailed(instance.symbols, instance.revealed).prediction;
}

}  // namespace dfa_icl
