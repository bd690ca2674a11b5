#pragma once

#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <vector>

#include "dfa_icl/dfa.hpp"

namespace dfa_icl {

/// The raw configuration space of num_states-state DFAs: every start state,
/// every transition table and every accept set, including unreachable states
/// and the all-accept / all-reject sets.
///
/// Canonical order is start-major, then the transition table read as a
/// base-num_states integer (first (state, symbol) entry most significant),
/// then the accept set as a bitmask (bit s set when state s accepts).
class DfaSpace {
 public:
  explicit DfaSpace(int num_states = 3) : num_states_(num_states) {
    if (num_states < 1) throw std::invalid_argument("DfaSpace needs at least one state");
    tables_ = 1;
    for (int i = 0; i < num_states * kAlphabetSize; ++i) {
      if (tables_ > (std::uint64_t{1} << 40) / num_states) throw std::invalid_argument("DfaSpace too large to enumerate");
      tables_ *= static_cast<std::uint64_t>(num_states);
    }
    masks_ = std::uint64_t{1} << num_states;
  }

  int num_states() const noexcept { return num_states_; }
  std::uint64_t num_tables() const noexcept { return tables_; }
  std::uint64_t num_accept_sets() const noexcept { return masks_; }
  std::uint64_t size() const noexcept { return static_cast<std::uint64_t>(num_states_) * tables_ * masks_; }

  Dfa at(std::uint64_t index) const {
    if (index >= size()) throw std::out_of_range("DfaSpace index out of range");
    const std::uint64_t mask = index % masks_;
    index /= masks_;
    std::uint64_t table = index % tables_;
    const auto start = static_cast<StateIndex>(index / tables_);
    std::vector<StateIndex> transitions(static_cast<std::size_t>(num_states_ * kAlphabetSize));
    for (auto it = transitions.rbegin(); it != transitions.rend(); ++it) {
      *it = static_cast<StateIndex>(table % num_states_);
      table /= num_states_;
    }
    std::vector<bool> accept(static_cast<std::size_t>(num_states_));
    for (int s = 0; s < num_states_; ++s) accept[s] = ((mask >> s) & 1U) != 0;
    return Dfa(num_states_, start, std::move(transitions), std::move(accept));
  }

  std::uint64_t index_of(const Dfa& dfa) const {
    if (dfa.num_states() != num_states_) throw std::invalid_argument("DFA size does not match the space");
    std::uint64_t table = 0;
    for (StateIndex t : dfa.transitions()) table = table * num_states_ + static_cast<std::uint64_t>(t);
    std::uint64_t mask = 0;
    for (int s = 0; s < num_states_; ++s)
      if (dfa.accept()[s]) mask |= std::uint64_t{1} << s;
    return (static_cast<std::uint64_t>(dfa.start()) * tables_ + table) * masks_ + mask;
  }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Dfa;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const DfaSpace* space, std::uint64_t index) : space_(space), index_(index) {}
    Dfa operator*() const { return space_->at(index_); }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++index_;
      return old;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.index_ == b.index_; }

   private:
    const DfaSpace* space_ = nullptr;
    std::uint64_t index_ = 0;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size()}; }

 private:
  int num_states_;
  std::uint64_t tables_ = 1;
  std::uint64_t masks_ = 1;
};

inline DfaSpace enumerate_all(int num_states = 3) { return DfaSpace(num_states); }

}  // namespace dfa_icl
