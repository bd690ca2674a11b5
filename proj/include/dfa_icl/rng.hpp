#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dfa_icl {

/// SplitMix64 finalizer. Used only to turn (seed, key) pairs into
/// well-separated child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable random stream with hierarchical splitting.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Bounded draws use our own rejection step instead of
/// std::uniform_int_distribution, whose algorithm is implementation-defined,
/// so a given seed produces the same benchmark on every platform.
///
/// Stream layout used by the generators:
///   master(seed).derive(dfa_index).derive(attempt)      one DFA attempt
///     .derive(kDfaStream)                               the DFA itself
///     .derive(kTaskStream).derive(kPilotStream)         pilot instance
///     .derive(kTaskStream).derive(instance_index)       real instances
/// derive() depends only on the stream's seed, never on how many values
/// were drawn, so children are independent of draw order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng derive(std::uint64_t key) const { return Rng(mix64(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL))); }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline constexpr std::uint64_t kDfaStream = 0xd0a;
inline constexpr std::uint64_t kTaskStream = 0x7a5c;
inline constexpr std::uint64_t kPilotStream = 0xffffffffULL;

}  // namespace dfa_icl
