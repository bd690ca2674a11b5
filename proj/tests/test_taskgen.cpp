#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dfa_icl/serialization.hpp"
#include "dfa_icl/taskgen.hpp"
#include "test_support.hpp"

using namespace dfa_icl;
using namespace dfa_icl::testing;

namespace {

// Accepts only strings of length exactly 1.
Dfa length_one_dfa() { return Dfa(3, 0, {1, 1, 1, 2, 2, 2, 2, 2, 2}, {false, true, false}); }

bool has_accepted_completion(const Dfa& d, const std::string& prefix) {
  for (int c = 0; c < 243; ++c) {
    std::string s(5, 'a');
    for (int pos = 4, x = c; pos >= 0; --pos, x /= 3) s[static_cast<std::size_t>(pos)] = static_cast<char>('a' + x % 3);
    if (oracle_accepts(d, prefix + s)) return true;
  }
  return false;
}

}  // namespace

TEST(SampleExample, AcceptAllReturnsFirstProposal) {
  Rng a(4);
  Rng b(4);
  EXPECT_EQ(sample_example(accept_all_dfa(), a), random_symbols(b, 10));
}

TEST(SampleExample, SumMod3ExamplesHaveZeroSum) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const std::string s = sample_example(sum_mod3_dfa(), rng);
    int sum = 0;
    for (char c : s) sum += c - 'a';
    ASSERT_EQ(s.size(), 10U);
    ASSERT_EQ(sum % 3, 0);
  }
}

TEST(SampleExample, ExhaustionRateBoundedByGeometricTail) {
  Rng rng(31);
  const int trials = 300;
  for (int k = 0; k < 100; ++k) {
    const Dfa d = sample_dfa(rng);
    const double p = acceptance_probability(d, 10);
    const double q = std::pow(1.0 - p, 50);
    int exhausted = 0;
    for (int t = 0; t < trials; ++t) {
      try {
        (void)sample_example(d, rng);
      } catch (const SamplingExhausted& e) {
        EXPECT_EQ(e.rejections(), 50);
        ++exhausted;
      }
    }
    // Binomial upper band around the exact rate.
    EXPECT_LE(exhausted, trials * q + 4.0 * std::sqrt(trials * q * (1 - q)) + 1.0) << "p=" << p;
  }
}

TEST(SampleExample, MeanRejectionsMatchGeometricMean) {
  Rng rng(77);
  int checked = 0;
  while (checked < 10) {
    const Dfa d = sample_dfa(rng);
    const double p = acceptance_probability(d, 10);
    if (p < 0.05) continue;
    double total = 0;
    const int draws = 30 * 1000;
    for (int i = 0; i < draws; ++i) {
      int rejected = 0;
      (void)sample_example(d, rng, 10, 1'000'000, &rejected);
      total += rejected;
    }
    const double expected = (1 - p) / p;
    const double observed = total / draws;
    if (expected > 0.05)
      EXPECT_NEAR(observed, expected, 0.05 * expected) << "p=" << p;
    else
      EXPECT_NEAR(observed, expected, 0.01);
    ++checked;
  }
}

TEST(SamplePrefix, NeverAnExamplePrefixAndAlwaysCompletable) {
  Rng rng(13);
  for (int k = 0; k < 60; ++k) {
    const Dfa d = sample_dfa(rng);
    std::vector<std::string> examples;
    try {
      for (int i = 0; i < 30; ++i) examples.push_back(sample_example(d, rng));
      const std::string prefix = sample_prefix(d, examples, rng);
      for (const auto& e : examples) EXPECT_NE(e.substr(0, 5), prefix);
      EXPECT_TRUE(has_accepted_completion(d, prefix));
    } catch (const SamplingExhausted&) {
    }
  }
}

TEST(SamplePrefix, AcceptAllOnlyRejectsCollisions) {
  Rng rng(21);
  std::vector<std::string> examples;
  for (int i = 0; i < 30; ++i) examples.push_back(sample_example(accept_all_dfa(), rng));
  std::set<std::string> banned;
  for (const auto& e : examples) banned.insert(e.substr(0, 5));
  std::set<std::string> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto p = sample_prefix(accept_all_dfa(), examples, rng);
    EXPECT_FALSE(banned.count(p));
    seen.insert(p);
  }
  // Every non-colliding prefix is reachable.
  EXPECT_GT(seen.size(), 243U - banned.size() - 10);
}

TEST(ScTaskset, PilotFailureRejectsDfa) {
  EXPECT_THROW(sample_sc_taskset(length_one_dfa(), Rng(1)), DfaRejected);
}

TEST(ScTaskset, DeterministicAndStreamLayout) {
  const Rng rng(42);
  const TaskSet a = sample_sc_taskset(sum_mod3_dfa(), rng);
  const TaskSet b = sample_sc_taskset(sum_mod3_dfa(), rng);
  EXPECT_EQ(a, b);
  EXPECT_EQ(taskset_to_json(a).dump(), taskset_to_json(b).dump());
  ASSERT_EQ(a.sc_instances.size(), 30U);
  // Instance i comes from rng.derive(i) regardless of the pilot's draws.
  for (int i = 0; i < 3; ++i) {
    Rng stream = rng.derive(static_cast<std::uint64_t>(i));
    EXPECT_EQ(a.sc_instances[static_cast<std::size_t>(i)], sample_sc_instance(sum_mod3_dfa(), stream, TaskConfig{}));
  }
}

TEST(TransducerTaskset, AcceptAllRejected) {
  EXPECT_THROW(sample_transducer_taskset(accept_all_dfa(), Rng(3)), DfaRejected);
}

TEST(TransducerTaskset, SurvivorsHaveMixedTargets) {
  TaskConfig cfg;
  cfg.kind = TaskKind::Transducer;
  for (int id = 0; id < 200; ++id) {
    const auto e = generate_entry(9, id, cfg);
    int positives = 0;
    for (const auto& in : e.tasks.transducer_instances) positives += in.target.as_int();
    EXPECT_GE(positives, 1);
    EXPECT_LE(positives, 29);
  }
}

TEST(GeneratorInvariants, TenThousandScInstances) {
  TaskConfig cfg;
  int instances = 0;
  for (int id = 0; instances < 10'000; ++id) {
    const auto e = generate_entry(1234, id, cfg);
    ASSERT_TRUE(is_valid_benchmark_dfa(e.dfa));
    ASSERT_EQ(e.tasks.sc_instances.size(), 30U);
    for (const auto& in : e.tasks.sc_instances) {
      ASSERT_EQ(in.examples.size(), 30U);
      for (const auto& ex : in.examples) {
        ASSERT_EQ(ex.size(), 10U);
        ASSERT_TRUE(oracle_accepts(e.dfa, ex));
        ASSERT_FALSE(ex.starts_with(in.prefix));
      }
      ASSERT_EQ(in.prefix.size(), 5U);
      ASSERT_TRUE(is_symbol_string(in.prefix));
      ASSERT_TRUE(has_accepted_completion(e.dfa, in.prefix));
      ++instances;
    }
  }
}

TEST(GeneratorInvariants, TenThousandTransducerInstances) {
  TaskConfig cfg;
  cfg.kind = TaskKind::Transducer;
  int instances = 0;
  for (int id = 0; instances < 10'000; ++id) {
    const auto e = generate_entry(4321, id, cfg);
    for (const auto& in : e.tasks.transducer_instances) {
      ASSERT_EQ(in.symbols.size(), 30U);
      ASSERT_EQ(in.revealed.size(), 29U);
      for (std::size_t i = 0; i < in.revealed.size(); ++i)
        ASSERT_EQ(in.revealed[i].value(), oracle_accepts(e.dfa, in.symbols.substr(0, i + 1)));
      ASSERT_EQ(in.target.value(), oracle_accepts(e.dfa, in.symbols));
      ++instances;
    }
  }
}

TEST(GenerateEntry, PureFunctionOfSeedAndConfig) {
  TaskConfig cfg;
  for (int id = 0; id < 5; ++id) EXPECT_EQ(generate_entry(77, id, cfg).tasks, generate_entry(77, id, cfg).tasks);
  EXPECT_NE(generate_entry(77, 0, cfg).tasks, generate_entry(78, 0, cfg).tasks);
}

TEST(GenerateEntry, LongerTracesAndMoreExamples) {
  TaskConfig t;
  t.kind = TaskKind::Transducer;
  t.sequence_length = 600;
  const auto e = generate_entry(1, 0, t);
  EXPECT_EQ(e.tasks.transducer_instances[0].symbols.size(), 600U);
  TaskConfig s;
  s.num_examples = 600;
  s.num_instances = 2;
  EXPECT_EQ(generate_entry(1, 0, s).tasks.sc_instances[0].examples.size(), 600U);
}

TEST(TaskSetJson, HiddenTargetsStripped) {
  TaskConfig cfg;
  cfg.kind = TaskKind::Transducer;
  const auto e = generate_entry(3, 0, cfg);
  const json j = taskset_to_json(e.tasks);
  EXPECT_EQ(j.at("hidden"), json::array({"target"}));
  EXPECT_EQ(taskset_from_json(j, true), e.tasks);
  const TaskSet visible = taskset_from_json(j, false);
  for (const auto& in : visible.transducer_instances) EXPECT_EQ(in.target, OutputBit(false));
}

TEST(RegexControl, Labels) {
  EXPECT_TRUE(matches_regex_control("ababc"));
  EXPECT_FALSE(matches_regex_control("cbabc"));
  EXPECT_FALSE(matches_regex_control("ab"));
  EXPECT_TRUE(matches_regex_control("ababcabc"));
}

TEST(RegexControl, NoSingleSubstitutionPreservesValidity) {
  for (int k = 1; k <= 5; ++k) {
    std::string valid = "ab";
    for (int r = 0; r < k; ++r) valid += "abc";
    for (std::size_t pos = 0; pos < valid.size(); ++pos)
      for (char c : {'a', 'b', 'c'}) {
        if (c == valid[pos]) continue;
        std::string m = valid;
        m[pos] = c;
        EXPECT_FALSE(matches_regex_control(m)) << m;
      }
  }
}

TEST(RegexControl, SampledItems) {
  Rng rng(5);
  const auto items = sample_regex_control(rng, 1000);
  ASSERT_EQ(items.size(), 1000U);
  int positives = 0;
  for (const auto& item : items) {
    EXPECT_TRUE(item.text.size() == 5 || item.text.size() == 8 || item.text.size() == 11 || item.text.size() == 14 ||
                item.text.size() == 17);
    EXPECT_EQ(item.label, matches_regex_control(item.text));
    positives += item.label ? 1 : 0;
  }
  EXPECT_NEAR(positives, 500, 80);
  Rng again(5);
  EXPECT_EQ(sample_regex_control(again, 1000), items);
}
