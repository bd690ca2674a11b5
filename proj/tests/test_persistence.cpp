#include <gtest/gtest.h>

#include "dfa_icl/persistence.hpp"
#include "dfa_icl/pipeline.hpp"
#include "test_support.hpp"

using namespace dfa_icl;
using namespace dfa_icl::testing;

namespace {

GenOptions small_options(TaskKind kind, int num_dfas = 4) {
  GenOptions o;
  o.config.kind = kind;
  o.num_dfas = num_dfas;
  o.seed = 99;
  o.jobs = 1;
  return o;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(RunStore, RoundTrip) {
  const auto dir = temp_dir("roundtrip");
  for (TaskKind kind : {TaskKind::SequenceCompletion, TaskKind::Transducer}) {
    const auto run_dir = dir / std::string(to_string(kind));
    const auto options = small_options(kind);
    generate_run(run_dir, options);
    const RunStore store = RunStore::load_run(run_dir);
    EXPECT_EQ(store.manifest().num_dfas, 4);
    EXPECT_EQ(store.manifest().master_seed, 99U);
    EXPECT_EQ(store.manifest().config, options.config);
    EXPECT_EQ(store.manifest().pilot_stream, "derived");
    const Benchmark loaded = load_benchmark(store, true);
    const Benchmark fresh = generate_benchmark(options);
    EXPECT_EQ(loaded.dfas, fresh.dfas);
    EXPECT_EQ(loaded.sets, fresh.sets);
    // Manifest survives a JSON round trip unchanged.
    const json j = manifest_to_json(store.manifest());
    EXPECT_EQ(manifest_to_json(manifest_from_json(j)), j);
  }
  std::filesystem::remove_all(dir);
}

TEST(RunStore, Idempotent) {
  const auto dir = temp_dir("idem");
  generate_run(dir / "a", small_options(TaskKind::Transducer));
  generate_run(dir / "b", small_options(TaskKind::Transducer));
  EXPECT_EQ(read_file(dir / "a" / "manifest.json"), read_file(dir / "b" / "manifest.json"));
  std::filesystem::remove_all(dir);
}

TEST(RunStore, TamperedArtifactIsRejected) {
  const auto dir = temp_dir("tamper");
  RunStore store = generate_run(dir, small_options(TaskKind::Transducer));
  run_baselines(store, {"null-t"});
  score_run(store);
  std::string scores = read_file(dir / std::string(kScoresFile));
  scores[scores.size() / 2] = scores[scores.size() / 2] == '1' ? '2' : '1';
  write_file_atomic(dir / std::string(kScoresFile), scores);
  EXPECT_THROW(RunStore::load_run(dir), HashMismatch);
  std::filesystem::remove_all(dir);
}

TEST(RunStore, MissingManifestIsIncomplete) {
  const auto dir = temp_dir("incomplete");
  generate_run(dir, small_options(TaskKind::SequenceCompletion));
  std::filesystem::remove(dir / "manifest.json");
  EXPECT_THROW(RunStore::load_run(dir), IncompleteRun);
  std::filesystem::remove_all(dir);
}

TEST(RunStore, UnsupportedSchemaMajor) {
  const auto dir = temp_dir("schema");
  generate_run(dir, small_options(TaskKind::SequenceCompletion));
  json j = json::parse(read_file(dir / "manifest.json"));
  j["schema_version"] = "2.0";
  write_file_atomic(dir / "manifest.json", j.dump(2));
  EXPECT_THROW(RunStore::load_run(dir), SchemaVersionUnsupported);
  j["schema_version"] = "1.7";
  write_file_atomic(dir / "manifest.json", j.dump(2));
  EXPECT_NO_THROW(RunStore::load_run(dir));
  std::filesystem::remove_all(dir);
}

TEST(RunStore, MissingArtifact) {
  const auto dir = temp_dir("missing");
  RunStore store = generate_run(dir, small_options(TaskKind::SequenceCompletion));
  EXPECT_FALSE(store.has(kScoresFile));
  EXPECT_THROW(store.get(kScoresFile), MissingArtifact);
  EXPECT_THROW(report_run(store), MissingArtifact);
  std::filesystem::remove(dir / std::string(kTasksFile));
  EXPECT_THROW(RunStore::load_run(dir), MissingArtifact);
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, BaselinesScoreAndReport) {
  const auto dir = temp_dir("pipeline");
  RunStore store = generate_run(dir, small_options(TaskKind::Transducer, 6));
  run_baselines(store, {"null-t", "2-gram-t", "3-gram-t", "4-gram-t", "5-gram-t", "brute-force-t"});
  // Re-running a baseline replaces its records instead of duplicating them.
  run_baselines(store, {"null-t"});
  EXPECT_EQ(load_predictions(store).size(), 6U * 6U * 30U);
  score_run(store);
  const json results = report_run(store, {500, 0});
  EXPECT_EQ(results.at("rows").size(), 6U);
  const json diff = difficulty_run(store);
  int total = 0;
  for (const auto& [k, v] : diff.at("histogram").items()) total += v.get<int>();
  EXPECT_EQ(total, 6);
  const RunStore reloaded = RunStore::load_run(dir);
  EXPECT_TRUE(reloaded.has(kResultsFile));
  EXPECT_TRUE(reloaded.has(kDifficultyFile));
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, HiddenTargetsNotNeededForPrompting) {
  const auto dir = temp_dir("hidden");
  RunStore store = generate_run(dir, small_options(TaskKind::Transducer));
  const Benchmark visible = load_benchmark(store, false);
  for (const auto& set : visible.sets)
    for (const auto& inst : set.transducer_instances) EXPECT_EQ(inst.target, OutputBit(false));
  std::filesystem::remove_all(dir);
}
