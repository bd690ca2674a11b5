#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "dfa_icl/errors.hpp"
#include "dfa_icl/model_client.hpp"
#include "dfa_icl/parallel.hpp"
#include "dfa_icl/persistence.hpp"
#include "dfa_icl/predictors.hpp"
#include "dfa_icl/prompts.hpp"
#include "dfa_icl/report.hpp"
#include "dfa_icl/serialization.hpp"
#include "dfa_icl/taskgen.hpp"

// Run-directory operations shared by the CLI and the integration tests.

namespace dfa_icl {

inline constexpr std::string_view kDfasFile = "dfas.jsonl";
inline constexpr std::string_view kTasksFile = "tasks.jsonl";
inline constexpr std::string_view kPredictionsFile = "predictions.jsonl";
inline constexpr std::string_view kTranscriptsFile = "transcripts.jsonl";
inline constexpr std::string_view kScoresFile = "scores.jsonl";
inline constexpr std::string_view kResultsFile = "results_table.json";
inline constexpr std::string_view kSignificanceFile = "significance.json";
inline constexpr std::string_view kDifficultyFile = "difficulty.json";

struct GenOptions {
  TaskConfig config;
  int num_dfas = 1000;
  std::uint64_t seed = 0;
  NgramTieRule tie_rule = NgramTieRule::RightmostOccurrence;
  int jobs = 1;
};

struct Benchmark {
  std::vector<Dfa> dfas;
  std::vector<TaskSet> sets;
};

inline Benchmark generate_benchmark(const GenOptions& options, std::vector<int>* attempts = nullptr) {
  if (options.num_dfas < 0) throw std::invalid_argument("--dfas must be >= 0");
  std::vector<std::optional<BenchmarkEntry>> entries(static_cast<std::size_t>(options.num_dfas));
  parallel_for(entries.size(), options.jobs, [&](std::size_t k) {
    entries[k] = generate_entry(options.seed, static_cast<int>(k), options.config);
  });
  Benchmark b;
  for (auto& e : entries) {
    if (attempts) attempts->push_back(e->attempt);
    b.dfas.push_back(std::move(e->dfa));
    b.sets.push_back(std::move(e->tasks));
  }
  return b;
}

/// Writes dfas.jsonl, tasks.jsonl and a fresh manifest. Any previous run in
/// `dir` is superseded.
inline RunStore generate_run(const std::filesystem::path& dir, const GenOptions& options) {
  std::vector<int> attempts;
  const Benchmark b = generate_benchmark(options, &attempts);
  std::vector<json> dfa_records;
  std::vector<json> task_records;
  for (std::size_t k = 0; k < b.dfas.size(); ++k) {
    const std::string seed_path = std::to_string(options.seed) + "/" + std::to_string(k) + "/" + std::to_string(attempts[k]);
    dfa_records.push_back(dfa_to_json(b.dfas[k], static_cast<int>(k), seed_path));
    task_records.push_back(taskset_to_json(b.sets[k]));
  }
  RunManifest m;
  m.master_seed = options.seed;
  m.num_dfas = options.num_dfas;
  m.config = options.config;
  m.tie_rule = options.tie_rule;
  return RunStore::write_run(dir, std::move(m),
                             {{std::string(kDfasFile), to_jsonl(dfa_records)}, {std::string(kTasksFile), to_jsonl(task_records)}});
}

/// With include_hidden = false transducer targets are dropped on load.
inline Benchmark load_benchmark(const RunStore& store, bool include_hidden) {
  Benchmark b;
  for (const auto& j : parse_jsonl(store.get(kDfasFile))) b.dfas.push_back(dfa_from_json(j));
  for (const auto& j : parse_jsonl(store.get(kTasksFile))) b.sets.push_back(taskset_from_json(j, include_hidden));
  if (b.dfas.size() != b.sets.size()) throw IncompleteRun("dfas.jsonl and tasks.jsonl disagree in length");
  return b;
}

namespace detail {

/// Replaces every record whose predictor is in `replaced` and keeps the
/// rest; output is sorted by (predictor, dfa_id, instance_idx).
inline std::string merge_records(const RunStore& store, std::string_view file, const std::set<std::string>& replaced,
                                 std::vector<json> fresh) {
  std::vector<json> all;
  if (store.has(file))
    for (auto& j : parse_jsonl(store.get(file)))
      if (!replaced.count(j.at("predictor").get<std::string>())) all.push_back(std::move(j));
  for (auto& j : fresh) all.push_back(std::move(j));
  std::stable_sort(all.begin(), all.end(), [](const json& a, const json& b) {
    return std::make_tuple(a.at("predictor").get<std::string>(), a.at("dfa_id").get<int>(), a.at("instance_idx").get<int>()) <
           std::make_tuple(b.at("predictor").get<std::string>(), b.at("dfa_id").get<int>(), b.at("instance_idx").get<int>());
  });
  return to_jsonl(all);
}

}  // namespace detail

inline std::vector<PredictionRecord> load_predictions(const RunStore& store) {
  std::vector<PredictionRecord> out;
  for (const auto& j : parse_jsonl(store.get(kPredictionsFile))) out.push_back(prediction_from_json(j));
  return out;
}

/// Resolves every name first, so one bad name fails the command before any
/// work is done. Returns the predictor ids written.
inline std::vector<std::string> run_baselines(RunStore& store, const std::vector<std::string>& names, int jobs = 1) {
  const TaskKind kind = store.manifest().config.kind;
  std::vector<BaselineSpec> specs;
  for (const auto& name : names) specs.push_back(parse_baseline(name, kind));
  const bool any_oracle = std::any_of(specs.begin(), specs.end(), [](const BaselineSpec& s) { return s.needs_targets(); });
  const Benchmark visible = load_benchmark(store, false);
  const Benchmark hidden = any_oracle ? load_benchmark(store, true) : Benchmark{};

  std::vector<json> fresh;
  std::set<std::string> ids;
  for (const auto& spec : specs) {
    if (!ids.insert(spec.id()).second) continue;
    const auto& sets = spec.needs_targets() ? hidden.sets : visible.sets;
    for (const auto& p : run_baseline(spec, sets, store.manifest().master_seed, store.manifest().tie_rule, jobs))
      fresh.push_back(prediction_to_json(p));
  }
  store.put(kPredictionsFile, detail::merge_records(store, kPredictionsFile, ids, std::move(fresh)));
  return {ids.begin(), ids.end()};
}

struct ModelRunStats {
  std::string predictor;
  int instances = 0;
  int cache_hits = 0;
  int errors = 0;
  int non_answers = 0;
};

/// Renders, queries (through the cache) and parses every instance of the
/// run. Transport failures become unevaluated records, not non-answers.
inline ModelRunStats run_model(RunStore& store, PromptFormat format, const EndpointConfig& endpoint,
                               const std::filesystem::path& cache_dir, std::string predictor = {}, int jobs = 0) {
  const TaskKind kind = store.manifest().config.kind;
  if (!supports(format, kind))
    throw FormatMismatch(std::string(to_string(format)) + " is not available for " + std::string(to_string(kind)) + " runs");
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw AuthError("environment variable " + endpoint.api_key_env + " is not set");
  }
  if (predictor.empty()) predictor = endpoint.model_name + "@" + std::string(to_string(format));
  const Benchmark b = load_benchmark(store, false);

  struct Job {
    int dfa_id;
    int instance_idx;
    std::string prompt;
  };
  std::vector<Job> work;
  for (const auto& set : b.sets)
    for (std::size_t i = 0; i < set.size(); ++i)
      work.push_back({set.dfa_id, static_cast<int>(i),
                      kind == TaskKind::SequenceCompletion ? render(set.sc_instances[i], format)
                                                           : render(set.transducer_instances[i], format)});

  ModelClient client(endpoint);
  ResponseCache cache(cache_dir);
  const json snapshot = endpoint_to_json(endpoint);
  std::vector<PredictionRecord> predictions(work.size());
  std::vector<Transcript> transcripts(work.size());
  const int workers = std::max(1, jobs > 0 ? std::min(jobs, endpoint.max_parallel_requests) : endpoint.max_parallel_requests);
  parallel_for(work.size(), workers, [&](std::size_t k) {
    const Job& job = work[k];
    PredictionRecord& p = predictions[k];
    Transcript& t = transcripts[k];
    p.dfa_id = t.dfa_id = job.dfa_id;
    p.instance_idx = t.instance_idx = job.instance_idx;
    p.predictor = t.predictor = predictor;
    t.prompt = job.prompt;
    t.endpoint = snapshot;
    try {
      const CachedResponse r = cache.cached_complete(client, job.prompt);
      p.answer = parse_answer(r.text, format, kind);
      p.latency_ms = r.latency_ms;
      t.response = r.text;
      t.timestamp = r.timestamp;
      t.cache_hit = r.cache_hit;
    } catch (const EndpointError& e) {
      p.error = e.what();
    } catch (const AuthError& e) {
      p.error = e.what();
    }
  });

  ModelRunStats stats;
  stats.predictor = predictor;
  std::vector<json> fresh_predictions;
  std::vector<json> fresh_transcripts;
  for (std::size_t k = 0; k < work.size(); ++k) {
    ++stats.instances;
    stats.cache_hits += transcripts[k].cache_hit ? 1 : 0;
    stats.errors += predictions[k].unevaluated() ? 1 : 0;
    stats.non_answers += !predictions[k].unevaluated() && predictions[k].answer.is_non_answer() ? 1 : 0;
    fresh_predictions.push_back(prediction_to_json(predictions[k]));
    json t = transcript_to_json(transcripts[k]);
    if (predictions[k].unevaluated()) t["error"] = predictions[k].error;
    fresh_transcripts.push_back(std::move(t));
  }
  const std::set<std::string> replaced{predictor};
  store.manifest().model_runs[predictor] = json{{"format", std::string(to_string(format))}, {"endpoint", snapshot}};
  store.put(kTranscriptsFile, detail::merge_records(store, kTranscriptsFile, replaced, std::move(fresh_transcripts)));
  store.put(kPredictionsFile, detail::merge_records(store, kPredictionsFile, replaced, std::move(fresh_predictions)));
  return stats;
}

inline ScoreTable score_run(RunStore& store) {
  const Benchmark b = load_benchmark(store, true);
  const ScoreTable table = score_predictions(b.dfas, b.sets, load_predictions(store));
  store.put(kScoresFile, scores_to_jsonl(table));
  return table;
}

inline ScoreTable load_scores(const RunStore& store) { return scores_from_jsonl(store.get(kScoresFile)); }

/// Writes results_table.json and significance.json from scores.jsonl.
inline json report_run(RunStore& store, const ReportOptions& options = {}) {
  const ScoreTable table = load_scores(store);
  json results = results_table(table, store.manifest().config.kind, options);
  store.put(kResultsFile, results.dump(2) + "\n");
  store.put(kSignificanceFile, significance_table(table, options).dump(2) + "\n");
  return results;
}

inline double significance_run(const RunStore& store, const std::string& a, const std::string& b,
                               const ReportOptions& options = {}) {
  const ScoreTable table = load_scores(store);
  for (const auto& name : {a, b})
    if (!table.count(name)) throw MissingArtifact("scores.jsonl has no predictor " + name);
  return paired_significance(table.at(a).scores, table.at(b).scores, options.resamples, options.seed);
}

inline json difficulty_run(RunStore& store) {
  if (store.manifest().config.kind != TaskKind::Transducer)
    throw std::invalid_argument("difficulty classes are defined for transducer runs");
  json report = difficulty_report(load_scores(store), store.manifest().config.num_instances);
  store.put(kDifficultyFile, report.dump(2) + "\n");
  return report;
}

// --- regex tokenization control --------------------------------------------

struct RegexControlResult {
  RegexControlItem item;
  std::optional<bool> answer;  // nullopt: non-answer or unevaluated
  std::string error;
};

inline std::vector<RegexControlResult> run_regex_control(const std::vector<RegexControlItem>& items, const EndpointConfig& endpoint,
                                                         const std::filesystem::path& cache_dir) {
  ModelClient client(endpoint);
  ResponseCache cache(cache_dir);
  std::vector<RegexControlResult> results(items.size());
  parallel_for(items.size(), endpoint.max_parallel_requests, [&](std::size_t k) {
    results[k].item = items[k];
    try {
      results[k].answer = parse_yes_no(cache.cached_complete(client, render_regex_control(items[k].text)).text);
    } catch (const EndpointError& e) {
      results[k].error = e.what();
    } catch (const AuthError& e) {
      results[k].error = e.what();
    }
  });
  return results;
}

}  // namespace dfa_icl
