// dfa-icl: generate DFA benchmarks, run baselines and models, score, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dfa_icl/pipeline.hpp"

namespace {

using namespace dfa_icl;

// Exit codes.
constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EndpointConfig load_endpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError("endpoint config " + path + " is not valid JSON: " + e.what());
  }
  try {
    return endpoint_from_json(j);
  } catch (const std::exception& e) {
    throw UsageError("endpoint config " + path + ": " + e.what());
  }
}

std::vector<std::string> split_commas(const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    std::stringstream ss(v);
    for (std::string part; std::getline(ss, part, ',');)
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  write_file_atomic(path, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DFA in-context learning benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "Cap on worker threads")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "Sample DFAs and task instances into a new run directory");
  std::string task = "sc";
  int num_dfas = 1000;
  int instances = 30;
  int examples = 30;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string tie_rule = "rightmost-occurrence";
  gen->add_option("--task", task, "sc or transducer")->check(CLI::IsMember({"sc", "transducer"}));
  gen->add_option("--dfas", num_dfas, "Number of DFAs")->check(CLI::NonNegativeNumber);
  gen->add_option("--instances", instances, "Instances per DFA")->check(CLI::PositiveNumber);
  gen->add_option("--examples", examples,
                  "Examples per instance (sequence completion) or trace length (transducer)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--out", out_dir, "Run directory")->required();
  gen->add_option("--ngram-tie-rule", tie_rule, "Tie rule for n-gram-t votes")
      ->check(CLI::IsMember({"rightmost-occurrence", "last-revealed-output"}));

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Run baseline predictors over a run");
  std::string run_dir;
  std::vector<std::string> predictor_names;
  bool parallel = false;
  baseline->add_option("--run", run_dir, "Run directory")->required();
  baseline->add_option("--predictor", predictor_names, "Predictor name(s), comma separated")->required();
  baseline->add_flag("--parallel", parallel, "Use all --jobs workers (default for brute force: one worker)");

  // render
  auto* render_cmd = app.add_subcommand("render", "Print the prompt for one instance");
  std::string format_name = "basic";
  int dfa_id = 0;
  int instance_idx = 0;
  std::string out_file;
  render_cmd->add_option("--run", run_dir, "Run directory")->required();
  render_cmd->add_option("--format", format_name, "Prompt format");
  render_cmd->add_option("--dfa", dfa_id, "DFA id");
  render_cmd->add_option("--instance", instance_idx, "Instance index");
  render_cmd->add_option("--out", out_file, "Output file (default stdout)");

  // run-model
  auto* run_model_cmd = app.add_subcommand("run-model", "Query a model endpoint for every instance");
  std::string endpoint_path;
  std::string cache_dir;
  std::string predictor_name;
  run_model_cmd->add_option("--run", run_dir, "Run directory")->required();
  run_model_cmd->add_option("--format", format_name, "Prompt format")->required();
  run_model_cmd->add_option("--endpoint", endpoint_path, "Endpoint config JSON")->required();
  run_model_cmd->add_option("--cache", cache_dir, "Response cache directory (default <run>/cache)");
  run_model_cmd->add_option("--name", predictor_name, "Predictor id (default <model>@<format>)");

  // score / report / significance / difficulty
  auto* score_cmd = app.add_subcommand("score", "Score predictions into scores.jsonl");
  score_cmd->add_option("--run", run_dir, "Run directory")->required();

  ReportOptions report_options;
  auto* report_cmd = app.add_subcommand("report", "Write results_table.json and significance.json");
  report_cmd->add_option("--run", run_dir, "Run directory")->required();
  report_cmd->add_option("--resamples", report_options.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
  report_cmd->add_option("--bootstrap-seed", report_options.seed, "Bootstrap seed");

  auto* significance_cmd = app.add_subcommand("significance", "Paired bootstrap p-value for two predictors");
  std::string pred_a;
  std::string pred_b;
  significance_cmd->add_option("--run", run_dir, "Run directory")->required();
  significance_cmd->add_option("--a", pred_a, "First predictor")->required();
  significance_cmd->add_option("--b", pred_b, "Second predictor")->required();
  significance_cmd->add_option("--resamples", report_options.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
  significance_cmd->add_option("--bootstrap-seed", report_options.seed, "Bootstrap seed");

  auto* difficulty_cmd = app.add_subcommand("difficulty", "Classify DFAs by the first baseline reaching 28/30");
  difficulty_cmd->add_option("--run", run_dir, "Run directory")->required();

  // regex-control
  auto* regex_cmd = app.add_subcommand("regex-control", "Sample ab(abc)+ membership items, optionally query a model");
  int count = 100;
  regex_cmd->add_option("--count", count, "Number of items")->check(CLI::NonNegativeNumber);
  regex_cmd->add_option("--seed", seed, "Seed");
  regex_cmd->add_option("--endpoint", endpoint_path, "Endpoint config JSON");
  regex_cmd->add_option("--cache", cache_dir, "Response cache directory (default ./cache)");
  regex_cmd->add_option("--out", out_file, "Items JSONL file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (gen->parsed()) {
      GenOptions options;
      options.config.kind = task_kind_from_string(task == "sc" ? "sc" : "transducer");
      options.config.num_instances = instances;
      if (options.config.kind == TaskKind::SequenceCompletion)
        options.config.num_examples = examples;
      else
        options.config.sequence_length = examples;
      options.num_dfas = num_dfas;
      options.seed = seed;
      options.tie_rule = tie_rule == "last-revealed-output" ? NgramTieRule::LastRevealedOutput : NgramTieRule::RightmostOccurrence;
      options.jobs = jobs;
      generate_run(out_dir, options);
      std::cerr << "wrote " << num_dfas << " DFAs to " << out_dir << '\n';
    } else if (baseline->parsed()) {
      RunStore store = RunStore::load_run(run_dir);
      const auto names = split_commas(predictor_names);
      for (const auto& n : names) parse_baseline(n, store.manifest().config.kind);
      const bool any_brute = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
        return parse_baseline(n, store.manifest().config.kind).id().starts_with("brute-force");
      });
      const int workers = any_brute && !parallel ? 1 : jobs;
      for (const auto& id : run_baselines(store, names, workers)) std::cerr << "predictions written for " << id << '\n';
    } else if (render_cmd->parsed()) {
      const RunStore store = RunStore::load_run(run_dir);
      const PromptFormat format = prompt_format_from_string(format_name);
      const Benchmark b = load_benchmark(store, false);
      if (dfa_id < 0 || static_cast<std::size_t>(dfa_id) >= b.sets.size())
        throw UsageError("--dfa out of range (run has " + std::to_string(b.sets.size()) + " DFAs)");
      const TaskSet& set = b.sets[static_cast<std::size_t>(dfa_id)];
      if (instance_idx < 0 || static_cast<std::size_t>(instance_idx) >= set.size())
        throw UsageError("--instance out of range");
      const auto i = static_cast<std::size_t>(instance_idx);
      write_text(out_file, set.config.kind == TaskKind::SequenceCompletion ? render(set.sc_instances[i], format)
                                                                           : render(set.transducer_instances[i], format));
    } else if (run_model_cmd->parsed()) {
      RunStore store = RunStore::load_run(run_dir);
      const PromptFormat format = prompt_format_from_string(format_name);
      const EndpointConfig endpoint = load_endpoint(endpoint_path);
      const std::filesystem::path cache = cache_dir.empty() ? std::filesystem::path(run_dir) / "cache" : std::filesystem::path(cache_dir);
      const ModelRunStats stats = run_model(store, format, endpoint, cache, predictor_name, jobs);
      std::cerr << stats.predictor << ": " << stats.instances << " instances, " << stats.cache_hits << " cache hits, "
                << stats.non_answers << " non-answers, " << stats.errors << " unevaluated\n";
    } else if (score_cmd->parsed()) {
      RunStore store = RunStore::load_run(run_dir);
      const ScoreTable table = score_run(store);
      std::cerr << "scored " << table.size() << " predictors\n";
    } else if (report_cmd->parsed()) {
      RunStore store = RunStore::load_run(run_dir);
      std::cout << format_results_table(report_run(store, report_options));
    } else if (significance_cmd->parsed()) {
      const RunStore store = RunStore::load_run(run_dir);
      const double p = significance_run(store, pred_a, pred_b, report_options);
      std::printf("%s vs %s: p = %.6g\n", pred_a.c_str(), pred_b.c_str(), p);
    } else if (difficulty_cmd->parsed()) {
      RunStore store = RunStore::load_run(run_dir);
      const json report = difficulty_run(store);
      for (DifficultyClass c : kDifficultyLadder) {
        const std::string name(to_string(c));
        std::printf("%-11s %d\n", name.c_str(), report.at("histogram").at(name).get<int>());
      }
    } else if (regex_cmd->parsed()) {
      Rng rng(seed);
      const auto items = sample_regex_control(rng, count);
      std::vector<json> records;
      if (endpoint_path.empty()) {
        for (const auto& item : items) records.push_back({{"text", item.text}, {"label", item.label}});
        write_text(out_file, to_jsonl(records));
      } else {
        const EndpointConfig endpoint = load_endpoint(endpoint_path);
        const auto results = run_regex_control(items, endpoint, cache_dir.empty() ? "cache" : cache_dir);
        int correct = 0;
        int answered = 0;
        int errors = 0;
        for (const auto& r : results) {
          json j{{"text", r.item.text}, {"label", r.item.label}};
          j["answer"] = r.answer ? json(*r.answer) : json(nullptr);
          if (!r.error.empty()) {
            j["error"] = r.error;
            ++errors;
          } else if (r.answer) {
            ++answered;
            correct += *r.answer == r.item.label ? 1 : 0;
          }
          records.push_back(std::move(j));
        }
        write_text(out_file, to_jsonl(records));
        if (answered > 0)
          std::fprintf(stderr, "accuracy %.1f%% (%d/%d answered, %d non-answers, %d unevaluated)\n", 100.0 * correct / answered,
                       correct, answered, static_cast<int>(results.size()) - answered - errors, errors);
        else
          std::fprintf(stderr, "no answers (%d unevaluated)\n", errors);
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UnknownPredictor& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const FormatMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kOk;
}
