#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dfa_icl/dfa.hpp"
#include "dfa_icl/evaluation.hpp"
#include "dfa_icl/prompts.hpp"
#include "dfa_icl/taskgen.hpp"

namespace dfa_icl {

using json = nlohmann::json;

/// Rounds to 10 significant digits; the JSON writer then prints the shortest
/// representation that round-trips, which is at most 10 digits.
inline double round_sig10(double x) {
  if (!std::isfinite(x) || x == 0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return std::strtod(buf, nullptr);
}

// --- DFA records -------------------------------------------------------------

inline json dfa_to_json(const Dfa& dfa, int id, std::string_view seed) {
  json transitions = json::array();
  for (int s = 0; s < dfa.num_states(); ++s) {
    json row = json::array();
    for (int sym = 0; sym < kAlphabetSize; ++sym) row.push_back(dfa.transitions()[s * kAlphabetSize + sym]);
    transitions.push_back(std::move(row));
  }
  json accept = json::array();
  for (bool a : dfa.accept()) accept.push_back(a);
  return json{{"id", id},
              {"num_states", dfa.num_states()},
              {"start", dfa.start()},
              {"transitions", std::move(transitions)},
              {"accept", std::move(accept)},
              {"seed", std::string(seed)}};
}

inline Dfa dfa_from_json(const json& j) {
  const int n = j.at("num_states").get<int>();
  std::vector<StateIndex> transitions;
  for (const auto& row : j.at("transitions")) {
    if (row.size() != static_cast<std::size_t>(kAlphabetSize)) throw std::invalid_argument("transition row must have 3 entries");
    for (const auto& t : row) transitions.push_back(t.get<int>());
  }
  std::vector<bool> accept;
  for (const auto& a : j.at("accept")) accept.push_back(a.get<bool>());
  return Dfa(n, j.at("start").get<int>(), std::move(transitions), std::move(accept));
}

// --- task sets ---------------------------------------------------------------

inline json config_to_json(const TaskConfig& c) {
  return json{{"kind", std::string(to_string(c.kind))},
              {"num_instances", c.num_instances},
              {"num_examples", c.num_examples},
              {"example_length", c.example_length},
              {"prefix_length", c.prefix_length},
              {"completion_length", c.completion_length},
              {"sequence_length", c.sequence_length},
              {"max_rejections", c.max_rejections}};
}

inline TaskConfig config_from_json(const json& j) {
  TaskConfig c;
  c.kind = task_kind_from_string(j.at("kind").get<std::string>());
  c.num_instances = j.at("num_instances").get<int>();
  c.num_examples = j.at("num_examples").get<int>();
  c.example_length = j.at("example_length").get<int>();
  c.prefix_length = j.at("prefix_length").get<int>();
  c.completion_length = j.at("completion_length").get<int>();
  c.sequence_length = j.at("sequence_length").get<int>();
  c.max_rejections = j.at("max_rejections").get<int>();
  return c;
}

inline std::string bits_to_string(const std::vector<OutputBit>& bits) {
  std::string s;
  for (OutputBit b : bits) s += b.to_char();
  return s;
}

inline std::vector<OutputBit> bits_from_string(std::string_view s) {
  std::vector<OutputBit> bits;
  for (char c : s) bits.push_back(OutputBit::from_char(c));
  return bits;
}

/// Transducer targets are written but listed under "hidden"; loaders for
/// predictor-facing code drop them.
inline json taskset_to_json(const TaskSet& set) {
  json instances = json::array();
  if (set.config.kind == TaskKind::SequenceCompletion) {
    for (const auto& in : set.sc_instances) instances.push_back({{"examples", in.examples}, {"prefix", in.prefix}});
  } else {
    for (const auto& in : set.transducer_instances)
      instances.push_back({{"symbols", in.symbols}, {"revealed", bits_to_string(in.revealed)}, {"target", in.target.as_int()}});
  }
  json j{{"dfa_id", set.dfa_id},
         {"kind", std::string(to_string(set.config.kind))},
         {"config", config_to_json(set.config)},
         {"instances", std::move(instances)}};
  if (set.config.kind == TaskKind::Transducer) j["hidden"] = json::array({"target"});
  return j;
}

/// With include_hidden = false every transducer target is reset to 0, so
/// nothing downstream can read it.
inline TaskSet taskset_from_json(const json& j, bool include_hidden = true) {
  TaskSet set;
  set.dfa_id = j.at("dfa_id").get<int>();
  set.config = config_from_json(j.at("config"));
  for (const auto& in : j.at("instances")) {
    if (set.config.kind == TaskKind::SequenceCompletion) {
      set.sc_instances.push_back({in.at("examples").get<std::vector<std::string>>(), in.at("prefix").get<std::string>()});
    } else {
      TransducerInstance t;
      t.symbols = in.at("symbols").get<std::string>();
      t.revealed = bits_from_string(in.at("revealed").get<std::string>());
      if (include_hidden) t.target = OutputBit(in.at("target").get<int>() == 1);
      set.transducer_instances.push_back(std::move(t));
    }
  }
  return set;
}

// --- predictions and scores ----------------------------------------------------

/// One predictor answer. `error` marks an instance that could not be
/// evaluated (transport failure), which is different from a non-answer.
struct PredictionRecord {
  int dfa_id = 0;
  int instance_idx = 0;
  std::string predictor;
  ParsedAnswer answer;
  double latency_ms = 0;
  std::string error;

  bool unevaluated() const { return !error.empty(); }
};

inline json answer_to_json(const ParsedAnswer& a) {
  switch (a.kind) {
    case ParsedAnswer::Kind::Completion: return a.completion;
    case ParsedAnswer::Kind::Bit: return a.bit.as_int();
    case ParsedAnswer::Kind::NonAnswer: return nullptr;
  }
  return nullptr;
}

inline ParsedAnswer answer_from_json(const json& j) {
  if (j.is_null()) return ParsedAnswer::non_answer();
  if (j.is_string()) return ParsedAnswer::make_completion(j.get<std::string>());
  return ParsedAnswer::make_bit(OutputBit(j.get<int>() == 1));
}

inline json prediction_to_json(const PredictionRecord& p) {
  json j{{"dfa_id", p.dfa_id},
         {"instance_idx", p.instance_idx},
         {"predictor", p.predictor},
         {"answer", answer_to_json(p.answer)},
         {"latency_ms", round_sig10(p.latency_ms)}};
  if (p.answer.truncated) j["truncated"] = true;
  if (p.unevaluated()) j["error"] = p.error;
  return j;
}

inline PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord p;
  p.dfa_id = j.at("dfa_id").get<int>();
  p.instance_idx = j.at("instance_idx").get<int>();
  p.predictor = j.at("predictor").get<std::string>();
  p.answer = answer_from_json(j.at("answer"));
  p.answer.truncated = j.value("truncated", false);
  p.latency_ms = j.value("latency_ms", 0.0);
  p.error = j.value("error", std::string{});
  return p;
}

inline json score_to_json(const DfaScore& s, std::string_view predictor, int unevaluated = 0) {
  json j{{"dfa_id", s.dfa_id},
         {"predictor", std::string(predictor)},
         {"correct", s.correct},
         {"incorrect", s.incorrect},
         {"non_answers", s.non_answers},
         {"unevaluated", unevaluated}};
  if (auto a = s.accuracy())
    j["accuracy"] = round_sig10(*a);
  else
    j["accuracy"] = nullptr;
  return j;
}

inline DfaScore score_from_json(const json& j) {
  DfaScore s;
  s.dfa_id = j.at("dfa_id").get<int>();
  s.correct = j.at("correct").get<int>();
  s.incorrect = j.at("incorrect").get<int>();
  s.non_answers = j.at("non_answers").get<int>();
  return s;
}

inline json aggregate_to_json(const AggregateReport& r) {
  return json{{"predictor", r.predictor},
              {"mean", round_sig10(r.mean)},
              {"ci_low", round_sig10(r.ci_low)},
              {"ci_high", round_sig10(r.ci_high)},
              {"n_dfas", r.n_dfas},
              {"non_answer_rate", round_sig10(r.non_answer_rate)},
              {"na_flag", r.na_flag}};
}

// --- JSONL helpers -------------------------------------------------------------

inline std::string to_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<json> parse_jsonl(std::string_view text) {
  std::vector<json> records;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    if (!line.empty()) records.push_back(json::parse(line));
    pos = end + 1;
  }
  return records;
}

}  // namespace dfa_icl
