#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dfa_icl/dfa.hpp"
#include "dfa_icl/errors.hpp"
#include "dfa_icl/taskgen.hpp"
#include "dfa_icl/templates_data.hpp"

namespace dfa_icl {

enum class PromptFormat { Basic, BasicCot, MoreExpl, DfaCot, RedGreen, BasicCommas };

inline constexpr std::array<PromptFormat, 6> kAllPromptFormats{PromptFormat::Basic,  PromptFormat::BasicCot,
                                                               PromptFormat::MoreExpl, PromptFormat::DfaCot,
                                                               PromptFormat::RedGreen, PromptFormat::BasicCommas};

inline std::string_view to_string(PromptFormat f) {
  switch (f) {
    case PromptFormat::Basic: return "basic";
    case PromptFormat::BasicCot: return "basic-cot";
    case PromptFormat::MoreExpl: return "more-expl";
    case PromptFormat::DfaCot: return "dfa-cot";
    case PromptFormat::RedGreen: return "red-green";
    case PromptFormat::BasicCommas: return "basic-commas";
  }
  return "?";
}

inline PromptFormat prompt_format_from_string(std::string_view s) {
  for (PromptFormat f : kAllPromptFormats)
    if (to_string(f) == s) return f;
  throw std::invalid_argument("unknown prompt format: " + std::string(s));
}

/// Formats that ask for reasoning followed by an <answer> tag.
constexpr bool is_tagged_format(PromptFormat f) {
  return f == PromptFormat::BasicCot || f == PromptFormat::DfaCot || f == PromptFormat::RedGreen;
}

constexpr bool supports(PromptFormat f, TaskKind kind) {
  return !(f == PromptFormat::BasicCommas && kind == TaskKind::Transducer);
}

/// Raw template bytes for prompts/<name>.tmpl.
inline std::string_view template_text(std::string_view name) {
  for (const auto& [key, text] : generated::kTemplates)
    if (key == name) return text;
  throw std::out_of_range("no prompt template named " + std::string(name));
}

inline std::string template_name(TaskKind kind, PromptFormat f) {
  std::string name = kind == TaskKind::SequenceCompletion ? "sc_" : "transducer_";
  for (char c : to_string(f)) name += c == '-' ? '_' : c;
  return name;
}

namespace detail {

inline void replace_all(std::string& text, std::string_view marker, std::string_view value) {
  for (std::size_t pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos + value.size()))
    text.replace(pos, marker.size(), value);
}

inline std::string with_commas(std::string_view letters) {
  std::string out;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i > 0) out += ", ";
    out += letters[i];
  }
  return out;
}

inline std::string red_green_steps(const TransducerInstance& instance) {
  std::string out;
  for (std::size_t i = 0; i < instance.symbols.size(); ++i) {
    out += i == 0 ? "You walk" : "\nThen, you walk";
    out += " through a portal labeled \"";
    out += static_cast<char>(std::toupper(static_cast<unsigned char>(instance.symbols[i])));
    out += "\" and end up in a ";
    if (i < instance.revealed.size())
      out += instance.revealed[i].value() ? "green room." : "red room.";
    else
      out += "...";
  }
  return out;
}

}  // namespace detail

/// Fills the template for `format`. Placeholders: {EXAMPLES} {PREFIX}.
inline std::string render(const SequenceCompletionInstance& instance, PromptFormat format) {
  std::string text(template_text(template_name(TaskKind::SequenceCompletion, format)));
  const bool commas = format == PromptFormat::BasicCommas;
  std::string examples;
  for (std::size_t i = 0; i < instance.examples.size(); ++i) {
    if (i > 0) examples += '\n';
    examples += commas ? detail::with_commas(instance.examples[i]) : instance.examples[i];
  }
  const std::string prefix = commas ? detail::with_commas(instance.prefix) + "," : instance.prefix;
  detail::replace_all(text, "{EXAMPLES}", examples);
  detail::replace_all(text, "{PREFIX}", prefix);
  return text;
}

/// Placeholders: {TRANSDUCER_PREFIX} {INPUT_SEQUENCE} {OUTPUT_SEQUENCE}
/// {STEP_SENTENCES}.
inline std::string render(const TransducerInstance& instance, PromptFormat format) {
  if (!supports(format, TaskKind::Transducer))
    throw FormatMismatch(std::string(to_string(format)) + " has no transducer variant");
  if (instance.symbols.size() != instance.revealed.size() + 1)
    throw std::invalid_argument("transducer instance needs exactly one unrevealed output");
  std::string text(template_text(template_name(TaskKind::Transducer, format)));

  std::string interleaved;
  std::string outputs;
  for (std::size_t i = 0; i < instance.symbols.size(); ++i) {
    if (i > 0) interleaved += ", ";
    interleaved += instance.symbols[i];
    if (i < instance.revealed.size()) {
      interleaved += ", ";
      interleaved += instance.revealed[i].to_char();
      outputs += instance.revealed[i].to_char();
      outputs += ", ";
    }
  }
  detail::replace_all(text, "{TRANSDUCER_PREFIX}", interleaved);
  detail::replace_all(text, "{INPUT_SEQUENCE}", detail::with_commas(instance.symbols));
  detail::replace_all(text, "{OUTPUT_SEQUENCE}", outputs);
  detail::replace_all(text, "{STEP_SENTENCES}", detail::red_green_steps(instance));
  return text;
}

inline std::string render_regex_control(std::string_view text) {
  std::string prompt(template_text("regex_control"));
  detail::replace_all(prompt, "{STRING}", text);
  return prompt;
}

// --- answer parsing ----------------------------------------------------------

/// A response reduced to a prediction, or a non-answer when nothing
/// well-formed could be extracted.
struct ParsedAnswer {
  enum class Kind { Completion, Bit, NonAnswer };

  Kind kind = Kind::NonAnswer;
  std::string completion;
  OutputBit bit;
  bool truncated = false;  // completion was cut to 5 letters

  static ParsedAnswer make_completion(std::string text, bool truncated = false) {
    ParsedAnswer a;
    a.kind = Kind::Completion;
    a.completion = std::move(text);
    a.truncated = truncated;
    return a;
  }
  static ParsedAnswer make_bit(OutputBit b) {
    ParsedAnswer a;
    a.kind = Kind::Bit;
    a.bit = b;
    return a;
  }
  static ParsedAnswer non_answer() { return {}; }

  bool is_completion() const { return kind == Kind::Completion; }
  bool is_bit() const { return kind == Kind::Bit; }
  bool is_non_answer() const { return kind == Kind::NonAnswer; }

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

namespace detail {

inline constexpr std::size_t kMaxCompletion = 5;

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Body of the last complete <answer>...</answer> span.
inline std::optional<std::string_view> last_answer_tag(std::string_view text) {
  static constexpr std::string_view open = "<answer>";
  static constexpr std::string_view close = "</answer>";
  std::optional<std::string_view> found;
  for (std::size_t pos = text.find(open); pos != std::string_view::npos; pos = text.find(open, pos + 1)) {
    const std::size_t body = pos + open.size();
    const std::size_t end = text.find(close, body);
    if (end == std::string_view::npos) break;
    found = text.substr(body, end - body);
  }
  return found;
}

inline ParsedAnswer completion_or_non_answer(std::string letters) {
  if (letters.empty()) return ParsedAnswer::non_answer();
  const bool truncated = letters.size() > kMaxCompletion;
  if (truncated) letters.resize(kMaxCompletion);
  return ParsedAnswer::make_completion(std::move(letters), truncated);
}

}  // namespace detail

/// Reduces a raw response to a ParsedAnswer. Never throws.
///
/// Tagged formats read the last <answer> span: "0"/"1" for transducer
/// prompts ("green"/"red" for red-green), letters for completions. Untagged
/// formats read the immediate continuation after leading whitespace: the
/// first 0/1 before any letter, or the leading run of a/b/c letters
/// (comma-separated letters for basic-commas). Completions longer than five
/// letters are truncated.
inline ParsedAnswer parse_answer(std::string_view response, PromptFormat format, TaskKind kind) {
  if (is_tagged_format(format)) {
    const auto tag = detail::last_answer_tag(response);
    if (!tag) return ParsedAnswer::non_answer();
    const std::string body = detail::lower(detail::trim(*tag));
    if (kind == TaskKind::Transducer) {
      if (format == PromptFormat::RedGreen) {
        if (body == "green") return ParsedAnswer::make_bit(OutputBit(true));
        if (body == "red") return ParsedAnswer::make_bit(OutputBit(false));
        return ParsedAnswer::non_answer();
      }
      if (body == "0" || body == "1") return ParsedAnswer::make_bit(OutputBit(body == "1"));
      return ParsedAnswer::non_answer();
    }
    if (!is_symbol_string(body)) return ParsedAnswer::non_answer();
    return detail::completion_or_non_answer(body);
  }

  if (kind == TaskKind::Transducer) {
    for (char c : response) {
      if (c == '0' || c == '1') return ParsedAnswer::make_bit(OutputBit(c == '1'));
      if (std::isalpha(static_cast<unsigned char>(c))) break;
    }
    return ParsedAnswer::non_answer();
  }

  std::string_view rest = response;
  while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
  std::string letters;
  if (format == PromptFormat::BasicCommas) {
    while (!rest.empty() && is_symbol_char(rest.front())) {
      letters += rest.front();
      rest.remove_prefix(1);
      std::size_t skip = 0;
      while (skip < rest.size() && rest[skip] == ' ') ++skip;
      if (skip < rest.size() && rest[skip] == ',') {
        ++skip;
        while (skip < rest.size() && rest[skip] == ' ') ++skip;
      }
      if (skip < rest.size() && is_symbol_char(rest[skip])) {
        rest.remove_prefix(skip);
      } else {
        break;
      }
    }
  } else {
    while (!rest.empty() && is_symbol_char(rest.front())) {
      letters += rest.front();
      rest.remove_prefix(1);
    }
  }
  return detail::completion_or_non_answer(std::move(letters));
}

/// YES/NO as the first whitespace-delimited token, case-insensitive, trailing
/// punctuation ignored.
inline std::optional<bool> parse_yes_no(std::string_view response) {
  std::string_view rest = detail::trim(response);
  const std::size_t end = std::min(rest.size(), rest.find_first_of(" \t\r\n"));
  std::string token = detail::lower(rest.substr(0, end));
  while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) token.pop_back();
  if (token == "yes") return true;
  if (token == "no") return false;
  return std::nullopt;
}

}  // namespace dfa_icl
