#pragma once

#include <stdexcept>
#include <string>

namespace dfa_icl {

/// Base for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rejection loop hit its cap. Carries the number of rejections seen.
class SamplingExhausted : public Error {
 public:
  explicit SamplingExhausted(int rejections, const std::string& what)
      : Error(what + " (" + std::to_string(rejections) + " rejections)"), rejections_(rejections) {}
  int rejections() const noexcept { return rejections_; }

 private:
  int rejections_;
};

/// The generating DFA failed a task-level validity rule and must be resampled.
class DfaRejected : public Error {
 public:
  using Error::Error;
};

/// A sampler that should terminate with probability one did not. Indicates a
/// logic or seeding bug rather than bad luck.
class SamplingDefect : public Error {
 public:
  using Error::Error;
};

class NoConsistentDfa : public Error {
 public:
  using Error::Error;
};

class FormatMismatch : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MismatchedDfaSets : public Error {
 public:
  using Error::Error;
};

class HashMismatch : public Error {
 public:
  using Error::Error;
};

class SchemaVersionUnsupported : public Error {
 public:
  using Error::Error;
};

class IncompleteRun : public Error {
 public:
  using Error::Error;
};

class MissingArtifact : public Error {
 public:
  using Error::Error;
};

class UnknownPredictor : public Error {
 public:
  using Error::Error;
};

}  // namespace dfa_icl
