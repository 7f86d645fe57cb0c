#pragma once

#include <stdexcept>
#include <string>

namespace rca {

// Exit codes shared by every CLI subcommand.
enum class ExitCode : int {
  kOk = 0,
  kCheckFailure = 1,
  kParse = 2,
  kDimension = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kCheckFailure; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kDimension; }
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Inner-modality loss called with zero caption nouns.
class EmptyContextError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientVocabularyError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vector where a cosine is required.
class DegenerateEmbeddingError : public Error {
 public:
  using Error::Error;
};

class InvalidWeightError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kParse; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  explicit ParseError(const std::string& message) : Error(message), line_(0) {}

  std::size_t line() const noexcept { return line_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kParse; }

 private:
  std::size_t line_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rca
