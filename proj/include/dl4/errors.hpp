#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dl4 {

// A value outside the domain of a knob, switch or function argument.
class DomainError : public std::invalid_argument {
 public:
  DomainError(std::string what, std::string param = {})
      : std::invalid_argument(std::move(what)), param_(std::move(param)) {}
  const std::string& param() const noexcept { return param_; }

 private:
  std::string param_;
};

// Text input (step file, timed script, check spec) that cannot be parsed.
// line() is 1-based; 0 when the error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProcessingError : public std::runtime_error {
 public:
  ProcessingError(const std::string& what, std::size_t sample_index)
      : std::runtime_error(what + " at sample " + std::to_string(sample_index)),
        sample_index_(sample_index) {}
  std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

// A measurement that could not be made on the given signal.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dl4
