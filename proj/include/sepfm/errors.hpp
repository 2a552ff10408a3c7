#pragma once

#include <stdexcept>
#include <string>

namespace sepfm {

// Geometry that cannot support the requested computation: coincident points,
// rank-deficient linear systems, an epipole sitting on a control line, etc.
// Callers inside sampling loops typically catch this and draw a new sample.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// A matrix had full numerical rank where a rank deficiency is required.
class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

// No model could be produced at all (e.g. every sample was degenerate).
// Estimators that do produce a model but fail quality gates return a report
// with success == false instead of throwing.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// Synthetic scene generation exhausted its rejection-sampling budget.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

}  // namespace sepfm
