#pragma once

#include <stdexcept>
#include <string>

namespace sd2 {

/// Invalid input: bad shapes, malformed configuration, broken preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cell-formula estimator could not produce an admissible competitor.
/// `problem` carries the serialized (JSON) offending cell problem.
class EstimatorError : public std::runtime_error {
 public:
  EstimatorError(const std::string& what, std::string problem)
      : std::runtime_error(what), problem_(std::move(problem)) {}
  const std::string& problem() const { return problem_; }

 private:
  std::string problem_;
};

}  // namespace sd2
