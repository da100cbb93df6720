#ifndef BCS_ERRORS_HPP_
#define BCS_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bcs {

// A posterior or evidence quantity required a symmetric positive-definite
// factorization that failed. Carries the active set of the offending state.
class IllConditionedState : public std::runtime_error {
 public:
  IllConditionedState(const std::string& what, std::vector<Eigen::Index> active)
      : std::runtime_error(what), active_(std::move(active)) {}
  const std::vector<Eigen::Index>& active() const { return active_; }

 private:
  std::vector<Eigen::Index> active_;
};

// An active term's leave-one-out conversion is undefined (alpha_n <= S~_n).
class NumericalDegeneracy : public std::runtime_error {
 public:
  NumericalDegeneracy(const std::string& what, Eigen::Index term)
      : std::runtime_error(what), term_(term) {}
  Eigen::Index term() const { return term_; }

 private:
  Eigen::Index term_;
};

// The noise-variance re-estimate has a non-positive denominator.
class DegenerateUpdate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcs

#endif  // BCS_ERRORS_HPP_
