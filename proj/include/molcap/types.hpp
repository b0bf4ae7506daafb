#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace molcap {

/// Molar amounts released per slot, indexed from slot 0.
using ReleaseSequence = std::vector<double>;

/// Receiver molecule counts, one per slot.
using ReceivedSeries = std::vector<std::int64_t>;

/// Production-function misconfiguration detected at runtime.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A release exceeding the storage level where that is an error (not a result).
class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation invoked outside its stated hypotheses.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative solver failed to reach its tolerance; carries the last gap.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_gap)
      : std::runtime_error(what), last_gap_(last_gap) {}
  double last_gap() const { return last_gap_; }

 private:
  double last_gap_;
};

/// Invalid or degenerate domination certificate supplied to a consumer.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Absolute slack used everywhere a release is compared against storage.
inline constexpr double kFeasibilityTol = 1e-9;

/// Storage levels beyond this are treated as an unbounded reservoir.
inline constexpr double kDivergenceThreshold = 1e9;

}  // namespace molcap
