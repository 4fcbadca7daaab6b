#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qopt/jacobian.hpp"
#include "qopt/metrics.hpp"

namespace qopt {

enum class Objective {
  kMinMeasure,   // tightest average inverse-cell volume
  kMinSkewness,  // best-conditioned inverse cells
  kMinDistance,  // balanced: closest to the ideal point (skew 1, measure 0)
  kMaxDistance,  // adversarial pick, useful for sanity checks
};

// Distance from (avg_skewness, avg_measure) to the ideal design point
// (skewness 1, measure 0) after mapping both half-lines through t/(1+t),
// which bounds every distance into [0, 1):
//   omega * (S-1)/(1+(S-1)) + (1-omega) * M/(1+M).
double bounded_distance_to_ideal(double avg_skewness, double avg_measure,
                                 double omega);

struct OptimizationSettings {
  int subset_size = 2;
  Eigen::VectorXd qoi_widths;  // one uncertainty width per QoI column
  double omega = 0.5;
  std::size_t candidate_cap = 1'000'000;
  SkipPolicy skip;
  int threads = 1;
};

// Exhaustively scores every subset of `subset_size` QoI columns. Throws
// TooManyCandidatesError when C(d, m) exceeds the cap (pick a smaller m or
// fewer candidates). The result is sorted by distance, ties broken
// lexicographically by subset, and is deterministic for fixed inputs
// regardless of thread count.
std::vector<DesignScore> enumerate_and_score(
    const JacobianField& field, const OptimizationSettings& settings);

// Non-dominated candidates in the (avg_skewness, avg_measure) plane,
// smaller-is-better in both, sorted by skewness ascending. Duplicated
// coordinate pairs are all kept: neither strictly beats the other.
std::vector<DesignScore> pareto_front(std::span<const DesignScore> scores);

// Winner under an objective; ties break lexicographically by subset.
const DesignScore& select_by_objective(std::span<const DesignScore> scores,
                                       Objective objective);

}  // namespace qopt
