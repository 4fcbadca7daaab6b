#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qopt/models.hpp"
#include "qopt/param_space.hpp"

namespace qopt {

// Monte Carlo measure of the symmetric difference between two events
// (set indicators) on the parameter box: mu{x : a(x) != b(x)}. The
// reference stream is fixed by the seed, so the estimate is deterministic.
double symmetric_difference_measure(
    const std::function<bool(const Eigen::VectorXd&)>& event_a,
    const std::function<bool(const Eigen::VectorXd&)>& event_b,
    const ParameterBox& box, Eigen::Index reference_count,
    std::uint64_t seed);

struct ConvergenceRow {
  Eigen::Index sample_count = 0;
  double mean_error = 0;    // across repetitions
  double stderr_error = 0;  // standard error of that mean
};

struct ConvergenceResult {
  std::string map_name;
  std::vector<ConvergenceRow> rows;
  double fitted_slope = 0;  // least-squares slope of log(mean) vs log(N)
};

// Measures how fast the sample-cell approximation of an inverse event
// converges: for each sample count, draw `repetitions` independent site
// sets, approximate the event {lambda : Q(lambda) in B} by the union of
// Voronoi cells whose site maps into B, and record the measure of the
// mismatch against the exact event, estimated with `reference_count`
// common-random reference points per repetition.
ConvergenceResult convergence_study(
    const ForwardModel& map, std::string map_name,
    const Eigen::VectorXd& event_lower, const Eigen::VectorXd& event_upper,
    const ParameterBox& box, const std::vector<Eigen::Index>& sample_counts,
    int repetitions, Eigen::Index reference_count, std::uint64_t seed,
    int threads = 1);

// Least-squares slope of log(y) against log(x); the convergence order.
double fit_log_slope(const std::vector<double>& x,
                     const std::vector<double>& y);

}  // namespace qopt
