#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qopt/errors.hpp"
#include "qopt/jacobian.hpp"

namespace qopt {

// Relative threshold below which a singular value counts as zero: a Jacobian
// with sigma_min < tol * sigma_max is treated as rank deficient.
inline constexpr double kRankTolerance = 1e-12;

// Axis-aligned uncertainty box around a nominal observation; one positive
// width per QoI component in play.
class UncertaintyBox {
 public:
  explicit UncertaintyBox(Eigen::VectorXd widths);
  const Eigen::VectorXd& widths() const { return widths_; }
  int dim() const { return static_cast<int>(widths_.size()); }
  double measure() const;  // product of widths

 private:
  Eigen::VectorXd widths_;
};

// Product of all singular values of J (m x n, m <= n). For full-row-rank J
// this equals the m-volume of the parallelepiped spanned by the rows.
double singular_value_product(const Eigen::MatrixXd& jac);

// Volume of the inverse cell generated by the uncertainty box, divided by
// the box measure: box_measure / prod(sigma). Throws
// RankDeficientJacobianError when J is not full row rank.
double local_measure(const Eigen::MatrixXd& jac, double box_measure,
                     double rank_tol = kRankTolerance);

// Skewness of the inverse cell: the worst ratio of a row's length to its
// component orthogonal to the remaining rows,
//   max_k |j_k| * prod(sigma(J with row k removed)) / prod(sigma(J)).
// Equals 1 exactly when the rows are mutually orthogonal; single-row maps
// are never skewed, so m = 1 returns 1. Throws on rank deficiency.
double local_skewness(const Eigen::MatrixXd& jac,
                      double rank_tol = kRankTolerance);

// How many rank-deficient sites an average may skip before aborting.
struct SkipPolicy {
  double max_skip_fraction = 0.10;
};

struct AverageMetrics {
  double avg_measure = 0;
  double avg_skewness = 0;
  Eigen::Index sites_used = 0;
  Eigen::Index sites_skipped = 0;
};

// Averages local measure and skewness over a Jacobian field, restricted to
// the QoI rows named in `subset`. Sites where the extracted Jacobian is rank
// deficient are skipped and counted; if every site is skipped this throws
// NoValidSitesError, and if more than the policy fraction is skipped it
// throws TooManySkippedSitesError.
AverageMetrics average_metrics(const JacobianField& field,
                               std::span<const int> subset,
                               const UncertaintyBox& box,
                               const SkipPolicy& policy = {},
                               double rank_tol = kRankTolerance);

// One scored candidate design: a sorted QoI subset with its averaged
// metrics and distances to the ideal point. `distance` uses the configured
// weight omega; `distance_sum` is the plain sum of the two bounded
// coordinates (twice the omega = 1/2 value), kept because summary tables
// conventionally report that scale.
struct DesignScore {
  std::vector<int> subset;
  double avg_measure = 0;
  double avg_skewness = 0;
  double distance = 0;
  double distance_sum = 0;
};

}  // namespace qopt
