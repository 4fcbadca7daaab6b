#include "qopt/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

namespace qopt {

UncertaintyBox::UncertaintyBox(Eigen::VectorXd widths)
    : widths_(std::move(widths)) {
  if (widths_.size() == 0) {
    throw InvalidArgumentError("uncertainty box needs at least one width");
  }
  for (Eigen::Index i = 0; i < widths_.size(); ++i) {
    if (!(widths_[i] > 0) || !std::isfinite(widths_[i])) {
      throw InvalidArgumentError("uncertainty width " + std::to_string(i) +
                                 " must be positive");
    }
  }
}

double UncertaintyBox::measure() const {
  double m = 1.0;
  for (Eigen::Index i = 0; i < widths_.size(); ++i) m *= widths_[i];
  return m;
}

namespace {

double sigma_product(const Eigen::MatrixXd& jac, double rank_tol,
                     bool* full_rank) {
  const Eigen::Index m = jac.rows();
  if (m > jac.cols()) {  // more rows than columns can never be full row rank
    *full_rank = false;
    return 0.0;
  }
  if (m == 1) {
    const double norm = jac.row(0).norm();
    *full_rank = norm > 0 && std::isfinite(norm);
    return norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sigma = svd.singularValues();
  const double smax = sigma[0];
  const double smin = sigma[sigma.size() - 1];
  if (!(smax > 0) || !std::isfinite(smax) || smin < rank_tol * smax) {
    *full_rank = false;
    return 0.0;
  }
  double p = 1.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) p *= sigma[i];
  *full_rank = true;
  return p;
}

// Computes both local metrics from one pass over J. Returns false when J is
// rank deficient; throws only for genuinely broken input (non-finite).
bool local_metrics(const Eigen::MatrixXd& jac, double box_measure,
                   double rank_tol, double* measure, double* skewness) {
  if (!jac.allFinite()) {
    throw NumericalFailureError("Jacobian contains non-finite entries");
  }
  bool ok = false;
  const double p = sigma_product(jac, rank_tol, &ok);
  if (!ok) return false;
  *measure = box_measure / p;

  const Eigen::Index m = jac.rows();
  if (m == 1) {
    *skewness = 1.0;  // a single direction cannot be skewed
    return true;
  }
  if (m == 2) {
    // Removing either row leaves the other, so both terms of the max share
    // the same product of row norms.
    *skewness = jac.row(0).norm() * jac.row(1).norm() / p;
    return true;
  }
  double worst = 0.0;
  Eigen::MatrixXd sub(m - 1, jac.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i != k) sub.row(r++) = jac.row(i);
    }
    bool sub_ok = false;
    const double p_sub = sigma_product(sub, rank_tol, &sub_ok);
    if (!sub_ok) return false;  // cannot happen for full-rank J, be safe
    worst = std::max(worst, jac.row(k).norm() * p_sub / p);
  }
  *skewness = worst;
  return true;
}

}  // namespace

double singular_value_product(const Eigen::MatrixXd& jac) {
  if (jac.rows() == 0 || jac.cols() == 0) {
    throw InvalidArgumentError("Jacobian is empty");
  }
  if (jac.rows() == 1) return jac.row(0).norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  double p = 1.0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    p *= svd.singularValues()[i];
  }
  return p;
}

double local_measure(const Eigen::MatrixXd& jac, double box_measure,
                     double rank_tol) {
  if (!(box_measure > 0)) {
    throw InvalidArgumentError("uncertainty box measure must be positive");
  }
  double measure = 0, skew = 0;
  if (!local_metrics(jac, box_measure, rank_tol, &measure, &skew)) {
    throw RankDeficientJacobianError(
        "Jacobian is rank deficient; inverse cell volume is unbounded");
  }
  return measure;
}

double local_skewness(const Eigen::MatrixXd& jac, double rank_tol) {
  double measure = 0, skew = 0;
  if (!local_metrics(jac, 1.0, rank_tol, &measure, &skew)) {
    throw RankDeficientJacobianError(
        "Jacobian is rank deficient; skewness is undefined");
  }
  return skew;
}

AverageMetrics average_metrics(const JacobianField& field,
                               std::span<const int> subset,
                               const UncertaintyBox& box,
                               const SkipPolicy& policy, double rank_tol) {
  if (field.size() == 0) {
    throw InvalidArgumentError("Jacobian field is empty");
  }
  const Eigen::Index d = field.jacobians.front().rows();
  if (subset.empty() || static_cast<Eigen::Index>(subset.size()) > d) {
    throw InvalidArgumentError("QoI subset size must be in [1, qoi_dim]");
  }
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= d) {
      throw InvalidArgumentError("QoI subset index out of range");
    }
    if (i > 0 && subset[i] <= subset[i - 1]) {
      throw InvalidArgumentError("QoI subset must be strictly increasing");
    }
  }
  if (box.dim() != static_cast<int>(subset.size())) {
    throw InvalidArgumentError(
        "uncertainty box dimension must match the subset size");
  }

  const double mu_box = box.measure();
  const Eigen::Index m = static_cast<Eigen::Index>(subset.size());
  Eigen::MatrixXd rows(m, field.jacobians.front().cols());
  AverageMetrics out;
  double sum_measure = 0, sum_skew = 0;
  for (const auto& jac : field.jacobians) {
    for (Eigen::Index r = 0; r < m; ++r) rows.row(r) = jac.row(subset[r]);
    double measure = 0, skew = 0;
    if (local_metrics(rows, mu_box, rank_tol, &measure, &skew)) {
      sum_measure += measure;
      sum_skew += skew;
      ++out.sites_used;
    } else {
      ++out.sites_skipped;
    }
  }
  if (out.sites_used == 0) {
    throw NoValidSitesError(
        "every Jacobian site is rank deficient for this subset");
  }
  const double total = static_cast<double>(field.size());
  if (static_cast<double>(out.sites_skipped) >
      policy.max_skip_fraction * total) {
    throw TooManySkippedSitesError(
        "skipped " + std::to_string(out.sites_skipped) + " of " +
        std::to_string(field.size()) +
        " Jacobian sites; subset is unreliable");
  }
  out.avg_measure = sum_measure / static_cast<double>(out.sites_used);
  out.avg_skewness = sum_skew / static_cast<double>(out.sites_used);
  return out;
}

}  // namespace qopt
