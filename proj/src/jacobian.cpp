#include "qopt/jacobian.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "qopt/errors.hpp"

namespace qopt {

namespace {

// Indices of the k nearest neighbors of `target` (target excluded), ordered
// by distance with index as the deterministic tie-break.
std::vector<Eigen::Index> nearest_neighbors(const SampleSet& samples,
                                            Eigen::Index target, int k) {
  const Eigen::Index n = samples.count();
  std::vector<std::pair<double, Eigen::Index>> dist;
  dist.reserve(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == target) continue;
    dist.emplace_back(
        (samples.points.row(i) - samples.points.row(target)).squaredNorm(),
        i);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<Eigen::Index> out(k);
  for (int i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

Eigen::MatrixXd least_squares_jacobian(const SampleSet& samples,
                                       Eigen::Index target,
                                       std::span<const Eigen::Index> nbrs) {
  const int n = static_cast<int>(samples.dim());
  const int k = static_cast<int>(nbrs.size());
  // Affine fit Q(l) ~ a + G (l - l_target) over the neighborhood; the
  // displacement form keeps the normal system well scaled.
  Eigen::MatrixXd design(k, n + 1);
  Eigen::MatrixXd values(k, samples.qoi_dim());
  for (int i = 0; i < k; ++i) {
    design(i, 0) = 1.0;
    design.row(i).tail(n) =
        samples.points.row(nbrs[i]) - samples.points.row(target);
    values.row(i) = samples.qoi_values.row(nbrs[i]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < n + 1) {
    throw IllConditionedNeighborhoodError(
        "affine fit around sample " + std::to_string(target) +
        " is rank deficient; neighbors are degenerate");
  }
  Eigen::MatrixXd coef = qr.solve(values);  // (n+1) x d
  return coef.bottomRows(n).transpose();    // d x n
}

Eigen::MatrixXd rbf_jacobian(const SampleSet& samples, Eigen::Index target,
                             std::span<const Eigen::Index> nbrs) {
  const int n = static_cast<int>(samples.dim());
  const int d = static_cast<int>(samples.qoi_dim());
  // Interpolation nodes: the target plus its neighbors, so the surrogate
  // matches the data exactly where the gradient is taken.
  std::vector<Eigen::Index> nodes(nbrs.begin(), nbrs.end());
  nodes.push_back(target);
  const int p = static_cast<int>(nodes.size());

  // Shape parameter: reciprocal of the mean target-to-neighbor distance.
  double mean_dist = 0;
  for (auto i : nbrs) {
    mean_dist +=
        (samples.points.row(i) - samples.points.row(target)).norm();
  }
  mean_dist /= static_cast<double>(nbrs.size());
  if (!(mean_dist > 0)) {
    throw IllConditionedNeighborhoodError(
        "neighbors of sample " + std::to_string(target) +
        " coincide with it; RBF shape parameter is undefined");
  }
  const double eps2 = 1.0 / (mean_dist * mean_dist);

  // Augmented system: Gaussian kernel blocks plus a linear polynomial tail
  // with the usual moment constraints. The tail makes the interpolant (and
  // hence the gradient) reproduce affine data exactly.
  const int q = n + 1;
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(p + q, p + q);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      const double r2 = (samples.points.row(nodes[a]) -
                         samples.points.row(nodes[b]))
                            .squaredNorm();
      system(a, b) = std::exp(-eps2 * r2);
    }
    system(a, p) = 1.0;
    system(p, a) = 1.0;
    system.block(a, p + 1, 1, n) = samples.points.row(nodes[a]);
    system.block(p + 1, a, n, 1) =
        samples.points.row(nodes[a]).transpose();
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p + q, d);
  for (int a = 0; a < p; ++a) {
    rhs.row(a) = samples.qoi_values.row(nodes[a]);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::MatrixXd coef = lu.solve(rhs);  // kernel weights, then tail
  if (!coef.allFinite() ||
      (system * coef - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
    throw IllConditionedNeighborhoodError(
        "RBF system around sample " + std::to_string(target) +
        " is numerically singular");
  }

  // Gradient of sum_a w_a exp(-eps2 |l - l_a|^2) + c0 + C*l at the target.
  Eigen::MatrixXd jac = coef.bottomRows(n).transpose();
  for (int a = 0; a < p; ++a) {
    const Eigen::RowVectorXd diff =
        samples.points.row(target) - samples.points.row(nodes[a]);
    const double kernel = std::exp(-eps2 * diff.squaredNorm());
    jac += (-2.0 * eps2 * kernel) * coef.row(a).transpose() * diff;
  }
  return jac;
}

void check_targets(const SampleSet& samples,
                   std::span<const Eigen::Index> targets) {
  for (auto t : targets) {
    if (t < 0 || t >= samples.count()) {
      throw InvalidArgumentError("Jacobian site index out of range");
    }
  }
}

}  // namespace

Eigen::MatrixXd estimate_jacobian(const SampleSet& samples,
                                  Eigen::Index target, int k_neighbors,
                                  JacobianMethod method) {
  if (samples.qoi_dim() == 0) {
    throw InvalidArgumentError(
        "samples carry no QoI values; evaluate the model first");
  }
  if (target < 0 || target >= samples.count()) {
    throw InvalidArgumentError("Jacobian site index out of range");
  }
  const int min_k = static_cast<int>(samples.dim()) + 1;
  if (k_neighbors < min_k || k_neighbors >= samples.count()) {
    throw InvalidArgumentError(
        "neighbor count must be in [param_dim + 1, sample count)");
  }
  const auto nbrs = nearest_neighbors(samples, target, k_neighbors);
  switch (method) {
    case JacobianMethod::kLocalLeastSquares:
      return least_squares_jacobian(samples, target, nbrs);
    case JacobianMethod::kGaussianRbf:
      return rbf_jacobian(samples, target, nbrs);
    default:
      throw InvalidArgumentError(
          "estimate_jacobian only supports the data-driven methods");
  }
}

JacobianField build_jacobian_field(const SampleSet& samples,
                                   std::span<const Eigen::Index> targets,
                                   int k_neighbors, JacobianMethod method,
                                   int threads) {
  JacobianField field;
  field.method = method;
  field.k_neighbors = k_neighbors;
  field.at_samples.assign(targets.begin(), targets.end());
  field.jacobians.resize(targets.size());

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t s = lo; s < hi; ++s) {
        field.jacobians[s] =
            estimate_jacobian(samples, targets[s], k_neighbors, method);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  const std::size_t total = targets.size();
  if (threads <= 1 || total < 2) {
    worker(0, total);
  } else {
    const std::size_t t = std::min<std::size_t>(threads, total);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t k = 0; k < t; ++k) {
      pool.emplace_back(worker, total * k / t, total * (k + 1) / t);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return field;
}

JacobianField exact_linear_field(const LinearMapModel& model,
                                 std::span<const Eigen::Index> targets) {
  JacobianField field;
  field.method = JacobianMethod::kExactLinear;
  field.at_samples.assign(targets.begin(), targets.end());
  field.jacobians.assign(targets.size(), model.matrix);
  return field;
}

JacobianField analytic_polynomial_field(
    const PolynomialMapModel& model, const SampleSet& samples,
    std::span<const Eigen::Index> targets) {
  check_targets(samples, targets);
  JacobianField field;
  field.method = JacobianMethod::kAnalyticPolynomial;
  field.at_samples.assign(targets.begin(), targets.end());
  field.jacobians.reserve(targets.size());
  for (auto t : targets) {
    field.jacobians.push_back(
        polynomial_jacobian(model, samples.points.row(t)));
  }
  return field;
}

}  // namespace qopt
