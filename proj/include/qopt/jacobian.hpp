#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qopt/models.hpp"
#include "qopt/param_space.hpp"

namespace qopt {

enum class JacobianMethod {
  kExactLinear,         // constant matrix of a linear map
  kAnalyticPolynomial,  // closed-form gradient of the polynomial family
  kLocalLeastSquares,   // affine fit over the k nearest neighbors
  kGaussianRbf,         // Gaussian RBF interpolant gradient
};

// Jacobians of the QoI map evaluated (or estimated) at a subset of samples.
// jacobians[s] is qoi_dim x param_dim and belongs to sample at_samples[s].
struct JacobianField {
  std::vector<Eigen::MatrixXd> jacobians;
  std::vector<Eigen::Index> at_samples;
  JacobianMethod method = JacobianMethod::kExactLinear;
  int k_neighbors = 0;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(jacobians.size());
  }
};

// Scattered-data Jacobian estimate at one sample from its k nearest
// neighbors (the sample itself excluded for the affine fit, included as an
// interpolation node for the RBF route). Only the two data-driven methods
// are valid here. Throws IllConditionedNeighborhoodError, naming the
// sample, when the neighborhood cannot support the fit.
Eigen::MatrixXd estimate_jacobian(const SampleSet& samples,
                                  Eigen::Index target, int k_neighbors,
                                  JacobianMethod method);

// Data-driven field over the given sample indices.
JacobianField build_jacobian_field(const SampleSet& samples,
                                   std::span<const Eigen::Index> targets,
                                   int k_neighbors, JacobianMethod method,
                                   int threads = 1);

// Exact fields for the closed-form models, at the same sample indices.
JacobianField exact_linear_field(const LinearMapModel& model,
                                 std::span<const Eigen::Index> targets);
JacobianField analytic_polynomial_field(const PolynomialMapModel& model,
                                        const SampleSet& samples,
                                        std::span<const Eigen::Index> targets);

}  // namespace qopt
