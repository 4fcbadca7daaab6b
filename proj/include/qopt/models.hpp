#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "qopt/param_space.hpp"

namespace qopt {

// Shared interface for forward maps: one evaluation yields all candidate
// QoI components at once, so callers never pay per-component solves.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual int param_dim() const = 0;
  virtual int qoi_dim() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const = 0;
};

// Evaluates the model at every sample point, filling set.qoi_values. With
// threads > 1 rows are computed in parallel; output is identical either way
// because each row depends only on its own sample.
void fill_qoi(SampleSet& set, const ForwardModel& model, int threads = 1);

// ---------------------------------------------------------------------------
// Linear map Q(lambda) = A * lambda.

struct LinearMapModel {
  Eigen::MatrixXd matrix;  // qoi_dim x param_dim
};

Eigen::VectorXd eval_linear(const LinearMapModel& model,
                            const Eigen::VectorXd& lambda);

// True when every pair of rows is linearly independent, i.e. no two QoI
// respond to parameters along the same direction. A map that fails this has
// redundant candidate pairs that carry no joint information.
bool rows_pairwise_independent(const LinearMapModel& model,
                               double tol = 1e-12);

class LinearForwardModel final : public ForwardModel {
 public:
  explicit LinearForwardModel(LinearMapModel model);
  int param_dim() const override {
    return static_cast<int>(model_.matrix.cols());
  }
  int qoi_dim() const override {
    return static_cast<int>(model_.matrix.rows());
  }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const override;
  const LinearMapModel& model() const { return model_; }

 private:
  LinearMapModel model_;
};

// ---------------------------------------------------------------------------
// Two-parameter polynomial family. Component j is
//   Q_j = r_j0*l1^5 + r_j1*l2^3 + r_j2*l1^3*l2 + r_j3*l1 + r_j4*l2 + r_j5
// with coefficients drawn uniformly from [-1, 1].

inline constexpr int kPolynomialTermCount = 6;

struct PolynomialMapModel {
  Eigen::MatrixXd coefficients;  // qoi_dim x 6, rows ordered as above
};

// Seeded coefficient draw; rows are filled in order, one term at a time.
PolynomialMapModel make_random_polynomial_model(int qoi_dim,
                                                std::uint64_t seed);

Eigen::VectorXd eval_polynomial(const PolynomialMapModel& model,
                                const Eigen::VectorXd& lambda);

// Exact gradient of every component; rows match eval_polynomial's output.
Eigen::MatrixXd polynomial_jacobian(const PolynomialMapModel& model,
                                    const Eigen::VectorXd& lambda);

class PolynomialForwardModel final : public ForwardModel {
 public:
  explicit PolynomialForwardModel(PolynomialMapModel model);
  int param_dim() const override { return 2; }
  int qoi_dim() const override {
    return static_cast<int>(model_.coefficients.rows());
  }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const override;
  const PolynomialMapModel& model() const { return model_; }

 private:
  PolynomialMapModel model_;
};

}  // namespace qopt
