#include "qopt/models.hpp"

#include <atomic>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "qopt/errors.hpp"
#include "qopt/rng.hpp"

namespace qopt {

void fill_qoi(SampleSet& set, const ForwardModel& model, int threads) {
  if (set.dim() != model.param_dim()) {
    throw InvalidArgumentError("sample dimension does not match the model");
  }
  const Eigen::Index n = set.count();
  set.qoi_values.resize(n, model.qoi_dim());
  auto worker = [&](Eigen::Index lo, Eigen::Index hi) {
    for (Eigen::Index i = lo; i < hi; ++i) {
      try {
        set.qoi_values.row(i) = model.evaluate(set.points.row(i)).transpose();
      } catch (const std::exception& e) {
        throw NumericalFailureError("model evaluation failed at sample " +
                                    std::to_string(i) + ": " + e.what());
      }
    }
  };
  if (threads <= 1 || n < 2) {
    worker(0, n);
    return;
  }
  const int t = std::min<Eigen::Index>(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  pool.reserve(t);
  for (int k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      try {
        worker(n * k / t, n * (k + 1) / t);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

Eigen::VectorXd eval_linear(const LinearMapModel& model,
                            const Eigen::VectorXd& lambda) {
  if (lambda.size() != model.matrix.cols()) {
    throw InvalidArgumentError("parameter vector has wrong dimension");
  }
  return model.matrix * lambda;
}

bool rows_pairwise_independent(const LinearMapModel& model, double tol) {
  const auto& A = model.matrix;
  for (Eigen::Index a = 0; a < A.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < A.rows(); ++b) {
      // Two rows are dependent iff their 2 x n stack has rank < 2, i.e. the
      // Gram determinant vanishes relative to the row norms.
      const double g11 = A.row(a).squaredNorm();
      const double g22 = A.row(b).squaredNorm();
      const double g12 = A.row(a).dot(A.row(b));
      if (g11 * g22 - g12 * g12 <= tol * g11 * g22) return false;
    }
  }
  return true;
}

LinearForwardModel::LinearForwardModel(LinearMapModel model)
    : model_(std::move(model)) {
  if (model_.matrix.rows() == 0 || model_.matrix.cols() == 0) {
    throw InvalidArgumentError("linear map matrix is empty");
  }
}

Eigen::VectorXd LinearForwardModel::evaluate(
    const Eigen::VectorXd& lambda) const {
  return eval_linear(model_, lambda);
}

PolynomialMapModel make_random_polynomial_model(int qoi_dim,
                                                std::uint64_t seed) {
  if (qoi_dim <= 0) {
    throw InvalidArgumentError("polynomial model needs at least one QoI");
  }
  std::mt19937_64 gen(seed);
  PolynomialMapModel model;
  model.coefficients.resize(qoi_dim, kPolynomialTermCount);
  for (int i = 0; i < qoi_dim; ++i) {
    for (int j = 0; j < kPolynomialTermCount; ++j) {
      model.coefficients(i, j) = rng::uniform_double(gen, -1.0, 1.0);
    }
  }
  return model;
}

namespace {

void check_poly_args(const PolynomialMapModel& model,
                     const Eigen::VectorXd& lambda) {
  if (model.coefficients.cols() != kPolynomialTermCount ||
      model.coefficients.rows() == 0) {
    throw InvalidArgumentError("polynomial coefficient table has wrong shape");
  }
  if (lambda.size() != 2) {
    throw InvalidArgumentError("polynomial model is two-parameter");
  }
}

}  // namespace

Eigen::VectorXd eval_polynomial(const PolynomialMapModel& model,
                                const Eigen::VectorXd& lambda) {
  check_poly_args(model, lambda);
  const double l1 = lambda[0], l2 = lambda[1];
  const double l1_3 = l1 * l1 * l1;
  Eigen::VectorXd basis(kPolynomialTermCount);
  basis << l1_3 * l1 * l1, l2 * l2 * l2, l1_3 * l2, l1, l2, 1.0;
  return model.coefficients * basis;
}

Eigen::MatrixXd polynomial_jacobian(const PolynomialMapModel& model,
                                    const Eigen::VectorXd& lambda) {
  check_poly_args(model, lambda);
  const double l1 = lambda[0], l2 = lambda[1];
  const double l1_2 = l1 * l1;
  Eigen::VectorXd d1(kPolynomialTermCount), d2(kPolynomialTermCount);
  d1 << 5.0 * l1_2 * l1_2, 0.0, 3.0 * l1_2 * l2, 1.0, 0.0, 0.0;
  d2 << 0.0, 3.0 * l2 * l2, l1_2 * l1, 0.0, 1.0, 0.0;
  Eigen::MatrixXd jac(model.coefficients.rows(), 2);
  jac.col(0) = model.coefficients * d1;
  jac.col(1) = model.coefficients * d2;
  return jac;
}

PolynomialForwardModel::PolynomialForwardModel(PolynomialMapModel model)
    : model_(std::move(model)) {
  if (model_.coefficients.cols() != kPolynomialTermCount ||
      model_.coefficients.rows() == 0) {
    throw InvalidArgumentError("polynomial coefficient table has wrong shape");
  }
}

Eigen::VectorXd PolynomialForwardModel::evaluate(
    const Eigen::VectorXd& lambda) const {
  return eval_polynomial(model_, lambda);
}

}  // namespace qopt
