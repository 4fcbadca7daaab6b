#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "qopt/metrics.hpp"
#include "qopt/rng.hpp"

using namespace qopt;

namespace {

Eigen::MatrixXd random_full_rank(std::mt19937_64& gen, int m, int n) {
  for (;;) {
    Eigen::MatrixXd jac(m, n);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) {
        jac(r, c) = rng::uniform_double(gen, -1.0, 1.0);
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    if (svd.singularValues()(m - 1) > 1e-6 * svd.singularValues()(0)) {
      return jac;
    }
  }
}

// Oracle route for the singular-value product: the Gram determinant.
double gram_volume(const Eigen::MatrixXd& jac) {
  return std::sqrt((jac * jac.transpose()).determinant());
}

// Oracle route for skewness: per-row explicit orthogonal projection onto the
// complement of the span of the remaining rows.
double projection_skewness(const Eigen::MatrixXd& jac) {
  const int m = static_cast<int>(jac.rows());
  if (m == 1) return 1.0;
  double worst = 0;
  for (int k = 0; k < m; ++k) {
    Eigen::MatrixXd others(m - 1, jac.cols());
    int r = 0;
    for (int i = 0; i < m; ++i) {
      if (i != k) others.row(r++) = jac.row(i);
    }
    const Eigen::MatrixXd bt = others.transpose();  // n x (m-1)
    const Eigen::VectorXd jk = jac.row(k).transpose();
    const Eigen::VectorXd proj =
        bt * (bt.transpose() * bt).ldlt().solve(bt.transpose() * jk);
    const double perp = (jk - proj).norm();
    worst = std::max(worst, jk.norm() / perp);
  }
  return worst;
}

Eigen::MatrixXd paper_rows(int a, int b) {
  Eigen::MatrixXd full(3, 2);
  full << 0.5, 0.5, 2.5, 0.5, -0.2, 0.3;
  Eigen::MatrixXd jac(2, 2);
  jac.row(0) = full.row(a);
  jac.row(1) = full.row(b);
  return jac;
}

}  // namespace

TEST_CASE("uncertainty box validates widths and multiplies them") {
  UncertaintyBox box(Eigen::Vector2d(0.2, 0.2));
  CHECK(box.measure() == doctest::Approx(0.04));
  CHECK(box.dim() == 2);
  UncertaintyBox wide(Eigen::Vector3d(0.5, 0.5, 2.0));
  CHECK(wide.measure() == doctest::Approx(0.5));
  CHECK_THROWS_AS(UncertaintyBox(Eigen::Vector2d(0.2, 0.0)),
                  InvalidArgumentError);
  CHECK_THROWS_AS(UncertaintyBox(Eigen::Vector2d(-0.2, 0.1)),
                  InvalidArgumentError);
  CHECK_THROWS_AS(UncertaintyBox(Eigen::VectorXd()), InvalidArgumentError);
}

TEST_CASE("singular value product matches the Gram determinant") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 6);
    const int m = 1 + static_cast<int>(gen() % static_cast<unsigned>(n));
    const Eigen::MatrixXd jac = random_full_rank(gen, m, n);
    const double product = singular_value_product(jac);
    const double oracle = gram_volume(jac);
    CHECK(std::abs(product - oracle) <= 1e-8 * oracle);
  }
}

TEST_CASE("local measure examples") {
  CHECK(local_measure(Eigen::Matrix2d::Identity(), 1.0) ==
        doctest::Approx(1.0));
  // rows (0.5,0.5),(2.5,0.5): |det| = 1
  CHECK(local_measure(paper_rows(0, 1), 0.04) == doctest::Approx(0.04));
  Eigen::MatrixXd wide(2, 3);
  wide << 1, 0, 0, 0, 2, 0;
  CHECK(local_measure(wide, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(local_measure(paper_rows(0, 1), 0.0), InvalidArgumentError);
}

TEST_CASE("local skewness examples") {
  // orthogonal rows
  Eigen::MatrixXd diag(2, 3);
  diag << 3, 0, 0, 0, 0.5, 0;
  CHECK(std::abs(local_skewness(diag) - 1.0) <= 1e-9);
  // single row: no oblique partner
  Eigen::MatrixXd one(1, 4);
  one << 1, 2, 3, 4;
  CHECK(local_skewness(one) == doctest::Approx(1.0));
  // paper pair values
  CHECK(std::abs(local_skewness(paper_rows(0, 1)) - 1.8028) < 5e-4);
  CHECK(std::abs(local_skewness(paper_rows(0, 2)) - 1.0198) < 5e-4);
  CHECK(std::abs(local_skewness(paper_rows(1, 2)) - 1.0814) < 5e-4);
  // skewed study map
  Eigen::MatrixXd skewed(2, 2);
  skewed << 1, 1, 0.74, 1.26;
  CHECK(std::abs(local_skewness(skewed) - 3.974) <= 1e-3);
}

TEST_CASE("2x2 skewness closed form") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd jac = random_full_rank(gen, 2, 2);
    const double closed = jac.row(0).norm() * jac.row(1).norm() /
                          std::abs(jac.determinant());
    const double skew = local_skewness(jac);
    CHECK(std::abs(skew - closed) <= 1e-9 * closed);
  }
}

TEST_CASE("skewness equals the projection oracle and is at least 1") {
  std::mt19937_64 gen(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 5);
    const int m =
        2 + static_cast<int>(gen() % static_cast<unsigned>(n - 1));
    const Eigen::MatrixXd jac = random_full_rank(gen, m, n);
    const double skew = local_skewness(jac);
    const double oracle = projection_skewness(jac);
    CHECK(std::abs(skew - oracle) <= 1e-8 * oracle);
    CHECK(skew >= 1.0 - 1e-12);
  }
}

TEST_CASE("row decomposition identity holds against explicit projection") {
  // |j_1 perp span(others)| equals prod(sigma(J)) / prod(sigma(J minus row 1))
  std::mt19937_64 gen(4321);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 4);
    const int m =
        2 + static_cast<int>(gen() % static_cast<unsigned>(n - 1));
    const Eigen::MatrixXd jac = random_full_rank(gen, m, n);
    const Eigen::MatrixXd rest = jac.bottomRows(m - 1);
    const Eigen::MatrixXd bt = rest.transpose();
    const Eigen::VectorXd j1 = jac.row(0).transpose();
    const Eigen::VectorXd proj =
        bt * (bt.transpose() * bt).ldlt().solve(bt.transpose() * j1);
    const double perp = (j1 - proj).norm();
    const double ratio =
        singular_value_product(jac) / singular_value_product(rest);
    CHECK(std::abs(ratio - perp) <= 1e-8 * perp);
  }
}

TEST_CASE("row scaling and rotations leave skewness alone") {
  std::mt19937_64 gen(555);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 4);
    const int m =
        2 + static_cast<int>(gen() % static_cast<unsigned>(n - 1));
    const Eigen::MatrixXd jac = random_full_rank(gen, m, n);
    const double skew = local_skewness(jac);
    const double measure = local_measure(jac, 1.0);

    // scale one row by c > 0: skewness fixed, measure divided by c
    const double c = 0.1 + 5.0 * rng::unit_double(gen);
    Eigen::MatrixXd scaled = jac;
    const int row = static_cast<int>(gen() % static_cast<unsigned>(m));
    scaled.row(row) *= c;
    CHECK(std::abs(local_skewness(scaled) - skew) <= 1e-9 * skew);
    CHECK(std::abs(local_measure(scaled, 1.0) - measure / c) <=
          1e-9 * measure / c);

    // right-rotate the parameter space: both metrics fixed
    const Eigen::MatrixXd rot =
        Eigen::HouseholderQR<Eigen::MatrixXd>(random_full_rank(gen, n, n))
            .householderQ();
    const Eigen::MatrixXd rotated = jac * rot;
    CHECK(std::abs(local_skewness(rotated) - skew) <= 1e-9 * skew);
    CHECK(std::abs(local_measure(rotated, 1.0) - measure) <= 1e-9 * measure);
  }
}

TEST_CASE("rank-deficient Jacobians are rejected") {
  Eigen::MatrixXd dup(2, 2);
  dup << 1, 2, 2, 4;  // second row is twice the first
  CHECK_THROWS_AS(local_measure(dup, 1.0), RankDeficientJacobianError);
  CHECK_THROWS_AS(local_skewness(dup), RankDeficientJacobianError);
  Eigen::MatrixXd tall(3, 2);  // m > n can never have full row rank
  tall << 1, 0, 0, 1, 1, 1;
  CHECK_THROWS_AS(local_measure(tall, 1.0), RankDeficientJacobianError);
  Eigen::MatrixXd nan2 = Eigen::Matrix2d::Identity();
  nan2(0, 0) = std::nan("");
  CHECK_THROWS_AS(local_skewness(nan2), NumericalFailureError);
}

namespace {

JacobianField constant_field(const Eigen::MatrixXd& jac, int sites) {
  JacobianField field;
  field.method = JacobianMethod::kExactLinear;
  for (int i = 0; i < sites; ++i) {
    field.jacobians.push_back(jac);
    field.at_samples.push_back(i);
  }
  return field;
}

}  // namespace

TEST_CASE("averages over a constant field equal the local values") {
  Eigen::MatrixXd full(3, 2);
  full << 0.5, 0.5, 2.5, 0.5, -0.2, 0.3;
  const JacobianField field = constant_field(full, 9);
  const UncertaintyBox box(Eigen::Vector2d(0.2, 0.2));
  const std::vector<int> subset{0, 2};
  const AverageMetrics avg = average_metrics(field, subset, box);
  CHECK(avg.sites_used == 9);
  CHECK(avg.sites_skipped == 0);
  CHECK(avg.avg_measure == doctest::Approx(0.04 / 0.25).epsilon(1e-12));
  CHECK(std::abs(avg.avg_skewness - 1.0198) < 5e-4);
}

TEST_CASE("average_metrics validates its subset") {
  const JacobianField field = constant_field(Eigen::MatrixXd::Identity(3, 3), 4);
  const UncertaintyBox box2(Eigen::Vector2d(1, 1));
  const std::vector<int> bad_order{2, 0};
  CHECK_THROWS_AS(average_metrics(field, bad_order, box2),
                  InvalidArgumentError);
  const std::vector<int> out_of_range{0, 3};
  CHECK_THROWS_AS(average_metrics(field, out_of_range, box2),
                  InvalidArgumentError);
  const std::vector<int> repeated{1, 1};
  CHECK_THROWS_AS(average_metrics(field, repeated, box2),
                  InvalidArgumentError);
  const std::vector<int> ok{0, 1};
  const UncertaintyBox box3(Eigen::Vector3d(1, 1, 1));
  CHECK_THROWS_AS(average_metrics(field, ok, box3), InvalidArgumentError);
  CHECK_THROWS_AS(
      average_metrics(JacobianField{}, ok, box2), InvalidArgumentError);
}

TEST_CASE("skip policy tolerates a few bad sites and rejects many") {
  Eigen::MatrixXd good(2, 2);
  good << 1, 0, 0, 1;
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1, 1, 1;
  const UncertaintyBox box(Eigen::Vector2d(1, 1));
  const std::vector<int> subset{0, 1};

  JacobianField one_bad = constant_field(good, 10);
  one_bad.jacobians[4] = bad;
  const AverageMetrics avg = average_metrics(one_bad, subset, box);
  CHECK(avg.sites_used == 9);
  CHECK(avg.sites_skipped == 1);
  CHECK(avg.avg_skewness == doctest::Approx(1.0));

  JacobianField two_bad = constant_field(good, 10);
  two_bad.jacobians[1] = bad;
  two_bad.jacobians[7] = bad;
  CHECK_THROWS_AS(average_metrics(two_bad, subset, box),
                  TooManySkippedSitesError);

  const JacobianField all_bad = constant_field(bad, 5);
  CHECK_THROWS_AS(average_metrics(all_bad, subset, box), NoValidSitesError);
}
