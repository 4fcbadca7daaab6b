#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qopt/jacobian.hpp"
#include "qopt/models.hpp"
#include "qopt/optimizer.hpp"
#include "qopt/param_space.hpp"
#include "qopt/rng.hpp"

using namespace qopt;

namespace {

LinearMapModel paper_model() {
  LinearMapModel model;
  model.matrix.resize(3, 2);
  model.matrix << 0.5, 0.5, 2.5, 0.5, -0.2, 0.3;
  return model;
}

JacobianField paper_field(int sites = 5) {
  std::vector<Eigen::Index> targets(sites);
  for (int i = 0; i < sites; ++i) targets[i] = i;
  return exact_linear_field(paper_model(), targets);
}

OptimizationSettings paper_settings() {
  OptimizationSettings settings;
  settings.subset_size = 2;
  settings.qoi_widths = Eigen::VectorXd::Constant(3, 0.2);  // mu_B = 0.04
  settings.omega = 0.5;
  return settings;
}

const DesignScore& find_score(const std::vector<DesignScore>& scores,
                              const std::vector<int>& subset) {
  for (const auto& s : scores) {
    if (s.subset == subset) return s;
  }
  REQUIRE(false);
  return scores.front();
}

bool same_scores(const std::vector<DesignScore>& a,
                 const std::vector<DesignScore>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].subset != b[i].subset || a[i].avg_measure != b[i].avg_measure ||
        a[i].avg_skewness != b[i].avg_skewness ||
        a[i].distance != b[i].distance ||
        a[i].distance_sum != b[i].distance_sum) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("bounded distance formula and edge cases") {
  CHECK(bounded_distance_to_ideal(1.0, 1e-300, 0.3) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(bounded_distance_to_ideal(1.8028, 0.04, 0.5) - 0.2419) <
        5e-5);
  CHECK(std::abs(bounded_distance_to_ideal(1.0816, 0.0471, 0.5) - 0.0602) <
        5e-5);
  // omega = 1: pure skewness coordinate; omega = 0: pure measure coordinate
  CHECK(bounded_distance_to_ideal(3.0, 0.5, 1.0) == doctest::Approx(2.0 / 3));
  CHECK(bounded_distance_to_ideal(3.0, 0.5, 0.0) == doctest::Approx(1.0 / 3));
  CHECK(bounded_distance_to_ideal(2.0, 1.0, 0.5) < 1.0);  // always inside [0,1)

  CHECK_THROWS_AS(bounded_distance_to_ideal(0.5, 0.1, 0.5),
                  InvalidArgumentError);
  CHECK_THROWS_AS(bounded_distance_to_ideal(1.5, 0.0, 0.5),
                  InvalidArgumentError);
  CHECK_THROWS_AS(bounded_distance_to_ideal(1.5, -0.1, 0.5),
                  InvalidArgumentError);
  CHECK_THROWS_AS(bounded_distance_to_ideal(1.5, 0.1, -0.01),
                  InvalidArgumentError);
  CHECK_THROWS_AS(bounded_distance_to_ideal(1.5, 0.1, 1.01),
                  InvalidArgumentError);
  // arithmetic dust below 1 is forgiven
  CHECK(bounded_distance_to_ideal(1.0 - 1e-12, 0.1, 0.5) >= 0.0);
}

TEST_CASE("scoring the linear example reproduces the closed forms") {
  const auto scores = enumerate_and_score(paper_field(), paper_settings());
  REQUIRE(scores.size() == 3);

  // sorted by distance: {1,2} best, then {0,2}, then {0,1}
  CHECK(scores[0].subset == std::vector<int>{1, 2});
  CHECK(scores[1].subset == std::vector<int>{0, 2});
  CHECK(scores[2].subset == std::vector<int>{0, 1});

  auto find = [&](std::vector<int> subset) {
    for (const auto& s : scores) {
      if (s.subset == subset) return s;
    }
    REQUIRE(false);
    return scores[0];
  };
  const DesignScore s01 = find({0, 1});
  const DesignScore s02 = find({0, 2});
  const DesignScore s12 = find({1, 2});

  const double n0 = std::sqrt(0.5), n1 = std::sqrt(6.5),
               n2 = std::sqrt(0.13);
  CHECK(s01.avg_measure == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(s02.avg_measure == doctest::Approx(0.16).epsilon(1e-12));
  CHECK(s12.avg_measure == doctest::Approx(0.04 / 0.85).epsilon(1e-12));
  CHECK(s01.avg_skewness == doctest::Approx(n0 * n1 / 1.0).epsilon(1e-12));
  CHECK(s02.avg_skewness == doctest::Approx(n0 * n2 / 0.25).epsilon(1e-12));
  CHECK(s12.avg_skewness == doctest::Approx(n1 * n2 / 0.85).epsilon(1e-12));

  for (const auto& s : scores) {
    CHECK(s.distance ==
          doctest::Approx(bounded_distance_to_ideal(s.avg_skewness,
                                                    s.avg_measure, 0.5))
              .epsilon(1e-12));
    CHECK(s.distance_sum == doctest::Approx(2.0 * s.distance).epsilon(1e-12));
  }
  // table-convention distances
  CHECK(std::abs(s01.distance_sum - 0.484) <= 0.01 * 0.484);
  CHECK(std::abs(s02.distance_sum - 0.157) <= 0.01 * 0.157);
  CHECK(std::abs(s12.distance_sum - 0.120) <= 0.01 * 0.120);
}

TEST_CASE("objective winners on the linear example") {
  const auto scores = enumerate_and_score(paper_field(), paper_settings());
  CHECK(select_by_objective(scores, Objective::kMinMeasure).subset ==
        std::vector<int>{0, 1});
  CHECK(select_by_objective(scores, Objective::kMinSkewness).subset ==
        std::vector<int>{0, 2});
  CHECK(select_by_objective(scores, Objective::kMinDistance).subset ==
        std::vector<int>{1, 2});
  CHECK(select_by_objective(scores, Objective::kMaxDistance).subset ==
        std::vector<int>{0, 1});
  CHECK_THROWS_AS(
      select_by_objective(std::vector<DesignScore>{}, Objective::kMinMeasure),
      InvalidArgumentError);
}

TEST_CASE("common width rescaling shifts measures but not the rankings") {
  const auto baseline = enumerate_and_score(paper_field(), paper_settings());
  for (double c : {0.5, 2.0}) {
    OptimizationSettings settings = paper_settings();
    settings.qoi_widths *= c;
    const auto scores = enumerate_and_score(paper_field(), settings);
    // the per-metric winners cannot move: skewness ignores widths entirely
    // and every measure picks up the same c^2 factor
    CHECK(select_by_objective(scores, Objective::kMinMeasure).subset ==
          std::vector<int>{0, 1});
    CHECK(select_by_objective(scores, Objective::kMinSkewness).subset ==
          std::vector<int>{0, 2});
    for (const auto& score : scores) {
      const DesignScore& base = find_score(baseline, score.subset);
      CHECK(score.avg_skewness == doctest::Approx(base.avg_skewness));
      CHECK(score.avg_measure ==
            doctest::Approx(c * c * base.avg_measure).epsilon(1e-12));
    }
  }
}

TEST_CASE("omega extremes reduce the distance ranking to one metric") {
  const ParameterBox box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  SampleSet samples = sample_uniform(box, 400, 17);
  const PolynomialMapModel model = make_random_polynomial_model(6, 23);
  PolynomialForwardModel forward(model);
  fill_qoi(samples, forward);
  std::vector<Eigen::Index> targets;
  for (Eigen::Index i = 0; i < 60; ++i) targets.push_back(i);
  const JacobianField field = analytic_polynomial_field(model, samples, targets);

  OptimizationSettings settings;
  settings.subset_size = 2;
  settings.qoi_widths = Eigen::VectorXd::Constant(6, 0.2);

  settings.omega = 0.0;
  auto by_measure = enumerate_and_score(field, settings);
  CHECK(std::is_sorted(by_measure.begin(), by_measure.end(),
                       [](const DesignScore& a, const DesignScore& b) {
                         return a.avg_measure < b.avg_measure;
                       }));

  settings.omega = 1.0;
  auto by_skew = enumerate_and_score(field, settings);
  CHECK(std::is_sorted(by_skew.begin(), by_skew.end(),
                       [](const DesignScore& a, const DesignScore& b) {
                         return a.avg_skewness < b.avg_skewness;
                       }));
}

TEST_CASE("enumeration validates sizes and honors the cap") {
  OptimizationSettings settings = paper_settings();
  settings.subset_size = 4;  // more than d = 3
  CHECK_THROWS_AS(enumerate_and_score(paper_field(), settings),
                  InvalidArgumentError);

  settings = paper_settings();
  settings.candidate_cap = 2;  // C(3,2) = 3 > 2
  CHECK_THROWS_AS(enumerate_and_score(paper_field(), settings),
                  TooManyCandidatesError);

  settings = paper_settings();
  settings.qoi_widths = Eigen::VectorXd::Constant(2, 0.2);  // wrong length
  CHECK_THROWS_AS(enumerate_and_score(paper_field(), settings),
                  InvalidArgumentError);

  settings = paper_settings();
  settings.subset_size = 1;  // m = 1 is allowed: skewness 1 everywhere
  const auto singles = enumerate_and_score(paper_field(), settings);
  REQUIRE(singles.size() == 3);
  for (const auto& s : singles) {
    CHECK(s.avg_skewness == doctest::Approx(1.0));
  }
}

TEST_CASE("scoring is independent of the thread count") {
  // synthetic field: 8 QoI over 4 parameters, 40 sites of random Jacobians
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  JacobianField field;
  field.method = JacobianMethod::kLocalLeastSquares;
  for (Eigen::Index s = 0; s < 40; ++s) {
    Eigen::MatrixXd jac(8, 4);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 4; ++c) jac(r, c) = normal(gen);
    }
    field.jacobians.push_back(jac);
    field.at_samples.push_back(s);
  }

  OptimizationSettings settings;
  settings.subset_size = 3;  // C(8,3) = 56 candidates
  settings.qoi_widths = Eigen::VectorXd::Constant(8, 0.3);
  settings.threads = 1;
  const auto serial = enumerate_and_score(field, settings);
  settings.threads = 4;
  const auto parallel = enumerate_and_score(field, settings);
  CHECK(same_scores(serial, parallel));
}

namespace {

std::vector<DesignScore> brute_force_front(
    const std::vector<DesignScore>& scores) {
  std::vector<DesignScore> front;
  for (const auto& a : scores) {
    bool dominated = false;
    for (const auto& b : scores) {
      const bool leq = b.avg_skewness <= a.avg_skewness &&
                       b.avg_measure <= a.avg_measure;
      const bool strict = b.avg_skewness < a.avg_skewness ||
                          b.avg_measure < a.avg_measure;
      if (leq && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(a);
  }
  std::sort(front.begin(), front.end(),
            [](const DesignScore& a, const DesignScore& b) {
              if (a.avg_skewness != b.avg_skewness) {
                return a.avg_skewness < b.avg_skewness;
              }
              if (a.avg_measure != b.avg_measure) {
                return a.avg_measure < b.avg_measure;
              }
              return a.subset < b.subset;
            });
  return front;
}

}  // namespace

TEST_CASE("pareto front of the linear example keeps all three pairs") {
  const auto scores = enumerate_and_score(paper_field(), paper_settings());
  const auto front = pareto_front(scores);
  REQUIRE(front.size() == 3);
  // sorted by skewness ascending
  CHECK(front[0].subset == std::vector<int>{0, 2});
  CHECK(front[1].subset == std::vector<int>{1, 2});
  CHECK(front[2].subset == std::vector<int>{0, 1});
}

TEST_CASE("pareto front matches a quadratic domination scan") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<DesignScore> scores;
    const int k = 2 + static_cast<int>(gen() % 60);
    for (int i = 0; i < k; ++i) {
      DesignScore s;
      s.subset = {i};
      // coarse values make coordinate ties likely, exercising the
      // duplicates-all-kept rule
      s.avg_skewness = 1.0 + 0.25 * static_cast<double>(gen() % 8);
      s.avg_measure = 0.1 + 0.1 * static_cast<double>(gen() % 8);
      scores.push_back(s);
    }
    const auto fast = pareto_front(scores);
    const auto slow = brute_force_front(scores);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].subset == slow[i].subset);
    }
  }
  CHECK_THROWS_AS(pareto_front(std::vector<DesignScore>{}),
                  InvalidArgumentError);
}

TEST_CASE("single and dominated scores behave per definition") {
  DesignScore a;
  a.subset = {0, 1};
  a.avg_skewness = 1.5;
  a.avg_measure = 0.2;
  const auto self = pareto_front(std::vector<DesignScore>{a});
  REQUIRE(self.size() == 1);
  CHECK(self[0].subset == a.subset);

  DesignScore b = a;
  b.subset = {0, 2};
  b.avg_skewness = 1.4;
  b.avg_measure = 0.1;  // dominates a
  const auto front = pareto_front(std::vector<DesignScore>{a, b});
  REQUIRE(front.size() == 1);
  CHECK(front[0].subset == b.subset);
}
