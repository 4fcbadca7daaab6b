#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qopt/param_space.hpp"
#include "qopt/rng.hpp"

using namespace qopt;

namespace {

ParameterBox unit_square() {
  return ParameterBox(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
}

}  // namespace

TEST_CASE("box volume, center, containment") {
  CHECK(unit_square().volume() == doctest::Approx(1.0));
  ParameterBox plate(Eigen::Vector2d(0.01, 0.01), Eigen::Vector2d(0.2, 0.2));
  CHECK(plate.volume() == doctest::Approx(0.0361));
  ParameterBox rect(Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0.5));
  CHECK(rect.volume() == doctest::Approx(1.0));

  CHECK(plate.contains(Eigen::Vector2d(0.1, 0.1)));
  CHECK(plate.contains(Eigen::Vector2d(0.01, 0.2)));  // faces belong to box
  CHECK(!plate.contains(Eigen::Vector2d(0.0, 0.1)));
  CHECK(plate.center().isApprox(Eigen::Vector2d(0.105, 0.105)));
}

TEST_CASE("degenerate boxes are rejected") {
  CHECK_THROWS_AS(ParameterBox(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)),
                  InvalidDomainError);
  CHECK_THROWS_AS(ParameterBox(Eigen::Vector2d(0, 2), Eigen::Vector2d(1, 1)),
                  InvalidDomainError);
  CHECK_THROWS_AS(
      ParameterBox(Eigen::VectorXd::Zero(0), Eigen::VectorXd::Zero(0)),
      InvalidDomainError);
  CHECK_THROWS_AS(ParameterBox(Eigen::Vector2d(0, 0), Eigen::Vector3d(1, 1, 1)),
                  InvalidDomainError);
}

TEST_CASE("sample_uniform is contained, deterministic, seed-sensitive") {
  const auto box = unit_square();
  const SampleSet a = sample_uniform(box, 4, 7);
  CHECK(a.count() == 4);
  CHECK(a.dim() == 2);
  CHECK(a.seed == 7);
  for (Eigen::Index i = 0; i < a.count(); ++i) {
    CHECK(box.contains(a.points.row(i).transpose()));
  }

  const SampleSet b = sample_uniform(box, 4, 7);
  CHECK(a.points == b.points);  // bit-identical, not approximately equal

  const SampleSet c = sample_uniform(box, 4, 8);
  CHECK(a.points != c.points);

  CHECK_THROWS_AS(sample_uniform(box, 0, 7), InvalidArgumentError);
}

TEST_CASE("sample_uniform respects non-unit bounds") {
  ParameterBox box(Eigen::Vector2d(-3, 10), Eigen::Vector2d(-1, 30));
  const SampleSet s = sample_uniform(box, 500, 3);
  CHECK(s.points.col(0).minCoeff() >= -3);
  CHECK(s.points.col(0).maxCoeff() < -1);
  CHECK(s.points.col(1).minCoeff() >= 10);
  CHECK(s.points.col(1).maxCoeff() < 30);
}

TEST_CASE("sample mean matches the uniform expectation") {
  const SampleSet s = sample_uniform(unit_square(), 100'000, 1);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(s.points.col(j).mean() - 0.5) < 0.01);
  }
}

TEST_CASE("per-dimension marginals pass a Kolmogorov-Smirnov check") {
  const Eigen::Index n = 100'000;
  const SampleSet s = sample_uniform(unit_square(), n, 2026);
  const double critical = 1.628 / std::sqrt(static_cast<double>(n));  // 1%
  for (int j = 0; j < 2; ++j) {
    std::vector<double> v(s.points.col(j).data(),
                          s.points.col(j).data() + n);
    std::sort(v.begin(), v.end());
    double ks = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hi = static_cast<double>(i + 1) / n - v[i];
      const double lo = v[i] - static_cast<double>(i) / n;
      ks = std::max(ks, std::max(hi, lo));
    }
    CHECK(ks < critical);
  }
}

TEST_CASE("nearest_index basics and tie-breaking") {
  Eigen::MatrixXd sites(4, 2);
  sites << 0, 0, 1, 0, 0, 1, 0.25, 0.25;
  CHECK(nearest_index(Eigen::Vector2d(0.25, 0.25), sites) == 3);
  // equidistant to sites 1 and 2: lowest index wins
  CHECK(nearest_index(Eigen::Vector2d(0.5, 0.5), sites) == 3);
  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 1, 0;
  CHECK(nearest_index(Eigen::Vector2d(0.5, 0.3), two) == 0);

  CHECK_THROWS_AS(nearest_index(Eigen::Vector2d(0, 0), Eigen::MatrixXd(0, 2)),
                  InvalidArgumentError);
}

TEST_CASE("bucket index agrees with the exhaustive scan") {
  const auto box = unit_square();
  const SampleSet sites = sample_uniform(box, 50, 11);
  NearestSiteIndex index(box, sites.points);
  const SampleSet queries = sample_uniform(box, 10'000, 12);
  for (Eigen::Index i = 0; i < queries.count(); ++i) {
    const Eigen::VectorXd p = queries.points.row(i).transpose();
    CHECK(index.query(p) == nearest_index(p, sites.points));
  }
  // adversarial points: the sites themselves and the box corners
  for (Eigen::Index i = 0; i < sites.count(); ++i) {
    CHECK(index.query(sites.points.row(i).transpose()) == i);
  }
  for (double x : {0.0, 1.0}) {
    for (double y : {0.0, 1.0}) {
      const Eigen::Vector2d p(x, y);
      CHECK(index.query(p) == nearest_index(p, sites.points));
    }
  }
}

TEST_CASE("bucket index respects the lowest-index tie rule") {
  // 3x3 lattice of sites: lattice midpoints are 4-way ties
  Eigen::MatrixXd sites(9, 2);
  int r = 0;
  for (double y : {0.0, 0.5, 1.0}) {
    for (double x : {0.0, 0.5, 1.0}) {
      sites.row(r++) << x, y;
    }
  }
  NearestSiteIndex index(unit_square(), sites);
  for (double x : {0.25, 0.75}) {
    for (double y : {0.25, 0.75}) {
      const Eigen::Vector2d p(x, y);
      CHECK(index.query(p) == nearest_index(p, sites));
    }
  }
}

TEST_CASE("bucket index handles many sites and off-box queries") {
  const auto box = unit_square();
  const SampleSet sites = sample_uniform(box, 3'200, 21);
  NearestSiteIndex index(box, sites.points);
  const SampleSet queries = sample_uniform(box, 20'000, 22);
  for (Eigen::Index i = 0; i < queries.count(); ++i) {
    // shift some queries slightly outside the box; the index must stay exact
    Eigen::Vector2d p = queries.points.row(i).transpose();
    if (i % 7 == 0) p.x() += 0.05;
    if (i % 11 == 0) p.y() -= 0.05;
    CHECK(index.query(p) == nearest_index(p, sites.points));
  }
}

TEST_CASE("non-2-D clouds fall back to the exhaustive scan") {
  ParameterBox box(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1));
  const SampleSet sites = sample_uniform(box, 40, 5);
  NearestSiteIndex index(box, sites.points);
  const SampleSet queries = sample_uniform(box, 500, 6);
  for (Eigen::Index i = 0; i < queries.count(); ++i) {
    const Eigen::VectorXd p = queries.points.row(i).transpose();
    CHECK(index.query(p) == nearest_index(p, sites.points));
  }
}

TEST_CASE("voronoi cells partition the box") {
  const auto box = unit_square();
  const SampleSet sites = sample_uniform(box, 50, 31);
  NearestSiteIndex index(box, sites.points);
  const Eigen::Index r = 10'000;
  const SampleSet ref = sample_uniform(box, r, 32);
  std::vector<Eigen::Index> counts(50, 0);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index cell = index.query(ref.points.row(i).transpose());
    REQUIRE(cell >= 0);
    REQUIRE(cell < 50);
    ++counts[cell];
  }
  Eigen::Index total = 0;
  for (auto c : counts) total += c;
  CHECK(total == r);  // exactly one cell per point
}

TEST_CASE("unit_double stays in [0,1) and derive_seed separates streams") {
  std::mt19937_64 gen(123);
  for (int i = 0; i < 10'000; ++i) {
    const double u = rng::unit_double(gen);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(rng::derive_seed(1, rng::kTagSamples, 0) ==
        rng::derive_seed(1, rng::kTagSamples, 0));
  CHECK(rng::derive_seed(1, rng::kTagSamples, 0) !=
        rng::derive_seed(1, rng::kTagVolumes, 0));
  CHECK(rng::derive_seed(1, rng::kTagSamples, 0) !=
        rng::derive_seed(1, rng::kTagSamples, 1));
  CHECK(rng::derive_seed(1, rng::kTagSamples, 0) !=
        rng::derive_seed(2, rng::kTagSamples, 0));
}
