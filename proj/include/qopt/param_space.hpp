#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "qopt/errors.hpp"

namespace qopt {

// Axis-aligned box of admissible parameter values. Doubles as the uniform
// prior: all sampling draws are uniform over the box.
class ParameterBox {
 public:
  // Throws InvalidDomainError unless lower < upper componentwise.
  ParameterBox(Eigen::VectorXd lower, Eigen::VectorXd upper);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd side_lengths() const { return upper_ - lower_; }
  Eigen::VectorXd center() const { return 0.5 * (lower_ + upper_); }
  double volume() const;
  bool contains(const Eigen::VectorXd& point) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

inline double box_volume(const ParameterBox& box) { return box.volume(); }

// Parameter sample cloud plus (once filled) the model outputs at each
// sample. Rows index samples; qoi_values stays 0 x 0 until a model runs.
struct SampleSet {
  Eigen::MatrixXd points;      // count x dim
  Eigen::MatrixXd qoi_values;  // count x qoi_dim, empty before evaluation
  std::uint64_t seed = 0;

  Eigen::Index count() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  Eigen::Index qoi_dim() const { return qoi_values.cols(); }
};

// Draws `count` points uniformly from the box. The stream is fully
// determined by `seed`: points are filled row by row, coordinate by
// coordinate, one 64-bit draw per coordinate.
SampleSet sample_uniform(const ParameterBox& box, Eigen::Index count,
                         std::uint64_t seed);

// Index of the site closest to `point` in Euclidean distance, scanning all
// rows. Ties break to the lowest index.
Eigen::Index nearest_index(const Eigen::VectorXd& point,
                           const Eigen::MatrixXd& sites);

// Bucket-grid accelerator for repeated nearest-site queries against a fixed
// site cloud inside a known box. Exact (not approximate): the ring search
// stops only once no unvisited bucket can beat the current best distance.
// Buckets are specialized for 2-D, which is where the query volume is; for
// other dimensions queries fall back to the exhaustive scan.
class NearestSiteIndex {
 public:
  NearestSiteIndex(const ParameterBox& box, Eigen::MatrixXd sites);

  Eigen::Index query(const Eigen::VectorXd& point) const;
  // Hot-path overload for the 2-D case; avoids building a vector per query.
  Eigen::Index query2(double x, double y) const;

  Eigen::Index site_count() const { return sites_.rows(); }

 private:
  Eigen::MatrixXd sites_;
  double x0_ = 0, y0_ = 0;        // box lower corner
  double inv_cx_ = 0, inv_cy_ = 0;  // reciprocal bucket side lengths
  double cell_min_ = 0;             // smaller bucket side, ring cutoff unit
  int gx_ = 0, gy_ = 0;             // bucket counts per axis
  std::vector<std::int32_t> bucket_start_;  // CSR layout over buckets
  std::vector<std::int32_t> bucket_entries_;
  bool gridded_ = false;
};

}  // namespace qopt
