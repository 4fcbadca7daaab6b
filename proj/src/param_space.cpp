#include "qopt/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qopt/rng.hpp"

namespace qopt {

ParameterBox::ParameterBox(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw InvalidDomainError("parameter box needs matching, nonempty bounds");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw InvalidDomainError("parameter box is degenerate in coordinate " +
                               std::to_string(i));
    }
  }
}

double ParameterBox::volume() const {
  double v = 1.0;
  for (Eigen::Index i = 0; i < lower_.size(); ++i) v *= upper_[i] - lower_[i];
  return v;
}

bool ParameterBox::contains(const Eigen::VectorXd& point) const {
  if (point.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (point[i] < lower_[i] || point[i] > upper_[i]) return false;
  }
  return true;
}

SampleSet sample_uniform(const ParameterBox& box, Eigen::Index count,
                         std::uint64_t seed) {
  if (count <= 0) {
    throw InvalidArgumentError("sample count must be positive");
  }
  std::mt19937_64 gen(seed);
  SampleSet set;
  set.seed = seed;
  set.points.resize(count, box.dim());
  const Eigen::VectorXd& lo = box.lower();
  const Eigen::VectorXd side = box.side_lengths();
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int j = 0; j < box.dim(); ++j) {
      set.points(i, j) = lo[j] + side[j] * rng::unit_double(gen);
    }
  }
  return set;
}

Eigen::Index nearest_index(const Eigen::VectorXd& point,
                           const Eigen::MatrixXd& sites) {
  if (sites.rows() == 0 || sites.cols() != point.size()) {
    throw InvalidArgumentError("site matrix is empty or of wrong width");
  }
  Eigen::Index best = 0;
  double best_d = (sites.row(0).transpose() - point).squaredNorm();
  for (Eigen::Index i = 1; i < sites.rows(); ++i) {
    double d = (sites.row(i).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

NearestSiteIndex::NearestSiteIndex(const ParameterBox& box,
                                   Eigen::MatrixXd sites)
    : sites_(std::move(sites)) {
  if (sites_.rows() == 0 || sites_.cols() != box.dim()) {
    throw InvalidArgumentError("site matrix is empty or of wrong width");
  }
  if (sites_.cols() != 2) return;  // exhaustive fallback for non-2-D

  const auto n = sites_.rows();
  // Aim for ~2 sites per bucket; the ring search then touches O(1) sites.
  int per_axis = std::max(1, static_cast<int>(std::sqrt(
                                 static_cast<double>(n) / 2.0)));
  gx_ = gy_ = per_axis;
  x0_ = box.lower()[0];
  y0_ = box.lower()[1];
  const double cx = (box.upper()[0] - x0_) / gx_;
  const double cy = (box.upper()[1] - y0_) / gy_;
  inv_cx_ = 1.0 / cx;
  inv_cy_ = 1.0 / cy;
  cell_min_ = std::min(cx, cy);

  // CSR fill: count, prefix-sum, scatter. Sites outside the box are clamped
  // into the border buckets, which keeps the search exact for them too.
  const int nb = gx_ * gy_;
  std::vector<std::int32_t> count(nb, 0);
  std::vector<int> which(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int bx = std::clamp(static_cast<int>((sites_(i, 0) - x0_) * inv_cx_), 0,
                        gx_ - 1);
    int by = std::clamp(static_cast<int>((sites_(i, 1) - y0_) * inv_cy_), 0,
                        gy_ - 1);
    which[i] = by * gx_ + bx;
    ++count[which[i]];
  }
  bucket_start_.assign(nb + 1, 0);
  for (int b = 0; b < nb; ++b) bucket_start_[b + 1] = bucket_start_[b] + count[b];
  bucket_entries_.resize(n);
  std::vector<std::int32_t> cursor(bucket_start_.begin(),
                                   bucket_start_.end() - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    bucket_entries_[cursor[which[i]]++] = static_cast<std::int32_t>(i);
  }
  gridded_ = true;
}

Eigen::Index NearestSiteIndex::query(const Eigen::VectorXd& point) const {
  if (point.size() != sites_.cols()) {
    throw InvalidArgumentError("query point has wrong dimension");
  }
  if (gridded_) return query2(point[0], point[1]);
  return nearest_index(point, sites_);
}

Eigen::Index NearestSiteIndex::query2(double x, double y) const {
  const int bx0 = std::clamp(static_cast<int>((x - x0_) * inv_cx_), 0, gx_ - 1);
  const int by0 = std::clamp(static_cast<int>((y - y0_) * inv_cy_), 0, gy_ - 1);

  Eigen::Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const int max_ring = std::max(gx_, gy_);
  for (int ring = 0; ring <= max_ring; ++ring) {
    // Any site in ring r lies at least (r-1) * cell_min away, so once the
    // current best beats that bound, no further ring can improve on it.
    if (best >= 0) {
      double reach = (ring - 1) * cell_min_;
      if (reach > 0 && best_d <= reach * reach) break;
    }
    const int xlo = bx0 - ring, xhi = bx0 + ring;
    const int ylo = by0 - ring, yhi = by0 + ring;
    for (int by = std::max(ylo, 0); by <= std::min(yhi, gy_ - 1); ++by) {
      const bool edge_row = (by == ylo || by == yhi);
      for (int bx = std::max(xlo, 0); bx <= std::min(xhi, gx_ - 1); ++bx) {
        if (!edge_row && bx != xlo && bx != xhi) continue;  // interior seen
        const int b = by * gx_ + bx;
        for (std::int32_t e = bucket_start_[b]; e < bucket_start_[b + 1];
             ++e) {
          const std::int32_t i = bucket_entries_[e];
          const double dx = sites_(i, 0) - x;
          const double dy = sites_(i, 1) - y;
          const double d = dx * dx + dy * dy;
          if (d < best_d || (d == best_d && i < best)) {
            best_d = d;
            best = i;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace qopt
