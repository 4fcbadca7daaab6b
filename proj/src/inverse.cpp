#include "qopt/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qopt/errors.hpp"
#include "qopt/rng.hpp"

namespace qopt {

DataDensity::DataDensity(Eigen::VectorXd lower, Eigen::VectorXd upper,
                         std::vector<int> grid)
    : lower_(std::move(lower)), upper_(std::move(upper)), grid_(std::move(grid)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size() ||
      static_cast<Eigen::Index>(grid_.size()) != lower_.size()) {
    throw InvalidArgumentError(
        "observation density needs matching bounds and grid sizes");
  }
  int cells = 1;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw InvalidDomainError("observation box is degenerate in component " +
                               std::to_string(i));
    }
    if (grid_[i] < 1 || cells > (1 << 24) / grid_[i]) {
      throw InvalidArgumentError("observation grid is empty or too fine");
    }
    cells *= grid_[i];
  }
  // Uniform density: equal cells, equal mass.
  probabilities_ =
      Eigen::VectorXd::Constant(cells, 1.0 / static_cast<double>(cells));
}

int DataDensity::locate(const Eigen::VectorXd& q) const {
  if (q.size() != lower_.size()) {
    throw InvalidArgumentError("observation has wrong dimension");
  }
  int cell = 0;
  int stride = 1;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q[i] < lower_[i] || q[i] > upper_[i]) return -1;
    const double t = (q[i] - lower_[i]) / (upper_[i] - lower_[i]);
    const int c = std::min(static_cast<int>(t * grid_[i]), grid_[i] - 1);
    cell += stride * c;
    stride *= grid_[i];
  }
  return cell;
}

DataDensity uncertainty_density(const Eigen::VectorXd& q_nominal,
                                const Eigen::VectorXd& widths,
                                std::vector<int> grid) {
  if (q_nominal.size() != widths.size()) {
    throw InvalidArgumentError(
        "nominal observation and widths must have equal dimension");
  }
  return DataDensity(q_nominal - widths / 2.0, q_nominal + widths / 2.0,
                     std::move(grid));
}

namespace {

Eigen::VectorXd voronoi_volumes(const SampleSet& samples,
                                const ParameterBox& box,
                                const InverseOptions& options) {
  const Eigen::Index n = samples.count();
  const double vol = box.volume();
  if (options.volume_mode == VolumeMode::kEqual) {
    return Eigen::VectorXd::Constant(n, vol / static_cast<double>(n));
  }
  if (options.reference_multiplier < 1) {
    throw InvalidArgumentError("reference multiplier must be positive");
  }
  const Eigen::Index refs = n * options.reference_multiplier;
  NearestSiteIndex index(box, samples.points);
  std::vector<Eigen::Index> counts(n, 0);
  std::mt19937_64 gen(options.volume_seed);
  const Eigen::VectorXd lo = box.lower();
  const Eigen::VectorXd side = box.side_lengths();
  Eigen::VectorXd point(box.dim());
  for (Eigen::Index r = 0; r < refs; ++r) {
    for (int j = 0; j < box.dim(); ++j) {
      point[j] = lo[j] + side[j] * rng::unit_double(gen);
    }
    ++counts[index.query(point)];
  }
  Eigen::VectorXd volumes(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    volumes[i] = vol * static_cast<double>(counts[i]) /
                 static_cast<double>(refs);
  }
  return volumes;
}

}  // namespace

InverseSolution solve_inverse(const SampleSet& samples,
                              const ParameterBox& box,
                              std::span<const int> subset,
                              const DataDensity& density,
                              const InverseOptions& options) {
  if (samples.count() == 0 || samples.qoi_dim() == 0) {
    throw InvalidArgumentError("samples must carry evaluated QoI values");
  }
  if (samples.dim() != box.dim()) {
    throw InvalidArgumentError("samples and box disagree on dimension");
  }
  if (subset.empty() ||
      static_cast<Eigen::Index>(subset.size()) != density.dim()) {
    throw InvalidArgumentError(
        "QoI subset size must match the observation density dimension");
  }
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= samples.qoi_dim()) {
      throw InvalidArgumentError("QoI subset index out of range");
    }
    if (i > 0 && subset[i] <= subset[i - 1]) {
      throw InvalidArgumentError("QoI subset must be strictly increasing");
    }
  }

  const Eigen::Index n = samples.count();
  InverseSolution sol;
  sol.subset.assign(subset.begin(), subset.end());
  sol.domain_volume = box.volume();
  sol.cell_volume = voronoi_volumes(samples, box, options);
  sol.assignment.resize(n);
  sol.cell_probability = Eigen::VectorXd::Zero(n);

  // Bin each sample's observed components into the density's cells.
  Eigen::VectorXd q(subset.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < subset.size(); ++c) {
      q[c] = samples.qoi_values(i, subset[c]);
    }
    sol.assignment[i] = density.locate(q);
  }

  // Split each observation cell's mass across its samples, proportionally
  // to Voronoi volume.
  const int cells = density.cell_count();
  Eigen::VectorXd cell_volume_sum = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sol.assignment[i] >= 0) {
      cell_volume_sum[sol.assignment[i]] += sol.cell_volume[i];
    }
  }
  int covered_cells = 0;
  double lost = 0;
  for (int k = 0; k < cells; ++k) {
    if (cell_volume_sum[k] > 0) {
      ++covered_cells;
    } else {
      lost += density.cell_probability(k);
    }
  }
  if (covered_cells == 0) {
    throw EmptySupportError(
        "no sample maps into the observation box; the inverse solution "
        "would be identically zero");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = sol.assignment[i];
    if (k >= 0 && cell_volume_sum[k] > 0) {
      sol.cell_probability[i] = sol.cell_volume[i] / cell_volume_sum[k] *
                                density.cell_probability(k);
    }
  }
  sol.lost_mass = lost;
  sol.fully_covered = covered_cells == cells;

  // Internal consistency: per-cell mass must reassemble exactly and total
  // mass (kept + lost) must be 1. These hold by construction; a violation
  // means the arithmetic above is broken, not the input.
  Eigen::VectorXd per_cell = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sol.assignment[i] >= 0) per_cell[sol.assignment[i]] += sol.cell_probability[i];
  }
  for (int k = 0; k < cells; ++k) {
    if (cell_volume_sum[k] > 0 &&
        std::abs(per_cell[k] - density.cell_probability(k)) > 1e-12) {
      throw NumericalFailureError(
          "inverse mass split failed to reassemble observation cell " +
          std::to_string(k));
    }
  }
  if (std::abs(sol.cell_probability.sum() + sol.lost_mass - 1.0) > 1e-10) {
    throw NumericalFailureError(
        "inverse solution mass does not account for the full density");
  }
  return sol;
}

double support_fraction(const InverseSolution& solution) {
  double covered = 0;
  for (Eigen::Index i = 0; i < solution.sample_count(); ++i) {
    if (solution.cell_probability[i] > 0) covered += solution.cell_volume[i];
  }
  return covered / solution.domain_volume;
}

PredictionSummary push_forward(const InverseSolution& solution,
                               const Eigen::VectorXd& values, int bins) {
  if (values.size() != solution.sample_count()) {
    throw InvalidArgumentError("need one predicted value per sample");
  }
  if (bins < 1) {
    throw InvalidArgumentError("histogram needs at least one bin");
  }
  PredictionSummary out;
  bool first = true;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (solution.cell_probability[i] <= 0) continue;
    if (first || values[i] < out.lower) out.lower = values[i];
    if (first || values[i] > out.upper) out.upper = values[i];
    first = false;
  }
  if (first) {
    throw EmptySupportError("inverse solution carries no probability mass");
  }
  out.bin_edges.resize(bins + 1);
  const double width = out.upper - out.lower;
  for (int b = 0; b <= bins; ++b) {
    out.bin_edges[b] = out.lower + width * static_cast<double>(b) /
                                       static_cast<double>(bins);
  }
  out.bin_mass.assign(bins, 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double p = solution.cell_probability[i];
    if (p <= 0) continue;
    int b = width > 0 ? static_cast<int>((values[i] - out.lower) / width *
                                         static_cast<double>(bins))
                      : 0;
    b = std::clamp(b, 0, bins - 1);
    out.bin_mass[b] += p;
    out.total_mass += p;
  }
  return out;
}

Eigen::MatrixXd marginal_2d(const InverseSolution& solution,
                            const SampleSet& samples, const ParameterBox& box,
                            int dim_a, int dim_b, int cells_a, int cells_b) {
  if (samples.count() != solution.sample_count()) {
    throw InvalidArgumentError("samples and solution disagree on count");
  }
  if (dim_a < 0 || dim_b < 0 || dim_a >= samples.dim() ||
      dim_b >= samples.dim() || dim_a == dim_b) {
    throw InvalidArgumentError("marginal needs two distinct coordinates");
  }
  if (cells_a < 1 || cells_b < 1) {
    throw InvalidArgumentError("marginal grid must be nonempty");
  }
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(cells_a, cells_b);
  auto bin = [&](double v, int d, int cells) {
    const double t =
        (v - box.lower()[d]) / (box.upper()[d] - box.lower()[d]);
    return std::clamp(static_cast<int>(t * cells), 0, cells - 1);
  };
  for (Eigen::Index i = 0; i < samples.count(); ++i) {
    const double p = solution.cell_probability[i];
    if (p <= 0) continue;
    mass(bin(samples.points(i, dim_a), dim_a, cells_a),
         bin(samples.points(i, dim_b), dim_b, cells_b)) += p;
  }
  return mass;
}

}  // namespace qopt
