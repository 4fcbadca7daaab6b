#include "qopt/diffusion.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qopt/errors.hpp"

namespace qopt {

namespace {

void validate_setup(const DiffusionSetup& s) {
  if (s.nodes_x < 3 || s.nodes_y < 3) {
    throw InvalidArgumentError("plate grid needs at least 3 nodes per axis");
  }
  if (!(s.t_final > 0)) {
    throw InvalidArgumentError("simulation window must be positive");
  }
  if (s.saved_levels < 1 || s.steps < s.saved_levels ||
      s.steps % s.saved_levels != 0) {
    throw InvalidArgumentError(
        "step count must be a positive multiple of the saved level count");
  }
  if (!(s.rho_c > 0)) {
    throw InvalidArgumentError("volumetric heat capacity must be positive");
  }
  if (!(s.source.width > 0)) {
    throw InvalidArgumentError("source width must be positive");
  }
}

// Dual-cell side length along one axis: interior nodes own a full spacing,
// boundary nodes half of one.
double dual_width(int i, int count, double h) {
  return (i == 0 || i == count - 1) ? 0.5 * h : h;
}

}  // namespace

TemperatureTrajectory solve_diffusion(const DiffusionSetup& setup,
                                      double kappa_left, double kappa_right) {
  validate_setup(setup);
  if (!(kappa_left > 0) || !(kappa_right > 0)) {
    throw InvalidArgumentError("conductivities must be positive");
  }

  const int nx = setup.nodes_x, ny = setup.nodes_y;
  const int n = nx * ny;
  const double hx = 1.0 / (nx - 1), hy = 1.0 / (ny - 1);
  auto node = [nx](int i, int j) { return j * nx + i; };

  // Node conductivities; the split line x = 0 belongs to the right half.
  Eigen::VectorXd kappa(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = -0.5 + i * hx;
      kappa[node(i, j)] = x < 0 ? kappa_left : kappa_right;
    }
  }

  // Dual-cell areas (the lumped mass weights).
  Eigen::VectorXd area(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      area[node(i, j)] = dual_width(i, nx, hx) * dual_width(j, ny, hy);
    }
  }

  // Five-point stiffness with harmonic-mean face conductivities. Insulated
  // edges appear naturally: boundary nodes simply have no outward faces, so
  // every row and column of S sums to zero and total heat is conserved.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(8) * n);
  auto add_face = [&](int a, int b, double g) {
    trip.emplace_back(a, a, g);
    trip.emplace_back(b, b, g);
    trip.emplace_back(a, b, -g);
    trip.emplace_back(b, a, -g);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = node(i, j), b = node(i + 1, j);
      const double kf = 2.0 * kappa[a] * kappa[b] / (kappa[a] + kappa[b]);
      add_face(a, b, kf * dual_width(j, ny, hy) / hx);
    }
  }
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = node(i, j), b = node(i, j + 1);
      const double kf = 2.0 * kappa[a] * kappa[b] / (kappa[a] + kappa[b]);
      add_face(a, b, kf * dual_width(i, nx, hx) / hy);
    }
  }
  Eigen::SparseMatrix<double> stiffness(n, n);
  stiffness.setFromTriplets(trip.begin(), trip.end());

  const double dt = setup.t_final / setup.steps;
  std::vector<Eigen::Triplet<double>> mass_trip;
  mass_trip.reserve(n);
  for (int a = 0; a < n; ++a) {
    mass_trip.emplace_back(a, a, setup.rho_c * area[a] / dt);
  }
  Eigen::SparseMatrix<double> mass_dt(n, n);
  mass_dt.setFromTriplets(mass_trip.begin(), mass_trip.end());

  const Eigen::SparseMatrix<double> lhs = mass_dt + 0.5 * stiffness;
  const Eigen::SparseMatrix<double> rhs_op = mass_dt - 0.5 * stiffness;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(lhs);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailureError(
        "plate time-step matrix factorization failed (grid " +
        std::to_string(nx) + "x" + std::to_string(ny) + ")");
  }

  // Dual-area-weighted nodal source; time dependence is a pure on/off gate.
  Eigen::VectorXd weighted_source(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = -0.5 + i * hx, y = -0.5 + j * hy;
      const double dx = x - setup.source.position[0];
      const double dy = y - setup.source.position[1];
      weighted_source[node(i, j)] =
          area[node(i, j)] * setup.source.amplitude *
          std::exp(-(dx * dx + dy * dy) / setup.source.width);
    }
  }
  const double t_source = 0.5 * setup.t_final;

  TemperatureTrajectory traj;
  traj.nodes_x = nx;
  traj.nodes_y = ny;
  const int stride = setup.steps / setup.saved_levels;
  Eigen::VectorXd temp = Eigen::VectorXd::Zero(n);
  for (int step = 1; step <= setup.steps; ++step) {
    const double t_prev = dt * (step - 1);
    // Exact overlap of the step with the on-window, so the removal at
    // t_source costs no time-integration order.
    const double gate = std::clamp(t_source - t_prev, 0.0, dt) / dt;
    Eigen::VectorXd rhs = rhs_op * temp;
    if (gate > 0) rhs += gate * weighted_source;
    temp = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !temp.allFinite()) {
      throw NumericalFailureError("plate time step " + std::to_string(step) +
                                  " failed to solve");
    }
    if (step % stride == 0) {
      traj.times.push_back(dt * step);
      traj.fields.push_back(temp);
    }
  }
  return traj;
}

double total_heat(const TemperatureTrajectory& traj, int level, double rho_c) {
  if (level < 0 || level >= static_cast<int>(traj.fields.size())) {
    throw InvalidArgumentError("trajectory level out of range");
  }
  const int nx = traj.nodes_x, ny = traj.nodes_y;
  const double hx = 1.0 / (nx - 1), hy = 1.0 / (ny - 1);
  double heat = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      heat += dual_width(i, nx, hx) * dual_width(j, ny, hy) *
              traj.fields[level][j * nx + i];
    }
  }
  return rho_c * heat;
}

double source_power(const DiffusionSetup& setup) {
  validate_setup(setup);
  const int nx = setup.nodes_x, ny = setup.nodes_y;
  const double hx = 1.0 / (nx - 1), hy = 1.0 / (ny - 1);
  double power = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double x = -0.5 + i * hx, y = -0.5 + j * hy;
      const double dx = x - setup.source.position[0];
      const double dy = y - setup.source.position[1];
      power += dual_width(i, nx, hx) * dual_width(j, ny, hy) *
               setup.source.amplitude *
               std::exp(-(dx * dx + dy * dy) / setup.source.width);
    }
  }
  return power;
}

double apply_region_average(const TemperatureTrajectory& traj,
                            const RegionAverage& region) {
  if (region.level < 0 ||
      region.level >= static_cast<int>(traj.fields.size())) {
    throw InvalidArgumentError("trajectory level out of range");
  }
  const int nx = traj.nodes_x, ny = traj.nodes_y;
  const double hx = 1.0 / (nx - 1), hy = 1.0 / (ny - 1);
  const Eigen::VectorXd& field = traj.fields[region.level];

  double bx0, bx1, by0, by1;
  if (region.shape == RegionAverage::Shape::kDisc) {
    if (!(region.radius > 0)) {
      throw InvalidArgumentError("sensor disc radius must be positive");
    }
    bx0 = region.center[0] - region.radius;
    bx1 = region.center[0] + region.radius;
    by0 = region.center[1] - region.radius;
    by1 = region.center[1] + region.radius;
  } else {
    bx0 = region.x_range[0];
    bx1 = region.x_range[1];
    by0 = region.y_range[0];
    by1 = region.y_range[1];
    if (!(bx0 < bx1) || !(by0 < by1)) {
      throw InvalidArgumentError("rectangle region is degenerate");
    }
  }
  bx0 = std::max(bx0, -0.5);
  by0 = std::max(by0, -0.5);
  bx1 = std::min(bx1, 0.5);
  by1 = std::min(by1, 0.5);
  if (!(bx0 < bx1) || !(by0 < by1)) {
    throw InvalidArgumentError("region does not intersect the plate");
  }

  auto inside = [&](double x, double y) {
    if (region.shape == RegionAverage::Shape::kDisc) {
      const double dx = x - region.center[0], dy = y - region.center[1];
      return dx * dx + dy * dy <= region.radius * region.radius;
    }
    return x >= region.x_range[0] && x <= region.x_range[1] &&
           y >= region.y_range[0] && y <= region.y_range[1];
  };

  // Midpoint quadrature on an 8x8 subdivision of every grid cell touching
  // the region's bounding box. Each sub-cell midpoint samples a single
  // bilinear piece, so a full cell is integrated exactly; the region border
  // is resolved by the inclusion test.
  constexpr int kSub = 8;
  const int i0 = std::clamp(static_cast<int>((bx0 + 0.5) / hx), 0, nx - 2);
  const int i1 = std::clamp(static_cast<int>((bx1 + 0.5) / hx), 0, nx - 2);
  const int j0 = std::clamp(static_cast<int>((by0 + 0.5) / hy), 0, ny - 2);
  const int j1 = std::clamp(static_cast<int>((by1 + 0.5) / hy), 0, ny - 2);

  double sum = 0;
  long count = 0;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double x_base = -0.5 + i * hx, y_base = -0.5 + j * hy;
      const double t00 = field[j * nx + i], t10 = field[j * nx + i + 1];
      const double t01 = field[(j + 1) * nx + i],
                   t11 = field[(j + 1) * nx + i + 1];
      for (int sj = 0; sj < kSub; ++sj) {
        const double v = (sj + 0.5) / kSub;
        const double y = y_base + v * hy;
        for (int si = 0; si < kSub; ++si) {
          const double u = (si + 0.5) / kSub;
          const double x = x_base + u * hx;
          if (x < bx0 || x > bx1 || y < by0 || y > by1) continue;
          if (!inside(x, y)) continue;
          sum += (1 - u) * ((1 - v) * t00 + v * t01) +
                 u * ((1 - v) * t10 + v * t11);
          ++count;
        }
      }
    }
  }
  if (count == 0) {
    throw InvalidArgumentError(
        "region is too small for the grid: no quadrature point falls inside");
  }
  return sum / static_cast<double>(count);
}

PlateForwardModel::PlateForwardModel(DiffusionSetup setup,
                                     std::vector<PlateSensor> sensors,
                                     std::vector<int> levels)
    : setup_(std::move(setup)),
      sensors_(std::move(sensors)),
      levels_(std::move(levels)) {
  validate_setup(setup_);
  if (sensors_.empty() || levels_.empty()) {
    throw InvalidArgumentError("plate model needs sensors and time levels");
  }
  for (const auto& s : sensors_) {
    if (!(s.radius > 0)) {
      throw InvalidArgumentError("sensor disc radius must be positive");
    }
  }
  for (int level : levels_) {
    if (level < 0 || level >= setup_.saved_levels) {
      throw InvalidArgumentError("sensor time level out of range");
    }
  }
}

Eigen::VectorXd PlateForwardModel::evaluate(
    const Eigen::VectorXd& lambda) const {
  if (lambda.size() != 2) {
    throw InvalidArgumentError("plate model takes (kappa_left, kappa_right)");
  }
  const TemperatureTrajectory traj =
      solve_diffusion(setup_, lambda[0], lambda[1]);
  Eigen::VectorXd out(qoi_dim());
  int col = 0;
  for (int level : levels_) {
    RegionAverage region;
    region.shape = RegionAverage::Shape::kDisc;
    region.level = level;
    for (const auto& sensor : sensors_) {
      region.center = sensor.position;
      region.radius = sensor.radius;
      out[col++] = apply_region_average(traj, region);
    }
  }
  return out;
}

std::pair<int, int> PlateForwardModel::column_sensor_level(int column) const {
  if (column < 0 || column >= qoi_dim()) {
    throw InvalidArgumentError("QoI column out of range");
  }
  const int sensors = static_cast<int>(sensors_.size());
  return {column % sensors, levels_[column / sensors]};
}

}  // namespace qopt
