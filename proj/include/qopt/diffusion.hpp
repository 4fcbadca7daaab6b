#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "qopt/models.hpp"

namespace qopt {

// Transient heat conduction on the unit square [-1/2, 1/2]^2 with insulated
// edges and a piecewise-constant conductivity split at x = 0: kappa0 on the
// left half, kappa1 on the right (the weld line itself counts as right).
// Heating comes from a Gaussian source that switches off halfway through
// the simulated window.

struct SourceTerm {
  double amplitude = 50.0;
  double width = 0.05;               // Gaussian denominator, exp(-|x-p|^2/w)
  Eigen::Vector2d position{0.0, 0.0};
};

struct DiffusionSetup {
  int nodes_x = 41;  // grid nodes per axis, >= 3
  int nodes_y = 41;
  double t_final = 1.0;
  int steps = 40;         // uniform Crank-Nicolson steps over [0, t_final]
  int saved_levels = 20;  // trajectory snapshots; steps must be a multiple
  double rho_c = 1.0;     // volumetric heat capacity
  SourceTerm source;
};

// Temperature snapshots at the saved time levels: fields[k] holds the
// node-ordered field (index j*nodes_x + i) at times[k] = (k+1)*t_final/L.
struct TemperatureTrajectory {
  int nodes_x = 0;
  int nodes_y = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> fields;

  double node_x(int i) const {
    return -0.5 + static_cast<double>(i) / (nodes_x - 1);
  }
  double node_y(int j) const {
    return -0.5 + static_cast<double>(j) / (nodes_y - 1);
  }
};

// Crank-Nicolson solve of the plate for one conductivity pair, starting
// from a uniform zero field. Conservative by construction: once the source
// is off, the discrete total heat is constant up to solver roundoff.
TemperatureTrajectory solve_diffusion(const DiffusionSetup& setup,
                                      double kappa_left, double kappa_right);

// Discrete total heat rho_c * sum of node temperatures weighted by their
// dual-cell areas; the quantity the scheme conserves.
double total_heat(const TemperatureTrajectory& traj, int level, double rho_c);

// Integral of the nodal source values against the dual-cell areas, i.e. the
// rate at which the source injects heat while it is on.
double source_power(const DiffusionSetup& setup);

// A scalar readout of a trajectory: the average of the (bilinearly
// interpolated) temperature over a disc or an axis-aligned rectangle at one
// saved time level.
struct RegionAverage {
  enum class Shape { kDisc, kRectangle };
  Shape shape = Shape::kDisc;
  Eigen::Vector2d center{0.0, 0.0};  // disc
  double radius = 0.05;
  Eigen::Vector2d x_range{0.0, 0.0};  // rectangle
  Eigen::Vector2d y_range{0.0, 0.0};
  int level = 0;  // saved time level index
};

double apply_region_average(const TemperatureTrajectory& traj,
                            const RegionAverage& region);

// One QoI column of the plate model: a sensor disc at a saved time level.
struct PlateSensor {
  Eigen::Vector2d position;
  double radius = 0.05;
};

// Forward model over (kappa_left, kappa_right): solves the plate once per
// parameter point and reads out every sensor at every requested level, in
// level-major order (column = level_pos * sensors + sensor_index).
class PlateForwardModel final : public ForwardModel {
 public:
  PlateForwardModel(DiffusionSetup setup, std::vector<PlateSensor> sensors,
                    std::vector<int> levels);
  int param_dim() const override { return 2; }
  int qoi_dim() const override {
    return static_cast<int>(sensors_.size() * levels_.size());
  }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const override;

  const DiffusionSetup& setup() const { return setup_; }
  const std::vector<PlateSensor>& sensors() const { return sensors_; }
  const std::vector<int>& levels() const { return levels_; }
  // Decodes a QoI column back into its (sensor, level) pair.
  std::pair<int, int> column_sensor_level(int column) const;

 private:
  DiffusionSetup setup_;
  std::vector<PlateSensor> sensors_;
  std::vector<int> levels_;
};

}  // namespace qopt
