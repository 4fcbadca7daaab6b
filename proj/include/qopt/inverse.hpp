#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qopt/param_space.hpp"

namespace qopt {

// Probability density on the observation space, piecewise constant over a
// regular grid of cells covering an axis-aligned box. The default pipeline
// uses a single-cell uniform box; finer grids sharpen the inverse at the
// cost of per-cell sample coverage.
class DataDensity {
 public:
  // Uniform cell probabilities: every cell gets volume-proportional mass
  // (equal mass for the regular grid). grid[i] >= 1 cells per axis.
  DataDensity(Eigen::VectorXd lower, Eigen::VectorXd upper,
              std::vector<int> grid);

  int dim() const { return static_cast<int>(lower_.size()); }
  int cell_count() const { return static_cast<int>(probabilities_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const std::vector<int>& grid() const { return grid_; }
  double cell_probability(int cell) const { return probabilities_[cell]; }

  // Cell containing q, or -1 when q falls outside the box. Interior cell
  // boundaries are half-open toward the upper side; the box's upper face
  // belongs to the last cell.
  int locate(const Eigen::VectorXd& q) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<int> grid_;
  Eigen::VectorXd probabilities_;
};

// Density centered at a nominal observation with the given per-component
// box widths.
DataDensity uncertainty_density(const Eigen::VectorXd& q_nominal,
                                const Eigen::VectorXd& widths,
                                std::vector<int> grid);

enum class VolumeMode {
  kEqual,       // every Voronoi cell gets volume mu(box)/N
  kMonteCarlo,  // cell volumes from nearest-site counts of reference points
};

struct InverseOptions {
  VolumeMode volume_mode = VolumeMode::kEqual;
  // Reference points per sample for Monte Carlo volumes (R = multiplier*N).
  int reference_multiplier = 10;
  std::uint64_t volume_seed = 0;
};

// Discrete inverse solution: one probability per sample (Voronoi cell).
struct InverseSolution {
  std::vector<int> subset;            // QoI columns that were observed
  Eigen::VectorXd cell_probability;   // p_i per sample
  Eigen::VectorXd cell_volume;        // V_i per sample
  std::vector<int> assignment;        // observation cell per sample, -1 if none
  double domain_volume = 0;
  double lost_mass = 0;     // observation mass with no samples to carry it
  bool fully_covered = true;

  Eigen::Index sample_count() const { return cell_probability.size(); }
};

// Sample-based approximation of the inverse measure: partition the box by
// the samples' Voronoi cells, bin the observed QoI components into the
// density's cells, then split each observation cell's probability across
// the samples mapping into it, proportionally to Voronoi cell volume.
// Observation cells that capture no samples lose their mass; the solution
// reports it and drops the fully_covered flag. Throws EmptySupportError if
// no sample lands in any observation cell.
InverseSolution solve_inverse(const SampleSet& samples,
                              const ParameterBox& box,
                              std::span<const int> subset,
                              const DataDensity& density,
                              const InverseOptions& options = {});

// Fraction of the parameter box carrying nonzero probability.
double support_fraction(const InverseSolution& solution);

// Push-forward of the inverse solution through scalar per-sample values:
// support interval plus a mass histogram over it.
struct PredictionSummary {
  double lower = 0;
  double upper = 0;
  std::vector<double> bin_edges;   // bins + 1 edges spanning [lower, upper]
  std::vector<double> bin_mass;    // probability mass per bin
  double total_mass = 0;
};

PredictionSummary push_forward(const InverseSolution& solution,
                               const Eigen::VectorXd& values, int bins = 20);

// Probability mass aggregated over a grid on two parameter coordinates.
Eigen::MatrixXd marginal_2d(const InverseSolution& solution,
                            const SampleSet& samples, const ParameterBox& box,
                            int dim_a, int dim_b, int cells_a, int cells_b);

}  // namespace qopt
