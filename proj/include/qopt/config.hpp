#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qopt/diffusion.hpp"
#include "qopt/inverse.hpp"
#include "qopt/jacobian.hpp"
#include "qopt/models.hpp"
#include "qopt/optimizer.hpp"

namespace qopt {

inline constexpr const char* kConfigSchema = "qopt-config/1";

enum class ModelKind { kLinear, kPolynomial, kPlate };

struct ModelConfig {
  ModelKind kind = ModelKind::kLinear;
  Eigen::VectorXd box_lower;
  Eigen::VectorXd box_upper;
  // linear
  Eigen::MatrixXd matrix;
  // polynomial: either explicit coefficients or a seeded draw
  int poly_qoi_dim = 0;
  std::uint64_t coefficient_seed = 0;
  bool has_explicit_coefficients = false;
  Eigen::MatrixXd coefficients;
  // plate
  DiffusionSetup plate;
  std::vector<PlateSensor> sensors;
  std::vector<int> time_levels;
};

struct SamplingConfig {
  Eigen::Index count = 0;
  std::uint64_t seed = 1;
};

struct JacobianConfig {
  JacobianMethod method = JacobianMethod::kLocalLeastSquares;
  int k_neighbors = 20;
  Eigen::Index sites = 100;  // Jacobians at the first `sites` samples
};

struct DesignConfig {
  int subset_size = 2;
  Eigen::VectorXd qoi_widths;  // resolved to one width per QoI column
  double omega = 0.5;
  Objective objective = Objective::kMinDistance;
  std::size_t candidate_cap = 1'000'000;
};

struct InverseConfig {
  std::optional<std::vector<int>> subset;  // default: winner of the objective
  std::optional<Eigen::VectorXd> lambda_ref;  // default: seeded draw
  std::vector<int> data_grid;  // observation cells per component; default 1s
  VolumeMode volume_mode = VolumeMode::kEqual;
  int reference_multiplier = 10;
  int marginal_cells = 20;
};

struct PredictionConfig {
  enum class Kind { kQoiColumn, kRegionAverage };
  Kind kind = Kind::kQoiColumn;
  int column = 0;  // qoi-column
  RegionAverage region;  // region-average (plate only)
  std::optional<SourceTerm> source_override;  // changed-scenario prediction
  int bins = 20;
};

struct ConvergenceMapConfig {
  std::string name;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd event_widths;  // one per QoI row
};

struct ConvergenceConfig {
  Eigen::VectorXd box_lower;
  Eigen::VectorXd box_upper;
  std::vector<ConvergenceMapConfig> maps;
  std::vector<Eigen::Index> sample_counts{50, 200, 800, 3200};
  int repetitions = 100;
  Eigen::Index reference_count = 1'000'000;
};

struct ExperimentConfig {
  std::string output_dir = "out";
  int threads = 1;
  bool has_model = false;
  ModelConfig model;
  SamplingConfig sampling;
  JacobianConfig jacobian;
  DesignConfig design;
  std::optional<InverseConfig> inverse;
  std::optional<PredictionConfig> prediction;
  std::optional<ConvergenceConfig> convergence;
};

// Parses and validates a configuration document. Messages name the
// offending field. parse_config(to_json(c)) reproduces c: the JSON form is
// the resolved configuration with defaults filled in.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Shared name tables (config strings <-> enums).
std::string objective_name(Objective objective);
Objective objective_from_name(const std::string& name);
std::string jacobian_method_name(JacobianMethod method);
JacobianMethod jacobian_method_from_name(const std::string& name);

}  // namespace qopt
