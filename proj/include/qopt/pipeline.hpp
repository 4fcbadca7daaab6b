#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qopt/config.hpp"
#include "qopt/inverse.hpp"
#include "qopt/metrics.hpp"
#include "qopt/verification.hpp"

namespace qopt {

// Command-line overrides applied on top of a configuration file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
  std::optional<Objective> objective;
};

ExperimentConfig apply_overrides(ExperimentConfig config,
                                 const RunOverrides& overrides);

// Model instantiated from a config, with handles kept for the closed-form
// Jacobian routes.
struct ModelBundle {
  std::unique_ptr<ForwardModel> forward;
  std::optional<LinearMapModel> linear;
  std::optional<PolynomialMapModel> polynomial;
  const PlateForwardModel* plate = nullptr;  // owned by `forward`
};

ModelBundle build_model(const ModelConfig& config);

struct OptimizeOutcome {
  std::vector<DesignScore> scores;  // sorted by distance
  std::vector<DesignScore> front;   // Pareto front, sorted by skewness
  std::map<std::string, DesignScore> winners;  // per canonical objective
  DesignScore selected;                        // under the active objective
};

struct InvertOutcome {
  std::vector<int> subset;
  Eigen::VectorXd lambda_ref;
  Eigen::VectorXd q_ref;  // observed components, subset order
  InverseSolution solution;
  double support = 0;  // fraction of the box carrying mass
  std::optional<PredictionSummary> prediction;
  double prediction_full_lower = 0;  // value range over every sample
  double prediction_full_upper = 0;
};

struct ConvergeOutcome {
  std::vector<ConvergenceResult> results;
};

// Pipeline entry points behind the CLI commands. Each writes its CSV/JSON
// products into the configured output directory (created if missing) and
// returns the in-memory outcome. A resolved copy of the configuration is
// always written alongside the outputs for provenance.
OptimizeOutcome run_optimize(const ExperimentConfig& config);
InvertOutcome run_invert(const ExperimentConfig& config);
ConvergeOutcome run_converge(const ExperimentConfig& config);

}  // namespace qopt
