#include "qopt/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "qopt/csv.hpp"
#include "qopt/rng.hpp"

namespace qopt {

namespace {

using nlohmann::json;

ParameterBox model_box(const ModelConfig& model) {
  return ParameterBox(model.box_lower, model.box_upper);
}

std::string subset_label(const std::vector<int>& subset) {
  std::string s;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(subset[i]);
  }
  return s;
}

json score_to_json(const DesignScore& score) {
  return {{"subset", score.subset},
          {"avg_measure", score.avg_measure},
          {"avg_skewness", score.avg_skewness},
          {"distance", score.distance},
          {"distance_table_convention", score.distance_sum}};
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::filesystem::path ensure_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw InvalidArgumentError("cannot create output directory " +
                               dir.string() + ": " + ec.message());
  }
  return dir;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) {
    throw InvalidArgumentError("cannot open output file " + path.string());
  }
  out << doc.dump(2) << '\n';
}

void write_config_echo(const ExperimentConfig& config,
                       const std::filesystem::path& dir) {
  write_json(dir / "config_echo.json", to_json(config));
}

// Samples the model box and evaluates the model at every point.
SampleSet prepare_samples(const ExperimentConfig& config,
                          const ForwardModel& model) {
  SampleSet samples = sample_uniform(
      model_box(config.model), config.sampling.count,
      rng::derive_seed(config.sampling.seed, rng::kTagSamples));
  fill_qoi(samples, model, config.threads);
  return samples;
}

JacobianField build_field(const ExperimentConfig& config,
                          const ModelBundle& bundle,
                          const SampleSet& samples) {
  std::vector<Eigen::Index> targets(config.jacobian.sites);
  for (Eigen::Index i = 0; i < config.jacobian.sites; ++i) targets[i] = i;
  switch (config.jacobian.method) {
    case JacobianMethod::kExactLinear:
      return exact_linear_field(*bundle.linear, targets);
    case JacobianMethod::kAnalyticPolynomial:
      return analytic_polynomial_field(*bundle.polynomial, samples, targets);
    default:
      return build_jacobian_field(samples, targets,
                                  config.jacobian.k_neighbors,
                                  config.jacobian.method, config.threads);
  }
}

OptimizeOutcome compute_scores(const ExperimentConfig& config,
                               const JacobianField& field) {
  OptimizationSettings settings;
  settings.subset_size = config.design.subset_size;
  settings.qoi_widths = config.design.qoi_widths;
  settings.omega = config.design.omega;
  settings.candidate_cap = config.design.candidate_cap;
  settings.threads = config.threads;

  OptimizeOutcome outcome;
  outcome.scores = enumerate_and_score(field, settings);
  outcome.front = pareto_front(outcome.scores);
  for (Objective objective : {Objective::kMinMeasure, Objective::kMinSkewness,
                              Objective::kMinDistance}) {
    outcome.winners[objective_name(objective)] =
        select_by_objective(outcome.scores, objective);
  }
  outcome.selected =
      select_by_objective(outcome.scores, config.design.objective);
  return outcome;
}

void write_scores_csv(const std::filesystem::path& path,
                      const std::vector<DesignScore>& scores) {
  csv::Writer out(path.string(),
                  "subset;avg_measure;avg_skewness;distance;"
                  "distance_table_convention");
  for (const auto& s : scores) {
    out.row(subset_label(s.subset), s.avg_measure, s.avg_skewness, s.distance,
            s.distance_sum);
  }
}

void write_plate_catalog(const std::filesystem::path& dir,
                         const PlateForwardModel& plate) {
  csv::Writer out((dir / "qoi_catalog.csv").string(),
                  "column;sensor_index;x;y;level;time");
  const double dt_level =
      plate.setup().t_final / plate.setup().saved_levels;
  for (int c = 0; c < plate.qoi_dim(); ++c) {
    const auto [sensor, level] = plate.column_sensor_level(c);
    out.row(c, sensor, plate.sensors()[sensor].position[0],
            plate.sensors()[sensor].position[1], level,
            (level + 1) * dt_level);
  }
}

// One-column forward model for changed-scenario predictions on the plate.
class RegionPredictionModel final : public ForwardModel {
 public:
  RegionPredictionModel(DiffusionSetup setup, RegionAverage region)
      : setup_(std::move(setup)), region_(std::move(region)) {}
  int param_dim() const override { return 2; }
  int qoi_dim() const override { return 1; }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const override {
    const TemperatureTrajectory traj =
        solve_diffusion(setup_, lambda[0], lambda[1]);
    Eigen::VectorXd out(1);
    out[0] = apply_region_average(traj, region_);
    return out;
  }

 private:
  DiffusionSetup setup_;
  RegionAverage region_;
};

Eigen::VectorXd prediction_values(const ExperimentConfig& config,
                                  const ModelBundle& bundle,
                                  const SampleSet& samples) {
  const PredictionConfig& pred = *config.prediction;
  if (pred.kind == PredictionConfig::Kind::kQoiColumn) {
    return samples.qoi_values.col(pred.column);
  }
  DiffusionSetup setup = config.model.plate;
  if (pred.source_override) setup.source = *pred.source_override;
  RegionPredictionModel model(setup, pred.region);
  SampleSet scratch;
  scratch.points = samples.points;
  fill_qoi(scratch, model, config.threads);
  return scratch.qoi_values.col(0);
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig config,
                                 const RunOverrides& overrides) {
  if (overrides.seed) config.sampling.seed = *overrides.seed;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  if (overrides.threads) {
    if (*overrides.threads < 1) {
      throw ConfigError("threads override must be >= 1");
    }
    config.threads = *overrides.threads;
  }
  if (overrides.objective) config.design.objective = *overrides.objective;
  return config;
}

ModelBundle build_model(const ModelConfig& config) {
  ModelBundle bundle;
  switch (config.kind) {
    case ModelKind::kLinear: {
      bundle.linear = LinearMapModel{config.matrix};
      bundle.forward = std::make_unique<LinearForwardModel>(*bundle.linear);
      break;
    }
    case ModelKind::kPolynomial: {
      bundle.polynomial =
          config.has_explicit_coefficients
              ? PolynomialMapModel{config.coefficients}
              : make_random_polynomial_model(config.poly_qoi_dim,
                                             config.coefficient_seed);
      bundle.forward =
          std::make_unique<PolynomialForwardModel>(*bundle.polynomial);
      break;
    }
    case ModelKind::kPlate: {
      auto plate = std::make_unique<PlateForwardModel>(
          config.plate, config.sensors, config.time_levels);
      bundle.plate = plate.get();
      bundle.forward = std::move(plate);
      break;
    }
  }
  return bundle;
}

OptimizeOutcome run_optimize(const ExperimentConfig& config) {
  if (!config.has_model) {
    throw ConfigError("optimize needs a model block in the config");
  }
  const std::filesystem::path dir = ensure_output_dir(config);
  const ModelBundle bundle = build_model(config.model);
  const SampleSet samples = prepare_samples(config, *bundle.forward);
  const JacobianField field = build_field(config, bundle, samples);
  OptimizeOutcome outcome = compute_scores(config, field);

  write_scores_csv(dir / "scores.csv", outcome.scores);
  write_scores_csv(dir / "pareto.csv", outcome.front);
  if (bundle.plate) write_plate_catalog(dir, *bundle.plate);

  json summary;
  summary["schema"] = "qopt-summary/1";
  summary["command"] = "optimize";
  summary["qoi_dim"] = bundle.forward->qoi_dim();
  summary["candidates"] = outcome.scores.size();
  summary["objective"] = objective_name(config.design.objective);
  summary["selected"] = score_to_json(outcome.selected);
  json winners;
  for (const auto& [name, score] : outcome.winners) {
    winners[name] = score_to_json(score);
  }
  summary["winners"] = winners;
  summary["pareto_size"] = outcome.front.size();
  write_json(dir / "summary.json", summary);
  write_config_echo(config, dir);
  return outcome;
}

InvertOutcome run_invert(const ExperimentConfig& config) {
  if (!config.has_model) {
    throw ConfigError("invert needs a model block in the config");
  }
  const std::filesystem::path dir = ensure_output_dir(config);
  const ModelBundle bundle = build_model(config.model);
  const ParameterBox box = model_box(config.model);
  const SampleSet samples = prepare_samples(config, *bundle.forward);

  InvertOutcome outcome;

  // Observed subset: explicit, or the winner under the configured objective.
  if (config.inverse && config.inverse->subset) {
    outcome.subset = *config.inverse->subset;
  } else {
    const JacobianField field = build_field(config, bundle, samples);
    outcome.subset = compute_scores(config, field).selected.subset;
  }

  // Reference parameter and nominal observation.
  if (config.inverse && config.inverse->lambda_ref) {
    outcome.lambda_ref = *config.inverse->lambda_ref;
  } else {
    outcome.lambda_ref =
        sample_uniform(box, 1,
                       rng::derive_seed(config.sampling.seed,
                                        rng::kTagReference))
            .points.row(0);
  }
  const Eigen::VectorXd q_full = bundle.forward->evaluate(outcome.lambda_ref);
  const int m = static_cast<int>(outcome.subset.size());
  outcome.q_ref.resize(m);
  Eigen::VectorXd widths(m);
  for (int c = 0; c < m; ++c) {
    outcome.q_ref[c] = q_full[outcome.subset[c]];
    widths[c] = config.design.qoi_widths[outcome.subset[c]];
  }

  std::vector<int> grid =
      config.inverse ? config.inverse->data_grid : std::vector<int>();
  if (static_cast<int>(grid.size()) != m) grid.assign(m, 1);
  const DataDensity density = uncertainty_density(outcome.q_ref, widths, grid);

  InverseOptions options;
  if (config.inverse) {
    options.volume_mode = config.inverse->volume_mode;
    options.reference_multiplier = config.inverse->reference_multiplier;
  }
  options.volume_seed =
      rng::derive_seed(config.sampling.seed, rng::kTagVolumes);
  outcome.solution =
      solve_inverse(samples, box, outcome.subset, density, options);
  outcome.support = support_fraction(outcome.solution);

  // inverse.csv: one row per sample with its probability and cell index.
  {
    std::string header = "sample_index";
    for (Eigen::Index c = 0; c < samples.dim(); ++c) {
      header += ";lambda_" + std::to_string(c);
    }
    header += ";p_lambda;cell_index";
    csv::Writer out((dir / "inverse.csv").string(), header);
    for (Eigen::Index i = 0; i < samples.count(); ++i) {
      std::string line = std::to_string(i);
      for (Eigen::Index c = 0; c < samples.dim(); ++c) {
        line += ';';
        line += csv::format_double(samples.points(i, c));
      }
      line += ';';
      line += csv::format_double(outcome.solution.cell_probability[i]);
      line += ';';
      line += std::to_string(outcome.solution.assignment[i]);
      out.raw_row(line);
    }
  }

  // 2-D marginals for every coordinate pair.
  const int cells = config.inverse ? config.inverse->marginal_cells : 20;
  for (int a = 0; a < samples.dim(); ++a) {
    for (int b = a + 1; b < samples.dim(); ++b) {
      const Eigen::MatrixXd mass =
          marginal_2d(outcome.solution, samples, box, a, b, cells, cells);
      csv::Writer out((dir / ("marginals_" + std::to_string(a) + "_" +
                              std::to_string(b) + ".csv"))
                          .string(),
                      "cell_" + std::to_string(a) + ";cell_" +
                          std::to_string(b) + ";mass");
      for (int i = 0; i < mass.rows(); ++i) {
        for (int j = 0; j < mass.cols(); ++j) {
          out.row(i, j, mass(i, j));
        }
      }
    }
  }

  if (config.prediction) {
    const Eigen::VectorXd values = prediction_values(config, bundle, samples);
    outcome.prediction =
        push_forward(outcome.solution, values, config.prediction->bins);
    outcome.prediction_full_lower = values.minCoeff();
    outcome.prediction_full_upper = values.maxCoeff();

    csv::Writer out((dir / "prediction.csv").string(),
                    "record;lower;upper;mass");
    out.row("support_interval", outcome.prediction->lower,
            outcome.prediction->upper, outcome.prediction->total_mass);
    out.row("full_range", outcome.prediction_full_lower,
            outcome.prediction_full_upper, 1.0);
    for (std::size_t b = 0; b < outcome.prediction->bin_mass.size(); ++b) {
      out.row("bin_" + std::to_string(b), outcome.prediction->bin_edges[b],
              outcome.prediction->bin_edges[b + 1],
              outcome.prediction->bin_mass[b]);
    }
  }

  if (bundle.plate) write_plate_catalog(dir, *bundle.plate);

  json summary;
  summary["schema"] = "qopt-summary/1";
  summary["command"] = "invert";
  summary["subset"] = outcome.subset;
  summary["lambda_ref"] = vector_to_json(outcome.lambda_ref);
  summary["q_ref"] = vector_to_json(outcome.q_ref);
  summary["support_fraction"] = outcome.support;
  summary["lost_mass"] = outcome.solution.lost_mass;
  summary["fully_covered"] = outcome.solution.fully_covered;
  if (outcome.prediction) {
    summary["prediction"] = {
        {"lower", outcome.prediction->lower},
        {"upper", outcome.prediction->upper},
        {"total_mass", outcome.prediction->total_mass},
        {"full_lower", outcome.prediction_full_lower},
        {"full_upper", outcome.prediction_full_upper}};
  }
  write_json(dir / "summary.json", summary);
  write_config_echo(config, dir);
  return outcome;
}

ConvergeOutcome run_converge(const ExperimentConfig& config) {
  if (!config.convergence) {
    throw ConfigError("converge needs a convergence block in the config");
  }
  const std::filesystem::path dir = ensure_output_dir(config);
  const ConvergenceConfig& cc = *config.convergence;
  const ParameterBox box(cc.box_lower, cc.box_upper);

  ConvergeOutcome outcome;
  for (const auto& mc : cc.maps) {
    const LinearForwardModel map(LinearMapModel{mc.matrix});
    // Event box: the configured widths, centered on the image of the
    // parameter box center, so the event sits in the interior of the range.
    const Eigen::VectorXd center = mc.matrix * box.center();
    outcome.results.push_back(convergence_study(
        map, mc.name, center - mc.event_widths / 2.0,
        center + mc.event_widths / 2.0, box, cc.sample_counts, cc.repetitions,
        cc.reference_count, config.sampling.seed, config.threads));
  }

  csv::Writer rows((dir / "convergence.csv").string(),
                   "map;N;mean_error;stderr;repetitions");
  for (const auto& result : outcome.results) {
    for (const auto& row : result.rows) {
      rows.row(result.map_name, row.sample_count, row.mean_error,
               row.stderr_error, cc.repetitions);
    }
  }
  csv::Writer slopes((dir / "slopes.csv").string(), "map;slope");
  json summary;
  summary["schema"] = "qopt-summary/1";
  summary["command"] = "converge";
  for (const auto& result : outcome.results) {
    slopes.row(result.map_name, result.fitted_slope);
    summary["slopes"][result.map_name] = result.fitted_slope;
  }
  write_json(dir / "summary.json", summary);
  write_config_echo(config, dir);
  return outcome;
}

}  // namespace qopt
