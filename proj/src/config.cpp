#include "qopt/config.hpp"

#include <algorithm>
#include <fstream>

#include "qopt/errors.hpp"

namespace qopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& member(const json& obj, const std::string& path,
                   const char* key) {
  if (!obj.is_object()) fail(path, "must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "is required");
  return *it;
}

bool has(const json& obj, const char* key) {
  return obj.is_object() && obj.contains(key);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

long long get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    fail(path, "must be an integer seed");
  }
  return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "must be a nonempty array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[i] = get_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    fail(path, "must be a nonempty array of rows");
  }
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row =
        get_vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) {
      m.resize(j.size(), row.size());
    } else if (row.size() != m.cols()) {
      fail(path, "rows must all have the same length");
    }
    m.row(r) = row.transpose();
  }
  return m;
}

std::vector<int> get_int_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "must be a nonempty array");
  std::vector<int> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[i] = static_cast<int>(
        get_integer(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    arr.push_back(vector_to_json(m.row(r).transpose()));
  }
  return arr;
}

// Default plate sensor layout: ten locations on a staggered grid, five per
// half-plate, clear of the edges and the weld line. Each column's y offsets
// are shifted so no two sensors sit mirrored across y = 0: the plate and
// source are y-symmetric, and a mirrored pair would report byte-identical
// readings (degenerate design columns).
std::vector<PlateSensor> default_sensors(double radius) {
  std::vector<PlateSensor> sensors;
  const auto column = [&](double x, std::initializer_list<double> ys) {
    for (double y : ys) sensors.push_back({{x, y}, radius});
  };
  column(-0.375, {-0.25, 0.05, 0.35});
  column(-0.125, {-0.1, 0.2});
  column(0.125, {-0.2, 0.1});
  column(0.375, {-0.35, -0.05, 0.25});
  return sensors;
}

ModelKind model_kind_from_name(const std::string& name,
                               const std::string& path) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "polynomial") return ModelKind::kPolynomial;
  if (name == "plate") return ModelKind::kPlate;
  fail(path, "must be one of linear, polynomial, plate");
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear:
      return "linear";
    case ModelKind::kPolynomial:
      return "polynomial";
    case ModelKind::kPlate:
      return "plate";
  }
  throw InvalidArgumentError("unknown model kind");
}

ModelConfig parse_model(const json& j, const std::string& path) {
  ModelConfig model;
  model.kind = model_kind_from_name(get_string(member(j, path, "kind"),
                                               path + ".kind"),
                                    path + ".kind");
  if (has(j, "box")) {
    const json& box = j["box"];
    model.box_lower = get_vector(member(box, path + ".box", "lower"),
                                 path + ".box.lower");
    model.box_upper = get_vector(member(box, path + ".box", "upper"),
                                 path + ".box.upper");
  } else if (model.kind == ModelKind::kPlate) {
    model.box_lower = Eigen::Vector2d(0.01, 0.01);
    model.box_upper = Eigen::Vector2d(0.2, 0.2);
  } else {
    fail(path + ".box", "is required");
  }
  if (model.box_lower.size() != model.box_upper.size()) {
    fail(path + ".box", "lower and upper must have the same length");
  }
  for (Eigen::Index i = 0; i < model.box_lower.size(); ++i) {
    if (!(model.box_lower[i] < model.box_upper[i])) {
      fail(path + ".box", "must satisfy lower < upper componentwise");
    }
  }
  const int dim = static_cast<int>(model.box_lower.size());

  switch (model.kind) {
    case ModelKind::kLinear: {
      model.matrix =
          get_matrix(member(j, path, "matrix"), path + ".matrix");
      if (model.matrix.cols() != dim) {
        fail(path + ".matrix", "needs one column per parameter");
      }
      break;
    }
    case ModelKind::kPolynomial: {
      if (dim != 2) fail(path + ".box", "polynomial model is two-parameter");
      if (has(j, "coefficients")) {
        model.coefficients = get_matrix(j["coefficients"],
                                        path + ".coefficients");
        if (model.coefficients.cols() != kPolynomialTermCount) {
          fail(path + ".coefficients", "needs 6 columns per QoI");
        }
        model.has_explicit_coefficients = true;
        model.poly_qoi_dim = static_cast<int>(model.coefficients.rows());
      } else {
        model.poly_qoi_dim = static_cast<int>(
            get_integer(member(j, path, "qoi_dim"), path + ".qoi_dim"));
        if (model.poly_qoi_dim < 1) fail(path + ".qoi_dim", "must be >= 1");
        model.coefficient_seed =
            has(j, "coefficient_seed")
                ? get_seed(j["coefficient_seed"], path + ".coefficient_seed")
                : 0;
      }
      break;
    }
    case ModelKind::kPlate: {
      if (dim != 2) fail(path + ".box", "plate model is two-parameter");
      DiffusionSetup& plate = model.plate;
      if (has(j, "grid")) {
        const auto grid = get_int_list(j["grid"], path + ".grid");
        if (grid.size() != 2) fail(path + ".grid", "must be [nodes_x, nodes_y]");
        plate.nodes_x = grid[0];
        plate.nodes_y = grid[1];
      }
      if (has(j, "t_final")) {
        plate.t_final = get_number(j["t_final"], path + ".t_final");
      }
      if (has(j, "steps")) {
        plate.steps = static_cast<int>(
            get_integer(j["steps"], path + ".steps"));
      }
      if (has(j, "saved_levels")) {
        plate.saved_levels = static_cast<int>(
            get_integer(j["saved_levels"], path + ".saved_levels"));
      }
      if (has(j, "rho_c")) {
        plate.rho_c = get_number(j["rho_c"], path + ".rho_c");
      }
      if (has(j, "source")) {
        const json& src = j["source"];
        const std::string sp = path + ".source";
        if (has(src, "amplitude")) {
          plate.source.amplitude = get_number(src["amplitude"],
                                              sp + ".amplitude");
        }
        if (has(src, "width")) {
          plate.source.width = get_number(src["width"], sp + ".width");
        }
        if (has(src, "position")) {
          const Eigen::VectorXd p = get_vector(src["position"],
                                               sp + ".position");
          if (p.size() != 2) fail(sp + ".position", "must be [x, y]");
          plate.source.position = p;
        }
      }
      double radius = 0.05;
      if (has(j, "sensor_radius")) {
        radius = get_number(j["sensor_radius"], path + ".sensor_radius");
        if (!(radius > 0)) fail(path + ".sensor_radius", "must be positive");
      }
      if (has(j, "sensors")) {
        const json& arr = j["sensors"];
        if (!arr.is_array() || arr.empty()) {
          fail(path + ".sensors", "must be a nonempty array of [x, y]");
        }
        for (std::size_t s = 0; s < arr.size(); ++s) {
          const Eigen::VectorXd p = get_vector(
              arr[s], path + ".sensors[" + std::to_string(s) + "]");
          if (p.size() != 2) {
            fail(path + ".sensors[" + std::to_string(s) + "]",
                 "must be [x, y]");
          }
          model.sensors.push_back({{p[0], p[1]}, radius});
        }
      } else {
        model.sensors = default_sensors(radius);
      }
      if (has(j, "time_levels")) {
        model.time_levels = get_int_list(j["time_levels"],
                                         path + ".time_levels");
        for (int level : model.time_levels) {
          if (level < 0 || level >= plate.saved_levels) {
            fail(path + ".time_levels", "entries must be in [0, saved_levels)");
          }
        }
      } else {
        // Desk-scale default: four of the saved levels spanning the
        // trajectory, giving 10 sensors x 4 levels = 40 candidate QoI.
        for (int level : {0, 6, 12, plate.saved_levels - 1}) {
          if (level < plate.saved_levels &&
              (model.time_levels.empty() || model.time_levels.back() < level)) {
            model.time_levels.push_back(level);
          }
        }
      }
      if (plate.saved_levels < 1 || plate.steps < plate.saved_levels ||
          plate.steps % plate.saved_levels != 0) {
        fail(path + ".steps", "must be a positive multiple of saved_levels");
      }
      break;
    }
  }
  return model;
}

int model_qoi_dim(const ModelConfig& model) {
  switch (model.kind) {
    case ModelKind::kLinear:
      return static_cast<int>(model.matrix.rows());
    case ModelKind::kPolynomial:
      return model.poly_qoi_dim;
    case ModelKind::kPlate:
      return static_cast<int>(model.sensors.size() *
                              model.time_levels.size());
  }
  throw InvalidArgumentError("unknown model kind");
}

}  // namespace

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::kMinMeasure:
      return "min-measure";
    case Objective::kMinSkewness:
      return "min-skewness";
    case Objective::kMinDistance:
      return "min-distance";
    case Objective::kMaxDistance:
      return "max-distance";
  }
  throw InvalidArgumentError("unknown objective");
}

Objective objective_from_name(const std::string& name) {
  if (name == "min-measure") return Objective::kMinMeasure;
  if (name == "min-skewness") return Objective::kMinSkewness;
  if (name == "min-distance") return Objective::kMinDistance;
  if (name == "max-distance") return Objective::kMaxDistance;
  throw ConfigError(
      "objective must be one of min-measure, min-skewness, min-distance, "
      "max-distance (got \"" +
      name + "\")");
}

std::string jacobian_method_name(JacobianMethod method) {
  switch (method) {
    case JacobianMethod::kExactLinear:
      return "exact-linear";
    case JacobianMethod::kAnalyticPolynomial:
      return "analytic-polynomial";
    case JacobianMethod::kLocalLeastSquares:
      return "local-least-squares";
    case JacobianMethod::kGaussianRbf:
      return "gaussian-rbf";
  }
  throw InvalidArgumentError("unknown Jacobian method");
}

JacobianMethod jacobian_method_from_name(const std::string& name) {
  if (name == "exact-linear") return JacobianMethod::kExactLinear;
  if (name == "analytic-polynomial") return JacobianMethod::kAnalyticPolynomial;
  if (name == "local-least-squares") return JacobianMethod::kLocalLeastSquares;
  if (name == "gaussian-rbf") return JacobianMethod::kGaussianRbf;
  throw ConfigError(
      "jacobian.method must be one of exact-linear, analytic-polynomial, "
      "local-least-squares, gaussian-rbf (got \"" +
      name + "\")");
}

ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config: must be a JSON object");
  const std::string schema =
      get_string(member(doc, "config", "schema"), "config.schema");
  if (schema != kConfigSchema) {
    throw ConfigError("config.schema: expected \"" +
                      std::string(kConfigSchema) + "\"");
  }

  ExperimentConfig config;
  if (has(doc, "output_dir")) {
    config.output_dir = get_string(doc["output_dir"], "config.output_dir");
    if (config.output_dir.empty()) fail("config.output_dir", "must be nonempty");
  }
  if (has(doc, "threads")) {
    config.threads =
        static_cast<int>(get_integer(doc["threads"], "config.threads"));
    if (config.threads < 1) fail("config.threads", "must be >= 1");
  }

  if (has(doc, "model")) {
    config.has_model = true;
    config.model = parse_model(doc["model"], "config.model");
  }

  // The sampling seed also drives convergence studies, so the block is
  // accepted (seed only) even without a model.
  if (!config.has_model && has(doc, "sampling") &&
      has(doc["sampling"], "seed")) {
    config.sampling.seed =
        get_seed(doc["sampling"]["seed"], "config.sampling.seed");
  }

  if (config.has_model) {
    const json& sampling = member(doc, "config", "sampling");
    config.sampling.count = get_integer(
        member(sampling, "config.sampling", "count"), "config.sampling.count");
    if (config.sampling.count < 1) {
      fail("config.sampling.count", "must be >= 1");
    }
    if (has(sampling, "seed")) {
      config.sampling.seed = get_seed(sampling["seed"],
                                      "config.sampling.seed");
    }

    const int d = model_qoi_dim(config.model);
    const int dim = static_cast<int>(config.model.box_lower.size());

    // Jacobian block: method defaults to the model's natural choice.
    switch (config.model.kind) {
      case ModelKind::kLinear:
        config.jacobian.method = JacobianMethod::kExactLinear;
        break;
      case ModelKind::kPolynomial:
        config.jacobian.method = JacobianMethod::kAnalyticPolynomial;
        break;
      case ModelKind::kPlate:
        config.jacobian.method = JacobianMethod::kLocalLeastSquares;
        break;
    }
    config.jacobian.sites = std::min<Eigen::Index>(100, config.sampling.count);
    if (has(doc, "jacobian")) {
      const json& jac = doc["jacobian"];
      if (has(jac, "method")) {
        config.jacobian.method = jacobian_method_from_name(
            get_string(jac["method"], "config.jacobian.method"));
      }
      if (has(jac, "k")) {
        config.jacobian.k_neighbors =
            static_cast<int>(get_integer(jac["k"], "config.jacobian.k"));
      }
      if (has(jac, "sites")) {
        config.jacobian.sites = get_integer(jac["sites"],
                                            "config.jacobian.sites");
      }
    }
    if (config.jacobian.method == JacobianMethod::kExactLinear &&
        config.model.kind != ModelKind::kLinear) {
      fail("config.jacobian.method", "exact-linear needs a linear model");
    }
    if (config.jacobian.method == JacobianMethod::kAnalyticPolynomial &&
        config.model.kind != ModelKind::kPolynomial) {
      fail("config.jacobian.method",
           "analytic-polynomial needs a polynomial model");
    }
    if (config.jacobian.sites < 1 ||
        config.jacobian.sites > config.sampling.count) {
      fail("config.jacobian.sites", "must be in [1, sampling.count]");
    }
    const bool data_driven =
        config.jacobian.method == JacobianMethod::kLocalLeastSquares ||
        config.jacobian.method == JacobianMethod::kGaussianRbf;
    if (data_driven && (config.jacobian.k_neighbors < dim + 1 ||
                        config.jacobian.k_neighbors >= config.sampling.count)) {
      fail("config.jacobian.k", "must be in [param_dim + 1, sampling.count)");
    }

    // Design block.
    const json& design = member(doc, "config", "design");
    if (has(design, "subset_size")) {
      config.design.subset_size = static_cast<int>(get_integer(
          design["subset_size"], "config.design.subset_size"));
    }
    if (config.design.subset_size < 1 || config.design.subset_size > d) {
      fail("config.design.subset_size", "must be in [1, qoi_dim]");
    }
    if (has(design, "qoi_widths")) {
      config.design.qoi_widths = get_vector(design["qoi_widths"],
                                            "config.design.qoi_widths");
      if (config.design.qoi_widths.size() != d) {
        fail("config.design.qoi_widths", "needs one width per QoI column");
      }
    } else if (has(design, "qoi_width")) {
      const double w = get_number(design["qoi_width"],
                                  "config.design.qoi_width");
      config.design.qoi_widths = Eigen::VectorXd::Constant(d, w);
    } else if (config.model.kind == ModelKind::kPlate) {
      // Half a degree of measurement uncertainty per sensor reading.
      config.design.qoi_widths = Eigen::VectorXd::Constant(d, 0.5);
    } else {
      fail("config.design.qoi_width", "required (or give qoi_widths)");
    }
    for (Eigen::Index i = 0; i < config.design.qoi_widths.size(); ++i) {
      if (!(config.design.qoi_widths[i] > 0)) {
        fail("config.design.qoi_widths", "widths must be positive");
      }
    }
    if (has(design, "omega")) {
      config.design.omega = get_number(design["omega"], "config.design.omega");
      if (!(config.design.omega >= 0 && config.design.omega <= 1)) {
        fail("config.design.omega", "must lie in [0, 1]");
      }
    }
    if (has(design, "objective")) {
      config.design.objective = objective_from_name(
          get_string(design["objective"], "config.design.objective"));
    }
    if (has(design, "candidate_cap")) {
      const long long cap = get_integer(design["candidate_cap"],
                                        "config.design.candidate_cap");
      if (cap < 1) fail("config.design.candidate_cap", "must be >= 1");
      config.design.candidate_cap = static_cast<std::size_t>(cap);
    }

    // Inverse block.
    if (has(doc, "inverse")) {
      const json& inv = doc["inverse"];
      InverseConfig ic;
      int m = config.design.subset_size;
      if (has(inv, "subset")) {
        ic.subset = get_int_list(inv["subset"], "config.inverse.subset");
        for (std::size_t i = 0; i < ic.subset->size(); ++i) {
          if ((*ic.subset)[i] < 0 || (*ic.subset)[i] >= d) {
            fail("config.inverse.subset", "indices must be in [0, qoi_dim)");
          }
          if (i > 0 && (*ic.subset)[i] <= (*ic.subset)[i - 1]) {
            fail("config.inverse.subset", "must be strictly increasing");
          }
        }
        m = static_cast<int>(ic.subset->size());
      }
      if (has(inv, "lambda_ref")) {
        ic.lambda_ref = get_vector(inv["lambda_ref"],
                                   "config.inverse.lambda_ref");
        if (ic.lambda_ref->size() != dim) {
          fail("config.inverse.lambda_ref", "needs one entry per parameter");
        }
        for (Eigen::Index i = 0; i < dim; ++i) {
          if ((*ic.lambda_ref)[i] < config.model.box_lower[i] ||
              (*ic.lambda_ref)[i] > config.model.box_upper[i]) {
            fail("config.inverse.lambda_ref", "must lie inside the model box");
          }
        }
      }
      if (has(inv, "data_grid")) {
        ic.data_grid = get_int_list(inv["data_grid"],
                                    "config.inverse.data_grid");
        if (static_cast<int>(ic.data_grid.size()) != m) {
          fail("config.inverse.data_grid",
               "needs one cell count per observed component");
        }
        for (int g : ic.data_grid) {
          if (g < 1) fail("config.inverse.data_grid", "entries must be >= 1");
        }
      } else {
        ic.data_grid.assign(m, 1);
      }
      if (has(inv, "volume_mode")) {
        const std::string mode = get_string(inv["volume_mode"],
                                            "config.inverse.volume_mode");
        if (mode == "equal") {
          ic.volume_mode = VolumeMode::kEqual;
        } else if (mode == "monte-carlo") {
          ic.volume_mode = VolumeMode::kMonteCarlo;
        } else {
          fail("config.inverse.volume_mode",
               "must be \"equal\" or \"monte-carlo\"");
        }
      }
      if (has(inv, "reference_multiplier")) {
        ic.reference_multiplier = static_cast<int>(get_integer(
            inv["reference_multiplier"], "config.inverse.reference_multiplier"));
        if (ic.reference_multiplier < 1) {
          fail("config.inverse.reference_multiplier", "must be >= 1");
        }
      }
      if (has(inv, "marginal_cells")) {
        ic.marginal_cells = static_cast<int>(get_integer(
            inv["marginal_cells"], "config.inverse.marginal_cells"));
        if (ic.marginal_cells < 1) {
          fail("config.inverse.marginal_cells", "must be >= 1");
        }
      }
      config.inverse = std::move(ic);
    }

    // Prediction block.
    if (has(doc, "prediction")) {
      const json& pred = doc["prediction"];
      PredictionConfig pc;
      const std::string kind =
          get_string(member(pred, "config.prediction", "kind"),
                     "config.prediction.kind");
      if (kind == "qoi-column") {
        pc.kind = PredictionConfig::Kind::kQoiColumn;
        pc.column = static_cast<int>(
            get_integer(member(pred, "config.prediction", "column"),
                        "config.prediction.column"));
        if (pc.column < 0 || pc.column >= d) {
          fail("config.prediction.column", "must be in [0, qoi_dim)");
        }
      } else if (kind == "region-average") {
        if (config.model.kind != ModelKind::kPlate) {
          fail("config.prediction.kind",
               "region-average prediction needs the plate model");
        }
        pc.kind = PredictionConfig::Kind::kRegionAverage;
        const std::string shape =
            get_string(member(pred, "config.prediction", "shape"),
                       "config.prediction.shape");
        if (shape == "disc") {
          pc.region.shape = RegionAverage::Shape::kDisc;
          const Eigen::VectorXd c =
              get_vector(member(pred, "config.prediction", "center"),
                         "config.prediction.center");
          if (c.size() != 2) fail("config.prediction.center", "must be [x, y]");
          pc.region.center = c;
          pc.region.radius =
              get_number(member(pred, "config.prediction", "radius"),
                         "config.prediction.radius");
          if (!(pc.region.radius > 0)) {
            fail("config.prediction.radius", "must be positive");
          }
        } else if (shape == "rectangle") {
          pc.region.shape = RegionAverage::Shape::kRectangle;
          const Eigen::VectorXd xr =
              get_vector(member(pred, "config.prediction", "x_range"),
                         "config.prediction.x_range");
          const Eigen::VectorXd yr =
              get_vector(member(pred, "config.prediction", "y_range"),
                         "config.prediction.y_range");
          if (xr.size() != 2 || yr.size() != 2) {
            fail("config.prediction.x_range", "ranges must be [lo, hi]");
          }
          pc.region.x_range = xr;
          pc.region.y_range = yr;
        } else {
          fail("config.prediction.shape", "must be \"disc\" or \"rectangle\"");
        }
        pc.region.level = static_cast<int>(
            get_integer(member(pred, "config.prediction", "level"),
                        "config.prediction.level"));
        if (pc.region.level < 0 ||
            pc.region.level >= config.model.plate.saved_levels) {
          fail("config.prediction.level", "must be in [0, saved_levels)");
        }
        if (has(pred, "source")) {
          const json& src = pred["source"];
          SourceTerm source = config.model.plate.source;
          if (has(src, "amplitude")) {
            source.amplitude = get_number(src["amplitude"],
                                          "config.prediction.source.amplitude");
          }
          if (has(src, "width")) {
            source.width = get_number(src["width"],
                                      "config.prediction.source.width");
            if (!(source.width > 0)) {
              fail("config.prediction.source.width", "must be positive");
            }
          }
          if (has(src, "position")) {
            const Eigen::VectorXd p = get_vector(
                src["position"], "config.prediction.source.position");
            if (p.size() != 2) {
              fail("config.prediction.source.position", "must be [x, y]");
            }
            source.position = p;
          }
          pc.source_override = source;
        }
      } else {
        fail("config.prediction.kind",
             "must be \"qoi-column\" or \"region-average\"");
      }
      if (has(pred, "bins")) {
        pc.bins = static_cast<int>(get_integer(pred["bins"],
                                               "config.prediction.bins"));
        if (pc.bins < 1) fail("config.prediction.bins", "must be >= 1");
      }
      config.prediction = std::move(pc);
    }
  }

  // Convergence block (independent of the model blocks).
  if (has(doc, "convergence")) {
    const json& conv = doc["convergence"];
    ConvergenceConfig cc;
    const json& box = member(conv, "config.convergence", "box");
    cc.box_lower = get_vector(member(box, "config.convergence.box", "lower"),
                              "config.convergence.box.lower");
    cc.box_upper = get_vector(member(box, "config.convergence.box", "upper"),
                              "config.convergence.box.upper");
    if (cc.box_lower.size() != cc.box_upper.size()) {
      fail("config.convergence.box", "lower and upper must match");
    }
    for (Eigen::Index i = 0; i < cc.box_lower.size(); ++i) {
      if (!(cc.box_lower[i] < cc.box_upper[i])) {
        fail("config.convergence.box", "must satisfy lower < upper");
      }
    }
    const json& maps = member(conv, "config.convergence", "maps");
    if (!maps.is_array() || maps.empty()) {
      fail("config.convergence.maps", "must be a nonempty array");
    }
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const std::string mp = "config.convergence.maps[" + std::to_string(i) + "]";
      ConvergenceMapConfig mc;
      mc.name = get_string(member(maps[i], mp, "name"), mp + ".name");
      if (has(maps[i], "matrix")) {
        mc.matrix = get_matrix(maps[i]["matrix"], mp + ".matrix");
      } else if (mc.name == "identity") {
        // Built-in study maps: the well-conditioned identity and the skewed
        // variant it is traditionally compared against.
        mc.matrix = Eigen::MatrixXd::Identity(cc.box_lower.size(),
                                              cc.box_lower.size());
      } else if (mc.name == "skewed") {
        if (cc.box_lower.size() != 2) {
          fail(mp + ".name", "the skewed built-in map is two-parameter");
        }
        mc.matrix.resize(2, 2);
        mc.matrix << 1.0, 1.0, 0.74, 1.26;
      } else {
        fail(mp + ".name", "unknown map name \"" + mc.name +
                               "\" (built-ins: identity, skewed); give an "
                               "explicit matrix instead");
      }
      if (mc.matrix.cols() != cc.box_lower.size()) {
        fail(mp + ".matrix", "needs one column per parameter");
      }
      const json& widths = member(maps[i], mp, "event_widths");
      if (widths.is_number()) {
        mc.event_widths = Eigen::VectorXd::Constant(
            mc.matrix.rows(), get_number(widths, mp + ".event_widths"));
      } else {
        mc.event_widths = get_vector(widths, mp + ".event_widths");
        if (mc.event_widths.size() != mc.matrix.rows()) {
          fail(mp + ".event_widths", "needs one width per QoI row");
        }
      }
      for (Eigen::Index w = 0; w < mc.event_widths.size(); ++w) {
        if (!(mc.event_widths[w] > 0)) {
          fail(mp + ".event_widths", "widths must be positive");
        }
      }
      cc.maps.push_back(std::move(mc));
    }
    if (has(conv, "sample_counts")) {
      const auto counts = get_int_list(conv["sample_counts"],
                                       "config.convergence.sample_counts");
      cc.sample_counts.assign(counts.begin(), counts.end());
    }
    if (cc.sample_counts.size() < 2) {
      fail("config.convergence.sample_counts", "needs at least two counts");
    }
    for (std::size_t i = 0; i < cc.sample_counts.size(); ++i) {
      if (cc.sample_counts[i] < 1 ||
          (i > 0 && cc.sample_counts[i] <= cc.sample_counts[i - 1])) {
        fail("config.convergence.sample_counts",
             "must be positive and strictly increasing");
      }
    }
    if (has(conv, "repetitions")) {
      cc.repetitions = static_cast<int>(get_integer(
          conv["repetitions"], "config.convergence.repetitions"));
      if (cc.repetitions < 1) {
        fail("config.convergence.repetitions", "must be >= 1");
      }
    }
    if (has(conv, "reference_count")) {
      cc.reference_count = get_integer(conv["reference_count"],
                                       "config.convergence.reference_count");
      if (cc.reference_count < 1) {
        fail("config.convergence.reference_count", "must be >= 1");
      }
    }
    config.convergence = std::move(cc);
  }

  if (!config.has_model && !config.convergence) {
    throw ConfigError(
        "config: needs a model block, a convergence block, or both");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " +
                      e.what());
  }
  return parse_config(doc);
}

nlohmann::json to_json(const ExperimentConfig& config) {
  json doc;
  doc["schema"] = kConfigSchema;
  doc["output_dir"] = config.output_dir;
  doc["threads"] = config.threads;
  doc["sampling"]["seed"] = config.sampling.seed;
  if (config.has_model) doc["sampling"]["count"] = config.sampling.count;

  if (config.has_model) {
    json model;
    model["kind"] = model_kind_name(config.model.kind);
    model["box"] = {{"lower", vector_to_json(config.model.box_lower)},
                    {"upper", vector_to_json(config.model.box_upper)}};
    switch (config.model.kind) {
      case ModelKind::kLinear:
        model["matrix"] = matrix_to_json(config.model.matrix);
        break;
      case ModelKind::kPolynomial:
        if (config.model.has_explicit_coefficients) {
          model["coefficients"] = matrix_to_json(config.model.coefficients);
        } else {
          model["qoi_dim"] = config.model.poly_qoi_dim;
          model["coefficient_seed"] = config.model.coefficient_seed;
        }
        break;
      case ModelKind::kPlate: {
        model["grid"] = {config.model.plate.nodes_x,
                         config.model.plate.nodes_y};
        model["t_final"] = config.model.plate.t_final;
        model["steps"] = config.model.plate.steps;
        model["saved_levels"] = config.model.plate.saved_levels;
        model["rho_c"] = config.model.plate.rho_c;
        model["source"] = {
            {"amplitude", config.model.plate.source.amplitude},
            {"width", config.model.plate.source.width},
            {"position", vector_to_json(config.model.plate.source.position)}};
        model["sensor_radius"] = config.model.sensors.front().radius;
        json sensors = json::array();
        for (const auto& s : config.model.sensors) {
          sensors.push_back(vector_to_json(s.position));
        }
        model["sensors"] = sensors;
        model["time_levels"] = config.model.time_levels;
        break;
      }
    }
    doc["model"] = model;
    doc["jacobian"] = {{"method", jacobian_method_name(config.jacobian.method)},
                       {"k", config.jacobian.k_neighbors},
                       {"sites", config.jacobian.sites}};
    doc["design"] = {{"subset_size", config.design.subset_size},
                     {"qoi_widths", vector_to_json(config.design.qoi_widths)},
                     {"omega", config.design.omega},
                     {"objective", objective_name(config.design.objective)},
                     {"candidate_cap", config.design.candidate_cap}};
    if (config.inverse) {
      json inv;
      if (config.inverse->subset) inv["subset"] = *config.inverse->subset;
      if (config.inverse->lambda_ref) {
        inv["lambda_ref"] = vector_to_json(*config.inverse->lambda_ref);
      }
      inv["data_grid"] = config.inverse->data_grid;
      inv["volume_mode"] =
          config.inverse->volume_mode == VolumeMode::kEqual ? "equal"
                                                            : "monte-carlo";
      inv["reference_multiplier"] = config.inverse->reference_multiplier;
      inv["marginal_cells"] = config.inverse->marginal_cells;
      doc["inverse"] = inv;
    }
    if (config.prediction) {
      json pred;
      pred["bins"] = config.prediction->bins;
      if (config.prediction->kind == PredictionConfig::Kind::kQoiColumn) {
        pred["kind"] = "qoi-column";
        pred["column"] = config.prediction->column;
      } else {
        pred["kind"] = "region-average";
        if (config.prediction->region.shape == RegionAverage::Shape::kDisc) {
          pred["shape"] = "disc";
          pred["center"] = vector_to_json(config.prediction->region.center);
          pred["radius"] = config.prediction->region.radius;
        } else {
          pred["shape"] = "rectangle";
          pred["x_range"] = vector_to_json(config.prediction->region.x_range);
          pred["y_range"] = vector_to_json(config.prediction->region.y_range);
        }
        pred["level"] = config.prediction->region.level;
        if (config.prediction->source_override) {
          const SourceTerm& s = *config.prediction->source_override;
          pred["source"] = {{"amplitude", s.amplitude},
                            {"width", s.width},
                            {"position", vector_to_json(s.position)}};
        }
      }
      doc["prediction"] = pred;
    }
  }

  if (config.convergence) {
    json conv;
    conv["box"] = {{"lower", vector_to_json(config.convergence->box_lower)},
                   {"upper", vector_to_json(config.convergence->box_upper)}};
    json maps = json::array();
    for (const auto& mc : config.convergence->maps) {
      maps.push_back({{"name", mc.name},
                      {"matrix", matrix_to_json(mc.matrix)},
                      {"event_widths", vector_to_json(mc.event_widths)}});
    }
    conv["maps"] = maps;
    conv["sample_counts"] = config.convergence->sample_counts;
    conv["repetitions"] = config.convergence->repetitions;
    conv["reference_count"] = config.convergence->reference_count;
    doc["convergence"] = conv;
  }
  return doc;
}

}  // namespace qopt
