// Command-line front end: optimize | invert | predict | converge, each
// driven by a JSON configuration file plus a few overrides.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qopt/config.hpp"
#include "qopt/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;     // bad config or arguments
constexpr int kExitNumerical = 3;  // model or numerical failure
constexpr int kExitEmpty = 4;      // inverse problem has empty support

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::string> objective;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "configuration JSON file")
      ->required();
  cmd->add_option("--seed", args.seed, "override the sampling seed");
  cmd->add_option("--out", args.out, "override the output directory");
  cmd->add_option("--threads", args.threads, "worker thread count");
  cmd->add_option("--objective", args.objective,
                  "override the design objective (min-measure, min-skewness, "
                  "min-distance, max-distance)");
}

qopt::ExperimentConfig load(const CommonArgs& args) {
  qopt::RunOverrides overrides;
  overrides.seed = args.seed;
  overrides.output_dir = args.out;
  overrides.threads = args.threads;
  if (args.objective) {
    overrides.objective = qopt::objective_from_name(*args.objective);
  }
  return qopt::apply_overrides(qopt::load_config(args.config_path),
                               overrides);
}

void print_score(const std::string& label, const qopt::DesignScore& score) {
  std::string subset;
  for (std::size_t i = 0; i < score.subset.size(); ++i) {
    if (i) subset += '+';
    subset += std::to_string(score.subset[i]);
  }
  std::cout << "  " << label << ": subset " << subset << "  measure "
            << score.avg_measure << "  skewness " << score.avg_skewness
            << "  distance " << score.distance << "\n";
}

int run(const std::string& command, const CommonArgs& args) {
  const qopt::ExperimentConfig config = load(args);
  if (command == "optimize") {
    const qopt::OptimizeOutcome outcome = qopt::run_optimize(config);
    std::cout << "scored " << outcome.scores.size() << " candidate subsets ("
              << outcome.front.size() << " on the Pareto front)\n";
    for (const auto& [name, score] : outcome.winners) {
      print_score(name, score);
    }
    print_score("selected (" + qopt::objective_name(config.design.objective) +
                    ")",
                outcome.selected);
  } else if (command == "invert" || command == "predict") {
    if (command == "predict" && !config.prediction) {
      throw qopt::ConfigError("predict needs a prediction block in the config");
    }
    const qopt::InvertOutcome outcome = qopt::run_invert(config);
    std::cout << "inverted on subset";
    for (int c : outcome.subset) std::cout << ' ' << c;
    std::cout << "\n  support fraction " << outcome.support << "\n";
    if (!outcome.solution.fully_covered) {
      std::cout << "  warning: " << outcome.solution.lost_mass
                << " of the observation mass hit cells without samples\n";
    }
    if (outcome.prediction) {
      std::cout << "  prediction interval [" << outcome.prediction->lower
                << ", " << outcome.prediction->upper << "] vs full range ["
                << outcome.prediction_full_lower << ", "
                << outcome.prediction_full_upper << "]\n";
    }
  } else {
    const qopt::ConvergeOutcome outcome = qopt::run_converge(config);
    for (const auto& result : outcome.results) {
      std::cout << result.map_name << ": slope " << result.fitted_slope
                << "\n";
    }
  }
  std::cout << "outputs written to " << config.output_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sample-based inverse-problem design toolkit"};
  app.require_subcommand(1);

  CommonArgs optimize_args, invert_args, predict_args, converge_args;
  add_common(app.add_subcommand("optimize",
                                "score QoI subsets and pick design winners"),
             optimize_args);
  add_common(app.add_subcommand("invert",
                                "approximate the inverse measure for a subset"),
             invert_args);
  add_common(app.add_subcommand(
                 "predict", "invert, then push the solution through a "
                            "prediction quantity"),
             predict_args);
  add_common(app.add_subcommand("converge",
                                "measure the approximation convergence rate"),
             converge_args);

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  const CommonArgs& args = command == "optimize"  ? optimize_args
                           : command == "invert"  ? invert_args
                           : command == "predict" ? predict_args
                                                  : converge_args;
  try {
    return run(command, args);
  } catch (const qopt::EmptySupportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEmpty;
  } catch (const qopt::InvalidArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qopt::NumericalFailureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const qopt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
