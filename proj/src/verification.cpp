#include "qopt/verification.hpp"

#include <cmath>
#include <mutex>
#include <thread>

#include "qopt/errors.hpp"
#include "qopt/rng.hpp"

namespace qopt {

double symmetric_difference_measure(
    const std::function<bool(const Eigen::VectorXd&)>& event_a,
    const std::function<bool(const Eigen::VectorXd&)>& event_b,
    const ParameterBox& box, Eigen::Index reference_count,
    std::uint64_t seed) {
  if (reference_count <= 0) {
    throw InvalidArgumentError("reference point count must be positive");
  }
  std::mt19937_64 gen(seed);
  const Eigen::VectorXd lo = box.lower();
  const Eigen::VectorXd side = box.side_lengths();
  Eigen::VectorXd point(box.dim());
  Eigen::Index mismatches = 0;
  for (Eigen::Index r = 0; r < reference_count; ++r) {
    for (int j = 0; j < box.dim(); ++j) {
      point[j] = lo[j] + side[j] * rng::unit_double(gen);
    }
    if (event_a(point) != event_b(point)) ++mismatches;
  }
  return box.volume() * static_cast<double>(mismatches) /
         static_cast<double>(reference_count);
}

ConvergenceResult convergence_study(
    const ForwardModel& map, std::string map_name,
    const Eigen::VectorXd& event_lower, const Eigen::VectorXd& event_upper,
    const ParameterBox& box, const std::vector<Eigen::Index>& sample_counts,
    int repetitions, Eigen::Index reference_count, std::uint64_t seed,
    int threads) {
  if (sample_counts.empty() || repetitions < 1) {
    throw InvalidArgumentError(
        "convergence study needs sample counts and repetitions");
  }
  if (event_lower.size() != map.qoi_dim() ||
      event_upper.size() != map.qoi_dim()) {
    throw InvalidArgumentError(
        "event box must have one bound pair per QoI component");
  }
  for (Eigen::Index c = 0; c < event_lower.size(); ++c) {
    if (!(event_lower[c] < event_upper[c])) {
      throw InvalidDomainError("event box is degenerate in component " +
                               std::to_string(c));
    }
  }

  auto in_event = [&](const Eigen::VectorXd& q) {
    for (Eigen::Index c = 0; c < q.size(); ++c) {
      if (q[c] < event_lower[c] || q[c] > event_upper[c]) return false;
    }
    return true;
  };

  ConvergenceResult result;
  result.map_name = std::move(map_name);
  result.rows.resize(sample_counts.size());

  for (std::size_t ni = 0; ni < sample_counts.size(); ++ni) {
    const Eigen::Index count = sample_counts[ni];
    std::vector<double> errors(repetitions);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run_rep = [&](int rep) {
      // Independent site and reference streams per repetition, both pinned
      // to the study seed, so results do not depend on scheduling.
      const std::uint64_t label =
          static_cast<std::uint64_t>(ni) * 1'000'000ull +
          static_cast<std::uint64_t>(rep);
      const SampleSet sites = sample_uniform(
          box, count, rng::derive_seed(seed, rng::kTagConvergenceSites, label));
      std::vector<char> site_in_event(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        site_in_event[i] = in_event(map.evaluate(sites.points.row(i)));
      }
      const NearestSiteIndex index(box, sites.points);
      auto approx = [&](const Eigen::VectorXd& x) {
        return site_in_event[index.query(x)] != 0;
      };
      auto exact = [&](const Eigen::VectorXd& x) {
        return in_event(map.evaluate(x));
      };
      errors[rep] = symmetric_difference_measure(
          approx, exact, box, reference_count,
          rng::derive_seed(seed, rng::kTagConvergenceReference, label));
    };

    if (threads <= 1) {
      for (int rep = 0; rep < repetitions; ++rep) run_rep(rep);
    } else {
      std::vector<std::thread> pool;
      const int t = std::min(threads, repetitions);
      pool.reserve(t);
      for (int k = 0; k < t; ++k) {
        pool.emplace_back([&, k] {
          try {
            for (int rep = k; rep < repetitions; rep += t) run_rep(rep);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }

    double mean = 0;
    for (double e : errors) mean += e;
    mean /= repetitions;
    double var = 0;
    for (double e : errors) var += (e - mean) * (e - mean);
    ConvergenceRow& row = result.rows[ni];
    row.sample_count = count;
    row.mean_error = mean;
    row.stderr_error = repetitions > 1
                           ? std::sqrt(var / (repetitions - 1)) /
                                 std::sqrt(static_cast<double>(repetitions))
                           : 0.0;
  }

  std::vector<double> xs, ys;
  for (const auto& row : result.rows) {
    xs.push_back(static_cast<double>(row.sample_count));
    ys.push_back(row.mean_error);
  }
  result.fitted_slope = fit_log_slope(xs, ys);
  return result;
}

double fit_log_slope(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgumentError("slope fit needs at least two points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) {
      throw InvalidArgumentError("slope fit needs positive data");
    }
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qopt
