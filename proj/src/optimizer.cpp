#include "qopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "qopt/errors.hpp"

namespace qopt {

double bounded_distance_to_ideal(double avg_skewness, double avg_measure,
                                 double omega) {
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw InvalidArgumentError("omega must lie in [0, 1]");
  }
  if (!(avg_measure > 0) || !std::isfinite(avg_measure)) {
    throw InvalidArgumentError("average measure must be positive and finite");
  }
  if (avg_skewness < 1.0 - 1e-9 || !std::isfinite(avg_skewness)) {
    throw InvalidArgumentError("average skewness must be at least 1");
  }
  // Guard against harmless rounding just below the exact lower bound.
  const double s = std::max(avg_skewness - 1.0, 0.0);
  return omega * s / (1.0 + s) +
         (1.0 - omega) * avg_measure / (1.0 + avg_measure);
}

namespace {

// C(d, m) with saturation at the cap sentinel to avoid overflow.
std::size_t binomial_capped(int d, int m, std::size_t cap) {
  double c = 1.0;
  for (int i = 0; i < m; ++i) c = c * (d - i) / (i + 1);
  if (c > static_cast<double>(cap) * 2.0) return cap + 1;
  return static_cast<std::size_t>(std::llround(c));
}

bool next_combination(std::vector<int>& comb, int d) {
  const int m = static_cast<int>(comb.size());
  int i = m - 1;
  while (i >= 0 && comb[i] == d - m + i) --i;
  if (i < 0) return false;
  ++comb[i];
  for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
  return true;
}

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::vector<DesignScore> enumerate_and_score(
    const JacobianField& field, const OptimizationSettings& settings) {
  if (field.size() == 0) {
    throw InvalidArgumentError("Jacobian field is empty");
  }
  const int d = static_cast<int>(field.jacobians.front().rows());
  const int m = settings.subset_size;
  if (m < 1 || m > d) {
    throw InvalidArgumentError("subset size must be in [1, qoi_dim]");
  }
  if (settings.qoi_widths.size() != d) {
    throw InvalidArgumentError("need one uncertainty width per QoI column");
  }
  const std::size_t count = binomial_capped(d, m, settings.candidate_cap);
  if (count > settings.candidate_cap) {
    throw TooManyCandidatesError(
        "subset enumeration for " + std::to_string(d) + " choose " +
        std::to_string(m) + " exceeds the cap of " +
        std::to_string(settings.candidate_cap) +
        " candidates; reduce the subset size or the candidate pool");
  }

  // Materialize the subset list up front so threads can carve fixed slices
  // and write results into place, keeping the output order deterministic.
  std::vector<int> flat;
  flat.reserve(count * m);
  std::vector<int> comb(m);
  for (int i = 0; i < m; ++i) comb[i] = i;
  do {
    flat.insert(flat.end(), comb.begin(), comb.end());
  } while (next_combination(comb, d));

  const std::size_t total = flat.size() / m;
  std::vector<DesignScore> scores(total);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](std::size_t lo, std::size_t hi) {
    try {
      Eigen::VectorXd widths(m);
      for (std::size_t s = lo; s < hi; ++s) {
        const int* idx = flat.data() + s * m;
        for (int r = 0; r < m; ++r) widths[r] = settings.qoi_widths[idx[r]];
        AverageMetrics avg =
            average_metrics(field, std::span<const int>(idx, m),
                            UncertaintyBox(widths), settings.skip);
        DesignScore& score = scores[s];
        score.subset.assign(idx, idx + m);
        score.avg_measure = avg.avg_measure;
        score.avg_skewness = avg.avg_skewness;
        score.distance = bounded_distance_to_ideal(
            avg.avg_skewness, avg.avg_measure, settings.omega);
        score.distance_sum = bounded_distance_to_ideal(avg.avg_skewness,
                                                       avg.avg_measure, 0.5) *
                             2.0;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  const int threads = std::max(1, settings.threads);
  if (threads == 1 || total < 2) {
    worker(0, total);
  } else {
    const std::size_t t = std::min<std::size_t>(threads, total);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (std::size_t k = 0; k < t; ++k) {
      pool.emplace_back(worker, total * k / t, total * (k + 1) / t);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(scores.begin(), scores.end(),
            [](const DesignScore& a, const DesignScore& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return lex_less(a.subset, b.subset);
            });
  return scores;
}

std::vector<DesignScore> pareto_front(std::span<const DesignScore> scores) {
  if (scores.empty()) {
    throw InvalidArgumentError("cannot take the Pareto front of no scores");
  }
  std::vector<DesignScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const DesignScore& a, const DesignScore& b) {
              if (a.avg_skewness != b.avg_skewness) {
                return a.avg_skewness < b.avg_skewness;
              }
              if (a.avg_measure != b.avg_measure) {
                return a.avg_measure < b.avg_measure;
              }
              return lex_less(a.subset, b.subset);
            });
  std::vector<DesignScore> front;
  // best (lowest) measure among candidates with strictly smaller skewness
  double best_measure_before = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < sorted.size()) {
    // Candidates sharing one skewness value form a group; only the group's
    // minimal-measure entries can be non-dominated.
    std::size_t j = i;
    while (j < sorted.size() &&
           sorted[j].avg_skewness == sorted[i].avg_skewness) {
      ++j;
    }
    const double group_min = sorted[i].avg_measure;  // sorted within group
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].avg_measure == group_min &&
          group_min < best_measure_before) {
        front.push_back(sorted[k]);
      }
    }
    best_measure_before = std::min(best_measure_before, group_min);
    i = j;
  }
  return front;
}

const DesignScore& select_by_objective(std::span<const DesignScore> scores,
                                       Objective objective) {
  if (scores.empty()) {
    throw InvalidArgumentError("cannot select from an empty score list");
  }
  auto key = [&](const DesignScore& s) -> double {
    switch (objective) {
      case Objective::kMinMeasure:
        return s.avg_measure;
      case Objective::kMinSkewness:
        return s.avg_skewness;
      case Objective::kMinDistance:
        return s.distance;
      case Objective::kMaxDistance:
        return -s.distance;
    }
    throw InvalidArgumentError("unknown objective");
  };
  const DesignScore* best = &scores[0];
  for (const auto& s : scores) {
    const double ks = key(s), kb = key(*best);
    if (ks < kb || (ks == kb && lex_less(s.subset, best->subset))) {
      best = &s;
    }
  }
  return *best;
}

}  // namespace qopt
