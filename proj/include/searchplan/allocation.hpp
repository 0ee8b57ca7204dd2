#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "searchplan/grid.hpp"
#include "searchplan/parallel.hpp"

namespace searchplan {

/// Probability that the object is in each cell.
struct CellPrior {
  std::vector<double> p;

  void check() const {
    for (double v : p)
      if (!(v >= 0.0)) throw std::invalid_argument("cell probabilities must be >= 0");
    if (std::abs(pairwise_sum(p) - 1.0) > 1e-9) throw std::invalid_argument("cell probabilities must sum to 1");
  }
  std::size_t size() const { return p.size(); }
};

/// b(z) = 1 - exp(-rho z), the random-search law.
struct ExponentialDetection {
  double rho = 1.0;
};

/// Piecewise-linear b(z) through (effort, probability) breakpoints starting at
/// (0, 0); constant after the last breakpoint.
struct TabulatedDetection {
  std::vector<std::pair<double, double>> breakpoints;
};

using DetectionFunction = std::variant<ExponentialDetection, TabulatedDetection>;

inline double detection_probability(const DetectionFunction& b, double z) {
  if (const auto* e = std::get_if<ExponentialDetection>(&b)) return 1.0 - std::exp(-e->rho * z);
  const auto& bp = std::get<TabulatedDetection>(b).breakpoints;
  if (z >= bp.back().first) return bp.back().second;
  const auto hi = std::upper_bound(bp.begin(), bp.end(), z, [](double v, const auto& q) { return v < q.first; });
  const auto lo = hi - 1;
  return lo->second + (z - lo->first) / (hi->first - lo->first) * (hi->second - lo->second);
}

/// Throws unless b(0) = 0 and b is nondecreasing, concave and bounded by 1.
inline void check_detection_function(const DetectionFunction& b) {
  if (const auto* e = std::get_if<ExponentialDetection>(&b)) {
    if (!(e->rho > 0.0)) throw std::invalid_argument("sweep rate rho must be positive");
    return;
  }
  const auto& bp = std::get<TabulatedDetection>(b).breakpoints;
  if (bp.size() < 2 || bp.front().first != 0.0 || bp.front().second != 0.0)
    throw std::invalid_argument("tabulated detection function must start at (0, 0)");
  double last_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < bp.size(); ++i) {
    const double dz = bp[i].first - bp[i - 1].first;
    if (!(dz > 0.0)) throw std::invalid_argument("tabulated effort breakpoints must increase");
    const double slope = (bp[i].second - bp[i - 1].second) / dz;
    if (slope < 0.0 || bp[i].second > 1.0) throw std::invalid_argument("detection function must be nondecreasing and <= 1");
    if (slope > last_slope + 1e-12) throw std::invalid_argument("optimal allocation requires concavity");
    last_slope = slope;
  }
}

struct Allocation {
  std::vector<double> effort;
  double budget = 0.0;
};

struct AllocationValue {
  double probability = 0.0;  ///< P(Z) = sum b_j(z_j) p(j)
  double cost = 0.0;         ///< C(Z) = sum z_j
};

inline AllocationValue evaluate(const Allocation& alloc, const CellPrior& prior,
                                const std::vector<DetectionFunction>& detection) {
  if (alloc.effort.size() != prior.size() || detection.size() != prior.size())
    throw std::invalid_argument("allocation, prior and detection functions differ in length");
  AllocationValue v;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (alloc.effort[j] < 0.0) throw std::invalid_argument("negative effort");
    v.probability += detection_probability(detection[j], alloc.effort[j]) * prior.p[j];
    v.cost += alloc.effort[j];
  }
  return v;
}

namespace detail {

/// Water-filling for the exponential family: z_j(lambda) = max(0, ln(p_j rho_j / lambda) / rho_j),
/// with lambda found by bisection (in log space) so that sum z_j = T.
inline Allocation optimize_exponential(const CellPrior& prior, const std::vector<double>& rho, double budget) {
  const std::size_t J = prior.size();
  Allocation alloc{std::vector<double>(J, 0.0), budget};
  double log_hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j)
    if (prior.p[j] > 0.0) log_hi = std::max(log_hi, std::log(prior.p[j] * rho[j]));
  if (budget <= 0.0 || !std::isfinite(log_hi)) return alloc;

  auto effort_at = [&](double log_lambda, std::vector<double>* z) {
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      double zj = 0.0;
      if (prior.p[j] > 0.0) zj = std::max(0.0, (std::log(prior.p[j] * rho[j]) - log_lambda) / rho[j]);
      if (z) (*z)[j] = zj;
      total += zj;
    }
    return total;
  };
  // Lower bracket: every cell's share below lambda_hi is at most (log_hi - log_lo)/rho_min.
  const double rho_min = *std::min_element(rho.begin(), rho.end());
  double lo = log_hi - budget * rho_min - 1.0;  // effort_at(lo) >= T
  while (effort_at(lo, nullptr) < budget) lo -= budget * rho_min + 1.0;
  double hi = log_hi;  // effort_at(hi) = 0 <= T
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (effort_at(mid, nullptr) > budget) lo = mid;
    else hi = mid;
  }
  effort_at(hi, &alloc.effort);
  return alloc;
}

/// Greedy marginal analysis on effort quanta of budget / quanta; optimal for
/// separable concave detection functions up to the quantum.
inline Allocation optimize_greedy(const CellPrior& prior, const std::vector<DetectionFunction>& detection,
                                  double budget, std::size_t quanta) {
  const std::size_t J = prior.size();
  Allocation alloc{std::vector<double>(J, 0.0), budget};
  if (budget <= 0.0) return alloc;
  const double dq = budget / static_cast<double>(quanta);
  auto gain = [&](std::size_t j) {
    const double z = alloc.effort[j];
    return prior.p[j] * (detection_probability(detection[j], z + dq) - detection_probability(detection[j], z));
  };
  // ties resolve to the lower cell index
  auto cmp = [](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>, decltype(cmp)> heap(cmp);
  for (std::size_t j = 0; j < J; ++j) heap.emplace(gain(j), j);
  for (std::size_t q = 0; q < quanta; ++q) {
    const auto [g, j] = heap.top();
    heap.pop();
    if (g <= 0.0) break;
    alloc.effort[j] += dq;
    heap.emplace(gain(j), j);
  }
  return alloc;
}

}  // namespace detail

inline constexpr std::size_t kTabulatedEffortQuanta = 10'000;

/// Allocation maximizing P(Z) subject to C(Z) <= budget.
inline Allocation optimize(const CellPrior& prior, const std::vector<DetectionFunction>& detection, double budget) {
  prior.check();
  if (detection.size() != prior.size()) throw std::invalid_argument("one detection function per cell required");
  if (!(budget >= 0.0)) throw std::invalid_argument("budget must be >= 0");
  for (const auto& b : detection) check_detection_function(b);
  std::vector<double> rho;
  for (const auto& b : detection) {
    if (const auto* e = std::get_if<ExponentialDetection>(&b)) rho.push_back(e->rho);
    else return detail::optimize_greedy(prior, detection, budget, kTabulatedEffortQuanta);
  }
  return detail::optimize_exponential(prior, rho, budget);
}

/// Cell-space Bayes update after an unsuccessful allocation.
inline CellPrior posterior_given_failure(const CellPrior& prior, const Allocation& alloc,
                                         const std::vector<DetectionFunction>& detection) {
  if (alloc.effort.size() != prior.size() || detection.size() != prior.size())
    throw std::invalid_argument("allocation, prior and detection functions differ in length");
  std::vector<double> unnorm(prior.size());
  for (std::size_t j = 0; j < prior.size(); ++j)
    unnorm[j] = (1.0 - detection_probability(detection[j], alloc.effort[j])) * prior.p[j];
  const double z = pairwise_sum(unnorm);
  if (!(z > 0.0)) throw std::runtime_error("search exhausts all probability");
  for (auto& v : unnorm) v /= z;
  return CellPrior{std::move(unnorm)};
}

/// In-grid cell probabilities of a map, renormalized over the grid.
inline CellPrior cell_prior_from_map(const CellProbabilityMap& map) {
  const double in_grid = pairwise_sum(map.cells);
  if (!(in_grid > 0.0)) throw std::runtime_error("no probability mass on the grid");
  CellPrior prior{map.cells};
  for (auto& v : prior.p) v /= in_grid;
  return prior;
}

}  // namespace searchplan
