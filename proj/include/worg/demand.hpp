#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace worg {

/// Annual time grid: `horizon` consecutive whole years starting at `start_year`.
/// Offsets t = 0, 1, ..., horizon-1 index the grid everywhere in the library.
struct TimeGrid {
  int start_year = 2016;
  int horizon = 20;

  int year_at(int t) const { return start_year + t; }
};

inline void validate(const TimeGrid& grid) {
  if (grid.horizon < 1) throw std::invalid_argument("time grid horizon must be >= 1");
}

/// Demand curve f(t) on a grid, in GWe.
struct DemandCurve {
  TimeGrid grid;
  std::vector<double> values;
};

/// Per-step deployment bounds M (lower) and N (upper), one entry per
/// deployment parameter. One facility type is supported, so the parameter
/// count equals the grid horizon; the separate field keeps the seam open
/// for multi-type schedules.
struct DeploymentBounds {
  std::vector<int> lower;
  std::vector<int> upper;

  std::size_t size() const { return lower.size(); }
};

/// Integer facility counts per time step.
struct DeploymentSchedule {
  std::vector<int> counts;
};

inline void validate(const DeploymentBounds& bounds) {
  if (bounds.lower.size() != bounds.upper.size())
    throw std::invalid_argument("deployment bounds M and N differ in length");
  for (std::size_t p = 0; p < bounds.lower.size(); ++p) {
    if (bounds.lower[p] < 0)
      throw std::invalid_argument("lower bound negative at parameter " + std::to_string(p));
    if (bounds.lower[p] > bounds.upper[p])
      throw std::invalid_argument("lower bound exceeds upper bound at parameter " +
                                  std::to_string(p));
  }
}

inline bool within_bounds(const DeploymentSchedule& schedule, const DeploymentBounds& bounds) {
  if (schedule.counts.size() != bounds.size()) return false;
  for (std::size_t p = 0; p < bounds.size(); ++p) {
    if (schedule.counts[p] < bounds.lower[p] || schedule.counts[p] > bounds.upper[p])
      return false;
  }
  return true;
}

/// f(t) = initial * (1 + rho)^t.
inline DemandCurve growth_demand(double rho, double initial, const TimeGrid& grid) {
  validate(grid);
  if (!std::isfinite(rho) || !std::isfinite(initial))
    throw std::invalid_argument("growth demand parameters must be finite");
  if (initial <= 0.0) throw std::invalid_argument("initial demand must be positive");
  if (rho <= -1.0) throw std::invalid_argument("growth rate must exceed -1");
  DemandCurve curve{grid, {}};
  curve.values.reserve(static_cast<std::size_t>(grid.horizon));
  for (int t = 0; t < grid.horizon; ++t)
    curve.values.push_back(initial * std::pow(1.0 + rho, t));
  return curve;
}

/// N(t) = ceil(base * (1 + rho)^t).
inline std::vector<int> growth_upper_bound(double rho, int base, const TimeGrid& grid) {
  validate(grid);
  if (!std::isfinite(rho) || rho <= -1.0)
    throw std::invalid_argument("growth rate must be finite and exceed -1");
  if (base < 0) throw std::invalid_argument("bound base must be non-negative");
  std::vector<int> upper;
  upper.reserve(static_cast<std::size_t>(grid.horizon));
  for (int t = 0; t < grid.horizon; ++t)
    upper.push_back(static_cast<int>(std::ceil(base * std::pow(1.0 + rho, t))));
  return upper;
}

/// M = 0 everywhere.
inline std::vector<int> zero_lower_bound(const TimeGrid& grid) {
  validate(grid);
  return std::vector<int>(static_cast<std::size_t>(grid.horizon), 0);
}

}  // namespace worg
