#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "worg/demand.hpp"
#include "worg/dtw.hpp"

namespace worg {

/// Once-through fleet description. Availability is cycle/(cycle+reload),
/// applied uniformly; the initial fleet retires linearly over the retire
/// span, new builds produce from their deployment year for their lifetime.
struct FleetConfig {
  int initial_count = 100;
  double unit_capacity_gwe = 1.0;
  int cycle_months = 18;
  int reload_months = 1;
  int initial_retire_span_years = 40;
  int new_lifetime_years = 60;

  double capacity_factor() const {
    return static_cast<double>(cycle_months) /
           static_cast<double>(cycle_months + reload_months);
  }
};

inline void validate(const FleetConfig& config) {
  if (config.initial_count < 0) throw std::invalid_argument("initial fleet count negative");
  if (config.unit_capacity_gwe <= 0.0) throw std::invalid_argument("unit capacity must be positive");
  if (config.cycle_months <= 0 || config.reload_months <= 0)
    throw std::invalid_argument("cycle and reload months must be positive");
  if (config.initial_retire_span_years <= 0 || config.new_lifetime_years <= 0)
    throw std::invalid_argument("retire span and lifetime must be positive");
}

/// Production curve g(t, Theta) on a grid, in GWe.
struct ProductionCurve {
  TimeGrid grid;
  std::vector<double> values;
};

struct SimResult {
  ProductionCurve production;
  double dist_gwe = 0.0;
};

/// Initial reactors still active at year offset t under even retirement.
inline int active_initial_fleet(const FleetConfig& config, int t) {
  if (t < 0) throw std::invalid_argument("year offset must be non-negative");
  const long long retired = static_cast<long long>(config.initial_count) * t /
                            config.initial_retire_span_years;
  const long long active = config.initial_count - retired;
  return active > 0 ? static_cast<int>(active) : 0;
}

/// Annual production for a deployment schedule.
inline ProductionCurve simulate(const FleetConfig& config, const TimeGrid& grid,
                                const DeploymentSchedule& schedule) {
  validate(config);
  validate(grid);
  if (schedule.counts.size() != static_cast<std::size_t>(grid.horizon))
    throw std::invalid_argument("schedule length does not match grid horizon");
  const double per_unit = config.capacity_factor() * config.unit_capacity_gwe;
  ProductionCurve curve{grid, {}};
  curve.values.reserve(schedule.counts.size());
  for (int t = 0; t < grid.horizon; ++t) {
    long long deployed = 0;
    for (int p = 0; p <= t; ++p) {
      if (t - p < config.new_lifetime_years) deployed += schedule.counts[p];
    }
    curve.values.push_back(per_unit *
                           static_cast<double>(active_initial_fleet(config, t) + deployed));
  }
  return curve;
}

/// Simulate and bundle with the DTW distance to the demand curve.
inline SimResult run_sim(const FleetConfig& config, const TimeGrid& grid,
                         const DeploymentSchedule& schedule, const DemandCurve& demand) {
  ProductionCurve curve = simulate(config, grid, schedule);
  const double dist = dtw::distance(demand.values, curve.values);
  return SimResult{std::move(curve), dist};
}

/// Simulator seam consumed by the optimization loop: any callable with
/// this shape can stand in for the built-in fleet model, e.g. an adapter
/// around an external simulation process.
using SimulatorFn = std::function<SimResult(const DeploymentSchedule&, const DemandCurve&)>;

inline SimulatorFn make_fleet_simulator(FleetConfig config, TimeGrid grid) {
  validate(config);
  validate(grid);
  return [config, grid](const DeploymentSchedule& schedule, const DemandCurve& demand) {
    return run_sim(config, grid, schedule, demand);
  };
}

}  // namespace worg
