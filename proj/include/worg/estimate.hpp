#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "worg/demand.hpp"
#include "worg/dtw.hpp"
#include "worg/gp.hpp"
#include "worg/rng.hpp"
#include "worg/simulator.hpp"

namespace worg {

enum class EstimationMethod { Stochastic, InnerProd, All };

/// The retained past simulations: schedules, their production curves, and
/// their DTW distances to the demand curve, kept index-aligned.
struct HistoryWindow {
  std::vector<DeploymentSchedule> schedules;
  std::vector<ProductionCurve> curves;
  std::vector<double> dists;

  std::size_t size() const { return dists.size(); }

  void append(DeploymentSchedule schedule, ProductionCurve curve, double dist) {
    schedules.push_back(std::move(schedule));
    curves.push_back(std::move(curve));
    dists.push_back(dist);
  }
};

/// Per-parameter categorical weight rows over [M_p, N_p].
struct WeightTable {
  std::vector<std::vector<double>> rows;
};

struct EstimatorConfig {
  gp::KernelKind kernel = gp::KernelKind::Matern32;
  double tau = 1e-6;
  std::optional<long> gamma_override;
};

struct EstimateResult {
  DeploymentSchedule schedule;
  double model_dist = std::numeric_limits<double>::quiet_NaN();
};

/// Gamma default: total option count across parameters.
inline long default_gamma(const DeploymentBounds& bounds) {
  validate(bounds);
  long gamma = 0;
  for (std::size_t p = 0; p < bounds.size(); ++p)
    gamma += bounds.upper[p] - bounds.lower[p] + 1;
  return gamma;
}

/// Renormalized Poisson weights over [lo, hi], lambda at the best-known
/// parameter value. Terms are built by the running product
/// w(n+1) = w(n) * lambda / (n+1), which is exact enough for the
/// lambda <= 20, n <= 30 range the method uses.
inline std::vector<double> poisson_weight_row(double lambda, int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("poisson row bounds are inverted");
  std::vector<double> row(static_cast<std::size_t>(hi - lo + 1), 0.0);
  if (lambda <= 0.0) {
    // point mass at zero, renormalized onto the range
    row[0] = 1.0;
    return row;
  }
  double term = 1.0;  // lambda^0 / 0!
  for (int n = 1; n <= lo; ++n) term *= lambda / n;
  double sum = 0.0;
  for (int n = lo; n <= hi; ++n) {
    row[static_cast<std::size_t>(n - lo)] = term;
    sum += term;
    term *= lambda / (n + 1);
  }
  for (double& w : row) w /= sum;
  return row;
}

namespace detail {

inline double norm_time(int t, int horizon) {
  return horizon > 1 ? static_cast<double>(t) / (horizon - 1) : 0.0;
}

inline double norm_theta(double value, int lo, int hi) {
  return hi > lo ? (value - lo) / (hi - lo) : 0.0;
}

/// Training rows for the production model: one row per (entry, t) with
/// input (t, theta_1, ..., theta_P), all dimensions mapped to [0, 1].
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> production_training_set(
    const HistoryWindow& window, const TimeGrid& grid, const DeploymentBounds& bounds) {
  const int horizon = grid.horizon;
  const auto P = static_cast<Eigen::Index>(bounds.size());
  const auto n_rows = static_cast<Eigen::Index>(window.size()) * horizon;
  Eigen::MatrixXd inputs(n_rows, P + 1);
  Eigen::VectorXd targets(n_rows);
  Eigen::Index row = 0;
  for (std::size_t z = 0; z < window.size(); ++z) {
    for (int t = 0; t < horizon; ++t, ++row) {
      inputs(row, 0) = norm_time(t, horizon);
      for (Eigen::Index p = 0; p < P; ++p)
        inputs(row, p + 1) = norm_theta(window.schedules[z].counts[static_cast<std::size_t>(p)],
                                        bounds.lower[static_cast<std::size_t>(p)],
                                        bounds.upper[static_cast<std::size_t>(p)]);
      targets(row) = window.curves[z].values[static_cast<std::size_t>(t)];
    }
  }
  return {std::move(inputs), std::move(targets)};
}

/// Query rows for the first `prefix` time steps of a candidate schedule.
inline Eigen::MatrixXd schedule_query(std::span<const int> counts, int prefix,
                                      const TimeGrid& grid, const DeploymentBounds& bounds) {
  const auto P = static_cast<Eigen::Index>(bounds.size());
  Eigen::MatrixXd query(prefix, P + 1);
  for (int t = 0; t < prefix; ++t) {
    query(t, 0) = norm_time(t, grid.horizon);
    for (Eigen::Index p = 0; p < P; ++p)
      query(t, p + 1) = norm_theta(counts[static_cast<std::size_t>(p)],
                                   bounds.lower[static_cast<std::size_t>(p)],
                                   bounds.upper[static_cast<std::size_t>(p)]);
  }
  return query;
}

inline std::vector<double> predict_curve(const gp::GpModel& model, std::span<const int> counts,
                                         int prefix, const TimeGrid& grid,
                                         const DeploymentBounds& bounds) {
  const Eigen::VectorXd mean = model.predict_mean(schedule_query(counts, prefix, grid, bounds));
  return {mean.data(), mean.data() + mean.size()};
}

inline std::size_t argmin_distance(std::span<const double> dists) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < dists.size(); ++i)
    if (dists[i] < dists[best]) best = i;
  return best;
}

/// L1-nearest window entry for the production-model fallback.
inline std::size_t nearest_window_entry(const HistoryWindow& window,
                                        const DeploymentSchedule& schedule) {
  std::size_t best = 0;
  long best_dist = std::numeric_limits<long>::max();
  for (std::size_t z = 0; z < window.size(); ++z) {
    long dist = 0;
    for (std::size_t p = 0; p < schedule.counts.size(); ++p)
      dist += std::abs(schedule.counts[p] - window.schedules[z].counts[p]);
    if (dist < best_dist) {
      best_dist = dist;
      best = z;
    }
  }
  return best;
}

}  // namespace detail

/// Production model over (time, schedule) inputs, trained on every
/// retained simulation. Throws gp::FitFailure when no usable model exists.
inline gp::GpModel build_production_model(const HistoryWindow& window, const TimeGrid& grid,
                                          const DeploymentBounds& bounds,
                                          const EstimatorConfig& config) {
  if (window.size() < 2)
    throw std::invalid_argument("production model requires a window of at least 2 entries");
  auto [inputs, targets] = detail::production_training_set(window, grid, bounds);
  return gp::GpModel::fit(config.kernel, config.tau, std::move(inputs), std::move(targets));
}

/// Weight row for one deployment parameter: a 1-d GP of inverse distance
/// over the window's values of that parameter, evaluated on [M_p, N_p],
/// clamped and normalized. Degenerate windows (identical support, any
/// distance at zero, or an unusable fit) fall back to Poisson weights
/// centered on the best-known value.
inline std::vector<double> stochastic_weights(const HistoryWindow& window,
                                              const DeploymentBounds& bounds, std::size_t p,
                                              const EstimatorConfig& config) {
  const int lo = bounds.lower[p];
  const int hi = bounds.upper[p];
  const std::size_t n_options = static_cast<std::size_t>(hi - lo + 1);
  const std::size_t best_entry = detail::argmin_distance(window.dists);
  const double lambda = window.schedules[best_entry].counts[p];

  bool degenerate = window.size() < 2;
  for (double d : window.dists)
    if (d < 1e-12) degenerate = true;
  int distinct = 0;
  for (std::size_t z = 0; z < window.size() && distinct < 2; ++z) {
    bool seen = false;
    for (std::size_t w = 0; w < z; ++w)
      if (window.schedules[w].counts[p] == window.schedules[z].counts[p]) seen = true;
    if (!seen) ++distinct;
  }
  if (distinct < 2) degenerate = true;
  if (degenerate) return poisson_weight_row(lambda, lo, hi);

  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(window.size()), 1);
  Eigen::VectorXd targets(static_cast<Eigen::Index>(window.size()));
  for (std::size_t z = 0; z < window.size(); ++z) {
    inputs(static_cast<Eigen::Index>(z), 0) =
        detail::norm_theta(window.schedules[z].counts[p], lo, hi);
    targets(static_cast<Eigen::Index>(z)) = 1.0 / window.dists[z];
  }
  try {
    const gp::GpModel model =
        gp::GpModel::fit(config.kernel, config.tau, std::move(inputs), std::move(targets));
    Eigen::MatrixXd query(static_cast<Eigen::Index>(n_options), 1);
    for (std::size_t i = 0; i < n_options; ++i)
      query(static_cast<Eigen::Index>(i), 0) = detail::norm_theta(lo + static_cast<int>(i), lo, hi);
    const Eigen::VectorXd pred = model.predict_mean(query);
    if (!pred.array().isFinite().all()) return poisson_weight_row(lambda, lo, hi);

    constexpr double floor = 1e-12;
    std::vector<double> row(n_options);
    double sum = 0.0;
    bool any_above_floor = false;
    for (std::size_t i = 0; i < n_options; ++i) {
      row[i] = std::max(pred(static_cast<Eigen::Index>(i)), floor);
      any_above_floor = any_above_floor || pred(static_cast<Eigen::Index>(i)) > floor;
      sum += row[i];
    }
    if (!any_above_floor) return poisson_weight_row(lambda, lo, hi);
    for (double& w : row) w /= sum;
    return row;
  } catch (const gp::FitFailure&) {
    return poisson_weight_row(lambda, lo, hi);
  }
}

inline WeightTable stochastic_weight_table(const HistoryWindow& window,
                                           const DeploymentBounds& bounds,
                                           const EstimatorConfig& config) {
  WeightTable table;
  table.rows.reserve(bounds.size());
  for (std::size_t p = 0; p < bounds.size(); ++p)
    table.rows.push_back(stochastic_weights(window, bounds, p, config));
  return table;
}

/// Draw `gamma` schedules from the weight table. Draws come from the
/// stream in parameter-major order: all draws for parameter 0 first, then
/// parameter 1, and so on.
inline std::vector<DeploymentSchedule> sample_schedules(const WeightTable& table,
                                                        const DeploymentBounds& bounds,
                                                        long gamma, SplitMix64& rng) {
  if (table.rows.size() != bounds.size())
    throw std::invalid_argument("weight table does not match bounds");
  if (gamma < 1) throw std::invalid_argument("gamma must be at least 1");
  std::vector<DeploymentSchedule> schedules(static_cast<std::size_t>(gamma));
  for (auto& schedule : schedules) schedule.counts.resize(bounds.size());
  for (std::size_t p = 0; p < bounds.size(); ++p) {
    for (auto& schedule : schedules)
      schedule.counts[p] =
          bounds.lower[p] + static_cast<int>(rng.next_categorical(table.rows[p]));
  }
  return schedules;
}

namespace detail {

inline EstimateResult stochastic_with_model(const HistoryWindow& window, const DemandCurve& demand,
                                            const DeploymentBounds& bounds,
                                            const EstimatorConfig& config, SplitMix64& rng,
                                            const gp::GpModel* model) {
  const long gamma = config.gamma_override.value_or(default_gamma(bounds));
  WeightTable table;
  if (model != nullptr) {
    table = stochastic_weight_table(window, bounds, config);
  } else {
    // uniform rows when no production model exists
    table.rows.reserve(bounds.size());
    for (std::size_t p = 0; p < bounds.size(); ++p) {
      const std::size_t n_options = static_cast<std::size_t>(bounds.upper[p] - bounds.lower[p] + 1);
      table.rows.emplace_back(n_options, 1.0 / static_cast<double>(n_options));
    }
  }
  const std::vector<DeploymentSchedule> candidates = sample_schedules(table, bounds, gamma, rng);

  // distances of window curves are reused by the no-model fallback
  std::vector<double> window_dist;
  if (model == nullptr) {
    window_dist.reserve(window.size());
    for (const auto& curve : window.curves)
      window_dist.push_back(dtw::distance(demand.values, curve.values));
  }

  double best_dist = std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double dist;
    if (model != nullptr) {
      const std::vector<double> curve = predict_curve(*model, candidates[i].counts,
                                                      demand.grid.horizon, demand.grid, bounds);
      dist = dtw::distance(demand.values, curve);
    } else {
      dist = window_dist[nearest_window_entry(window, candidates[i])];
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return EstimateResult{candidates[best], best_dist};
}

inline EstimateResult inner_prod_with_model(const HistoryWindow& window, const DemandCurve& demand,
                                            const DeploymentBounds& bounds,
                                            const gp::GpModel& model) {
  const int horizon = demand.grid.horizon;
  const std::size_t P = bounds.size();
  // Undecided parameters are padded with the best retained schedule so the
  // sweep queries the model near its most informative region.
  const std::size_t best_entry = argmin_distance(window.dists);
  std::vector<int> counts = window.schedules[best_entry].counts;
  double final_dist = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t p = 0; p < P; ++p) {
    const int prefix = static_cast<int>(p) + 1;
    const std::span<const double> demand_prefix(demand.values.data(),
                                                static_cast<std::size_t>(prefix));
    double best_dist = std::numeric_limits<double>::infinity();
    int best_n = bounds.lower[p];
    for (int n = bounds.lower[p]; n <= bounds.upper[p]; ++n) {
      counts[p] = n;
      const std::vector<double> pred =
          predict_curve(model, counts, prefix, demand.grid, bounds);
      const double dist = dtw::distance(demand_prefix, std::span<const double>(pred));
      if (dist < best_dist) {
        best_dist = dist;
        best_n = n;
      }
    }
    counts[p] = best_n;
    final_dist = best_dist;  // at p == P-1 the sub-grid is the full grid
  }
  return EstimateResult{DeploymentSchedule{std::move(counts)}, final_dist};
}

}  // namespace detail

/// Weighted random search: sample gamma schedules, score them on the
/// production model, return the argmin (first sampled wins ties). Never
/// fails: if the production model cannot be fit the sampling is uniform
/// and candidates are scored by the curve of their L1-nearest retained
/// schedule.
inline EstimateResult estimate_stochastic(const HistoryWindow& window, const DemandCurve& demand,
                                          const DeploymentBounds& bounds,
                                          const EstimatorConfig& config, SplitMix64& rng) {
  try {
    const gp::GpModel model = build_production_model(window, demand.grid, bounds, config);
    return detail::stochastic_with_model(window, demand, bounds, config, rng, &model);
  } catch (const gp::FitFailure&) {
    return detail::stochastic_with_model(window, demand, bounds, config, rng, nullptr);
  }
}

/// Deterministic sweep over time steps: each parameter takes the option
/// minimizing the model DTW distance on the sub-grid up to its step, ties
/// to the smallest option. Throws gp::FitFailure when no production model
/// can be fit.
inline EstimateResult estimate_inner_prod(const HistoryWindow& window, const DemandCurve& demand,
                                          const DeploymentBounds& bounds,
                                          const EstimatorConfig& config) {
  const gp::GpModel model = build_production_model(window, demand.grid, bounds, config);
  return detail::inner_prod_with_model(window, demand, bounds, model);
}

/// Run both estimators and keep the candidate with the lower model
/// distance; an exact tie keeps the inner-product candidate. If the
/// production model cannot be fit, the stochastic fallback result stands.
inline EstimateResult estimate_all(const HistoryWindow& window, const DemandCurve& demand,
                                   const DeploymentBounds& bounds, const EstimatorConfig& config,
                                   SplitMix64& rng) {
  std::optional<gp::GpModel> model;
  try {
    model.emplace(build_production_model(window, demand.grid, bounds, config));
  } catch (const gp::FitFailure&) {
    return detail::stochastic_with_model(window, demand, bounds, config, rng, nullptr);
  }
  const EstimateResult stochastic =
      detail::stochastic_with_model(window, demand, bounds, config, rng, &*model);
  const EstimateResult inner = detail::inner_prod_with_model(window, demand, bounds, *model);
  return stochastic.model_dist < inner.model_dist ? stochastic : inner;
}

}  // namespace worg
