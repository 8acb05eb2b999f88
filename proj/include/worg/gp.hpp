#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace worg::gp {

enum class KernelKind { ExpSquared, Matern32, Matern52 };

/// Isotropic kernel hyperparameters. Note the exponential-squared form
/// divides the squared separation by 2*length_scale (not the square of
/// it), while the Matern forms divide |r - r'| by length_scale; both
/// conventions are kept as-is so fitted values are comparable with the
/// method's reference results.
struct Hyperparameters {
  double length_scale = 1.0;
  double signal_variance = 1.0;
};

/// Raised when no hyperparameter restart yields a usable factorization.
/// Callers treat it as "no model this round" and fall back.
struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double kernel_from_sqdist(KernelKind kind, const Hyperparameters& hyper, double sqdist) {
  const double s2 = hyper.signal_variance;
  const double ell = hyper.length_scale;
  switch (kind) {
    case KernelKind::ExpSquared:
      return s2 * std::exp(-sqdist / (2.0 * ell));
    case KernelKind::Matern32: {
      const double q = std::numbers::sqrt3 * std::sqrt(sqdist) / ell;
      return s2 * (1.0 + q) * std::exp(-q);
    }
    case KernelKind::Matern52: {
      const double dist = std::sqrt(sqdist);
      const double q = std::sqrt(5.0) * dist / ell;
      return s2 * (1.0 + q + 5.0 * sqdist / (3.0 * ell * ell)) * std::exp(-q);
    }
  }
  return 0.0;  // unreachable
}

inline Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = norms.replicate(1, x.rows()) + norms.transpose().replicate(x.rows(), 1) -
                       2.0 * x * x.transpose();
  return d2.cwiseMax(0.0);
}

}  // namespace detail

/// Kernel value between two equal-dimension points.
inline double kernel(KernelKind kind, const Hyperparameters& hyper, std::span<const double> r,
                     std::span<const double> r_prime) {
  if (r.size() != r_prime.size())
    throw std::invalid_argument("kernel arguments differ in dimension");
  double sqdist = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = r[i] - r_prime[i];
    sqdist += diff * diff;
  }
  return detail::kernel_from_sqdist(kind, hyper, sqdist);
}

/// Length-scale starts for the deterministic fit restarts, in normalized
/// input units.
inline constexpr std::array<double, 2> kFitLengthScaleStarts{1.0, 4.0};

/// Noise multipliers tried in order when (K + tau^2 I) fails to factorize.
inline constexpr std::array<double, 3> kJitterLadder{1.0, 10.0, 100.0};

/// A fitted (or directly constructed) zero-mean Gaussian process with an
/// optional stored target offset. `fit` centers the targets and restores
/// the offset on prediction; `with_hyperparameters` uses the targets
/// verbatim, which keeps the small-model closed forms exact.
class GpModel {
 public:
  /// Build a model at fixed hyperparameters. Throws FitFailure if the
  /// covariance cannot be factorized even after the jitter ladder.
  static GpModel with_hyperparameters(KernelKind kind, Hyperparameters hyper, double tau,
                                      Eigen::MatrixXd inputs, Eigen::VectorXd targets) {
    return GpModel(kind, hyper, tau, std::move(inputs), std::move(targets), 0.0);
  }

  /// Maximum-likelihood fit of (length_scale, signal_variance) by a
  /// Nelder-Mead search in log space, restarted from a fixed grid.
  /// Targets are centered by their mean before fitting.
  static GpModel fit(KernelKind kind, double tau, Eigen::MatrixXd inputs,
                     Eigen::VectorXd targets) {
    if (inputs.rows() < 2) throw std::invalid_argument("gp fit requires at least 2 points");
    if (inputs.rows() != targets.size())
      throw std::invalid_argument("gp fit inputs and targets differ in length");
    const double offset = targets.mean();
    const Eigen::VectorXd centered = targets.array() - offset;
    const Eigen::MatrixXd sqdist = detail::pairwise_sqdist(inputs);

    const double var = std::max((centered.array().square().sum()) /
                                    static_cast<double>(centered.size()),
                                1e-12);
    double best_value = -std::numeric_limits<double>::infinity();
    Eigen::Vector2d best_point;
    for (double ell0 : kFitLengthScaleStarts) {
      for (double s20 : {var, 10.0 * var}) {
        Eigen::Vector2d start(std::log(ell0), std::log(s20));
        auto [point, value] = nelder_mead(
            [&](const Eigen::Vector2d& z) {
              return -log_likelihood_at(kind, sqdist, centered, tau, z);
            },
            start);
        if (-value > best_value) {
          best_value = -value;
          best_point = point;
        }
      }
    }
    if (!std::isfinite(best_value))
      throw FitFailure("no hyperparameter restart produced a finite likelihood");
    Hyperparameters hyper{std::exp(best_point(0)), std::exp(best_point(1))};
    return GpModel(kind, hyper, tau, std::move(inputs), centered, offset);
  }

  /// Log marginal likelihood of the stored targets under the stored
  /// factorization, constant term -(n/2) log 2*pi included.
  double log_likelihood() const {
    const auto n = static_cast<double>(targets_.size());
    const double log_det_half = chol_.matrixLLT().diagonal().array().log().sum();
    return -0.5 * targets_.dot(alpha_) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
  }

  /// Posterior mean at each query row.
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& queries) const {
    return cross_covariance(queries) * alpha_ + Eigen::VectorXd::Constant(queries.rows(), offset_);
  }

  /// Posterior variance at each query row, clamped at zero.
  Eigen::VectorXd predict_variance(const Eigen::MatrixXd& queries) const {
    const Eigen::MatrixXd k_star = cross_covariance(queries);
    const Eigen::MatrixXd solved = chol_.solve(k_star.transpose());
    Eigen::VectorXd var(queries.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i)
      var(i) = hyper_.signal_variance - k_star.row(i).dot(solved.col(i));
    return var.cwiseMax(0.0);
  }

  const Hyperparameters& hyper() const { return hyper_; }
  KernelKind kind() const { return kind_; }
  double effective_tau() const { return effective_tau_; }
  Eigen::Index dimension() const { return inputs_.cols(); }

 private:
  GpModel(KernelKind kind, Hyperparameters hyper, double tau, Eigen::MatrixXd inputs,
          Eigen::VectorXd centered_targets, double offset)
      : kind_(kind),
        hyper_(hyper),
        inputs_(std::move(inputs)),
        targets_(std::move(centered_targets)),
        offset_(offset) {
    if (hyper_.length_scale <= 0.0 || hyper_.signal_variance <= 0.0 ||
        !std::isfinite(hyper_.length_scale) || !std::isfinite(hyper_.signal_variance))
      throw std::invalid_argument("hyperparameters must be positive and finite");
    if (inputs_.rows() != targets_.size())
      throw std::invalid_argument("gp inputs and targets differ in length");
    if (tau < 0.0) throw std::invalid_argument("gp noise must be non-negative");
    const Eigen::MatrixXd sqdist = detail::pairwise_sqdist(inputs_);
    bool factorized = false;
    for (double mult : kJitterLadder) {
      const double t = tau * mult;
      if (try_factorize(kind_, sqdist, hyper_, t, chol_)) {
        effective_tau_ = t;
        factorized = true;
        break;
      }
      if (tau == 0.0) break;  // the ladder cannot rescue an exact zero
    }
    if (!factorized) throw FitFailure("covariance is not positive definite");
    alpha_ = chol_.solve(targets_);
  }

  static bool try_factorize(KernelKind kind, const Eigen::MatrixXd& sqdist,
                            const Hyperparameters& hyper, double tau,
                            Eigen::LLT<Eigen::MatrixXd>& out) {
    Eigen::MatrixXd cov(sqdist.rows(), sqdist.cols());
    for (Eigen::Index i = 0; i < sqdist.rows(); ++i)
      for (Eigen::Index j = 0; j < sqdist.cols(); ++j)
        cov(i, j) = detail::kernel_from_sqdist(kind, hyper, sqdist(i, j));
    cov.diagonal().array() += tau * tau;
    out.compute(cov);
    if (out.info() != Eigen::Success) return false;
    // LLT can succeed on a semi-definite matrix with a zero pivot; reject
    // those so downstream solves stay finite.
    return (out.matrixLLT().diagonal().array() > 0.0).all();
  }

  static double log_likelihood_at(KernelKind kind, const Eigen::MatrixXd& sqdist,
                                  const Eigen::VectorXd& targets, double tau,
                                  const Eigen::Vector2d& log_params) {
    constexpr double bad = -1e300;
    if (!log_params.array().isFinite().all()) return bad;
    // keep the search inside a sane dynamic range
    if (log_params.cwiseAbs().maxCoeff() > 46.0) return bad;
    const Hyperparameters hyper{std::exp(log_params(0)), std::exp(log_params(1))};
    Eigen::LLT<Eigen::MatrixXd> chol;
    bool ok = false;
    for (double mult : kJitterLadder) {
      if (try_factorize(kind, sqdist, hyper, tau * mult, chol)) {
        ok = true;
        break;
      }
      if (tau == 0.0) break;
    }
    if (!ok) return bad;
    const Eigen::VectorXd alpha = chol.solve(targets);
    const double value = -0.5 * targets.dot(alpha) -
                         chol.matrixLLT().diagonal().array().log().sum() -
                         0.5 * static_cast<double>(targets.size()) *
                             std::log(2.0 * std::numbers::pi);
    return std::isfinite(value) ? value : bad;
  }

  /// Standard Nelder-Mead on a 2-d objective; deterministic, bounded
  /// iteration count. Returns the best vertex and its value.
  template <typename F>
  static std::pair<Eigen::Vector2d, double> nelder_mead(F objective, Eigen::Vector2d start) {
    constexpr int max_iter = 200;
    constexpr double step = 0.5;
    std::array<Eigen::Vector2d, 3> simplex{start, start + Eigen::Vector2d(step, 0.0),
                                           start + Eigen::Vector2d(0.0, step)};
    std::array<double, 3> values{objective(simplex[0]), objective(simplex[1]),
                                 objective(simplex[2])};
    auto order = [&] {
      // insertion order for 3 points, stable
      if (values[0] > values[1]) { std::swap(values[0], values[1]); std::swap(simplex[0], simplex[1]); }
      if (values[1] > values[2]) { std::swap(values[1], values[2]); std::swap(simplex[1], simplex[2]); }
      if (values[0] > values[1]) { std::swap(values[0], values[1]); std::swap(simplex[0], simplex[1]); }
    };
    order();
    for (int iter = 0; iter < max_iter; ++iter) {
      if (std::abs(values[2] - values[0]) < 1e-10 &&
          (simplex[2] - simplex[0]).cwiseAbs().maxCoeff() < 1e-8)
        break;
      const Eigen::Vector2d centroid = 0.5 * (simplex[0] + simplex[1]);
      const Eigen::Vector2d reflected = centroid + (centroid - simplex[2]);
      const double f_reflected = objective(reflected);
      if (f_reflected < values[0]) {
        const Eigen::Vector2d expanded = centroid + 2.0 * (centroid - simplex[2]);
        const double f_expanded = objective(expanded);
        if (f_expanded < f_reflected) {
          simplex[2] = expanded;
          values[2] = f_expanded;
        } else {
          simplex[2] = reflected;
          values[2] = f_reflected;
        }
      } else if (f_reflected < values[1]) {
        simplex[2] = reflected;
        values[2] = f_reflected;
      } else {
        const Eigen::Vector2d contracted =
            f_reflected < values[2] ? centroid + 0.5 * (reflected - centroid)
                                    : centroid + 0.5 * (simplex[2] - centroid);
        const double f_contracted = objective(contracted);
        if (f_contracted < std::min(values[2], f_reflected)) {
          simplex[2] = contracted;
          values[2] = f_contracted;
        } else {
          simplex[1] = simplex[0] + 0.5 * (simplex[1] - simplex[0]);
          simplex[2] = simplex[0] + 0.5 * (simplex[2] - simplex[0]);
          values[1] = objective(simplex[1]);
          values[2] = objective(simplex[2]);
        }
      }
      order();
    }
    return {simplex[0], values[0]};
  }

  Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& queries) const {
    if (queries.cols() != inputs_.cols())
      throw std::invalid_argument("query dimension does not match training inputs");
    Eigen::MatrixXd k_star(queries.rows(), inputs_.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs_.rows(); ++j) {
        const double sqdist = (queries.row(i) - inputs_.row(j)).squaredNorm();
        k_star(i, j) = detail::kernel_from_sqdist(kind_, hyper_, sqdist);
      }
    }
    return k_star;
  }

  KernelKind kind_;
  Hyperparameters hyper_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;  // centered when built via fit
  double offset_ = 0.0;
  double effective_tau_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

}  // namespace worg::gp
