#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace worg::dtw {

/// Accumulated-cost matrix for a series pair. Entry (a, b) holds the
/// minimal cumulative cost of any monotone alignment of f[0..a] with
/// g[0..b]. Stored 0-based; the warp path below reports 1-based pairs.
struct CostMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// Monotone alignment through the cost matrix, as 1-based (a, b) pairs
/// from (1, 1) to (A, B).
struct WarpPath {
  std::vector<std::pair<int, int>> points;
};

/// Element-wise absolute difference |f(a) - g(b)|.
inline Eigen::MatrixXd abs_difference_matrix(std::span<const double> f,
                                             std::span<const double> g) {
  if (f.empty() || g.empty())
    throw std::invalid_argument("dtw requires non-empty series");
  Eigen::MatrixXd dl(f.size(), g.size());
  for (std::size_t a = 0; a < f.size(); ++a)
    for (std::size_t b = 0; b < g.size(); ++b)
      dl(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::abs(f[a] - g[b]);
  return dl;
}

/// Standard DTW recursion: C(a,b) = dl(a,b) + min of the three
/// predecessors, with out-of-range predecessors treated as infinite.
/// First row and column therefore reduce to running sums.
inline CostMatrix cost_matrix(const Eigen::MatrixXd& dl) {
  if (dl.rows() == 0 || dl.cols() == 0)
    throw std::invalid_argument("cost matrix requires a non-empty difference matrix");
  const Eigen::Index rows = dl.rows();
  const Eigen::Index cols = dl.cols();
  Eigen::MatrixXd c(rows, cols);
  c(0, 0) = dl(0, 0);
  for (Eigen::Index b = 1; b < cols; ++b) c(0, b) = dl(0, b) + c(0, b - 1);
  for (Eigen::Index a = 1; a < rows; ++a) c(a, 0) = dl(a, 0) + c(a - 1, 0);
  for (Eigen::Index a = 1; a < rows; ++a)
    for (Eigen::Index b = 1; b < cols; ++b)
      c(a, b) = dl(a, b) + std::min({c(a - 1, b - 1), c(a - 1, b), c(a, b - 1)});
  return CostMatrix{std::move(c)};
}

/// Backward trace from (A, B) to (1, 1). At each step the minimum-cost
/// predecessor among diagonal, row-decrement, and column-decrement is
/// taken; ties prefer the diagonal, then the row decrement.
inline WarpPath warp_path(const CostMatrix& cost) {
  const auto& c = cost.entries;
  Eigen::Index a = c.rows() - 1;
  Eigen::Index b = c.cols() - 1;
  std::vector<std::pair<int, int>> reversed;
  reversed.emplace_back(static_cast<int>(a) + 1, static_cast<int>(b) + 1);
  const double inf = std::numeric_limits<double>::infinity();
  while (a > 0 || b > 0) {
    const double diag = (a > 0 && b > 0) ? c(a - 1, b - 1) : inf;
    const double up = (a > 0) ? c(a - 1, b) : inf;
    const double left = (b > 0) ? c(a, b - 1) : inf;
    if (diag <= up && diag <= left) {
      --a;
      --b;
    } else if (up <= left) {
      --a;
    } else {
      --b;
    }
    reversed.emplace_back(static_cast<int>(a) + 1, static_cast<int>(b) + 1);
  }
  WarpPath path;
  path.points.assign(reversed.rbegin(), reversed.rend());
  return path;
}

/// Normalized DTW distance d(f, g) = C(A, B) / (A + B).
inline double distance(std::span<const double> f, std::span<const double> g) {
  const CostMatrix c = cost_matrix(abs_difference_matrix(f, g));
  return c.entries(c.rows() - 1, c.cols() - 1) /
         static_cast<double>(c.rows() + c.cols());
}

inline double distance(const std::vector<double>& f, const std::vector<double>& g) {
  return distance(std::span<const double>(f), std::span<const double>(g));
}

}  // namespace worg::dtw
