#ifndef IMAB_LAG_HPP
#define IMAB_LAG_HPP

// Linear lag-matrix form of the value recursion.
//
// With z(0) = 0 the recursion unrolls to
//   x_j(t) = sum_r (1 - alpha_j)^r alpha_j beta_j u_j(t - r),
// so x(t) = diag(G U(t)) where row j of G holds the geometric kernel of arm j
// and U(t) stacks the most recent reward rows, newest first. Truncating the
// kernel to p lags gives the depth-p variant.

#include <algorithm>
#include <span>

#include "imab/types.hpp"

namespace imab {

/// mats[t] (p x m) holds rows u(t), u(t-1), ..., zero padded once the history runs out.
template <typename Scalar>
struct BasicLagStack {
  Index depth = 0;
  std::vector<Matrix<Scalar>> mats;

  Index trials() const { return static_cast<Index>(mats.size()); }
  Index arms() const { return mats.empty() ? 0 : mats.front().cols(); }
};

using LagStack = BasicLagStack<double>;
using GMatrix = Matrix<double>;

template <typename Scalar>
BasicLagStack<Scalar> build_lag_stack(const BasicEpisode<Scalar>& episode, Index signal_index,
                                      Index depth) {
  const Index n = episode.trials();
  if (depth < 1 || depth > n)
    throw InvalidInput("build_lag_stack: lag depth must lie in [1, trials]");
  if (signal_index < 0 || signal_index >= static_cast<Index>(episode.signals.size()))
    throw InvalidInput("build_lag_stack: signal index out of range");
  const Matrix<Scalar>& u = episode.signals[static_cast<std::size_t>(signal_index)];
  if (u.rows() != n) throw InvalidInput("build_lag_stack: signal rows must equal trials");

  BasicLagStack<Scalar> stack{depth, {}};
  stack.mats.reserve(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    Matrix<Scalar> lagged = Matrix<Scalar>::Zero(depth, u.cols());
    const Index filled = std::min(depth, t + 1);
    for (Index r = 0; r < filled; ++r) lagged.row(r) = u.row(t - r);
    stack.mats.push_back(std::move(lagged));
  }
  return stack;
}

/// (alpha beta, (1-alpha) alpha beta, ..., (1-alpha)^(p-1) alpha beta).
template <typename Scalar>
Vector<Scalar> f_tilde(Scalar alpha, Scalar beta, Index depth) {
  if (!(alpha >= Scalar(0) && alpha <= Scalar(1)) || !(beta >= Scalar(0)))
    throw InvalidInput("f_tilde: require 0 <= alpha <= 1 and beta >= 0");
  if (depth < 1) throw InvalidInput("f_tilde: depth must be positive");
  Vector<Scalar> kernel(depth);
  const Scalar decay = Scalar(1) - alpha;
  Scalar term = alpha * beta;
  for (Index j = 0; j < depth; ++j) {
    kernel(j) = term;
    term *= decay;
  }
  return kernel;
}

/// Image of one subsignal's (alpha, beta) rows: an m x p kernel matrix.
template <typename Scalar>
Matrix<Scalar> f_map(const BasicParams<Scalar>& params, Index signal_index, Index depth) {
  if (!params.feasible()) throw InvalidInput("f_map: params violate the box constraints");
  if (signal_index < 0 || signal_index >= params.subsignals())
    throw InvalidInput("f_map: signal index out of range");
  Matrix<Scalar> G(params.arms(), depth);
  for (Index j = 0; j < params.arms(); ++j)
    G.row(j) = f_tilde(params.alpha(signal_index, j), params.beta(signal_index, j), depth).transpose();
  return G;
}

/// Nonnegative with every row nonincreasing (exactly, no tolerance).
template <typename Derived>
bool is_relaxed_feasible(const Eigen::MatrixBase<Derived>& G) {
  for (Index j = 0; j < G.rows(); ++j) {
    for (Index r = 0; r < G.cols(); ++r) {
      if (!(G(j, r) >= 0)) return false;
      if (r + 1 < G.cols() && G(j, r + 1) > G(j, r)) return false;
    }
  }
  return true;
}

/// x_j(t) = sum_i w_i <row j of G_i, column j of U_i(t)>.
template <typename Scalar>
Matrix<Scalar> values_from_G(std::span<const Matrix<Scalar>> Gs,
                             std::span<const BasicLagStack<Scalar>> stacks,
                             const Vector<Scalar>& weights) {
  if (Gs.size() != stacks.size() || static_cast<Index>(Gs.size()) != weights.size() || Gs.empty())
    throw InvalidInput("values_from_G: need one G and one lag stack per weight");
  const Index n = stacks.front().trials();
  const Index m = stacks.front().arms();
  Matrix<Scalar> x = Matrix<Scalar>::Zero(n, m);
  for (std::size_t i = 0; i < Gs.size(); ++i) {
    const auto& G = Gs[i];
    const auto& stack = stacks[i];
    if (stack.trials() != n || stack.arms() != m || G.rows() != m || G.cols() != stack.depth)
      throw InvalidInput("values_from_G: shape mismatch between G and lag stack");
    for (Index t = 0; t < n; ++t) {
      const auto& lagged = stack.mats[static_cast<std::size_t>(t)];
      x.row(t) += weights(static_cast<Index>(i)) *
                  (G.array() * lagged.transpose().array()).rowwise().sum().transpose().matrix();
    }
  }
  return x;
}

}  // namespace imab

#endif  // IMAB_LAG_HPP
