#ifndef IMAB_MODEL_HPP
#define IMAB_MODEL_HPP

// Forward model of the forgetting Q-learning agent: value recursion, softmax
// policy and the negative log-likelihood of an observed choice sequence.

#include <algorithm>
#include <cmath>
#include <span>

#include "imab/types.hpp"

namespace imab {

/// Row t has a single 1 at column actions[t].
template <typename Scalar = double>
Matrix<Scalar> one_hot(std::span<const Index> actions, Index arms) {
  Matrix<Scalar> y = Matrix<Scalar>::Zero(static_cast<Index>(actions.size()), arms);
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (actions[t] < 0 || actions[t] >= arms)
      throw InvalidEpisode("one_hot: action index " + std::to_string(actions[t]) +
                           " out of range for " + std::to_string(arms) + " arms");
    y(static_cast<Index>(t), actions[t]) = Scalar(1);
  }
  return y;
}

template <typename Derived>
typename Derived::Scalar logsumexp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = x.maxCoeff();
  return top + std::log((x.array() - top).exp().sum());
}

/// Softmax with max-subtraction.
template <typename Derived>
Vector<typename Derived::Scalar> policy_probs(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0 || !x.allFinite()) throw InvalidInput("policy_probs: input must be finite");
  const Scalar top = x.maxCoeff();
  Vector<Scalar> e = (x.derived().reshaped().array() - top).exp().matrix();
  return e / e.sum();
}

/// x(t) for t = 1..n as an n x m matrix, z(0) = 0 for every subsignal.
template <typename Scalar>
Matrix<Scalar> value_trajectory(const BasicParams<Scalar>& params,
                                const BasicEpisode<Scalar>& episode,
                                const BasicBanditSpec<Scalar>& spec) {
  spec.validate();
  episode.validate(spec);
  params.check_shape(spec);

  const Index n = episode.trials();
  Matrix<Scalar> x = Matrix<Scalar>::Zero(n, spec.arms);
  for (Index i = 0; i < spec.subsignals; ++i) {
    const RowVector<Scalar> keep = (Scalar(1) - params.alpha.row(i).array()).matrix();
    const RowVector<Scalar> gain = params.alpha.row(i).cwiseProduct(params.beta.row(i));
    const Matrix<Scalar>& u = episode.signals[static_cast<std::size_t>(i)];
    RowVector<Scalar> z = RowVector<Scalar>::Zero(spec.arms);
    for (Index t = 0; t < n; ++t) {
      z = keep.cwiseProduct(z) + gain.cwiseProduct(u.row(t));
      x.row(t) += spec.weights(i) * z;
    }
  }
  return x;
}

/// -sum_t (x_{a(t)}(t) - logsumexp x(t)) for a precomputed trajectory.
template <typename Scalar>
Scalar choice_nll(const Matrix<Scalar>& values, std::span<const Index> actions) {
  Scalar total(0);
  for (Index t = 0; t < values.rows(); ++t)
    total += logsumexp(values.row(t)) - values(t, actions[static_cast<std::size_t>(t)]);
  return total;
}

template <typename Scalar>
Scalar objective_J(const BasicParams<Scalar>& params, const BasicEpisode<Scalar>& episode,
                   const BasicBanditSpec<Scalar>& spec) {
  params.validate(spec);
  return choice_nll(value_trajectory(params, episode, spec), std::span<const Index>(episode.actions));
}

template <typename Scalar>
Scalar log_likelihood(const BasicParams<Scalar>& params, const BasicEpisode<Scalar>& episode,
                      const BasicBanditSpec<Scalar>& spec) {
  return -objective_J(params, episode, spec);
}

}  // namespace imab

#endif  // IMAB_MODEL_HPP
