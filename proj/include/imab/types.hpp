#ifndef IMAB_TYPES_HPP
#define IMAB_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace imab {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidEpisode : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Arm count m, subsignal count k and the fixed combination weights w.
template <typename Scalar>
struct BasicBanditSpec {
  Index arms = 2;
  Index subsignals = 1;
  Vector<Scalar> weights = Vector<Scalar>::Ones(1);

  static BasicBanditSpec uniform(Index arms, Index subsignals = 1) {
    return {arms, subsignals, Vector<Scalar>::Ones(subsignals)};
  }

  void validate() const {
    if (arms < 2) throw InvalidInput("bandit spec: arm count must be at least 2");
    if (subsignals < 1) throw InvalidInput("bandit spec: subsignal count must be at least 1");
    if (weights.size() != subsignals)
      throw InvalidInput("bandit spec: weight vector must have one entry per subsignal");
    if (!weights.allFinite()) throw InvalidInput("bandit spec: weights must be finite");
  }
};

/// Observed choices a(t) (0-based) and the k reward-signal matrices, row t = u(t+1).
template <typename Scalar>
struct BasicEpisode {
  std::vector<Index> actions;
  std::vector<Matrix<Scalar>> signals;

  Index trials() const { return static_cast<Index>(actions.size()); }

  void validate(const BasicBanditSpec<Scalar>& spec) const {
    const Index n = trials();
    if (n < 1) throw InvalidEpisode("episode: at least one trial is required");
    for (std::size_t t = 0; t < actions.size(); ++t) {
      if (actions[t] < 0 || actions[t] >= spec.arms)
        throw InvalidEpisode("episode: action " + std::to_string(actions[t]) + " at trial " +
                             std::to_string(t) + " is outside [0, " + std::to_string(spec.arms) +
                             ")");
    }
    if (static_cast<Index>(signals.size()) != spec.subsignals)
      throw InvalidEpisode("episode: expected " + std::to_string(spec.subsignals) +
                           " signal matrices, got " + std::to_string(signals.size()));
    for (const auto& u : signals) {
      if (u.rows() != n || u.cols() != spec.arms)
        throw InvalidEpisode("episode: signal matrix must be trials x arms");
      if (!u.allFinite()) throw InvalidEpisode("episode: signal entries must be finite");
    }
  }
};

/// Per-subsignal, per-arm learning rates and sensitivities (k x m each).
template <typename Scalar>
struct BasicParams {
  Matrix<Scalar> alpha;
  Matrix<Scalar> beta;

  static BasicParams zeros(Index subsignals, Index arms) {
    return {Matrix<Scalar>::Zero(subsignals, arms), Matrix<Scalar>::Zero(subsignals, arms)};
  }

  Index subsignals() const { return alpha.rows(); }
  Index arms() const { return alpha.cols(); }

  bool feasible() const {
    if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols()) return false;
    for (Index i = 0; i < alpha.size(); ++i) {
      const Scalar a = alpha.data()[i];
      const Scalar b = beta.data()[i];
      if (!(a >= Scalar(0) && a <= Scalar(1))) return false;
      if (!(b >= Scalar(0)) || !std::isfinite(static_cast<double>(b))) return false;
    }
    return true;
  }

  void check_shape(const BasicBanditSpec<Scalar>& spec) const {
    if (alpha.rows() != spec.subsignals || alpha.cols() != spec.arms ||
        beta.rows() != spec.subsignals || beta.cols() != spec.arms)
      throw InvalidInput("params: alpha and beta must be subsignals x arms");
  }

  void validate(const BasicBanditSpec<Scalar>& spec) const {
    check_shape(spec);
    if (!feasible())
      throw InvalidInput("params: require 0 <= alpha <= 1 and finite beta >= 0");
  }
};

using BanditSpec = BasicBanditSpec<double>;
using Episode = BasicEpisode<double>;
using Params = BasicParams<double>;

}  // namespace imab

#endif  // IMAB_TYPES_HPP
