#ifndef IMAB_TESTS_SUPPORT_HPP
#define IMAB_TESTS_SUPPORT_HPP

// Independent oracles and random instance generators shared by the unit
// tests and the acceptance binary. Nothing here calls into the code under
// test except for the plain data types.

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "imab/rng.hpp"
#include "imab/types.hpp"

namespace imab::testing {

/// Euclidean projection onto {z_0 >= ... >= z_{p-1} >= 0} by enumerating
/// every active set. Active constraint c < p-1 ties z_c = z_{c+1}; active
/// constraint p-1 pins the last block to zero. The best feasible candidate
/// is the projection.
inline Eigen::VectorXd brute_force_projection(const Eigen::VectorXd& v) {
  const int p = static_cast<int>(v.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z = Eigen::VectorXd::Zero(p);
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    Eigen::VectorXd z(p);
    int start = 0;
    for (int i = 0; i < p; ++i) {
      const bool tied_to_next = i + 1 < p && (mask >> i & 1u);
      if (tied_to_next) continue;
      double mean = v.segment(start, i - start + 1).mean();
      if (i == p - 1 && (mask >> (p - 1) & 1u)) mean = 0.0;
      z.segment(start, i - start + 1).setConstant(mean);
      start = i + 1;
    }
    bool feasible = z(p - 1) >= -1e-15;
    for (int i = 0; i + 1 < p; ++i) feasible = feasible && z(i) >= z(i + 1) - 1e-15;
    if (!feasible) continue;
    const double d = (z - v).squaredNorm();
    if (d < best) {
      best = d;
      best_z = z;
    }
  }
  return best_z;
}

/// Value trajectory by the scalar update x <- (1 - a) x + a b u, one arm and
/// one subsignal at a time.
inline Eigen::MatrixXd scalar_recursion(const Params& params, const Episode& episode, const BanditSpec& spec) {
  const Index n = episode.trials();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, spec.arms);
  for (Index i = 0; i < spec.subsignals; ++i) {
    for (Index j = 0; j < spec.arms; ++j) {
      const double a = params.alpha(i, j);
      const double b = params.beta(i, j);
      double z = 0.0;
      for (Index t = 0; t < n; ++t) {
        z = (1.0 - a) * z + a * b * episode.signals[static_cast<std::size_t>(i)](t, j);
        x(t, j) += spec.weights(i) * z;
      }
    }
  }
  return x;
}

/// -sum_t log softmax(x(t))_{a(t)} using long double accumulation.
inline double reference_nll(const Eigen::MatrixXd& x, const std::vector<Index>& actions) {
  long double total = 0.0L;
  for (Index t = 0; t < x.rows(); ++t) {
    const long double top = x.row(t).maxCoeff();
    long double s = 0.0L;
    for (Index j = 0; j < x.cols(); ++j) s += std::exp(static_cast<long double>(x(t, j)) - top);
    total += top + std::log(s) - x(t, actions[static_cast<std::size_t>(t)]);
  }
  return static_cast<double>(total);
}

inline Params random_params(Rng& rng, Index k, Index m, double beta_max = 5.0) {
  Params params = Params::zeros(k, m);
  for (Index c = 0; c < k * m; ++c) {
    params.alpha.data()[c] = rng.uniform();
    params.beta.data()[c] = rng.uniform(0.0, beta_max);
  }
  return params;
}

/// Uniformly random actions; binary signals unless `real_valued`, in which
/// case entries are U[-1, 1].
inline Episode random_episode(Rng& rng, Index n, Index m, Index k, bool real_valued = false) {
  Episode episode;
  for (Index t = 0; t < n; ++t) episode.actions.push_back(static_cast<Index>(rng.next() % static_cast<std::uint64_t>(m)));
  for (Index i = 0; i < k; ++i) {
    Eigen::MatrixXd u(n, m);
    for (Index c = 0; c < u.size(); ++c)
      u.data()[c] = real_valued ? rng.uniform(-1.0, 1.0) : (rng.uniform() < 0.5 ? 1.0 : 0.0);
    episode.signals.push_back(u);
  }
  return episode;
}

/// Random nonnegative row-nonincreasing matrix (m x p).
inline Eigen::MatrixXd random_feasible_G(Rng& rng, Index m, Index p, double scale = 2.0) {
  Eigen::MatrixXd G(m, p);
  for (Index j = 0; j < m; ++j) {
    double level = rng.uniform(0.0, scale);
    for (Index r = 0; r < p; ++r) {
      G(j, r) = level;
      level *= rng.uniform();
    }
  }
  return G;
}

inline std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

}  // namespace imab::testing

#endif  // IMAB_TESTS_SUPPORT_HPP
