#ifndef IMAB_RECOVERY_HPP
#define IMAB_RECOVERY_HPP

// Recovery of (alpha, beta) from the relaxed kernels G*, one row at a time:
// find the geometric kernel f(alpha, beta) closest to each row in least
// squares, and decide whether the recovered kernels reproduce G* closely
// enough to certify global optimality.

#include <stdexcept>
#include <vector>

#include "imab/box_minimizer.hpp"
#include "imab/relax.hpp"
#include "imab/rng.hpp"
#include "imab/types.hpp"

namespace imab {

struct RowFit {
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;  // ||f(alpha, beta) - g||^2
  int starts_used = 0;
};

class OptimizerFailure : public std::runtime_error {
 public:
  OptimizerFailure(const std::string& what, RowFit best) : std::runtime_error(what), best_(best) {}
  const RowFit& best() const { return best_; }

 private:
  RowFit best_;
};

class DegenerateRow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ||f_tilde(alpha, beta, p) - g||^2 with p = g.size().
double row_residual(const Eigen::Ref<const Eigen::VectorXd>& g_row, double alpha, double beta);

/// Local minimizer of the row residual over [0,1] x [0,inf) from one start.
/// Zero rows map to (0, 0); any fit with alpha * beta == 0 is reported as (0, 0).
RowFit local_fit_row(const Eigen::Ref<const Eigen::VectorXd>& g_row, double alpha0, double beta0,
                     const BoxOptions& options = {});

struct MultistartOptions {
  int restarts = 10;
  double tolerance = 1e-5;  // early exit once the row residual is at or below this
  double alpha_init_max = 1.0;
  double beta_init_max = 5.0;
};

/// Up to `restarts` local fits from alpha ~ U[0, alpha_init_max], beta ~ U[0, beta_init_max].
/// Stops at the first fit whose residual is within tolerance; otherwise the
/// lowest residual wins, earliest restart on ties.
RowFit fit_row_multistart(const Eigen::Ref<const Eigen::VectorXd>& g_row,
                          const MultistartOptions& options, Rng& rng);

/// Closed-form fit in log space: regress log(max(g, floor)) on (j, 1). The
/// slope is log(1 - alpha), the intercept log(alpha beta). Throws DegenerateRow
/// when alpha cannot be recovered (p < 2, or a slope >= 0 giving alpha <= 0).
/// A zero row maps to (0, 0).
RowFit fit_row_logspace(const Eigen::Ref<const Eigen::VectorXd>& g_row, double floor);

struct Certificate {
  bool global_optimal = false;
  bool full_depth = false;
  double L_total = 0.0;
  double epsilon = 0.0;     // aggregate tolerance: entries * eps_tilde
  double eps_tilde = 0.0;   // per-entry tolerance
  double max_abs_deviation = 0.0;
  double gap = 0.0;
  std::vector<Eigen::MatrixXd> decay_ratios;  // per subsignal, m x (p-1); NaN where 0/0
};

/// Global optimality holds when the depth equals the trial count, every entry
/// of f_map(params) lies within eps_tilde of G*, and L_total <= epsilon.
Certificate certify(const Params& params, const RelaxedSolution& solution, double upper_bound,
                    double eps_tilde);

/// Bound on |J(F) - J(G)| for kernels within eps_tilde entrywise:
/// 2 eps_tilde sum_t sum_i |w_i| ||U_i(t)||_1.
double certificate_gap_bound(const RelaxedProblem& problem, double eps_tilde);

}  // namespace imab

#endif  // IMAB_RECOVERY_HPP
