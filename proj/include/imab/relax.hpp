#ifndef IMAB_RELAX_HPP
#define IMAB_RELAX_HPP

// Convex relaxation of the bandit fitting problem.
//
// The geometric kernels f(alpha, beta) are replaced by free matrices G whose
// rows only need to be nonnegative and nonincreasing. x(t) is linear in G, so
// the negative log-likelihood becomes convex and its minimum is a lower bound
// on the original (nonconvex) objective at the same lag depth.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imab/lag.hpp"
#include "imab/types.hpp"

namespace imab {

/// Euclidean projection onto {z : z_0 >= z_1 >= ... >= z_{p-1} >= 0}.
/// Pool-adjacent-violators for the ordering, then clamp at zero.
Eigen::VectorXd project_row_monotone_nonneg(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Applies project_row_monotone_nonneg to every row of G in place.
void project_rows(Eigen::Ref<Eigen::MatrixXd> G);

struct RelaxedProblem {
  Eigen::MatrixXd choices;  // n x m one-hot trace
  std::vector<Index> actions;
  std::vector<LagStack> stacks;  // one per subsignal, all of the same depth
  Eigen::VectorXd weights;

  static RelaxedProblem build(const Episode& episode, const BanditSpec& spec, Index depth);

  Index trials() const { return choices.rows(); }
  Index arms() const { return choices.cols(); }
  Index subsignals() const { return static_cast<Index>(stacks.size()); }
  Index depth() const { return stacks.empty() ? 0 : stacks.front().depth; }

  void validate() const;
};

struct SolverOptions {
  int max_iters = 50000;
  double rel_tol = 1e-9;
  int rel_window = 10;
  double grad_tol = 1e-7;
  double initial_step = 1.0;
  double backtrack = 0.5;
  bool record_trace = false;

  void validate() const;
};

enum class StopReason { relative_decrease, projected_gradient, stalled, max_iterations };

std::string to_string(StopReason reason);

struct RelaxedSolution {
  std::vector<GMatrix> Gs;  // k matrices, m x p, relaxed-feasible
  double lower_bound = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::max_iterations;
  double projected_gradient_norm = 0.0;
  Index trials = 0;
  Index depth = 0;
  std::vector<double> trace;  // accepted objective values when requested

  bool full_depth() const { return depth == trials; }
};

struct ObjectiveAndGradient {
  double value = 0.0;
  std::vector<GMatrix> gradients;
};

double relaxed_objective(std::span<const GMatrix> Gs, const RelaxedProblem& problem);

ObjectiveAndGradient relaxed_objective_and_gradient(std::span<const GMatrix> Gs,
                                                    const RelaxedProblem& problem);

/// Norm of G - project(G - grad J(G)), zero exactly at the relaxed optimum.
double projected_gradient_norm(std::span<const GMatrix> Gs, const RelaxedProblem& problem);

/// Accelerated projected gradient with backtracking and restart on objective
/// increase. Starts from zero unless an initial point is given; the initial
/// point is projected before use. Accepted objective values never increase.
RelaxedSolution solve_relaxed(const RelaxedProblem& problem, const SolverOptions& options = {},
                              const std::optional<std::vector<GMatrix>>& initial = std::nullopt);

}  // namespace imab

#endif  // IMAB_RELAX_HPP
