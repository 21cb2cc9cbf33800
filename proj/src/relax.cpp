#include "imab/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imab/model.hpp"

namespace imab {

Eigen::VectorXd project_row_monotone_nonneg(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (!v.allFinite()) throw InvalidInput("project_row_monotone_nonneg: input must be finite");
  const Index p = v.size();
  // Blocks of pooled entries; means are nonincreasing across blocks.
  std::vector<double> sums;
  std::vector<Index> counts;
  sums.reserve(static_cast<std::size_t>(p));
  counts.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    sums.push_back(v(i));
    counts.push_back(1);
    while (sums.size() > 1) {
      const std::size_t last = sums.size() - 1;
      const double tail_mean = sums[last] / static_cast<double>(counts[last]);
      const double prev_mean = sums[last - 1] / static_cast<double>(counts[last - 1]);
      if (prev_mean >= tail_mean) break;
      sums[last - 1] += sums[last];
      counts[last - 1] += counts[last];
      sums.pop_back();
      counts.pop_back();
    }
  }
  Eigen::VectorXd z(p);
  Index pos = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    const double mean = std::max(0.0, sums[b] / static_cast<double>(counts[b]));
    z.segment(pos, counts[b]).setConstant(mean);
    pos += counts[b];
  }
  return z;
}

void project_rows(Eigen::Ref<Eigen::MatrixXd> G) {
  for (Index j = 0; j < G.rows(); ++j) G.row(j) = project_row_monotone_nonneg(G.row(j).transpose()).transpose();
}

RelaxedProblem RelaxedProblem::build(const Episode& episode, const BanditSpec& spec, Index depth) {
  spec.validate();
  episode.validate(spec);
  RelaxedProblem problem;
  problem.choices = one_hot(std::span<const Index>(episode.actions), spec.arms);
  problem.actions = episode.actions;
  problem.weights = spec.weights;
  for (Index i = 0; i < spec.subsignals; ++i) problem.stacks.push_back(build_lag_stack(episode, i, depth));
  return problem;
}

void RelaxedProblem::validate() const {
  if (stacks.empty() || static_cast<Index>(stacks.size()) != weights.size())
    throw InvalidInput("relaxed problem: need one lag stack per weight");
  if (static_cast<Index>(actions.size()) != trials())
    throw InvalidInput("relaxed problem: action count must match the choice trace");
  for (const auto& stack : stacks) {
    if (stack.trials() != trials() || stack.arms() != arms() || stack.depth != depth())
      throw InvalidInput("relaxed problem: lag stacks disagree in shape");
  }
  if (depth() < 1 || depth() > trials()) throw InvalidInput("relaxed problem: depth must lie in [1, n]");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::relative_decrease: return "relative-decrease";
    case StopReason::projected_gradient: return "projected-gradient";
    case StopReason::stalled: return "stalled";
    case StopReason::max_iterations: return "max-iterations";
  }
  return "unknown";
}

void SolverOptions::validate() const {
  if (max_iters <= 0 || rel_window <= 0) throw InvalidInput("solver options: iteration counts must be positive");
  if (!(rel_tol > 0) || !(grad_tol > 0) || !(initial_step > 0))
    throw InvalidInput("solver options: tolerances and step must be positive");
  if (!(backtrack > 0 && backtrack < 1)) throw InvalidInput("solver options: backtracking factor must lie in (0, 1)");
}

namespace {

// Solver-internal layout: column i*m + j is row j of G_i, so each kernel is a
// contiguous column and the per-row projection acts column-wise.
using KernelMatrix = Eigen::MatrixXd;

KernelMatrix to_kernels(std::span<const GMatrix> Gs, const RelaxedProblem& problem) {
  const Index m = problem.arms();
  const Index p = problem.depth();
  if (static_cast<Index>(Gs.size()) != problem.subsignals())
    throw InvalidInput("relaxed objective: expected one G per subsignal");
  KernelMatrix K(p, m * problem.subsignals());
  for (std::size_t i = 0; i < Gs.size(); ++i) {
    if (Gs[i].rows() != m || Gs[i].cols() != p) throw InvalidInput("relaxed objective: G must be arms x depth");
    K.middleCols(static_cast<Index>(i) * m, m) = Gs[i].transpose();
  }
  return K;
}

std::vector<GMatrix> from_kernels(const KernelMatrix& K, Index subsignals, Index arms) {
  std::vector<GMatrix> Gs;
  Gs.reserve(static_cast<std::size_t>(subsignals));
  for (Index i = 0; i < subsignals; ++i) Gs.emplace_back(K.middleCols(i * arms, arms).transpose());
  return Gs;
}

void project_kernels(KernelMatrix& K) {
  for (Index c = 0; c < K.cols(); ++c) K.col(c) = project_row_monotone_nonneg(K.col(c));
}

class RelaxedEvaluator {
 public:
  explicit RelaxedEvaluator(const RelaxedProblem& problem)
      : problem_(problem), values_(problem.trials(), problem.arms()) {}

  double value(const KernelMatrix& K) {
    compute_values(K);
    double total = 0.0;
    for (Index t = 0; t < values_.rows(); ++t)
      total += logsumexp(values_.row(t)) - values_(t, problem_.actions[static_cast<std::size_t>(t)]);
    return total;
  }

  double value_and_gradient(const KernelMatrix& K, KernelMatrix& grad) {
    compute_values(K);
    const Index n = problem_.trials();
    const Index m = problem_.arms();
    const Index p = problem_.depth();
    double total = 0.0;
    grad.setZero(K.rows(), K.cols());
    for (Index t = 0; t < n; ++t) {
      const Index chosen = problem_.actions[static_cast<std::size_t>(t)];
      const double top = values_.row(t).maxCoeff();
      Eigen::RowVectorXd residual = (values_.row(t).array() - top).exp().matrix();
      const double scale = residual.sum();
      total += top + std::log(scale) - values_(t, chosen);
      residual /= scale;
      residual(chosen) -= 1.0;
      const Index filled = std::min(p, t + 1);
      for (Index i = 0; i < problem_.subsignals(); ++i) {
        const auto& lagged = problem_.stacks[static_cast<std::size_t>(i)].mats[static_cast<std::size_t>(t)];
        const double w = problem_.weights(i);
        for (Index j = 0; j < m; ++j)
          grad.col(i * m + j).head(filled) += (w * residual(j)) * lagged.col(j).head(filled);
      }
    }
    return total;
  }

 private:
  void compute_values(const KernelMatrix& K) {
    const Index n = problem_.trials();
    const Index m = problem_.arms();
    const Index p = problem_.depth();
    values_.setZero();
    for (Index i = 0; i < problem_.subsignals(); ++i) {
      const auto& stack = problem_.stacks[static_cast<std::size_t>(i)];
      const double w = problem_.weights(i);
      for (Index t = 0; t < n; ++t) {
        const Index filled = std::min(p, t + 1);
        const auto& lagged = stack.mats[static_cast<std::size_t>(t)];
        for (Index j = 0; j < m; ++j)
          values_(t, j) += w * K.col(i * m + j).head(filled).dot(lagged.col(j).head(filled));
      }
    }
  }

  const RelaxedProblem& problem_;
  Eigen::MatrixXd values_;
};

double gradient_mapping_norm(const KernelMatrix& K, const KernelMatrix& grad) {
  KernelMatrix stepped = K - grad;
  project_kernels(stepped);
  return (K - stepped).norm();
}

}  // namespace

double relaxed_objective(std::span<const GMatrix> Gs, const RelaxedProblem& problem) {
  problem.validate();
  RelaxedEvaluator evaluator(problem);
  return evaluator.value(to_kernels(Gs, problem));
}

ObjectiveAndGradient relaxed_objective_and_gradient(std::span<const GMatrix> Gs,
                                                    const RelaxedProblem& problem) {
  problem.validate();
  RelaxedEvaluator evaluator(problem);
  KernelMatrix grad;
  ObjectiveAndGradient result;
  result.value = evaluator.value_and_gradient(to_kernels(Gs, problem), grad);
  result.gradients = from_kernels(grad, problem.subsignals(), problem.arms());
  return result;
}

double projected_gradient_norm(std::span<const GMatrix> Gs, const RelaxedProblem& problem) {
  problem.validate();
  RelaxedEvaluator evaluator(problem);
  const KernelMatrix K = to_kernels(Gs, problem);
  KernelMatrix grad;
  evaluator.value_and_gradient(K, grad);
  return gradient_mapping_norm(K, grad);
}

RelaxedSolution solve_relaxed(const RelaxedProblem& problem, const SolverOptions& options,
                              const std::optional<std::vector<GMatrix>>& initial) {
  problem.validate();
  options.validate();
  const Index k = problem.subsignals();
  const Index m = problem.arms();
  const Index p = problem.depth();

  KernelMatrix x = initial ? to_kernels(*initial, problem) : KernelMatrix::Zero(p, k * m);
  if (!x.allFinite()) throw InvalidInput("solve_relaxed: initial point must be finite");
  project_kernels(x);

  RelaxedEvaluator evaluator(problem);
  KernelMatrix y = x, y_grad, x_next, x_grad;
  double fx = evaluator.value(x);
  double lipschitz = 1.0 / options.initial_step;
  double momentum = 1.0;
  bool at_anchor = true;  // y == x, so the next step is a plain projected gradient step

  RelaxedSolution solution;
  solution.trials = problem.trials();
  solution.depth = p;
  std::vector<double> history{fx};
  if (options.record_trace) solution.trace.push_back(fx);

  auto check_gradient = [&]() {
    evaluator.value_and_gradient(x, x_grad);
    solution.projected_gradient_norm = gradient_mapping_norm(x, x_grad);
    return solution.projected_gradient_norm <= options.grad_tol;
  };

  int iter = 0;
  bool converged = false;
  while (iter < options.max_iters) {
    ++iter;
    const double fy = evaluator.value_and_gradient(y, y_grad);
    double fx_next = 0.0;
    for (;;) {
      x_next = y - y_grad / lipschitz;
      project_kernels(x_next);
      const KernelMatrix step = x_next - y;
      fx_next = evaluator.value(x_next);
      const double model = fy + y_grad.cwiseProduct(step).sum() + 0.5 * lipschitz * step.squaredNorm();
      if (fx_next <= model + 1e-12 * std::abs(fy)) break;
      lipschitz /= options.backtrack;
      if (!std::isfinite(lipschitz)) break;
    }

    if (!(fx_next <= fx)) {
      if (at_anchor) {
        // No decrease from a plain step: stalled at working precision.
        solution.stop_reason = StopReason::stalled;
        converged = true;
        break;
      }
      y = x;
      momentum = 1.0;
      at_anchor = true;
      continue;
    }

    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
    momentum = momentum_next;
    at_anchor = false;
    x.swap(x_next);
    fx = fx_next;
    lipschitz *= 0.9;

    history.push_back(fx);
    if (options.record_trace) solution.trace.push_back(fx);

    const auto window = static_cast<std::size_t>(options.rel_window);
    if (history.size() > window) {
      const double earlier = history[history.size() - 1 - window];
      if (earlier - fx <= options.rel_tol * std::max(1.0, std::abs(fx))) {
        solution.stop_reason = StopReason::relative_decrease;
        converged = true;
        break;
      }
    }
    if (iter % 10 == 0 && check_gradient()) {
      solution.stop_reason = StopReason::projected_gradient;
      converged = true;
      break;
    }
  }
  check_gradient();

  solution.Gs = from_kernels(x, k, m);
  solution.lower_bound = fx;
  solution.iterations = iter;
  solution.converged = converged || solution.projected_gradient_norm <= options.grad_tol;
  return solution;
}

}  // namespace imab
