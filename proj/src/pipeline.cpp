#include "imab/pipeline.hpp"

#include <cmath>
#include <limits>

#include "imab/box_minimizer.hpp"
#include "imab/model.hpp"
#include "imab/rng.hpp"

namespace imab {

std::string to_string(FitMethod method) {
  switch (method) {
    case FitMethod::sequential: return "sequential";
    case FitMethod::direct: return "direct";
    case FitMethod::logspace_recovery: return "logspace-recovery";
  }
  return "unknown";
}

FitMethod parse_fit_method(const std::string& name) {
  if (name == "sequential") return FitMethod::sequential;
  if (name == "direct") return FitMethod::direct;
  if (name == "logspace-recovery") return FitMethod::logspace_recovery;
  throw InvalidInput("unknown fit method '" + name + "'");
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::exact: return "exact";
    case BoundKind::truncated: return "truncated";
    case BoundKind::absent: return "absent";
  }
  return "unknown";
}

void FitOptions::validate(Index trials) const {
  const Index p = resolved_depth(trials);
  if (p < 1 || p > trials) throw InvalidInput("fit options: lag depth must lie in [1, trials]");
  if (restarts < 1) throw InvalidInput("fit options: restarts must be at least 1");
  if (!(eps_tilde > 0)) throw InvalidInput("fit options: eps_tilde must be positive");
  if (!(alpha_init_max > 0 && alpha_init_max <= 1) || !(beta_init_max > 0))
    throw InvalidInput("fit options: initial-draw ranges must be positive (alpha max <= 1)");
  if (!(logspace_floor > 0)) throw InvalidInput("fit options: log-space floor must be positive");
  solver.validate();
}

namespace {

constexpr std::uint64_t kDirectStream = 0xd17ec7;

Params params_from_vector(const Eigen::VectorXd& theta, Index k, Index m, bool canonical) {
  Params params = Params::zeros(k, m);
  params.alpha = Eigen::Map<const Eigen::MatrixXd>(theta.data(), k, m);
  params.beta = Eigen::Map<const Eigen::MatrixXd>(theta.data() + k * m, k, m);
  for (Index c = 0; c < k * m; ++c) {
    double& a = params.alpha.data()[c];
    double& b = params.beta.data()[c];
    a = std::min(std::max(a, 0.0), 1.0);
    b = std::max(b, 0.0);
    if (canonical && a * b == 0.0) a = b = 0.0;
  }
  return params;
}

}  // namespace

double objective_and_param_gradient(const Params& params, const Episode& episode, const BanditSpec& spec,
                                    Eigen::MatrixXd& grad_alpha, Eigen::MatrixXd& grad_beta) {
  const Eigen::MatrixXd values = value_trajectory(params, episode, spec);
  const Index n = episode.trials();
  const Index m = spec.arms;

  Eigen::MatrixXd residual(n, m);
  double total = 0.0;
  for (Index t = 0; t < n; ++t) {
    const Index chosen = episode.actions[static_cast<std::size_t>(t)];
    total += logsumexp(values.row(t)) - values(t, chosen);
    residual.row(t) = policy_probs(values.row(t)).transpose();
    residual(t, chosen) -= 1.0;
  }

  grad_alpha.setZero(spec.subsignals, m);
  grad_beta.setZero(spec.subsignals, m);
  for (Index i = 0; i < spec.subsignals; ++i) {
    const Eigen::RowVectorXd alpha = params.alpha.row(i);
    const Eigen::RowVectorXd beta = params.beta.row(i);
    const Eigen::RowVectorXd keep = (1.0 - alpha.array()).matrix();
    const Eigen::RowVectorXd gain = alpha.cwiseProduct(beta);
    const Eigen::MatrixXd& u = episode.signals[static_cast<std::size_t>(i)];
    Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(m);
    Eigen::RowVectorXd dz_alpha = z, dz_beta = z;
    for (Index t = 0; t < n; ++t) {
      dz_alpha = -z + keep.cwiseProduct(dz_alpha) + beta.cwiseProduct(u.row(t));
      dz_beta = keep.cwiseProduct(dz_beta) + alpha.cwiseProduct(u.row(t));
      z = keep.cwiseProduct(z) + gain.cwiseProduct(u.row(t));
      grad_alpha.row(i) += spec.weights(i) * residual.row(t).cwiseProduct(dz_alpha);
      grad_beta.row(i) += spec.weights(i) * residual.row(t).cwiseProduct(dz_beta);
    }
  }
  return total;
}

FitReport fit_sequential(const Episode& episode, const BanditSpec& spec, const FitOptions& options) {
  spec.validate();
  episode.validate(spec);
  const Index n = episode.trials();
  options.validate(n);
  const Index p = options.resolved_depth(n);
  const Index k = spec.subsignals;
  const Index m = spec.arms;

  FitReport report;
  report.method = options.method == FitMethod::logspace_recovery ? FitMethod::logspace_recovery
                                                                  : FitMethod::sequential;
  report.trials = n;
  report.depth = p;
  report.params = Params::zeros(k, m);

  const RelaxedProblem problem = RelaxedProblem::build(episode, spec, p);
  const RelaxedSolution solution = solve_relaxed(problem, options.solver);
  report.bound_kind = solution.full_depth() ? BoundKind::exact : BoundKind::truncated;
  report.lower_bound = solution.lower_bound;
  report.diagnostics.solver_iterations = solution.iterations;
  report.diagnostics.solver_converged = solution.converged;
  report.diagnostics.projected_gradient_norm = solution.projected_gradient_norm;
  report.diagnostics.starts_used = Eigen::MatrixXi::Zero(k, m);
  report.diagnostics.logspace_fallbacks = Eigen::MatrixXi::Zero(k, m);

  MultistartOptions multistart;
  multistart.restarts = options.restarts;
  multistart.tolerance = static_cast<double>(p) * options.eps_tilde;  // row share of m p eps_tilde
  multistart.alpha_init_max = options.alpha_init_max;
  multistart.beta_init_max = options.beta_init_max;

  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < m; ++j) {
      const Eigen::VectorXd row = solution.Gs[static_cast<std::size_t>(i)].row(j).transpose();
      Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
      RowFit fit;
      try {
        if (options.method == FitMethod::logspace_recovery) {
          try {
            fit = fit_row_logspace(row, options.logspace_floor);
          } catch (const DegenerateRow&) {
            report.diagnostics.logspace_fallbacks(i, j) = 1;
            fit = fit_row_multistart(row, multistart, rng);
          }
        } else {
          fit = fit_row_multistart(row, multistart, rng);
        }
      } catch (const OptimizerFailure& e) {
        throw FitError(std::string("parameter recovery failed: ") + e.what(), report);
      }
      report.params.alpha(i, j) = fit.alpha;
      report.params.beta(i, j) = fit.beta;
      report.diagnostics.starts_used(i, j) = fit.starts_used;
    }
  }

  report.upper_bound = objective_J(report.params, episode, spec);
  Certificate cert = certify(report.params, solution, report.upper_bound, options.eps_tilde);
  report.L_total = cert.L_total;
  report.gap = std::abs(report.upper_bound - solution.lower_bound);
  report.certificate = std::move(cert);
  return report;
}

FitReport fit_direct(const Episode& episode, const BanditSpec& spec, const FitOptions& options) {
  spec.validate();
  episode.validate(spec);
  const Index n = episode.trials();
  options.validate(n);
  const Index k = spec.subsignals;
  const Index m = spec.arms;
  const Index dim = 2 * k * m;

  FitReport report;
  report.method = FitMethod::direct;
  report.trials = n;
  report.depth = options.resolved_depth(n);

  Eigen::VectorXd lower = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd upper(dim);
  upper.head(k * m).setOnes();
  upper.tail(k * m).setConstant(std::numeric_limits<double>::infinity());

  const ValueAndGradient with_gradient = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const Params params = params_from_vector(theta, k, m, false);
    Eigen::MatrixXd ga, gb;
    const double value = objective_and_param_gradient(params, episode, spec, ga, gb);
    grad.resize(dim);
    grad.head(k * m) = ga.reshaped();
    grad.tail(k * m) = gb.reshaped();
    return value;
  };
  const ValueOnly value_only = [&](const Eigen::VectorXd& theta) {
    return objective_J(params_from_vector(theta, k, m, false), episode, spec);
  };

  Rng rng(derive_seed(options.seed, {kDirectStream}));
  Eigen::VectorXd best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < options.restarts; ++s) {
    Eigen::VectorXd start(dim);
    for (Index c = 0; c < k * m; ++c) start(c) = rng.uniform(0.0, options.alpha_init_max);
    for (Index c = 0; c < k * m; ++c) start(k * m + c) = rng.uniform(0.0, options.beta_init_max);

    BoxResult result = minimize_box_spg(with_gradient, start, lower, upper);
    if (!result.converged || !std::isfinite(result.value)) {
      const Eigen::VectorXd restart = result.x.allFinite() ? result.x : start;
      BoxResult fallback = minimize_box_nelder_mead(value_only, restart, lower, upper);
      if (!std::isfinite(result.value) || fallback.value < result.value) {
        fallback.iterations += result.iterations;
        result = fallback;
      }
    }
    report.diagnostics.restarts.push_back({s, result.value, result.iterations, result.converged});
    if (std::isfinite(result.value) && result.value < best_value) {
      best_value = result.value;
      best_theta = result.x;
    }
  }
  if (!std::isfinite(best_value)) throw FitError("direct fit: every restart failed", report);

  report.params = params_from_vector(best_theta, k, m, true);
  report.upper_bound = objective_J(report.params, episode, spec);

  if (options.direct_with_bound) {
    const LowerBound bound = lower_bound_only(episode, spec, options);
    report.bound_kind = bound.truncated ? BoundKind::truncated : BoundKind::exact;
    report.lower_bound = bound.value;
    report.gap = std::abs(report.upper_bound - bound.value);
    report.diagnostics.solver_iterations = bound.solution.iterations;
    report.diagnostics.solver_converged = bound.solution.converged;
    report.diagnostics.projected_gradient_norm = bound.solution.projected_gradient_norm;
  }
  return report;
}

FitReport fit(const Episode& episode, const BanditSpec& spec, const FitOptions& options) {
  return options.method == FitMethod::direct ? fit_direct(episode, spec, options)
                                             : fit_sequential(episode, spec, options);
}

LowerBound lower_bound_only(const Episode& episode, const BanditSpec& spec, const FitOptions& options) {
  spec.validate();
  episode.validate(spec);
  options.validate(episode.trials());
  const Index p = options.resolved_depth(episode.trials());
  const RelaxedProblem problem = RelaxedProblem::build(episode, spec, p);
  LowerBound bound;
  bound.solution = solve_relaxed(problem, options.solver);
  bound.value = bound.solution.lower_bound;
  bound.truncated = !bound.solution.full_depth();
  return bound;
}

}  // namespace imab
