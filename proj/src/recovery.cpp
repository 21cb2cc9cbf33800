#include "imab/recovery.hpp"

#include <cmath>
#include <limits>

#include "imab/lag.hpp"

namespace imab {

namespace {

void check_row(const Eigen::Ref<const Eigen::VectorXd>& g_row) {
  if (g_row.size() < 1) throw InvalidInput("row fit: empty row");
  if (!g_row.allFinite()) throw InvalidInput("row fit: row entries must be finite");
}

// Residual and its gradient in (alpha, beta); powers of (1 - alpha) by running product.
double residual_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& g, double alpha, double beta,
                             Eigen::Vector2d* grad) {
  const double decay = 1.0 - alpha;
  double power = 1.0;       // decay^j
  double prev_power = 0.0;  // decay^(j-1), zero for j = 0
  double total = 0.0, d_alpha = 0.0, d_beta = 0.0;
  for (Index j = 0; j < g.size(); ++j) {
    const double value = power * alpha * beta;
    const double r = value - g(j);
    total += r * r;
    d_alpha += r * (beta * power - static_cast<double>(j) * alpha * beta * prev_power);
    d_beta += r * alpha * power;
    prev_power = power;
    power *= decay;
  }
  if (grad) *grad = {2.0 * d_alpha, 2.0 * d_beta};
  return total;
}

RowFit finish(const Eigen::Ref<const Eigen::VectorXd>& g_row, double alpha, double beta) {
  alpha = std::min(std::max(alpha, 0.0), 1.0);
  beta = std::max(beta, 0.0);
  if (alpha * beta == 0.0) alpha = beta = 0.0;
  return {alpha, beta, row_residual(g_row, alpha, beta), 1};
}

}  // namespace

double row_residual(const Eigen::Ref<const Eigen::VectorXd>& g_row, double alpha, double beta) {
  return (f_tilde(alpha, beta, g_row.size()) - g_row).squaredNorm();
}

RowFit local_fit_row(const Eigen::Ref<const Eigen::VectorXd>& g_row, double alpha0, double beta0,
                     const BoxOptions& options) {
  check_row(g_row);
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0) || !(beta0 >= 0.0) || !std::isfinite(beta0))
    throw InvalidInput("local_fit_row: initial point outside [0,1] x [0,inf)");
  if ((g_row.array() == 0.0).all()) return {0.0, 0.0, 0.0, 1};

  const Eigen::Vector2d lower(0.0, 0.0);
  const Eigen::Vector2d upper(1.0, std::numeric_limits<double>::infinity());
  const Eigen::Vector2d start(alpha0, beta0);

  const ValueAndGradient with_gradient = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
    Eigen::Vector2d g2;
    const double value = residual_and_gradient(g_row, v(0), v(1), &g2);
    grad = g2;
    return value;
  };
  BoxResult result = minimize_box_spg(with_gradient, start, lower, upper, options);

  if (!result.converged || !std::isfinite(result.value)) {
    const ValueOnly value_only = [&](const Eigen::VectorXd& v) {
      return residual_and_gradient(g_row, v(0), v(1), nullptr);
    };
    const Eigen::VectorXd restart = result.x.allFinite() ? result.x : Eigen::VectorXd(start);
    BoxResult fallback = minimize_box_nelder_mead(value_only, restart, lower, upper, options);
    if (!std::isfinite(result.value) || fallback.value < result.value) result = fallback;
  }
  if (!std::isfinite(result.value) || !result.x.allFinite()) {
    RowFit best{alpha0, beta0, row_residual(g_row, alpha0, beta0), 1};
    throw OptimizerFailure("local_fit_row: no finite local solution", best);
  }
  return finish(g_row, result.x(0), result.x(1));
}

RowFit fit_row_multistart(const Eigen::Ref<const Eigen::VectorXd>& g_row,
                          const MultistartOptions& options, Rng& rng) {
  check_row(g_row);
  if (options.restarts < 1) throw InvalidInput("fit_row_multistart: need at least one restart");
  if (!(options.tolerance > 0)) throw InvalidInput("fit_row_multistart: tolerance must be positive");
  if (!(options.alpha_init_max > 0 && options.alpha_init_max <= 1) || !(options.beta_init_max > 0))
    throw InvalidInput("fit_row_multistart: invalid initial-draw ranges");

  RowFit best;
  bool have_best = false;
  int used = 0;
  for (int s = 0; s < options.restarts; ++s) {
    const double alpha0 = rng.uniform(0.0, options.alpha_init_max);
    const double beta0 = rng.uniform(0.0, options.beta_init_max);
    ++used;
    try {
      const RowFit fit = local_fit_row(g_row, alpha0, beta0);
      if (!have_best || fit.residual < best.residual) {
        best = fit;
        have_best = true;
      }
    } catch (const OptimizerFailure&) {
      continue;
    }
    if (best.residual <= options.tolerance) break;
  }
  if (!have_best) throw OptimizerFailure("fit_row_multistart: every restart failed", RowFit{});
  best.starts_used = used;
  return best;
}

RowFit fit_row_logspace(const Eigen::Ref<const Eigen::VectorXd>& g_row, double floor) {
  check_row(g_row);
  if (!(floor > 0)) throw InvalidInput("fit_row_logspace: floor must be positive");
  if ((g_row.array() < 0.0).any()) throw InvalidInput("fit_row_logspace: row entries must be nonnegative");
  if ((g_row.array() == 0.0).all()) return {0.0, 0.0, 0.0, 1};
  const Index p = g_row.size();
  if (p < 2) throw DegenerateRow("fit_row_logspace: at least two lags are needed to identify alpha");

  Eigen::MatrixXd design(p, 2);
  Eigen::VectorXd target(p);
  for (Index j = 0; j < p; ++j) {
    design(j, 0) = static_cast<double>(j);
    design(j, 1) = 1.0;
    target(j) = std::log(std::max(g_row(j), floor));
  }
  const Eigen::Vector2d coef = (design.transpose() * design).ldlt().solve(design.transpose() * target);
  // slope = log(1 - alpha); a flat or rising row leaves alpha <= 0.
  const double alpha = -std::expm1(coef(0));
  if (!(alpha > 0.0)) throw DegenerateRow("fit_row_logspace: recovered alpha is not positive");
  const double beta = std::exp(coef(1)) / alpha;
  if (!std::isfinite(beta)) throw DegenerateRow("fit_row_logspace: recovered beta is not finite");
  return {alpha, beta, row_residual(g_row, alpha, beta), 1};
}

Certificate certify(const Params& params, const RelaxedSolution& solution, double upper_bound,
                    double eps_tilde) {
  if (!params.feasible()) throw InvalidInput("certify: params violate the box constraints");
  if (static_cast<Index>(solution.Gs.size()) != params.subsignals())
    throw InvalidInput("certify: one relaxed kernel matrix per subsignal is required");
  if (!(eps_tilde > 0)) throw InvalidInput("certify: eps_tilde must be positive");

  Certificate cert;
  cert.full_depth = solution.full_depth();
  cert.eps_tilde = eps_tilde;
  Index entries = 0;
  for (Index i = 0; i < params.subsignals(); ++i) {
    const GMatrix& G = solution.Gs[static_cast<std::size_t>(i)];
    if (G.rows() != params.arms()) throw InvalidInput("certify: kernel rows must equal arm count");
    const Eigen::MatrixXd deviation = f_map(params, i, G.cols()) - G;
    cert.max_abs_deviation = std::max(cert.max_abs_deviation, deviation.cwiseAbs().maxCoeff());
    cert.L_total += deviation.squaredNorm();
    entries += G.size();

    Eigen::MatrixXd ratios(G.rows(), std::max<Index>(G.cols() - 1, 0));
    for (Index j = 0; j < G.rows(); ++j)
      for (Index r = 0; r + 1 < G.cols(); ++r)
        ratios(j, r) = G(j, r) != 0.0 ? G(j, r + 1) / G(j, r) : std::numeric_limits<double>::quiet_NaN();
    cert.decay_ratios.push_back(std::move(ratios));
  }
  cert.epsilon = static_cast<double>(entries) * eps_tilde;
  cert.gap = std::abs(upper_bound - solution.lower_bound);
  cert.global_optimal =
      cert.full_depth && cert.max_abs_deviation <= eps_tilde && cert.L_total <= cert.epsilon;
  return cert;
}

double certificate_gap_bound(const RelaxedProblem& problem, double eps_tilde) {
  double total = 0.0;
  for (Index i = 0; i < problem.subsignals(); ++i) {
    const double w = std::abs(problem.weights(i));
    for (const auto& lagged : problem.stacks[static_cast<std::size_t>(i)].mats)
      total += w * lagged.cwiseAbs().sum();
  }
  return 2.0 * eps_tilde * total;
}

}  // namespace imab
