#include <doctest.h>

#include <cmath>
#include <limits>

#include "imab/box_minimizer.hpp"
#include "imab/lag.hpp"
#include "imab/model.hpp"
#include "imab/recovery.hpp"
#include "test_support.hpp"

using namespace imab;

TEST_CASE("local_fit_row examples") {
  const RowFit exact = local_fit_row(Eigen::Vector3d(1, 0.5, 0.25), 0.4, 2.5);
  CHECK(exact.alpha == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(exact.beta == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(exact.residual <= 1e-10);

  const RowFit zero = local_fit_row(Eigen::Vector4d::Zero(), 0.3, 1.0);
  CHECK(zero.alpha == 0.0);
  CHECK(zero.beta == 0.0);
  CHECK(zero.residual == 0.0);

  const RowFit spike = local_fit_row(Eigen::Vector4d(5, 0, 0, 0), 0.7, 3.0);
  CHECK(spike.alpha == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(spike.beta == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(spike.residual <= 1e-10);

  CHECK_THROWS_AS(local_fit_row(Eigen::Vector2d(1, 0), 1.5, 1.0), InvalidInput);
  CHECK_THROWS_AS(local_fit_row(Eigen::Vector2d(1, std::nan("")), 0.5, 1.0), InvalidInput);
}

TEST_CASE("fit_row_multistart exits early on representable rows") {
  Rng truth(41);
  int early = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = truth.uniform(0.05, 0.95), b = truth.uniform(0.2, 5.0);
    const Eigen::VectorXd g = f_tilde(a, b, 30);
    Rng rng(100 + trial);
    MultistartOptions options;
    options.tolerance = 30 * 1e-5;
    const RowFit fit = fit_row_multistart(g, options, rng);
    CHECK(fit.residual <= options.tolerance);
    CHECK(fit.starts_used >= 1);
    CHECK(fit.starts_used <= 10);
    if (fit.starts_used < 10) ++early;
  }
  CHECK(early > 0);
}

TEST_CASE("fit_row_multistart is deterministic and keeps the box") {
  Rng src(42);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd g = src.uniform(0, 3) * Eigen::VectorXd::Random(12).cwiseAbs();
    std::sort(g.data(), g.data() + g.size(), std::greater<>());
    MultistartOptions options;
    options.tolerance = 1e-12;
    Rng r1(7), r2(7);
    const RowFit a = fit_row_multistart(g, options, r1);
    const RowFit b = fit_row_multistart(g, options, r2);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    CHECK(a.alpha >= 0.0);
    CHECK(a.alpha <= 1.0);
    CHECK(a.beta >= 0.0);
    CHECK(a.residual == doctest::Approx(row_residual(g, a.alpha, a.beta)));
  }
}

TEST_CASE("rows separate: per-row fits match a joint local solve") {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Index rows = 3, p = 8;
    const Eigen::MatrixXd G = testing::random_feasible_G(rng, rows, p, 3.0);
    Eigen::VectorXd start(2 * rows), lower = Eigen::VectorXd::Zero(2 * rows), upper(2 * rows);
    for (Index j = 0; j < rows; ++j) {
      start(2 * j) = rng.uniform();
      start(2 * j + 1) = rng.uniform(0, 5);
      upper(2 * j) = 1.0;
      upper(2 * j + 1) = std::numeric_limits<double>::infinity();
    }
    // Joint objective by central differences of the closed-form residual.
    const ValueAndGradient joint = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
      double total = 0.0;
      grad.resize(v.size());
      for (Index j = 0; j < rows; ++j) {
        const Eigen::VectorXd g = G.row(j).transpose();
        const double a = std::clamp(v(2 * j), 0.0, 1.0), b = std::max(v(2 * j + 1), 0.0);
        total += row_residual(g, a, b);
        const double h = 1e-7;
        grad(2 * j) = (row_residual(g, std::min(a + h, 1.0), b) - row_residual(g, std::max(a - h, 0.0), b)) /
                      (std::min(a + h, 1.0) - std::max(a - h, 0.0));
        grad(2 * j + 1) = (row_residual(g, a, b + h) - row_residual(g, a, std::max(b - h, 0.0))) / (b + h - std::max(b - h, 0.0));
      }
      return total;
    };
    BoxOptions options;
    options.max_iters = 20000;
    const BoxResult together = minimize_box_spg(joint, start, lower, upper, options);
    // Row minima by multistart; a joint local solve can only match or exceed their sum.
    double separate = 0.0;
    MultistartOptions multistart;
    multistart.restarts = 20;
    multistart.tolerance = 1e-14;
    for (Index j = 0; j < rows; ++j) {
      Rng row_rng(derive_seed(5, {static_cast<std::uint64_t>(j)}));
      separate += fit_row_multistart(G.row(j).transpose(), multistart, row_rng).residual;
    }
    CHECK(separate <= together.value + 1e-6);
  }
}

TEST_CASE("fit_row_logspace") {
  const RowFit half = fit_row_logspace(Eigen::Vector3d(1, 0.5, 0.25), 1e-12);
  CHECK(half.alpha == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half.beta == doctest::Approx(2.0).epsilon(1e-12));

  // g_j = c e^{-(j+1)}: slope -1, alpha = 1 - 1/e, intercept log(c) - 1.
  const double c = 0.7;
  Eigen::VectorXd g(5);
  for (Index j = 0; j < 5; ++j) g(j) = c * std::exp(-static_cast<double>(j + 1));
  const RowFit e = fit_row_logspace(g, 1e-12);
  CHECK(e.alpha == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(e.alpha * e.beta == doctest::Approx(c * std::exp(-1.0)).epsilon(1e-12));

  const RowFit floored = fit_row_logspace(Eigen::Vector4d(1, 0.5, 0.25, 0), 1e-12);
  CHECK(std::isfinite(floored.alpha));
  CHECK(std::isfinite(floored.beta));
  CHECK(floored.alpha > 0.9);  // the floored tail drags the slope steeply down

  CHECK_THROWS_AS(fit_row_logspace(Eigen::VectorXd::Constant(1, 2.0), 1e-12), DegenerateRow);
  CHECK_THROWS_AS(fit_row_logspace(Eigen::Vector3d(1, 1, 1), 1e-12), DegenerateRow);
  const RowFit zero = fit_row_logspace(Eigen::Vector3d(0, 0, 0), 1e-12);
  CHECK(zero.alpha == 0.0);
  CHECK(zero.beta == 0.0);
  CHECK_THROWS_AS(fit_row_logspace(Eigen::Vector2d(1, -1), 1e-12), InvalidInput);
}

namespace {

RelaxedSolution solution_from(const Params& params, Index n, double lower_bound) {
  RelaxedSolution sol;
  for (Index i = 0; i < params.subsignals(); ++i) sol.Gs.push_back(f_map(params, i, n));
  sol.trials = n;
  sol.depth = n;
  sol.lower_bound = lower_bound;
  return sol;
}

}  // namespace

TEST_CASE("certify") {
  Params p = Params::zeros(1, 2);
  p.alpha << 0.5, 0.25;
  p.beta << 2.0, 4.0;
  const double eps = 1e-5;
  RelaxedSolution sol = solution_from(p, 6, 3.0);
  Certificate cert = certify(p, sol, 3.0, eps);
  CHECK(cert.global_optimal);
  CHECK(cert.full_depth);
  CHECK(cert.L_total == 0.0);
  CHECK(cert.epsilon == doctest::Approx(2 * 6 * eps));
  CHECK(cert.gap == 0.0);
  REQUIRE(cert.decay_ratios.size() == 1);
  CHECK(cert.decay_ratios[0](0, 2) == doctest::Approx(0.5));
  CHECK(cert.decay_ratios[0](1, 4) == doctest::Approx(0.75));

  sol.Gs[0](1, 3) += 10 * eps;
  cert = certify(p, sol, 3.0, eps);
  CHECK_FALSE(cert.global_optimal);
  CHECK(cert.max_abs_deviation == doctest::Approx(10 * eps));

  RelaxedSolution truncated = solution_from(p, 6, 3.0);
  truncated.trials = 20;
  CHECK_FALSE(certify(p, truncated, 3.0, eps).global_optimal);

  Params zero = Params::zeros(1, 2);
  cert = certify(zero, solution_from(zero, 4, 1.0), 1.0, eps);
  CHECK(std::isnan(cert.decay_ratios[0](0, 0)));
}

TEST_CASE("certificate gap bound holds for entrywise perturbations") {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.next() % 25);
    const Index m = 2 + static_cast<Index>(rng.next() % 3);
    const Index k = 1 + static_cast<Index>(rng.next() % 2);
    BanditSpec spec = BanditSpec::uniform(m, k);
    for (Index i = 0; i < k; ++i) spec.weights(i) = rng.uniform(-2, 2);
    const RelaxedProblem problem = RelaxedProblem::build(testing::random_episode(rng, n, m, k, true), spec, n);
    const double eps = rng.uniform(1e-6, 1e-2);
    std::vector<GMatrix> G, F;
    for (Index i = 0; i < k; ++i) {
      G.push_back(testing::random_feasible_G(rng, m, n));
      GMatrix noise(m, n);
      for (Index c = 0; c < noise.size(); ++c) noise.data()[c] = rng.uniform(-eps, eps);
      F.push_back(G.back() + noise);
    }
    const double diff = std::abs(relaxed_objective(F, problem) - relaxed_objective(G, problem));
    CHECK(diff <= certificate_gap_bound(problem, eps));
  }
}
