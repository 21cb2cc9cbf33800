#include <doctest.h>

#include <cmath>
#include <limits>

#include "imab/box_minimizer.hpp"

using namespace imab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Rosenbrock, minimum at (1, 1).
double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* g) {
  const double a = 1 - x(0), b = x(1) - x(0) * x(0);
  if (g) {
    g->resize(2);
    (*g)(0) = -2 * a - 400 * x(0) * b;
    (*g)(1) = 200 * b;
  }
  return a * a + 100 * b * b;
}

}  // namespace

TEST_CASE("clamp_to_box") {
  const Eigen::Vector2d lo(0, 0), hi(1, kInf);
  CHECK(clamp_to_box(Eigen::Vector2d(-1, 5), lo, hi) == Eigen::Vector2d(0, 5));
  CHECK(clamp_to_box(Eigen::Vector2d(2, -5), lo, hi) == Eigen::Vector2d(1, 0));
}

TEST_CASE("SPG reaches an interior minimum") {
  const ValueAndGradient fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return rosenbrock(x, &g); };
  BoxOptions options;
  options.max_iters = 20000;
  const BoxResult r = minimize_box_spg(fn, Eigen::Vector2d(-1.2, 1), Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5), options);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("SPG stops on an active bound") {
  // (x - 2)^2 + (y + 1)^2 on [0, 1] x [0, inf): solution (1, 0).
  const ValueAndGradient fn = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = Eigen::Vector2d(2 * (x(0) - 2), 2 * (x(1) + 1));
    return (x(0) - 2) * (x(0) - 2) + (x(1) + 1) * (x(1) + 1);
  };
  const BoxResult r = minimize_box_spg(fn, Eigen::Vector2d(0.3, 4), Eigen::Vector2d(0, 0), Eigen::Vector2d(1, kInf));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(0.0));
  CHECK(r.value == doctest::Approx(2.0));
}

TEST_CASE("Nelder-Mead stays in the box and finds the minimum") {
  int outside = 0;
  const Eigen::Vector2d lo(0, 0), hi(1, kInf);
  const ValueOnly fn = [&](const Eigen::VectorXd& x) {
    if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any()) ++outside;
    return (x(0) - 2) * (x(0) - 2) + (x(1) - 3) * (x(1) - 3);
  };
  BoxOptions options;
  options.max_iters = 5000;
  const BoxResult r = minimize_box_nelder_mead(fn, Eigen::Vector2d(0.5, 0.5), lo, hi, options);
  CHECK(outside == 0);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(3.0).epsilon(1e-6));
}
