#include "imab/box_minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace imab {

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper) {
  Eigen::VectorXd out(x.size());
  for (Index i = 0; i < x.size(); ++i) out(i) = std::min(std::max(x(i), lower(i)), upper(i));
  return out;
}

namespace {

void check_box(const Eigen::VectorXd& x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (x0.size() != lower.size() || x0.size() != upper.size())
    throw InvalidInput("box minimizer: bounds must match the starting point");
  if (!x0.allFinite()) throw InvalidInput("box minimizer: starting point must be finite");
  for (Index i = 0; i < x0.size(); ++i)
    if (!(lower(i) <= upper(i))) throw InvalidInput("box minimizer: empty box");
}

constexpr double kMinSpectralStep = 1e-12;
constexpr double kMaxSpectralStep = 1e12;

}  // namespace

BoxResult minimize_box_spg(const ValueAndGradient& fn, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const BoxOptions& options) {
  check_box(x0, lower, upper);
  Eigen::VectorXd x = clamp_to_box(x0, lower, upper);
  Eigen::VectorXd g(x.size());
  double f = fn(x, g);

  BoxResult best{x, f, 0, false};
  if (!std::isfinite(f) || !g.allFinite()) return best;

  std::deque<double> recent{f};
  const Eigen::VectorXd first_step = clamp_to_box(x - g, lower, upper) - x;
  double spectral = 1.0 / std::max(first_step.lpNorm<Eigen::Infinity>(), 1e-8);
  spectral = std::clamp(spectral, kMinSpectralStep, kMaxSpectralStep);

  Eigen::VectorXd x_new(x.size()), g_new(x.size());
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    best.iterations = iter;
    const Eigen::VectorXd pg = clamp_to_box(x - g, lower, upper) - x;
    if (pg.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      best.converged = true;
      break;
    }
    const Eigen::VectorXd direction = clamp_to_box(x - spectral * g, lower, upper) - x;
    const double slope = g.dot(direction);
    const double reference = *std::max_element(recent.begin(), recent.end());

    double t = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    while (t > 1e-20) {
      x_new = clamp_to_box(x + t * direction, lower, upper);
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= reference + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No acceptable step along a descent direction: stationary to working precision.
      best.converged = true;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yk = g_new - g;
    const double sy = s.dot(yk);
    spectral = sy > 0 ? std::clamp(s.squaredNorm() / sy, kMinSpectralStep, kMaxSpectralStep)
                      : kMaxSpectralStep;
    const double step_size = s.lpNorm<Eigen::Infinity>();
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (f < best.value) {
      best.x = x;
      best.value = f;
    }
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > options.memory) recent.pop_front();
    if (step_size <= options.step_tol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      best.converged = true;
      break;
    }
  }
  return best;
}

BoxResult minimize_box_nelder_mead(const ValueOnly& fn, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   const BoxOptions& options) {
  check_box(x0, lower, upper);
  const Index dim = x0.size();

  auto reflect_into_box = [&](Eigen::VectorXd v) {
    for (Index i = 0; i < dim; ++i) {
      if (v(i) < lower(i)) v(i) = lower(i) + (lower(i) - v(i));
      if (v(i) > upper(i)) v(i) = upper(i) - (v(i) - upper(i));
    }
    return clamp_to_box(v, lower, upper);
  };
  auto evaluate = [&](const Eigen::VectorXd& v) {
    const double value = fn(v);
    return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex;
  std::vector<double> values;
  simplex.push_back(clamp_to_box(x0, lower, upper));
  for (Index i = 0; i < dim; ++i) {
    Eigen::VectorXd vertex = simplex.front();
    const double span = std::isfinite(upper(i) - lower(i)) ? upper(i) - lower(i) : 1.0;
    const double delta = 0.1 * std::max(span, std::abs(vertex(i)));
    vertex(i) += (vertex(i) + delta <= upper(i)) ? delta : -delta;
    simplex.push_back(reflect_into_box(vertex));
  }
  for (const auto& v : simplex) values.push_back(evaluate(v));

  std::vector<std::size_t> order(simplex.size());
  BoxResult result;
  int iter = 0;
  for (; iter < options.max_iters; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t lo = order.front();
    const std::size_t hi = order.back();
    const std::size_t second = order[order.size() - 2];

    double size = 0.0;
    for (const auto& v : simplex) size = std::max(size, (v - simplex[lo]).lpNorm<Eigen::Infinity>());
    if (std::abs(values[hi] - values[lo]) <= 1e-15 * (1.0 + std::abs(values[lo])) && size <= 1e-12) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < simplex.size(); ++i)
      if (i != hi) centroid += simplex[i];
    centroid /= static_cast<double>(dim);

    const Eigen::VectorXd reflected = reflect_into_box(centroid + (centroid - simplex[hi]));
    const double f_reflected = evaluate(reflected);
    if (f_reflected < values[lo]) {
      const Eigen::VectorXd expanded = reflect_into_box(centroid + 2.0 * (centroid - simplex[hi]));
      const double f_expanded = evaluate(expanded);
      if (f_expanded < f_reflected) {
        simplex[hi] = expanded;
        values[hi] = f_expanded;
      } else {
        simplex[hi] = reflected;
        values[hi] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[hi] = reflected;
      values[hi] = f_reflected;
      continue;
    }
    const Eigen::VectorXd contracted = reflect_into_box(centroid + 0.5 * (simplex[hi] - centroid));
    const double f_contracted = evaluate(contracted);
    if (f_contracted < values[hi]) {
      simplex[hi] = contracted;
      values[hi] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == lo) continue;
      simplex[i] = reflect_into_box(simplex[lo] + 0.5 * (simplex[i] - simplex[lo]));
      values[i] = evaluate(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = iter;
  return result;
}

}  // namespace imab
