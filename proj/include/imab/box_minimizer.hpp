#ifndef IMAB_BOX_MINIMIZER_HPP
#define IMAB_BOX_MINIMIZER_HPP

// Small bound-constrained local minimizers shared by parameter recovery and
// the direct baseline, so both fitting routes use the same local method.

#include <functional>

#include "imab/types.hpp"

namespace imab {

struct BoxOptions {
  int max_iters = 2000;
  double grad_tol = 1e-11;  // infinity norm of the projected gradient step
  double step_tol = 1e-15;  // relative step size at which progress is declared stalled
  int memory = 10;          // nonmonotone line-search window
};

struct BoxResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// f(x) with the gradient written into the second argument.
using ValueAndGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using ValueOnly = std::function<double(const Eigen::VectorXd&)>;

/// Clamp onto [lower, upper]; upper entries may be +infinity.
Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper);

/// Spectral projected gradient: Barzilai-Borwein steps, nonmonotone Armijo
/// backtracking along the projected direction. Returns the best point seen.
BoxResult minimize_box_spg(const ValueAndGradient& fn, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const BoxOptions& options = {});

/// Nelder-Mead with trial points reflected back into the box.
BoxResult minimize_box_nelder_mead(const ValueOnly& fn, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   const BoxOptions& options = {});

}  // namespace imab

#endif  // IMAB_BOX_MINIMIZER_HPP
