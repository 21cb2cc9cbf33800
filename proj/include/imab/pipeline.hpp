#ifndef IMAB_PIPELINE_HPP
#define IMAB_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "imab/recovery.hpp"
#include "imab/relax.hpp"
#include "imab/types.hpp"

namespace imab {

enum class FitMethod { sequential, direct, logspace_recovery };

std::string to_string(FitMethod method);
FitMethod parse_fit_method(const std::string& name);

struct FitOptions {
  std::optional<Index> depth;  // lag depth p, defaults to the trial count
  int restarts = 10;
  double eps_tilde = 1e-5;
  std::uint64_t seed = 0;
  SolverOptions solver;
  FitMethod method = FitMethod::sequential;
  double alpha_init_max = 1.0;
  double beta_init_max = 5.0;
  double logspace_floor = 1e-12;
  bool direct_with_bound = false;  // also solve the relaxation for a direct fit

  Index resolved_depth(Index trials) const { return depth.value_or(trials); }
  void validate(Index trials) const;
};

enum class BoundKind { exact, truncated, absent };

std::string to_string(BoundKind kind);

struct RestartRecord {
  int index = 0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct FitDiagnostics {
  int solver_iterations = 0;
  bool solver_converged = true;
  double projected_gradient_norm = 0.0;
  Eigen::MatrixXi starts_used;  // k x m, restarts consumed per row
  Eigen::MatrixXi logspace_fallbacks;  // k x m, 1 where the log-space fit fell back to multistart
  std::vector<RestartRecord> restarts;  // direct method only
};

struct FitReport {
  FitMethod method = FitMethod::sequential;
  Index trials = 0;
  Index depth = 0;
  Params params;
  BoundKind bound_kind = BoundKind::absent;
  std::optional<double> lower_bound;
  double upper_bound = 0.0;
  std::optional<double> gap;
  std::optional<double> L_total;
  std::optional<Certificate> certificate;
  FitDiagnostics diagnostics;
};

/// Failure inside a fit; carries whatever of the report was assembled.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, FitReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const FitReport& partial() const { return partial_; }

 private:
  FitReport partial_;
};

/// Relax, solve for G*, recover (alpha, beta) row by row, evaluate J at the
/// recovered parameters and certify (full depth only).
FitReport fit_sequential(const Episode& episode, const BanditSpec& spec, const FitOptions& options);

/// Multistart bounded local minimization of the objective over (alpha, beta).
FitReport fit_direct(const Episode& episode, const BanditSpec& spec, const FitOptions& options);

/// Dispatches on options.method.
FitReport fit(const Episode& episode, const BanditSpec& spec, const FitOptions& options);

struct LowerBound {
  double value = 0.0;
  bool truncated = false;
  RelaxedSolution solution;
};

LowerBound lower_bound_only(const Episode& episode, const BanditSpec& spec, const FitOptions& options);

/// Objective and gradient with respect to (alpha, beta), each k x m.
double objective_and_param_gradient(const Params& params, const Episode& episode, const BanditSpec& spec,
                                    Eigen::MatrixXd& grad_alpha, Eigen::MatrixXd& grad_beta);

}  // namespace imab

#endif  // IMAB_PIPELINE_HPP
