#ifndef IMAB_SIM_HPP
#define IMAB_SIM_HPP

// Forgetting Q-learning agents in static Bernoulli bandits, and the batch
// driver that simulates episodes and fits them with each requested method.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imab/pipeline.hpp"
#include "imab/rng.hpp"
#include "imab/types.hpp"

namespace imab {

enum class SignalScheme { reward_only, reward_and_action };

std::string to_string(SignalScheme scheme);
SignalScheme parse_signal_scheme(const std::string& name);

struct EnvSpec {
  Index arms = 2;
  Eigen::VectorXd reward_probs = Eigen::VectorXd::Constant(2, 0.5);
  SignalScheme scheme = SignalScheme::reward_only;

  Index subsignals() const { return scheme == SignalScheme::reward_only ? 1 : 2; }
  BanditSpec bandit_spec() const { return BanditSpec::uniform(arms, subsignals()); }
  void validate() const;
};

struct SimulatedEpisode {
  Episode episode;
  Eigen::MatrixXd choice_probs;  // n x m, distribution each action was drawn from
};

/// Row t of every signal matrix is what the agent observes before choosing
/// a(t): the outcome of a(t-1), and zero at t = 0. The reward subsignal is 1 at
/// the previous action when that action paid out; the action subsignal is
/// 1 at the previous action regardless.
SimulatedEpisode simulate_episode(const EnvSpec& env, const Params& params, Index trials, Rng& rng);

enum class BenchMethod { sequential, truncated, direct, logspace };

std::string to_string(BenchMethod method);
BenchMethod parse_bench_method(const std::string& name);

struct ParamRange {
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  double beta_lo = 0.0;
  double beta_hi = 5.0;
};

struct BenchConfig {
  int episodes = 100;
  Index trials = 200;
  Index arms = 2;
  SignalScheme scheme = SignalScheme::reward_only;
  std::vector<ParamRange> ranges{ParamRange{}};  // one per subsignal
  bool per_arm_draws = false;  // false: one (alpha, beta) per subsignal shared by all arms
  std::optional<Eigen::VectorXd> reward_probs;  // drawn U[0,1] per arm and episode when unset
  std::vector<BenchMethod> methods{BenchMethod::sequential};
  FitOptions fit;  // depth is ignored; truncated_depth applies to the truncated method
  Index truncated_depth = 5;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;

  /// Defaults for the 10-arm reward+action benchmark.
  static BenchConfig ten_arm();
};

struct MethodRecord {
  BenchMethod method = BenchMethod::sequential;
  std::optional<FitReport> report;
  std::string error;
  Eigen::MatrixXd alpha_error;  // |estimate - truth|, k x m
  Eigen::MatrixXd beta_error;
};

struct EpisodeRecord {
  int id = 0;
  Params truth;
  Eigen::VectorXd reward_probs;
  Episode episode;
  double true_log_likelihood = 0.0;
  std::vector<MethodRecord> methods;
};

struct MethodAggregate {
  BenchMethod method = BenchMethod::sequential;
  int succeeded = 0;
  int failed = 0;
  int certified = 0;
  int lower_bound_holds = 0;  // episodes with J_lb <= J(truth) + 1e-6 (full depth only)
  double median_upper_bound = 0.0;
  double median_gap = 0.0;
  double max_certified_gap = 0.0;
  std::vector<int> gap_histogram;  // unit-width bins [0,1), [1,2), ..., last bin open
};

struct BenchSummary {
  std::vector<EpisodeRecord> records;
  std::vector<MethodAggregate> aggregates;

  /// Fraction of (episode, method) fits that completed.
  double success_rate() const;
};

inline constexpr int kGapHistogramBins = 11;

/// Simulated ground truth for one benchmark episode (params, environment, data).
EpisodeRecord simulate_bench_episode(const BenchConfig& config, int id);

/// Options a benchmark method fits episode `id` with (seed derived per episode).
FitOptions bench_fit_options(const BenchConfig& config, int id, BenchMethod method);

BenchSummary run_benchmark(const BenchConfig& config);

double median(std::vector<double> values);

}  // namespace imab

#endif  // IMAB_SIM_HPP
