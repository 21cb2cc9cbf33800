#include "imab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "imab/model.hpp"

namespace imab {

std::string to_string(SignalScheme scheme) {
  return scheme == SignalScheme::reward_only ? "reward" : "reward+action";
}

SignalScheme parse_signal_scheme(const std::string& name) {
  if (name == "reward" || name == "reward-only") return SignalScheme::reward_only;
  if (name == "reward+action") return SignalScheme::reward_and_action;
  throw InvalidInput("unknown signal scheme '" + name + "'");
}

void EnvSpec::validate() const {
  if (arms < 2) throw InvalidInput("environment: at least two arms are required");
  if (reward_probs.size() != arms) throw InvalidInput("environment: one reward probability per arm");
  for (Index j = 0; j < arms; ++j)
    if (!(reward_probs(j) >= 0.0 && reward_probs(j) <= 1.0))
      throw InvalidInput("environment: reward probabilities must lie in [0, 1]");
}

SimulatedEpisode simulate_episode(const EnvSpec& env, const Params& params, Index trials, Rng& rng) {
  env.validate();
  const BanditSpec spec = env.bandit_spec();
  if (params.subsignals() != spec.subsignals || params.arms() != spec.arms)
    throw InvalidInput("simulate_episode: params do not match the signal scheme (" + to_string(env.scheme) + ")");
  params.validate(spec);
  if (trials < 1) throw InvalidInput("simulate_episode: at least one trial is required");

  const Index k = spec.subsignals;
  const Index m = spec.arms;
  SimulatedEpisode out;
  out.episode.actions.resize(static_cast<std::size_t>(trials));
  out.episode.signals.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(trials, m));
  out.choice_probs.resize(trials, m);

  std::vector<Eigen::RowVectorXd> keep, gain, z;
  for (Index i = 0; i < k; ++i) {
    keep.emplace_back((1.0 - params.alpha.row(i).array()).matrix());
    gain.emplace_back(params.alpha.row(i).cwiseProduct(params.beta.row(i)));
    z.emplace_back(Eigen::RowVectorXd::Zero(m));
  }

  Index previous = -1;
  bool rewarded = false;
  for (Index t = 0; t < trials; ++t) {
    if (previous >= 0) {
      out.episode.signals[0](t, previous) = rewarded ? 1.0 : 0.0;
      if (env.scheme == SignalScheme::reward_and_action) out.episode.signals[1](t, previous) = 1.0;
    }
    // Same operation order as value_trajectory so replayed probabilities match bitwise.
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(m);
    for (Index i = 0; i < k; ++i) {
      const auto& u = out.episode.signals[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(i)] = keep[static_cast<std::size_t>(i)].cwiseProduct(z[static_cast<std::size_t>(i)]) +
                                       gain[static_cast<std::size_t>(i)].cwiseProduct(u.row(t));
      x += spec.weights(i) * z[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd probs = policy_probs(x);
    out.choice_probs.row(t) = probs.transpose();
    const Index action = rng.categorical(probs);
    rewarded = rng.bernoulli(env.reward_probs(action));
    out.episode.actions[static_cast<std::size_t>(t)] = action;
    previous = action;
  }
  return out;
}

std::string to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::sequential: return "sequential";
    case BenchMethod::truncated: return "truncated";
    case BenchMethod::direct: return "direct";
    case BenchMethod::logspace: return "logspace";
  }
  return "unknown";
}

BenchMethod parse_bench_method(const std::string& name) {
  if (name == "sequential") return BenchMethod::sequential;
  if (name == "truncated") return BenchMethod::truncated;
  if (name == "direct") return BenchMethod::direct;
  if (name == "logspace") return BenchMethod::logspace;
  throw InvalidInput("unknown benchmark method '" + name + "'");
}

void BenchConfig::validate() const {
  if (episodes < 1 || trials < 1 || threads < 1) throw InvalidInput("bench config: counts must be positive");
  if (arms < 2) throw InvalidInput("bench config: at least two arms are required");
  const Index k = scheme == SignalScheme::reward_only ? 1 : 2;
  if (static_cast<Index>(ranges.size()) != k) throw InvalidInput("bench config: one parameter range per subsignal");
  for (const auto& r : ranges) {
    if (!(0.0 <= r.alpha_lo && r.alpha_lo <= r.alpha_hi && r.alpha_hi <= 1.0))
      throw InvalidInput("bench config: alpha range must lie within [0, 1]");
    if (!(0.0 <= r.beta_lo && r.beta_lo <= r.beta_hi) || !std::isfinite(r.beta_hi))
      throw InvalidInput("bench config: beta range must be finite and nonnegative");
  }
  if (reward_probs && reward_probs->size() != arms)
    throw InvalidInput("bench config: one reward probability per arm");
  if (methods.empty()) throw InvalidInput("bench config: at least one method is required");
  if (truncated_depth < 1) throw InvalidInput("bench config: truncated depth must be positive");
}

BenchConfig BenchConfig::ten_arm() {
  BenchConfig config;
  config.arms = 10;
  config.scheme = SignalScheme::reward_and_action;
  config.ranges = {ParamRange{0.0, 1.0, 0.0, 10.0}, ParamRange{0.0, 1.0, 0.0, 5.0}};
  config.per_arm_draws = true;
  config.methods = {BenchMethod::sequential, BenchMethod::truncated, BenchMethod::direct};
  return config;
}

EpisodeRecord simulate_bench_episode(const BenchConfig& config, int id) {
  Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(id), 0}));
  EnvSpec env;
  env.arms = config.arms;
  env.scheme = config.scheme;
  const Index k = env.subsignals();

  EpisodeRecord record;
  record.id = id;
  record.truth = Params::zeros(k, config.arms);
  for (Index i = 0; i < k; ++i) {
    const ParamRange& range = config.ranges[static_cast<std::size_t>(i)];
    double alpha = 0.0, beta = 0.0;
    for (Index j = 0; j < config.arms; ++j) {
      if (j == 0 || config.per_arm_draws) {
        alpha = rng.uniform(range.alpha_lo, range.alpha_hi);
        beta = rng.uniform(range.beta_lo, range.beta_hi);
      }
      record.truth.alpha(i, j) = alpha;
      record.truth.beta(i, j) = beta;
    }
  }
  if (config.reward_probs) {
    env.reward_probs = *config.reward_probs;
  } else {
    env.reward_probs.resize(config.arms);
    for (Index j = 0; j < config.arms; ++j) env.reward_probs(j) = rng.uniform();
  }
  record.reward_probs = env.reward_probs;
  record.episode = simulate_episode(env, record.truth, config.trials, rng).episode;
  record.true_log_likelihood = log_likelihood(record.truth, record.episode, env.bandit_spec());
  return record;
}

FitOptions bench_fit_options(const BenchConfig& config, int id, BenchMethod method) {
  FitOptions options = config.fit;
  options.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(id), 1});
  options.depth.reset();
  options.method = FitMethod::sequential;
  if (method == BenchMethod::truncated) options.depth = std::min(config.truncated_depth, config.trials);
  if (method == BenchMethod::direct) options.method = FitMethod::direct;
  if (method == BenchMethod::logspace) options.method = FitMethod::logspace_recovery;
  return options;
}

namespace {

MethodRecord run_method(const BenchConfig& config, const EpisodeRecord& record, BenchMethod method) {
  const BanditSpec spec = BanditSpec::uniform(config.arms, static_cast<Index>(config.ranges.size()));
  const FitOptions options = bench_fit_options(config, record.id, method);

  MethodRecord out;
  out.method = method;
  try {
    FitReport report = fit(record.episode, spec, options);
    out.alpha_error = (report.params.alpha - record.truth.alpha).cwiseAbs();
    out.beta_error = (report.params.beta - record.truth.beta).cwiseAbs();
    out.report = std::move(report);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double BenchSummary::success_rate() const {
  int ok = 0, total = 0;
  for (const auto& record : records)
    for (const auto& method : record.methods) {
      ++total;
      if (method.report) ++ok;
    }
  return total == 0 ? 0.0 : static_cast<double>(ok) / total;
}

BenchSummary run_benchmark(const BenchConfig& config) {
  config.validate();
  BenchSummary summary;
  summary.records.resize(static_cast<std::size_t>(config.episodes));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int id = next++; id < config.episodes; id = next++) {
      EpisodeRecord& record = summary.records[static_cast<std::size_t>(id)];
      try {
        record = simulate_bench_episode(config, id);
      } catch (const std::exception& e) {
        record.id = id;
        for (BenchMethod method : config.methods) record.methods.push_back({method, std::nullopt, e.what(), {}, {}});
        continue;
      }
      for (BenchMethod method : config.methods) record.methods.push_back(run_method(config, record, method));
    }
  };
  const int threads = std::min(config.threads, config.episodes);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodAggregate agg;
    agg.method = config.methods[mi];
    agg.gap_histogram.assign(kGapHistogramBins, 0);
    std::vector<double> upper, gaps;
    for (const auto& record : summary.records) {
      const MethodRecord& result = record.methods[mi];
      if (!result.report) {
        ++agg.failed;
        continue;
      }
      ++agg.succeeded;
      const FitReport& report = *result.report;
      upper.push_back(report.upper_bound);
      if (report.gap) {
        gaps.push_back(*report.gap);
        const auto bin = std::min<std::size_t>(static_cast<std::size_t>(std::floor(*report.gap)), kGapHistogramBins - 1);
        ++agg.gap_histogram[bin];
      }
      if (report.bound_kind == BoundKind::exact && *report.lower_bound <= -record.true_log_likelihood + 1e-6)
        ++agg.lower_bound_holds;
      if (report.certificate && report.certificate->global_optimal) {
        ++agg.certified;
        agg.max_certified_gap = std::max(agg.max_certified_gap, report.certificate->gap);
      }
    }
    agg.median_upper_bound = median(upper);
    agg.median_gap = median(gaps);
    summary.aggregates.push_back(std::move(agg));
  }
  return summary;
}

}  // namespace imab
