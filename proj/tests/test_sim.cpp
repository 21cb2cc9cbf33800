#include <doctest.h>

#include <cmath>

#include "imab/model.hpp"
#include "imab/sim.hpp"
#include "test_support.hpp"

using namespace imab;

TEST_CASE("zero learning rate gives uniform choices") {
  EnvSpec env;
  env.arms = 4;
  env.reward_probs = Eigen::Vector4d(0.9, 0.1, 0.5, 0.3);
  Params p = Params::zeros(1, 4);
  p.beta.setConstant(5.0);
  Rng rng(61);
  const SimulatedEpisode sim = simulate_episode(env, p, 2000, rng);
  Eigen::Vector4d counts = Eigen::Vector4d::Zero();
  for (Index a : sim.episode.actions) counts(a) += 1;
  const double expected = 500.0;
  const double chi2 = ((counts.array() - expected).square() / expected).sum();
  CHECK(chi2 < 11.345);  // 99th percentile, 3 degrees of freedom
}

TEST_CASE("agent exploits a paying arm") {
  EnvSpec env;
  env.reward_probs = Eigen::Vector2d(1.0, 0.0);
  Params p = Params::zeros(1, 2);
  p.alpha.setConstant(0.3);
  p.beta.setConstant(20.0);
  Rng rng(62);
  const SimulatedEpisode sim = simulate_episode(env, p, 400, rng);
  int arm0 = 0;
  for (std::size_t t = 300; t < 400; ++t) arm0 += sim.episode.actions[t] == 0;
  CHECK(arm0 > 90);
}

TEST_CASE("signals follow the previous trial's outcome") {
  EnvSpec env;
  env.arms = 3;
  env.reward_probs = Eigen::Vector3d(0.2, 0.5, 0.8);
  env.scheme = SignalScheme::reward_and_action;
  Rng rng(63);
  const Params p = testing::random_params(rng, 2, 3);
  const SimulatedEpisode sim = simulate_episode(env, p, 100, rng);
  sim.episode.validate(env.bandit_spec());
  const Eigen::MatrixXd y = one_hot(std::span<const Index>(sim.episode.actions), 3);
  const Eigen::MatrixXd& reward = sim.episode.signals[0];
  const Eigen::MatrixXd& action = sim.episode.signals[1];
  CHECK(action.row(0).isZero(0.0));
  CHECK(action.bottomRows(99) == y.topRows(99));
  CHECK(reward.row(0).isZero(0.0));
  for (Index t = 1; t < 100; ++t) {
    CHECK((reward.row(t).array() <= action.row(t).array()).all());
    CHECK((reward.row(t).array() * (1 - action.row(t).array()) == 0).all());
  }
}

TEST_CASE("replayed probabilities match the sampling probabilities bitwise") {
  Rng rng(64);
  for (SignalScheme scheme : {SignalScheme::reward_only, SignalScheme::reward_and_action}) {
    EnvSpec env;
    env.arms = 3;
    env.reward_probs = Eigen::Vector3d(0.3, 0.6, 0.9);
    env.scheme = scheme;
    const BanditSpec spec = env.bandit_spec();
    const Params p = testing::random_params(rng, spec.subsignals, 3, 10.0);
    const SimulatedEpisode sim = simulate_episode(env, p, 150, rng);
    const Eigen::MatrixXd x = value_trajectory(p, sim.episode, spec);
    for (Index t = 0; t < 150; ++t) CHECK(policy_probs(x.row(t)).transpose() == sim.choice_probs.row(t));
  }
}

TEST_CASE("simulate_episode rejects mismatched params") {
  EnvSpec env;
  env.scheme = SignalScheme::reward_and_action;
  Rng rng(65);
  CHECK_THROWS_AS(simulate_episode(env, Params::zeros(1, 2), 10, rng), InvalidInput);
  env.scheme = SignalScheme::reward_only;
  env.reward_probs = Eigen::Vector2d(1.5, 0);
  CHECK_THROWS_AS(simulate_episode(env, Params::zeros(1, 2), 10, rng), InvalidInput);
  CHECK(parse_signal_scheme("reward+action") == SignalScheme::reward_and_action);
  CHECK_THROWS_AS(parse_signal_scheme("action"), InvalidInput);
}

TEST_CASE("extreme determinism never yields non-finite reports") {
  BenchConfig config;
  config.episodes = 3;
  config.trials = 80;
  config.ranges = {ParamRange{0.5, 1.0, 200.0, 400.0}};
  config.methods = {BenchMethod::sequential, BenchMethod::direct};
  config.fit.restarts = 3;
  const BenchSummary summary = run_benchmark(config);
  for (const auto& record : summary.records) {
    CHECK(std::isfinite(record.true_log_likelihood));
    for (const auto& m : record.methods) {
      REQUIRE(m.report);
      CHECK(std::isfinite(m.report->upper_bound));
      CHECK(m.report->params.alpha.allFinite());
      CHECK(m.report->params.beta.allFinite());
      if (m.report->gap) CHECK(std::isfinite(*m.report->gap));
      if (m.report->lower_bound) CHECK(std::isfinite(*m.report->lower_bound));
    }
  }
}

TEST_CASE("benchmark: records, aggregates and thread independence") {
  BenchConfig config;
  config.episodes = 6;
  config.trials = 50;
  config.seed = 9;
  config.methods = {BenchMethod::sequential, BenchMethod::truncated};
  config.fit.restarts = 3;
  const BenchSummary one = run_benchmark(config);
  config.threads = 3;
  const BenchSummary three = run_benchmark(config);
  REQUIRE(one.records.size() == 6);
  CHECK(one.success_rate() == 1.0);
  for (std::size_t e = 0; e < 6; ++e) {
    CHECK(one.records[e].id == static_cast<int>(e));
    for (std::size_t m = 0; m < 2; ++m) {
      CHECK(one.records[e].methods[m].report->upper_bound == three.records[e].methods[m].report->upper_bound);
      CHECK(*one.records[e].methods[m].report->gap >= 0.0);
    }
    CHECK(one.records[e].methods[1].report->bound_kind == BoundKind::truncated);
  }
  REQUIRE(one.aggregates.size() == 2);
  CHECK(one.aggregates[0].succeeded == 6);
  CHECK(one.aggregates[0].lower_bound_holds == 6);
  int binned = 0;
  for (int c : one.aggregates[0].gap_histogram) binned += c;
  CHECK(binned == 6);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("benchmark truth draws") {
  BenchConfig config;
  config.arms = 3;
  const EpisodeRecord shared = simulate_bench_episode(config, 2);
  CHECK(shared.truth.alpha(0, 0) == shared.truth.alpha(0, 2));
  config.per_arm_draws = true;
  const EpisodeRecord per_arm = simulate_bench_episode(config, 2);
  CHECK(per_arm.truth.alpha(0, 0) != per_arm.truth.alpha(0, 1));

  const BenchConfig ten = BenchConfig::ten_arm();
  CHECK(ten.arms == 10);
  CHECK(ten.ranges.size() == 2);
  CHECK(ten.ranges[0].beta_hi == 10.0);
  CHECK(ten.ranges[1].beta_hi == 5.0);
  const EpisodeRecord r = simulate_bench_episode(ten, 0);
  CHECK(r.episode.signals.size() == 2);
  CHECK(r.true_log_likelihood == log_likelihood(r.truth, r.episode, BanditSpec::uniform(10, 2)));
}
