#include <doctest.h>

#include <cmath>
#include <vector>

#include "imab/model.hpp"
#include "test_support.hpp"

using namespace imab;

namespace {

Episode two_trial_episode() {
  Episode e;
  e.actions = {0, 1};
  e.signals = {(Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished()};
  return e;
}

}  // namespace

TEST_CASE("one_hot builds indicator rows") {
  const std::vector<Index> a{0, 1};
  CHECK(one_hot(std::span<const Index>(a), 2) == (Eigen::MatrixXd(2, 2) << 1, 0, 0, 1).finished());
  const std::vector<Index> b{2};
  CHECK(one_hot(std::span<const Index>(b), 3) == (Eigen::MatrixXd(1, 3) << 0, 0, 1).finished());
  const std::vector<Index> bad{1};
  CHECK_THROWS_AS(one_hot(std::span<const Index>(bad), 1), InvalidEpisode);
}

TEST_CASE("value_trajectory hand-evaluated steps") {
  const BanditSpec spec = BanditSpec::uniform(2);
  Params params = Params::zeros(1, 2);
  params.alpha.setConstant(0.5);
  params.beta.setConstant(2.0);
  const Eigen::MatrixXd x = value_trajectory(params, two_trial_episode(), spec);
  CHECK(x(0, 0) == doctest::Approx(1.0));
  CHECK(x(0, 1) == doctest::Approx(0.0));
  // z(2) = 0.5 * (1, 0) + 0.5 * 2 * (0, 1)
  CHECK(x(1, 0) == doctest::Approx(0.5));
  CHECK(x(1, 1) == doctest::Approx(1.0));

  params.alpha.setZero();
  CHECK(value_trajectory(params, two_trial_episode(), spec).isZero(0.0));

  CHECK_THROWS_AS(value_trajectory(Params::zeros(2, 2), two_trial_episode(), spec), InvalidInput);
}

TEST_CASE("value_trajectory matches the scalar recursion") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.next() % 4);
    const Index n = 1 + static_cast<Index>(rng.next() % 40);
    const Index k = 1 + static_cast<Index>(rng.next() % 2);
    BanditSpec spec = BanditSpec::uniform(m, k);
    for (Index i = 0; i < k; ++i) spec.weights(i) = rng.uniform(-2.0, 2.0);
    const Episode e = testing::random_episode(rng, n, m, k, trial % 2 == 1);
    const Params p = testing::random_params(rng, k, m);
    const Eigen::MatrixXd diff = value_trajectory(p, e, spec) - testing::scalar_recursion(p, e, spec);
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("policy_probs") {
  CHECK(policy_probs(Eigen::Vector2d(0, 0)).isApprox(Eigen::Vector2d(0.5, 0.5)));
  for (double c : {-50.0, 0.0, 3.0, 700.0}) {
    const Eigen::VectorXd p = policy_probs(Eigen::Vector3d(c, c, c));
    CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() <= 1e-15);
  }
  const Eigen::VectorXd big = policy_probs(Eigen::Vector2d(1000, 0));
  CHECK(big.allFinite());
  CHECK(big(0) == doctest::Approx(1.0));
  CHECK(big(1) <= 1e-300);
  CHECK_THROWS_AS(policy_probs(Eigen::Vector2d(std::nan(""), 0)), InvalidInput);
  CHECK_THROWS_AS(policy_probs(Eigen::Vector2d(INFINITY, 0)), InvalidInput);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(2 + static_cast<Index>(rng.next() % 8));
    for (Index j = 0; j < x.size(); ++j) x(j) = rng.uniform(-30, 30);
    const Eigen::VectorXd p = policy_probs(x);
    CHECK((p.array() >= 0).all());
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    const double shift = rng.uniform(-100, 100);
    const Eigen::VectorXd q = policy_probs((x.array() + shift).matrix());
    CHECK((p - q).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("objective_J reference values") {
  const BanditSpec spec = BanditSpec::uniform(2);
  Rng rng(5);
  Episode e = testing::random_episode(rng, 10, 2, 1);
  Params p = Params::zeros(1, 2);
  p.beta.setConstant(3.0);
  CHECK(objective_J(p, e, spec) == doctest::Approx(6.931472).epsilon(1e-7));
  CHECK(log_likelihood(p, e, spec) == doctest::Approx(-6.931472).epsilon(1e-7));

  // n = 1, x(1) = (1, 0), chosen arm 0: J = log(1 + e) - 1
  Episode one;
  one.actions = {0};
  one.signals = {(Eigen::MatrixXd(1, 2) << 1, 0).finished()};
  Params q = Params::zeros(1, 2);
  q.alpha.setConstant(1.0);
  q.beta.setConstant(1.0);
  CHECK(objective_J(q, one, spec) == doctest::Approx(0.313262).epsilon(1e-6));

  // Determinism limit: J -> 0 from above (log(1 + e^-60) rounds to 0).
  q.beta.setConstant(60.0);
  const double j = objective_J(q, one, spec);
  CHECK(j >= 0.0);
  CHECK(j < 1e-20);

  q.alpha(0, 0) = 1.5;
  CHECK_THROWS_AS(objective_J(q, one, spec), InvalidInput);
}

TEST_CASE("objective_J is nonnegative and matches a long-double reference") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.next() % 3);
    const Index k = 1 + static_cast<Index>(rng.next() % 2);
    const BanditSpec spec = BanditSpec::uniform(m, k);
    const Episode e = testing::random_episode(rng, 1 + static_cast<Index>(rng.next() % 30), m, k);
    const Params p = testing::random_params(rng, k, m, 10.0);
    const double j = objective_J(p, e, spec);
    CHECK(j >= 0.0);
    CHECK(j == doctest::Approx(testing::reference_nll(testing::scalar_recursion(p, e, spec), e.actions)).epsilon(1e-12));
  }
}

TEST_CASE("zero beta freezes the values") {
  Rng rng(9);
  const BanditSpec spec = BanditSpec::uniform(3, 2);
  const Episode e = testing::random_episode(rng, 25, 3, 2);
  Params p = testing::random_params(rng, 2, 3);
  p.beta.setZero();
  CHECK(value_trajectory(p, e, spec).isZero(0.0));
  CHECK(objective_J(p, e, spec) == doctest::Approx(25 * std::log(3.0)));
}

TEST_CASE("episode validation") {
  const BanditSpec spec = BanditSpec::uniform(2);
  Episode e = two_trial_episode();
  e.actions[1] = 2;
  CHECK_THROWS_AS(e.validate(spec), InvalidEpisode);
  e = two_trial_episode();
  e.signals[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(e.validate(spec), InvalidEpisode);
  e = two_trial_episode();
  e.signals.push_back(e.signals[0]);
  CHECK_THROWS_AS(e.validate(spec), InvalidEpisode);
  CHECK_THROWS_AS(BanditSpec::uniform(1).validate(), InvalidInput);
}
