#include <doctest.h>

#include <cmath>

#include "pglab/estimator.hpp"
#include "pglab/oracle.hpp"

using namespace pglab;

namespace {

Trajectory random_trajectory(const PolicySpec& spec, Rng& rng, int len) {
  Trajectory traj;
  auto obs = [&]() -> Vector {
    if (spec.kind == PolicyKind::Softmax) {
      return Vector::Constant(
          1, static_cast<double>(static_cast<int>(rng.uniform(0, spec.n_states))));
    }
    Vector v(spec.obs_dim);
    for (long i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
  };
  traj.states.push_back(obs());
  for (int h = 0; h < len; ++h) {
    if (spec.kind == PolicyKind::Softmax) {
      traj.actions.push_back(static_cast<int>(rng.uniform(0, spec.n_actions)));
    } else {
      traj.actions.push_back(rng.uniform(-2.0, 2.0));
    }
    traj.rewards.push_back(rng.uniform(-1.0, 1.0));
    traj.states.push_back(obs());
  }
  return traj;
}

// Exact expectation of a trajectory functional on the oracle MDP.
Vector enumeration_expectation(
    const TabularMdp& mdp, const PolicySpec& spec, const Vector& sampling_params,
    const std::function<Vector(const Trajectory&)>& fn) {
  return estimator_moments(mdp, spec, sampling_params, fn, 0.0).first;
}

}  // namespace

TEST_CASE("zero rewards give zero gradients") {
  PolicySpec spec = linear_gaussian_spec(2);
  Rng rng(1);
  Vector params = init_params(spec, rng);
  Trajectory traj = random_trajectory(spec, rng, 5);
  for (double& r : traj.rewards) r = 0.0;
  CHECK(reinforce_grad(traj, spec, params, 0.9).norm() == 0.0);
  CHECK(pgt_grad(traj, spec, params, 0.9).norm() == 0.0);
  CHECK(gpomdp_grad(traj, spec, params, 0.9).norm() == 0.0);
  CHECK(weighted_gpomdp_grad(traj, spec, params, params, 0.9).norm() == 0.0);
}

TEST_CASE("single-step trajectories collapse all three estimators") {
  PolicySpec spec = linear_gaussian_spec(3);
  Rng rng(2);
  Vector params = init_params(spec, rng);
  Trajectory traj = random_trajectory(spec, rng, 1);
  const Vector expect =
      score(spec, params, traj.states[0], traj.actions[0]) * traj.rewards[0];
  CHECK((reinforce_grad(traj, spec, params, 0.9) - expect).norm() <= 1e-14);
  CHECK((pgt_grad(traj, spec, params, 0.9) - expect).norm() <= 1e-14);
  CHECK((gpomdp_grad(traj, spec, params, 0.9) - expect).norm() <= 1e-14);
}

TEST_CASE("PGT equals GPOMDP with zero baseline on random trajectories") {
  Rng rng(3);
  PolicySpec spec = linear_gaussian_spec(2);
  for (int trial = 0; trial < 1000; ++trial) {
    Vector params = init_params(spec, rng);
    Trajectory traj =
        random_trajectory(spec, rng, 1 + static_cast<int>(rng.uniform(0, 8)));
    const Vector a = pgt_grad(traj, spec, params, 0.95);
    const Vector b = gpomdp_grad(traj, spec, params, 0.95);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("per-step baselines shift PGT without breaking the mean") {
  // Unbiasedness with a nonzero constant baseline, via enumeration.
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(4);
  Vector params = init_params(spec, rng);
  BaselineSpec baseline;
  baseline.per_step = {0.3, -0.2, 0.1};

  const double gamma = 0.9;
  const Vector exact = exact_gradient(mdp, spec, params, gamma);
  const Vector with_baseline = enumeration_expectation(
      mdp, spec, params,
      [&](const Trajectory& t) { return pgt_grad(t, spec, params, gamma, baseline); });
  CHECK((with_baseline - exact).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("estimator expectations equal the exact gradient on the oracle MDP") {
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(5);
  const double gamma = 0.9;
  for (int trial = 0; trial < 5; ++trial) {
    Vector params = init_params(spec, rng);
    const Vector exact = exact_gradient(mdp, spec, params, gamma);
    for (EstimatorKind kind :
         {EstimatorKind::Reinforce, EstimatorKind::Pgt, EstimatorKind::Gpomdp}) {
      const Vector mean = enumeration_expectation(
          mdp, spec, params,
          [&](const Trajectory& t) {
            return estimator_grad(kind, t, spec, params, gamma);
          });
      CHECK((mean - exact).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("Monte Carlo GPOMDP mean is consistent with the exact gradient") {
  TabularMdp mdp = default_oracle_mdp();
  TabularEnv env(mdp);
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(6);
  Vector params = init_params(spec, rng);
  const double gamma = 0.9;
  const Vector exact = exact_gradient(mdp, spec, params, gamma);

  const int n = 100000;
  Vector mean = Vector::Zero(params.size());
  Vector sq = Vector::Zero(params.size());
  for (int i = 0; i < n; ++i) {
    const Trajectory traj = rollout(env, spec, params, mdp.horizon, rng);
    const Vector g = gpomdp_grad(traj, spec, params, gamma);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= n;
  sq /= n;
  for (long k = 0; k < params.size(); ++k) {
    const double se = std::sqrt((sq[k] - mean[k] * mean[k]) / n);
    CHECK(std::abs(mean[k] - exact[k]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("prefix importance weights") {
  PolicySpec spec = linear_gaussian_spec(1, 1.0);
  Rng rng(7);
  Vector params = init_params(spec, rng);
  Trajectory traj = random_trajectory(spec, rng, 4);

  SUBCASE("identical policies give exactly one") {
    for (int h = 0; h < traj.length(); ++h) {
      CHECK(prefix_importance_weight(traj, spec, params, params, h) == 1.0);
    }
  }

  SUBCASE("hand-evaluated single-step Gaussian ratio") {
    // behavior mean 0, target mean 1, sigma 1, a = 0 -> exp(-1/2)
    Vector behavior(2), target(2);
    behavior << 0.0, 0.0;
    target << 0.0, 1.0;  // bias feature carries the mean
    Trajectory one;
    one.states = {Vector::Zero(1), Vector::Zero(1)};
    one.actions = {0.0};
    one.rewards = {1.0};
    CHECK(prefix_importance_weight(one, spec, target, behavior, 0) ==
          doctest::Approx(std::exp(-0.5)));
  }

  SUBCASE("prefix index must stay inside the trajectory") {
    CHECK_THROWS_AS(
        prefix_importance_weight(traj, spec, params, params, traj.length()),
        std::out_of_range);
  }
}

TEST_CASE("E[omega] = 1 for every prefix under enumeration") {
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(8);
  Vector behavior = init_params(spec, rng);
  Vector target = init_params(spec, rng);
  for (int h = 0; h < mdp.horizon; ++h) {
    const Vector mean = enumeration_expectation(
        mdp, spec, behavior, [&](const Trajectory& t) {
          return Vector::Constant(
              1, prefix_importance_weight(t, spec, target, behavior, h));
        });
    CHECK(std::abs(mean[0] - 1.0) <= 1e-12);
  }
}

TEST_CASE("change of measure identity for the weighted estimator") {
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(9);
  const double gamma = 0.9;
  for (int trial = 0; trial < 5; ++trial) {
    Vector behavior = init_params(spec, rng);
    Vector target = init_params(spec, rng);
    const Vector weighted = enumeration_expectation(
        mdp, spec, behavior, [&](const Trajectory& t) {
          return weighted_gpomdp_grad(t, spec, target, behavior, gamma);
        });
    const Vector plain = enumeration_expectation(
        mdp, spec, target,
        [&](const Trajectory& t) { return gpomdp_grad(t, spec, target, gamma); });
    CHECK((weighted - plain).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("weighted estimator with identical policies equals GPOMDP") {
  PolicySpec spec = linear_gaussian_spec(2);
  Rng rng(10);
  Vector params = init_params(spec, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory traj = random_trajectory(spec, rng, 6);
    CHECK((weighted_gpomdp_grad(traj, spec, params, params, 0.9) -
           gpomdp_grad(traj, spec, params, 0.9))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("recursive update identities") {
  PolicySpec spec = linear_gaussian_spec(2);
  Rng rng(11);
  Vector params = init_params(spec, rng);
  std::vector<Trajectory> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(random_trajectory(spec, rng, 4));

  SUBCASE("frozen parameters keep v unchanged") {
    Vector v_prev = init_params(spec, rng);
    const Vector v = recursive_update(v_prev, batch, spec, params, params, 0.9);
    CHECK((v - v_prev).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero previous estimate stays zero when frozen") {
    const Vector v = recursive_update(Vector::Zero(params.size()), batch, spec,
                                      params, params, 0.9);
    CHECK(v.norm() == 0.0);
  }

  SUBCASE("empty batch is rejected") {
    CHECK_THROWS_AS(recursive_update(Vector::Zero(params.size()), {}, spec,
                                     params, params, 0.9),
                    std::invalid_argument);
  }
}

TEST_CASE("recursion preserves unbiasedness in expectation") {
  // With E[v_prev] = grad J(theta_prev), enumeration of the correction under
  // theta_t must land on grad J(theta_t).
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(12);
  const double gamma = 0.9;
  Vector theta_prev = init_params(spec, rng);
  Vector theta_t = theta_prev + 0.1 * init_params(spec, rng);

  const Vector v_prev_mean = exact_gradient(mdp, spec, theta_prev, gamma);
  const Vector correction_mean = enumeration_expectation(
      mdp, spec, theta_t, [&](const Trajectory& t) {
        return (gpomdp_grad(t, spec, theta_t, gamma) -
                weighted_gpomdp_grad(t, spec, theta_prev, theta_t, gamma))
            .eval();
      });
  const Vector expected = exact_gradient(mdp, spec, theta_t, gamma);
  CHECK((v_prev_mean + correction_mean - expected).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("weight variance shrinks as the policies approach each other") {
  TabularMdp mdp = default_oracle_mdp();
  PolicySpec spec = softmax_spec(2, 2);
  Rng rng(13);
  Vector behavior = init_params(spec, rng);
  Vector direction = init_params(spec, rng);
  direction.normalize();

  const int h = mdp.horizon - 1;
  std::vector<double> variances;
  for (double scale : {0.8, 0.4, 0.2, 0.1, 0.05}) {
    const Vector target = behavior + scale * direction;
    auto [mean, var] = estimator_moments(
        mdp, spec, behavior,
        [&](const Trajectory& t) {
          return Vector::Constant(
              1, prefix_importance_weight(t, spec, target, behavior, h));
        },
        0.0);
    variances.push_back(var);
  }
  for (std::size_t i = 0; i + 1 < variances.size(); ++i) {
    CHECK(variances[i + 1] < variances[i]);
  }
}

TEST_CASE("weight cap activates only when enabled and is counted") {
  PolicySpec spec = linear_gaussian_spec(1, 0.3);
  Vector behavior(2), target(2);
  behavior << 0.0, 0.0;
  target << 0.0, 1.0;
  Trajectory traj;
  traj.states = {Vector::Zero(1), Vector::Zero(1)};
  traj.actions = {1.0};  // squarely in the target's favor
  traj.rewards = {1.0};

  WeightOptions capped;
  capped.cap = 2.0;
  const double w = prefix_importance_weight(traj, spec, target, behavior, 0, capped);
  CHECK(w == 2.0);
  CHECK(capped.cap_hits == 1);

  const double raw = prefix_importance_weight(traj, spec, target, behavior, 0);
  CHECK(raw > 2.0);
}

TEST_CASE("importance weight overflow is surfaced as an error") {
  PolicySpec spec = linear_gaussian_spec(1, 0.05);
  Vector behavior(2), target(2);
  behavior << 0.0, 0.0;
  target << 0.0, 50.0;
  Trajectory traj;
  traj.states = {Vector::Zero(1), Vector::Zero(1)};
  traj.actions = {50.0};
  traj.rewards = {1.0};
  CHECK_THROWS_AS(prefix_importance_weight(traj, spec, target, behavior, 0),
                  std::runtime_error);
}
