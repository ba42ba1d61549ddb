#include <doctest.h>

#include <cmath>

#include "pglab/oracle.hpp"
#include "pglab/pgpe.hpp"

using namespace pglab;

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

HyperParams make_hyper(std::initializer_list<double> mu,
                       std::initializer_list<double> log_std,
                       bool optimize_sigma = false) {
  HyperParams hyper;
  hyper.mu.resize(static_cast<long>(mu.size()));
  long i = 0;
  for (double v : mu) hyper.mu[i++] = v;
  hyper.log_std.resize(static_cast<long>(log_std.size()));
  i = 0;
  for (double v : log_std) hyper.log_std[i++] = v;
  hyper.optimize_sigma = optimize_sigma;
  return hyper;
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// 1-state bandit: reward 1 for action 0, reward 0 for action 1. A
// linear-Gaussian policy on the all-zero observation acts through its bias
// term only, and the env rounds/clamps, so the deterministic policy scores
// iff theta_bias < 0.5. This gives PGPE a closed-form objective
// J(rho) = Phi((0.5 - mu_bias) / std_bias).
TabularMdp pgpe_bandit() {
  TabularMdp mdp;
  mdp.n_states = 1;
  mdp.n_actions = 2;
  mdp.horizon = 1;
  mdp.initial_dist = Vector::Ones(1);
  mdp.transition = Matrix::Ones(2, 1);
  mdp.reward.resize(1, 2);
  mdp.reward << 1.0, 0.0;
  mdp.validate();
  return mdp;
}

double bandit_j(double mu_bias, double std_bias) {
  return normal_cdf((0.5 - mu_bias) / std_bias);
}

}  // namespace

TEST_CASE("hyper log-density") {
  SUBCASE("standard normal at the mean") {
    HyperParams hyper = make_hyper({0.0}, {0.0});
    CHECK(hyper_log_prob(hyper, Vector::Zero(1)) ==
          doctest::Approx(-0.5 * kLogTwoPi).epsilon(1e-14));
  }

  SUBCASE("factorizes over dimensions") {
    HyperParams hyper = make_hyper({1.0, -2.0}, {0.5, -0.3});
    Vector theta(2);
    theta << 0.7, -1.1;
    HyperParams a = make_hyper({1.0}, {0.5});
    HyperParams b = make_hyper({-2.0}, {-0.3});
    CHECK(hyper_log_prob(hyper, theta) ==
          doctest::Approx(hyper_log_prob(a, theta.head(1)) +
                          hyper_log_prob(b, theta.tail(1)))
              .epsilon(1e-14));
  }

  SUBCASE("normalizes to one (trapezoid quadrature)") {
    HyperParams hyper = make_hyper({0.3}, {-0.7});
    const double std = hyper.std()[0];
    const int n = 20000;
    const double lo = hyper.mu[0] - 10.0 * std, hi = hyper.mu[0] + 10.0 * std;
    const double dx = (hi - lo) / n;
    double mass = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      mass += w * std::exp(hyper_log_prob(hyper, Vector::Constant(1, lo + i * dx)));
    }
    CHECK(mass * dx == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("dimension mismatch is rejected") {
    HyperParams hyper = make_hyper({0.0, 0.0}, {0.0, 0.0});
    CHECK_THROWS_AS(hyper_log_prob(hyper, Vector::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("sampled parameters have the right first two moments") {
  HyperParams hyper = make_hyper({2.0, -1.0}, {0.0, std::log(0.5)});
  Rng rng(51);
  const int n = 200000;
  Vector mean = Vector::Zero(2), sq = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Vector theta = sample_policy_params(hyper, rng);
    mean += theta;
    sq += theta.cwiseProduct(theta);
  }
  mean /= n;
  sq /= n;
  const Vector std = hyper.std();
  for (long k = 0; k < 2; ++k) {
    const double se = std[k] / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean[k] - hyper.mu[k]) <= 4.0 * se);
    const double var = sq[k] - mean[k] * mean[k];
    CHECK(var == doctest::Approx(std[k] * std[k]).epsilon(0.02));
  }
}

TEST_CASE("hyper score matches finite differences of the log-density") {
  Rng rng(52);
  for (bool optimize_sigma : {false, true}) {
    HyperParams hyper = make_hyper({0.4, -0.8, 1.2}, {0.1, -0.4, 0.3}, optimize_sigma);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector theta = sample_policy_params(hyper, rng);
      const Vector analytic = hyper_score(hyper, theta);
      Vector flat(hyper.grad_dim());
      flat.head(3) = hyper.mu;
      if (optimize_sigma) flat.tail(3) = hyper.log_std;
      const Vector fd = finite_diff_gradient(
          [&](const Vector& p) {
            HyperParams h = hyper;
            h.mu = p.head(3);
            if (optimize_sigma) h.log_std = p.tail(3);
            return hyper_log_prob(h, theta);
          },
          flat);
      CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-7);
    }
  }
}

TEST_CASE("hyper score has zero mean under its own distribution") {
  HyperParams hyper = make_hyper({0.5}, {-0.2}, true);
  Rng rng(53);
  const int n = 200000;
  Vector mean = Vector::Zero(2), sq = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    const Vector g = hyper_score(hyper, sample_policy_params(hyper, rng));
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= n;
  sq /= n;
  for (long k = 0; k < 2; ++k) {
    const double se = std::sqrt((sq[k] - mean[k] * mean[k]) / n);
    CHECK(std::abs(mean[k]) <= 4.0 * se);
  }
}

TEST_CASE("parameter-space importance weight") {
  SUBCASE("identical hyper-distributions give exactly one") {
    HyperParams hyper = make_hyper({0.7, -0.1}, {0.2, 0.0});
    Rng rng(54);
    CHECK(param_weight(hyper, hyper, sample_policy_params(hyper, rng)) == 1.0);
  }

  SUBCASE("unit-shift hand value") {
    // numer N(1,1), denom N(0,1), theta = 0 -> exp(-1/2)
    HyperParams numer = make_hyper({1.0}, {0.0});
    HyperParams denom = make_hyper({0.0}, {0.0});
    CHECK(param_weight(numer, denom, Vector::Zero(1)) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  }

  SUBCASE("expectation under the denominator is one (quadrature)") {
    HyperParams numer = make_hyper({0.8}, {-0.1});
    HyperParams denom = make_hyper({0.2}, {0.15});
    const double std = denom.std()[0];
    const int n = 40000;
    const double lo = denom.mu[0] - 12.0 * std, hi = denom.mu[0] + 12.0 * std;
    const double dx = (hi - lo) / n;
    double mean = 0.0;
    for (int i = 0; i <= n; ++i) {
      const Vector theta = Vector::Constant(1, lo + i * dx);
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      mean += w * std::exp(hyper_log_prob(denom, theta)) *
              param_weight(numer, denom, theta);
    }
    CHECK(mean * dx == doctest::Approx(1.0).epsilon(1e-8));
  }

  SUBCASE("overflow throws") {
    HyperParams numer = make_hyper({0.0}, {std::log(1e-4)});
    HyperParams denom = make_hyper({100.0}, {0.0});
    CHECK_THROWS_AS(param_weight(numer, denom, Vector::Zero(1)),
                    std::runtime_error);
  }
}

TEST_CASE("pgpe gradient basics") {
  HyperParams hyper = make_hyper({0.0, 0.0}, {0.0, 0.0});
  Rng rng(55);

  SUBCASE("empty batch is rejected") {
    CHECK_THROWS_AS(pgpe_grad({}, hyper, 0.9), std::invalid_argument);
  }

  SUBCASE("single sample is score times discounted return") {
    PgpeSample sample;
    sample.theta = sample_policy_params(hyper, rng);
    sample.traj.states = {Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)};
    sample.traj.actions = {0.0, 0.0};
    sample.traj.rewards = {1.0, 2.0};
    const double ret = 1.0 + 0.9 * 2.0;
    const Vector g = pgpe_grad({sample}, hyper, 0.9);
    CHECK((g - hyper_score(hyper, sample.theta) * ret).cwiseAbs().maxCoeff() <=
          1e-14);
  }

  SUBCASE("zero rewards give a zero gradient") {
    PgpeSample sample;
    sample.theta = sample_policy_params(hyper, rng);
    sample.traj.states = {Vector::Zero(1), Vector::Zero(1)};
    sample.traj.actions = {0.0};
    sample.traj.rewards = {0.0};
    CHECK(pgpe_grad({sample}, hyper, 0.9).norm() == 0.0);
  }
}

TEST_CASE("pgpe recursive update is frozen under identical hypers") {
  HyperParams hyper = make_hyper({0.3, -0.6}, {0.0, 0.1});
  Rng rng(56);
  std::vector<PgpeSample> batch;
  for (int i = 0; i < 4; ++i) {
    PgpeSample sample;
    sample.theta = sample_policy_params(hyper, rng);
    sample.traj.states = {Vector::Zero(1), Vector::Zero(1)};
    sample.traj.actions = {0.0};
    sample.traj.rewards = {rng.uniform(-1.0, 1.0)};
    batch.push_back(std::move(sample));
  }
  Vector v_prev(2);
  v_prev << 0.25, -1.5;
  const Vector v = pgpe_recursive_update(v_prev, batch, hyper, hyper, 0.9);
  CHECK(v == v_prev);
  CHECK_THROWS_AS(pgpe_recursive_update(v_prev, {}, hyper, hyper, 0.9),
                  std::invalid_argument);
}

TEST_CASE("deterministic rollouts replay the policy mean exactly") {
  auto env = make_environment("cartpole");
  PolicySpec spec = linear_gaussian_spec(env->obs_dim(), 0.5);
  Rng rng(57);
  const Vector theta = init_params(spec, rng);
  const Trajectory traj = rollout_deterministic(*env, spec, theta, 50, rng);
  REQUIRE(traj.length() >= 1);
  for (int h = 0; h < traj.length(); ++h) {
    CHECK(traj.actions[h] == mean_action(spec, theta, traj.states[h]));
  }
}

TEST_CASE("pgpe gradient mean matches the closed-form bandit objective") {
  TabularMdp mdp = pgpe_bandit();
  TabularEnv env(mdp);
  PolicySpec spec = linear_gaussian_spec(1);  // params: [weight, bias]
  HyperParams hyper = make_hyper({0.0, 0.2}, {0.0, std::log(0.8)}, true);
  const double std_b = 0.8;
  const double u = (0.5 - hyper.mu[1]) / std_b;
  // dJ/dmu_bias = -pdf(u)/std, dJ/dlog_std_bias = -u pdf(u); the weight
  // coordinate multiplies a zero observation, so its block vanishes.
  const double d_mu = -normal_pdf(u) / std_b;
  const double d_ls = -u * normal_pdf(u);

  Rng rng(58);
  const int n = 400000;
  Vector mean = Vector::Zero(4), sq = Vector::Zero(4);
  for (int i = 0; i < n; ++i) {
    PgpeSample sample;
    sample.theta = sample_policy_params(hyper, rng);
    sample.traj = rollout_deterministic(env, spec, sample.theta, 1, rng);
    const Vector g = pgpe_grad({sample}, hyper, 0.99);
    mean += g;
    sq += g.cwiseProduct(g);
  }
  mean /= n;
  sq /= n;
  Vector expected(4);
  expected << 0.0, d_mu, 0.0, d_ls;
  for (long k = 0; k < 4; ++k) {
    const double se = std::sqrt((sq[k] - mean[k] * mean[k]) / n);
    CHECK(std::abs(mean[k] - expected[k]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("episode accounting and reproducibility") {
  TabularMdp mdp = pgpe_bandit();
  TabularEnv inner(mdp);
  PolicySpec spec = linear_gaussian_spec(1);
  HyperParams hyper = make_hyper({0.0, 0.0}, {0.0, 0.0});
  SrvrPgConfig config;
  config.epochs = 3;
  config.epoch_len = 4;
  config.step_size = 0.05;
  config.snapshot_batch = 12;
  config.inner_batch = 5;
  config.gamma = 0.9;
  config.horizon = 1;

  SUBCASE("srvr-pg-pe consumes S * (N + (m - 1) * B) episodes") {
    CountingEnv env(inner);
    Rng rng(59);
    const RunHistory history = srvr_pg_pe_run(config, env, spec, hyper, rng);
    CHECK(history.total_trajectories() == 3 * (12 + 3 * 5));
    CHECK(env.episodes() == 81);
    CHECK(history.records.size() == 12);
  }

  SUBCASE("pgpe consumes iterations * N episodes") {
    CountingEnv env(inner);
    Rng rng(60);
    const RunHistory history = pgpe_run(config, env, spec, hyper, rng, 7);
    CHECK(history.total_trajectories() == 7 * 12);
    CHECK(env.episodes() == 84);
  }

  SUBCASE("same seed, same run; different seed, different run") {
    TabularEnv env_a(mdp), env_b(mdp), env_c(mdp);
    Rng rng_a(61), rng_b(61), rng_c(62);
    const RunHistory a = srvr_pg_pe_run(config, env_a, spec, hyper, rng_a);
    const RunHistory b = srvr_pg_pe_run(config, env_b, spec, hyper, rng_b);
    const RunHistory c = srvr_pg_pe_run(config, env_c, spec, hyper, rng_c);
    CHECK(a.final_params == b.final_params);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].avg_return == b.records[i].avg_return);
      CHECK(a.records[i].update_norm == b.records[i].update_norm);
    }
    CHECK(a.final_params != c.final_params);
  }
}

TEST_CASE("srvr-pg-pe improves the bandit objective") {
  TabularMdp mdp = pgpe_bandit();
  TabularEnv env(mdp);
  PolicySpec spec = linear_gaussian_spec(1);
  HyperParams hyper = make_hyper({0.0, 1.5}, {0.0, 0.0});  // J ~ 0.16
  SrvrPgConfig config;
  config.epochs = 30;
  config.epoch_len = 2;
  config.step_size = 0.5;
  config.snapshot_batch = 25;
  config.inner_batch = 10;
  config.gamma = 0.9;
  config.horizon = 1;
  Rng rng(63);
  const double before = bandit_j(hyper.mu[1], 1.0);
  const RunHistory history = srvr_pg_pe_run(config, env, spec, hyper, rng);
  REQUIRE_FALSE(history.aborted);
  const double after = bandit_j(history.final_params[1], 1.0);
  CHECK(after > before + 0.3);
  CHECK(after > 0.7);
}
