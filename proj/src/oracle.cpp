#include "pglab/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace pglab {

namespace {

double policy_prob(const PolicySpec& spec, const Vector& params,
                   const Trajectory& traj) {
  double log_p = 0.0;
  for (int h = 0; h < traj.length(); ++h) {
    log_p += log_prob(spec, params, traj.states[h], traj.actions[h]);
  }
  return std::exp(log_p);
}

}  // namespace

double exact_performance(const TabularMdp& mdp, const PolicySpec& spec,
                         const Vector& params, double gamma) {
  double total = 0.0;
  for (const auto& [traj, env_prob] : enumerate_trajectories(mdp, mdp.horizon)) {
    total += env_prob * policy_prob(spec, params, traj) *
             traj.discounted_return(gamma);
  }
  return total;
}

Vector exact_gradient(const TabularMdp& mdp, const PolicySpec& spec,
                      const Vector& params, double gamma, bool check_two_forms) {
  const auto trajectories = enumerate_trajectories(mdp, mdp.horizon);

  // Score form: sum_tau p(tau) (sum_h score_h) R(tau).
  Vector grad = Vector::Zero(params.size());
  for (const auto& [traj, env_prob] : trajectories) {
    Vector score_sum = Vector::Zero(params.size());
    for (int h = 0; h < traj.length(); ++h) {
      score_sum += score(spec, params, traj.states[h], traj.actions[h]);
    }
    grad += env_prob * policy_prob(spec, params, traj) *
            traj.discounted_return(gamma) * score_sum;
  }

  if (check_two_forms) {
    // Probability-derivative form: sum_tau grad p(tau) R(tau), with the
    // product rule expanded over per-step density gradients.
    Vector grad2 = Vector::Zero(params.size());
    for (const auto& [traj, env_prob] : trajectories) {
      std::vector<double> step_probs(traj.length());
      for (int h = 0; h < traj.length(); ++h) {
        step_probs[h] =
            std::exp(log_prob(spec, params, traj.states[h], traj.actions[h]));
      }
      Vector d_prob = Vector::Zero(params.size());
      for (int h = 0; h < traj.length(); ++h) {
        double rest = 1.0;
        for (int k = 0; k < traj.length(); ++k) {
          if (k != h) rest *= step_probs[k];
        }
        // grad pi_h = pi_h * score_h
        d_prob += rest * step_probs[h] *
                  score(spec, params, traj.states[h], traj.actions[h]);
      }
      grad2 += env_prob * traj.discounted_return(gamma) * d_prob;
    }
    if ((grad - grad2).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::runtime_error("exact_gradient: two-form disagreement");
    }
  }
  return grad;
}

Vector finite_diff_gradient(const std::function<double(const Vector&)>& fn,
                            const Vector& params, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff: step must be > 0");
  Vector grad(params.size());
  Vector probe = params;
  for (long i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = fn(probe);
    probe[i] = params[i] - step;
    const double down = fn(probe);
    probe[i] = params[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::pair<Vector, double> estimator_moments(
    const TabularMdp& mdp, const PolicySpec& spec, const Vector& params,
    const std::function<Vector(const Trajectory&)>& estimator, double gamma) {
  (void)gamma;
  Vector mean;
  double second_moment = 0.0;
  for (const auto& [traj, env_prob] : enumerate_trajectories(mdp, mdp.horizon)) {
    const double p = env_prob * policy_prob(spec, params, traj);
    const Vector g = estimator(traj);
    if (mean.size() == 0) mean = Vector::Zero(g.size());
    mean += p * g;
    second_moment += p * g.squaredNorm();
  }
  return {mean, second_moment - mean.squaredNorm()};
}

TabularMdp default_oracle_mdp(std::uint64_t seed) {
  Rng rng(seed);
  TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 2;
  mdp.horizon = 3;
  mdp.initial_dist.resize(2);
  const double p0 = rng.uniform(0.2, 0.8);
  mdp.initial_dist << p0, 1.0 - p0;
  mdp.transition.resize(4, 2);
  for (int row = 0; row < 4; ++row) {
    const double p = rng.uniform(0.1, 0.9);
    mdp.transition(row, 0) = p;
    mdp.transition(row, 1) = 1.0 - p;
  }
  mdp.reward.resize(2, 2);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
  }
  mdp.validate();
  return mdp;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / (1e-8 + std::abs(a) + std::abs(b));
}

double max_rel_err(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (long i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

}  // namespace pglab
