#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pglab/mdp.hpp"
#include "pglab/rng.hpp"

namespace pglab {

enum class PolicyKind { LinearGaussian, MlpGaussian, Softmax };

// Gaussian policies have a fixed standard deviation sigma; the mean is either
// theta . phi(s) with phi(s) = [obs; 1], or a small tanh MLP. The softmax
// policy is tabular: logits theta[s * n_actions + a].
struct PolicySpec {
  PolicyKind kind = PolicyKind::LinearGaussian;
  double sigma = 1.0;
  int obs_dim = 0;
  std::vector<int> hidden;  // MLP hidden widths
  int n_states = 0;
  int n_actions = 0;

  int param_count() const;
};

PolicySpec linear_gaussian_spec(int obs_dim, double sigma = 1.0);
PolicySpec mlp_gaussian_spec(int obs_dim, std::vector<int> hidden, double sigma = 1.0);
PolicySpec softmax_spec(int n_states, int n_actions);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer
Vector init_params(const PolicySpec& spec, Rng& rng);

// Mean action of the Gaussian policy (also the PGPE deterministic policy).
double mean_action(const PolicySpec& spec, const Vector& params, const Vector& obs);

double sample_action(const PolicySpec& spec, const Vector& params, const Vector& obs,
                     Rng& rng);
double log_prob(const PolicySpec& spec, const Vector& params, const Vector& obs,
                double action);

// Exact gradient of log_prob with respect to the flat parameter vector.
Vector score(const PolicySpec& spec, const Vector& params, const Vector& obs,
             double action);

// Alternates a ~ pi_theta(. | s) with environment steps; truncated at `horizon`
// or the first terminal transition.
Trajectory rollout(const Environment& env, const PolicySpec& spec,
                   const Vector& params, int horizon, Rng& rng);

// Closed-form bounds (G, M) on the score norm and log-density Hessian norm for
// the linear-Gaussian policy with |a| <= action_bound and ||phi|| <= m_phi.
// Throws for specs without closed-form constants.
std::pair<double, double> assumption_constants(const PolicySpec& spec,
                                               double action_bound, double m_phi);

}  // namespace pglab
