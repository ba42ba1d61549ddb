#pragma once

#include <vector>

#include "pglab/optimizer.hpp"

namespace pglab {

// Diagonal-Gaussian hyper-distribution over policy parameters. When
// optimize_sigma is false the gradient covers only the mu block and log_std
// stays frozen.
struct HyperParams {
  Vector mu;
  Vector log_std;
  bool optimize_sigma = false;

  int grad_dim() const {
    return static_cast<int>(mu.size()) * (optimize_sigma ? 2 : 1);
  }
  Vector std() const { return log_std.array().exp(); }
};

Vector sample_policy_params(const HyperParams& hyper, Rng& rng);

double hyper_log_prob(const HyperParams& hyper, const Vector& theta);

// Gradient of log p(theta | rho) with respect to (mu [, log_std]).
Vector hyper_score(const HyperParams& hyper, const Vector& theta);

// Scalar importance weight p(theta | numer) / p(theta | denom).
double param_weight(const HyperParams& numer, const HyperParams& denom,
                    const Vector& theta);

struct PgpeSample {
  Vector theta;
  Trajectory traj;
};

// (1/N) sum_i hyper_score(rho, theta_i) * discounted return of traj_i; with
// mean_baseline the batch-average discounted return is subtracted first.
Vector pgpe_grad(const std::vector<PgpeSample>& batch, const HyperParams& hyper,
                 double gamma, bool mean_baseline = false);

// v_t = v_prev + mean_j [ g(tau_j | rho_t) - w_j g(tau_j | rho_prev) ] with
// w_j = p(theta_j | rho_prev) / p(theta_j | rho_t).
Vector pgpe_recursive_update(const Vector& v_prev,
                             const std::vector<PgpeSample>& batch,
                             const HyperParams& hyper_t,
                             const HyperParams& hyper_prev, double gamma,
                             bool mean_baseline = false);

// Rolls the deterministic policy a = mean_action(theta) through the
// environment; all stochasticity lives in theta sampling and env dynamics.
Trajectory rollout_deterministic(const Environment& env, const PolicySpec& spec,
                                 const Vector& theta, int horizon, Rng& rng);

RunHistory srvr_pg_pe_run(const SrvrPgConfig& config, const Environment& env,
                          const PolicySpec& spec, const HyperParams& init_hyper,
                          Rng& rng);

RunHistory pgpe_run(const SrvrPgConfig& config, const Environment& env,
                    const PolicySpec& spec, const HyperParams& init_hyper,
                    Rng& rng, int iterations);

}  // namespace pglab
