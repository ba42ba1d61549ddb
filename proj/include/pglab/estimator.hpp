#pragma once

#include <optional>
#include <vector>

#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

namespace pglab {

using GradEstimate = Vector;

struct BaselineSpec {
  // empty -> no baseline; otherwise one constant per step h < H
  std::vector<double> per_step;

  bool active() const { return !per_step.empty(); }
  double at(int h) const;
};

// Optional diagnostic cap on importance weights; off by default, activations
// are counted so callers can log them.
struct WeightOptions {
  std::optional<double> cap;
  mutable long long cap_hits = 0;
};

enum class EstimatorKind { Reinforce, Pgt, Gpomdp };

GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& spec,
                            const Vector& params, double gamma);

GradEstimate pgt_grad(const Trajectory& traj, const PolicySpec& spec,
                      const Vector& params, double gamma,
                      const BaselineSpec& baseline = {});

GradEstimate gpomdp_grad(const Trajectory& traj, const PolicySpec& spec,
                         const Vector& params, double gamma,
                         const BaselineSpec& baseline = {});

GradEstimate estimator_grad(EstimatorKind kind, const Trajectory& traj,
                            const PolicySpec& spec, const Vector& params,
                            double gamma);

// omega_{0:h} = prod_{h'<=h} pi_target(a|s) / pi_behavior(a|s), in log space.
double prefix_importance_weight(const Trajectory& traj, const PolicySpec& spec,
                                const Vector& target_params,
                                const Vector& behavior_params, int h,
                                const WeightOptions& opts = {});

// GPOMDP-form estimator whose h-th term carries omega_{0:h}; scores are taken
// at the target parameters, the trajectory comes from the behavior policy.
GradEstimate weighted_gpomdp_grad(const Trajectory& traj, const PolicySpec& spec,
                                  const Vector& target_params,
                                  const Vector& behavior_params, double gamma,
                                  const WeightOptions& opts = {},
                                  const BaselineSpec& baseline = {});

// v_t = v_prev + mean_j [ g(tau_j | params_t) - g_w(tau_j | params_prev) ],
// with tau_j sampled under params_t.
GradEstimate recursive_update(const GradEstimate& v_prev,
                              const std::vector<Trajectory>& batch,
                              const PolicySpec& spec, const Vector& params_t,
                              const Vector& params_prev, double gamma,
                              const WeightOptions& opts = {},
                              const BaselineSpec& baseline = {});

}  // namespace pglab
