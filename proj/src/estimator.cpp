#include "pglab/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace pglab {

namespace {

void check_finite(const GradEstimate& g, const char* what) {
  if (!g.allFinite()) {
    throw std::runtime_error(std::string("estimator: non-finite ") + what);
  }
}

}  // namespace

double BaselineSpec::at(int h) const {
  if (h < 0 || h >= static_cast<int>(per_step.size())) {
    throw std::out_of_range("baseline shorter than trajectory");
  }
  return per_step[h];
}

GradEstimate reinforce_grad(const Trajectory& traj, const PolicySpec& spec,
                            const Vector& params, double gamma) {
  GradEstimate score_sum = Vector::Zero(params.size());
  double ret = 0.0;
  double discount = 1.0;
  for (int h = 0; h < traj.length(); ++h) {
    score_sum += score(spec, params, traj.states[h], traj.actions[h]);
    ret += discount * traj.rewards[h];
    discount *= gamma;
  }
  GradEstimate g = score_sum * ret;
  check_finite(g, "REINFORCE gradient");
  return g;
}

GradEstimate pgt_grad(const Trajectory& traj, const PolicySpec& spec,
                      const Vector& params, double gamma,
                      const BaselineSpec& baseline) {
  const int len = traj.length();
  // reward_tail[h] = sum_{t >= h} (gamma^t r_t - b_t)
  std::vector<double> discounted(len);
  double discount = 1.0;
  for (int h = 0; h < len; ++h) {
    discounted[h] = discount * traj.rewards[h] -
                    (baseline.active() ? baseline.at(h) : 0.0);
    discount *= gamma;
  }
  std::vector<double> tail(len + 1, 0.0);
  for (int h = len - 1; h >= 0; --h) tail[h] = tail[h + 1] + discounted[h];

  GradEstimate g = Vector::Zero(params.size());
  for (int h = 0; h < len; ++h) {
    g += score(spec, params, traj.states[h], traj.actions[h]) * tail[h];
  }
  check_finite(g, "PGT gradient");
  return g;
}

GradEstimate gpomdp_grad(const Trajectory& traj, const PolicySpec& spec,
                         const Vector& params, double gamma,
                         const BaselineSpec& baseline) {
  GradEstimate g = Vector::Zero(params.size());
  GradEstimate score_prefix = Vector::Zero(params.size());
  double discount = 1.0;
  for (int h = 0; h < traj.length(); ++h) {
    score_prefix += score(spec, params, traj.states[h], traj.actions[h]);
    const double term = discount * traj.rewards[h] -
                        (baseline.active() ? baseline.at(h) : 0.0);
    g += score_prefix * term;
    discount *= gamma;
  }
  check_finite(g, "GPOMDP gradient");
  return g;
}

GradEstimate estimator_grad(EstimatorKind kind, const Trajectory& traj,
                            const PolicySpec& spec, const Vector& params,
                            double gamma) {
  switch (kind) {
    case EstimatorKind::Reinforce:
      return reinforce_grad(traj, spec, params, gamma);
    case EstimatorKind::Pgt:
      return pgt_grad(traj, spec, params, gamma);
    case EstimatorKind::Gpomdp:
      return gpomdp_grad(traj, spec, params, gamma);
  }
  throw std::invalid_argument("unknown estimator kind");
}

namespace {

double apply_weight_options(double log_weight, const WeightOptions& opts) {
  double w = std::exp(log_weight);
  if (opts.cap && w > *opts.cap) {
    ++opts.cap_hits;
    return *opts.cap;
  }
  if (!std::isfinite(w) || w > 1e12) {
    throw std::runtime_error("importance weight overflow: log weight = " +
                             std::to_string(log_weight));
  }
  return w;
}

}  // namespace

double prefix_importance_weight(const Trajectory& traj, const PolicySpec& spec,
                                const Vector& target_params,
                                const Vector& behavior_params, int h,
                                const WeightOptions& opts) {
  if (h < 0 || h >= traj.length()) {
    throw std::out_of_range("prefix_importance_weight: prefix beyond trajectory");
  }
  if (target_params == behavior_params) return 1.0;
  double log_w = 0.0;
  for (int i = 0; i <= h; ++i) {
    log_w += log_prob(spec, target_params, traj.states[i], traj.actions[i]) -
             log_prob(spec, behavior_params, traj.states[i], traj.actions[i]);
  }
  return apply_weight_options(log_w, opts);
}

GradEstimate weighted_gpomdp_grad(const Trajectory& traj, const PolicySpec& spec,
                                  const Vector& target_params,
                                  const Vector& behavior_params, double gamma,
                                  const WeightOptions& opts,
                                  const BaselineSpec& baseline) {
  const bool identical = (target_params == behavior_params);
  GradEstimate g = Vector::Zero(target_params.size());
  GradEstimate score_prefix = Vector::Zero(target_params.size());
  double log_w = 0.0;
  double discount = 1.0;
  for (int h = 0; h < traj.length(); ++h) {
    score_prefix +=
        score(spec, target_params, traj.states[h], traj.actions[h]);
    double w = 1.0;
    if (!identical) {
      log_w += log_prob(spec, target_params, traj.states[h], traj.actions[h]) -
               log_prob(spec, behavior_params, traj.states[h], traj.actions[h]);
      w = apply_weight_options(log_w, opts);
    }
    g += score_prefix * (w * (discount * traj.rewards[h] -
                              (baseline.active() ? baseline.at(h) : 0.0)));
    discount *= gamma;
  }
  check_finite(g, "weighted GPOMDP gradient");
  return g;
}

GradEstimate recursive_update(const GradEstimate& v_prev,
                              const std::vector<Trajectory>& batch,
                              const PolicySpec& spec, const Vector& params_t,
                              const Vector& params_prev, double gamma,
                              const WeightOptions& opts,
                              const BaselineSpec& baseline) {
  if (batch.empty()) {
    throw std::invalid_argument("recursive_update: empty batch");
  }
  GradEstimate correction = Vector::Zero(v_prev.size());
  for (const Trajectory& traj : batch) {
    correction += gpomdp_grad(traj, spec, params_t, gamma, baseline) -
                  weighted_gpomdp_grad(traj, spec, params_prev, params_t, gamma,
                                       opts, baseline);
  }
  GradEstimate v = v_prev + correction / static_cast<double>(batch.size());
  check_finite(v, "recursive gradient");
  return v;
}

}  // namespace pglab
