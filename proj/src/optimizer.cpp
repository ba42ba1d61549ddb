#include "pglab/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace pglab {

ConstraintSet ConstraintSet::l2_ball(Vector center, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("l2_ball: radius must be > 0");
  ConstraintSet c;
  c.kind = Kind::L2Ball;
  c.center = std::move(center);
  c.radius = radius;
  return c;
}

ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("box: need lower <= upper componentwise");
  }
  ConstraintSet c;
  c.kind = Kind::Box;
  c.lower = std::move(lower);
  c.upper = std::move(upper);
  return c;
}

Vector project(const Vector& theta, const ConstraintSet& constraint) {
  switch (constraint.kind) {
    case ConstraintSet::Kind::Unconstrained:
      return theta;
    case ConstraintSet::Kind::L2Ball: {
      const Vector offset = theta - constraint.center;
      const double norm = offset.norm();
      if (norm <= constraint.radius) return theta;
      return constraint.center + (constraint.radius / norm) * offset;
    }
    case ConstraintSet::Kind::Box:
      return theta.cwiseMax(constraint.lower).cwiseMin(constraint.upper);
  }
  return theta;
}

Vector gradient_mapping(const Vector& theta, const Vector& grad, double eta,
                        const ConstraintSet& constraint) {
  if (eta <= 0.0) throw std::invalid_argument("gradient_mapping: eta must be > 0");
  if (constraint.kind == ConstraintSet::Kind::Unconstrained) return grad;
  return (project(theta + eta * grad, constraint) - theta) / eta;
}

void SrvrPgConfig::validate() const {
  if (epochs < 1 || epoch_len < 1 || snapshot_batch < 1 || inner_batch < 1) {
    throw std::invalid_argument("config: S, m, N, B must all be >= 1");
  }
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("config: gamma must be in (0, 1)");
  }
  if (step_size < 0.0) throw std::invalid_argument("config: negative step size");
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
}

namespace {

struct BatchStats {
  std::vector<Trajectory> trajectories;
  double avg_return = 0.0;  // undiscounted
};

BatchStats sample_batch(const Environment& env, const PolicySpec& spec,
                        const Vector& params, int count, int horizon, Rng& rng) {
  BatchStats batch;
  batch.trajectories.reserve(count);
  for (int i = 0; i < count; ++i) {
    batch.trajectories.push_back(rollout(env, spec, params, horizon, rng));
    batch.avg_return += batch.trajectories.back().undiscounted_return();
  }
  batch.avg_return /= count;
  return batch;
}

// b_h = (1/n) sum_i gamma^h r_h^i, with terminated trajectories contributing
// zero beyond their length.
BaselineSpec batch_mean_baseline(const BatchStats& batch, double gamma,
                                 int horizon) {
  BaselineSpec baseline;
  baseline.per_step.assign(horizon, 0.0);
  for (const Trajectory& traj : batch.trajectories) {
    double discount = 1.0;
    for (int h = 0; h < traj.length(); ++h) {
      baseline.per_step[h] += discount * traj.rewards[h];
      discount *= gamma;
    }
  }
  const double n = static_cast<double>(batch.trajectories.size());
  for (double& b : baseline.per_step) b /= n;
  return baseline;
}

Vector clip_update(const Vector& v, double clip) {
  if (clip > 0.0 && v.norm() > clip) return v * (clip / v.norm());
  return v;
}

Vector batch_mean_grad(const BatchStats& batch, const SrvrPgConfig& config,
                       const PolicySpec& spec, const Vector& params) {
  BaselineSpec baseline;
  if (config.mean_baseline && config.estimator != EstimatorKind::Reinforce) {
    baseline = batch_mean_baseline(batch, config.gamma, config.horizon);
  }
  Vector mean = Vector::Zero(params.size());
  for (const Trajectory& traj : batch.trajectories) {
    switch (config.estimator) {
      case EstimatorKind::Reinforce:
        mean += reinforce_grad(traj, spec, params, config.gamma);
        break;
      case EstimatorKind::Pgt:
        mean += pgt_grad(traj, spec, params, config.gamma, baseline);
        break;
      case EstimatorKind::Gpomdp:
        mean += gpomdp_grad(traj, spec, params, config.gamma, baseline);
        break;
    }
  }
  return mean / static_cast<double>(batch.trajectories.size());
}

// Shared run-loop bookkeeping: records, iterate collection, output rule.
class HistoryBuilder {
 public:
  HistoryBuilder(const SrvrPgConfig& config, Rng& rng)
      : output_rule_(config.output_rule), rng_(rng) {}

  void record(long long trajectories, int epoch, int step, double avg_return,
              const Vector& v, const Vector& iterate) {
    history_.records.push_back(
        {trajectories, epoch, step, avg_return, v.norm()});
    history_.iterates.push_back(iterate);
  }

  RunHistory finish(const Vector& final_params) {
    history_.final_params = final_params;
    if (output_rule_ == OutputRule::Uniform && !history_.iterates.empty()) {
      const auto& iterates = history_.iterates;
      const std::size_t idx = static_cast<std::size_t>(
          rng_.uniform(0.0, static_cast<double>(iterates.size())));
      history_.output_params = iterates[std::min(idx, iterates.size() - 1)];
    } else {
      history_.output_params = final_params;
    }
    return std::move(history_);
  }

  void abort(const std::string& reason) {
    history_.aborted = true;
    history_.abort_reason = reason;
  }

  RunHistory history_;

 private:
  OutputRule output_rule_;
  Rng& rng_;
};

std::string abort_message(const char* algo, int epoch, int step,
                          const std::exception& e) {
  return std::string(algo) + " aborted at epoch " + std::to_string(epoch) +
         ", step " + std::to_string(step) + ": " + e.what();
}

}  // namespace

RunHistory srvr_pg_run(const SrvrPgConfig& config, const Environment& env,
                       const PolicySpec& spec, const Vector& init_params,
                       Rng& rng) {
  config.validate();
  Vector theta = project(init_params, config.constraint);
  HistoryBuilder builder(config, rng);
  long long episodes = 0;

  for (int s = 0; s < config.epochs; ++s) {
    int t = 0;
    try {
      // Snapshot: large batch at the reference policy, immediate update.
      BatchStats batch = sample_batch(env, spec, theta, config.snapshot_batch,
                                      config.horizon, rng);
      episodes += config.snapshot_batch;
      Vector v = batch_mean_grad(batch, config, spec, theta);
      Vector theta_prev = theta;
      theta = project(theta + config.step_size * clip_update(v, config.grad_clip),
                      config.constraint);
      builder.record(episodes, s, 0, batch.avg_return, v, theta);

      for (t = 1; t < config.epoch_len; ++t) {
        batch = sample_batch(env, spec, theta, config.inner_batch,
                             config.horizon, rng);
        episodes += config.inner_batch;
        BaselineSpec baseline;
        if (config.mean_baseline) {
          baseline = batch_mean_baseline(batch, config.gamma, config.horizon);
        }
        v = recursive_update(v, batch.trajectories, spec, theta, theta_prev,
                             config.gamma, config.weights, baseline);
        theta_prev = theta;
        theta = project(theta + config.step_size * clip_update(v, config.grad_clip),
                      config.constraint);
        builder.record(episodes, s, t, batch.avg_return, v, theta);
      }
    } catch (const std::runtime_error& e) {
      builder.abort(abort_message("srvr-pg", s, t, e));
      break;
    }
  }
  return builder.finish(theta);
}

RunHistory svrpg_run(const SrvrPgConfig& config, const Environment& env,
                     const PolicySpec& spec, const Vector& init_params,
                     Rng& rng) {
  config.validate();
  Vector theta_ref = project(init_params, config.constraint);
  HistoryBuilder builder(config, rng);
  long long episodes = 0;

  for (int s = 0; s < config.epochs; ++s) {
    int t = 0;
    try {
      // Reference gradient; these N episodes produce no update.
      BatchStats snapshot = sample_batch(env, spec, theta_ref,
                                         config.snapshot_batch, config.horizon,
                                         rng);
      episodes += config.snapshot_batch;
      const Vector mu = batch_mean_grad(snapshot, config, spec, theta_ref);

      Vector theta = theta_ref;
      for (t = 0; t < config.epoch_len; ++t) {
        BatchStats batch = sample_batch(env, spec, theta, config.inner_batch,
                                        config.horizon, rng);
        episodes += config.inner_batch;
        BaselineSpec baseline;
        if (config.mean_baseline) {
          baseline = batch_mean_baseline(batch, config.gamma, config.horizon);
        }
        Vector correction = Vector::Zero(theta.size());
        for (const Trajectory& traj : batch.trajectories) {
          correction +=
              gpomdp_grad(traj, spec, theta, config.gamma, baseline) -
              weighted_gpomdp_grad(traj, spec, theta_ref, theta, config.gamma,
                                   config.weights, baseline);
        }
        const Vector v =
            mu + correction / static_cast<double>(config.inner_batch);
        theta = project(theta + config.step_size * clip_update(v, config.grad_clip),
                      config.constraint);
        builder.record(episodes, s, t, batch.avg_return, v, theta);
      }
      theta_ref = theta;
    } catch (const std::runtime_error& e) {
      builder.abort(abort_message("svrpg", s, t, e));
      break;
    }
  }
  return builder.finish(theta_ref);
}

RunHistory gpomdp_run(const SrvrPgConfig& config, const Environment& env,
                      const PolicySpec& spec, const Vector& init_params,
                      Rng& rng, int iterations) {
  config.validate();
  if (iterations < 1) throw std::invalid_argument("gpomdp_run: iterations >= 1");
  Vector theta = project(init_params, config.constraint);
  HistoryBuilder builder(config, rng);
  long long episodes = 0;

  for (int k = 0; k < iterations; ++k) {
    try {
      BatchStats batch = sample_batch(env, spec, theta, config.snapshot_batch,
                                      config.horizon, rng);
      episodes += config.snapshot_batch;
      const Vector v = batch_mean_grad(batch, config, spec, theta);
      theta = project(theta + config.step_size * clip_update(v, config.grad_clip),
                      config.constraint);
      builder.record(episodes, k, 0, batch.avg_return, v, theta);
    } catch (const std::runtime_error& e) {
      builder.abort(abort_message("gpomdp", k, 0, e));
      break;
    }
  }
  return builder.finish(theta);
}

BatchSchedule recommended_batches(double epsilon, const BatchMultipliers& c) {
  if (epsilon <= 0.0) {
    throw std::invalid_argument("recommended_batches: epsilon must be > 0");
  }
  // ceil with a relative tolerance so that 1/(1-gamma) powers that land a few
  // ulps above an integer do not bump the batch size by one
  const auto tolerant_ceil = [](double x) {
    return static_cast<long long>(std::ceil(x * (1.0 - 1e-9)));
  };
  const double sqrt_eps = std::sqrt(epsilon);
  double n_factor = 1.0, b_factor = 1.0, m_factor = 1.0;
  if (c.gamma) {
    const double inv = 1.0 / (1.0 - *c.gamma);
    n_factor = inv * inv * inv;
    b_factor = inv;
    m_factor = inv * inv;
  }
  BatchSchedule schedule;
  schedule.snapshot_batch = tolerant_ceil(c.c0 / epsilon * n_factor);
  schedule.inner_batch = tolerant_ceil(c.c1 / sqrt_eps * b_factor);
  schedule.epoch_len = tolerant_ceil(c.c2 / sqrt_eps * m_factor);
  schedule.epochs = tolerant_ceil(c.c3 / sqrt_eps);
  return schedule;
}

std::pair<double, double> smoothness_constants(double G, double M, double R,
                                               double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("smoothness_constants: gamma out of range");
  }
  const double one_minus = 1.0 - gamma;
  const double L = M * R / (one_minus * one_minus) +
                   2.0 * G * G * R / (one_minus * one_minus * one_minus);
  const double c_g = G * R / (one_minus * one_minus);
  return {L, c_g};
}

double variance_bound_gaussian(double R, double m_phi, double sigma, double gamma,
                               int horizon) {
  if (R <= 0.0 || m_phi <= 0.0 || sigma <= 0.0) {
    throw std::invalid_argument("variance_bound_gaussian: inputs must be > 0");
  }
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("variance_bound_gaussian: gamma out of (0,1)");
  }
  if (horizon == 0) return 0.0;
  const double gh = std::pow(gamma, horizon);
  const double bracket = (1.0 - gh * gh) / (1.0 - gamma * gamma) -
                         horizon * gh * gh -
                         2.0 * gh * (1.0 - gh) / (1.0 - gamma);
  const double front = R * R * m_phi * m_phi /
                       ((1.0 - gamma) * (1.0 - gamma) * sigma * sigma);
  return front * bracket;
}

}  // namespace pglab
