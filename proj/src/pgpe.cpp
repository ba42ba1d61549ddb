#include "pglab/pgpe.hpp"

#include <cmath>
#include <stdexcept>

namespace pglab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

void check_dims(const HyperParams& hyper, const Vector& theta) {
  if (hyper.mu.size() != theta.size() || hyper.log_std.size() != theta.size()) {
    throw std::invalid_argument("pgpe: hyper/theta dimension mismatch");
  }
}

}  // namespace

Vector sample_policy_params(const HyperParams& hyper, Rng& rng) {
  Vector theta(hyper.mu.size());
  const Vector std = hyper.std();
  for (long i = 0; i < theta.size(); ++i) {
    theta[i] = hyper.mu[i] + std[i] * rng.normal();
  }
  return theta;
}

double hyper_log_prob(const HyperParams& hyper, const Vector& theta) {
  check_dims(hyper, theta);
  double log_p = 0.0;
  for (long i = 0; i < theta.size(); ++i) {
    const double std = std::exp(hyper.log_std[i]);
    const double z = (theta[i] - hyper.mu[i]) / std;
    log_p += -0.5 * z * z - 0.5 * kLogTwoPi - hyper.log_std[i];
  }
  return log_p;
}

Vector hyper_score(const HyperParams& hyper, const Vector& theta) {
  check_dims(hyper, theta);
  const long d = hyper.mu.size();
  Vector grad(hyper.grad_dim());
  for (long i = 0; i < d; ++i) {
    const double std = std::exp(hyper.log_std[i]);
    const double z = (theta[i] - hyper.mu[i]) / std;
    grad[i] = z / std;
    if (hyper.optimize_sigma) grad[d + i] = z * z - 1.0;
  }
  return grad;
}

double param_weight(const HyperParams& numer, const HyperParams& denom,
                    const Vector& theta) {
  const double log_w = hyper_log_prob(numer, theta) - hyper_log_prob(denom, theta);
  const double w = std::exp(log_w);
  if (!std::isfinite(w) || w > 1e12) {
    throw std::runtime_error("pgpe importance weight overflow: log weight = " +
                             std::to_string(log_w));
  }
  return w;
}

Vector pgpe_grad(const std::vector<PgpeSample>& batch, const HyperParams& hyper,
                 double gamma, bool mean_baseline) {
  if (batch.empty()) throw std::invalid_argument("pgpe_grad: empty batch");
  double baseline = 0.0;
  if (mean_baseline) {
    for (const PgpeSample& sample : batch) {
      baseline += sample.traj.discounted_return(gamma);
    }
    baseline /= static_cast<double>(batch.size());
  }
  Vector mean = Vector::Zero(hyper.grad_dim());
  for (const PgpeSample& sample : batch) {
    mean += hyper_score(hyper, sample.theta) *
            (sample.traj.discounted_return(gamma) - baseline);
  }
  return mean / static_cast<double>(batch.size());
}

Vector pgpe_recursive_update(const Vector& v_prev,
                             const std::vector<PgpeSample>& batch,
                             const HyperParams& hyper_t,
                             const HyperParams& hyper_prev, double gamma,
                             bool mean_baseline) {
  if (batch.empty()) {
    throw std::invalid_argument("pgpe_recursive_update: empty batch");
  }
  double baseline = 0.0;
  if (mean_baseline) {
    for (const PgpeSample& sample : batch) {
      baseline += sample.traj.discounted_return(gamma);
    }
    baseline /= static_cast<double>(batch.size());
  }
  Vector correction = Vector::Zero(v_prev.size());
  for (const PgpeSample& sample : batch) {
    const double ret = sample.traj.discounted_return(gamma) - baseline;
    const double w = param_weight(hyper_prev, hyper_t, sample.theta);
    correction += hyper_score(hyper_t, sample.theta) * ret -
                  w * ret * hyper_score(hyper_prev, sample.theta);
  }
  Vector v = v_prev + correction / static_cast<double>(batch.size());
  if (!v.allFinite()) {
    throw std::runtime_error("pgpe: non-finite recursive gradient");
  }
  return v;
}

Trajectory rollout_deterministic(const Environment& env, const PolicySpec& spec,
                                 const Vector& theta, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  Trajectory traj;
  EnvState state = env.reset(rng);
  traj.states.push_back(env.observe(state));
  for (int h = 0; h < horizon; ++h) {
    const double action = mean_action(spec, theta, traj.states.back());
    StepResult result = env.step(state, action, rng);
    traj.actions.push_back(action);
    traj.rewards.push_back(result.reward);
    traj.states.push_back(env.observe(result.state));
    state = result.state;
    if (result.done) break;
  }
  return traj;
}

namespace {

struct PgpeBatch {
  std::vector<PgpeSample> samples;
  double avg_return = 0.0;
};

PgpeBatch sample_pgpe_batch(const Environment& env, const PolicySpec& spec,
                            const HyperParams& hyper, int count, int horizon,
                            Rng& rng) {
  PgpeBatch batch;
  batch.samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    PgpeSample sample;
    sample.theta = sample_policy_params(hyper, rng);
    sample.traj = rollout_deterministic(env, spec, sample.theta, horizon, rng);
    batch.avg_return += sample.traj.undiscounted_return();
    batch.samples.push_back(std::move(sample));
  }
  batch.avg_return /= count;
  return batch;
}

void apply_update(HyperParams& hyper, const Vector& v, double eta,
                  double clip = 0.0) {
  Vector step = v;
  if (clip > 0.0 && step.norm() > clip) step *= clip / step.norm();
  const long d = hyper.mu.size();
  hyper.mu += eta * step.head(d);
  if (hyper.optimize_sigma) hyper.log_std += eta * step.tail(d);
}

Vector flatten(const HyperParams& hyper) {
  if (!hyper.optimize_sigma) return hyper.mu;
  Vector out(2 * hyper.mu.size());
  out << hyper.mu, hyper.log_std;
  return out;
}

}  // namespace

RunHistory srvr_pg_pe_run(const SrvrPgConfig& config, const Environment& env,
                          const PolicySpec& spec, const HyperParams& init_hyper,
                          Rng& rng) {
  config.validate();
  HyperParams hyper = init_hyper;
  RunHistory history;
  long long episodes = 0;

  for (int s = 0; s < config.epochs; ++s) {
    int t = 0;
    try {
      PgpeBatch batch = sample_pgpe_batch(env, spec, hyper, config.snapshot_batch,
                                          config.horizon, rng);
      episodes += config.snapshot_batch;
      Vector v = pgpe_grad(batch.samples, hyper, config.gamma, config.mean_baseline);
      HyperParams hyper_prev = hyper;
      apply_update(hyper, v, config.step_size, config.grad_clip);
      history.records.push_back({episodes, s, 0, batch.avg_return, v.norm()});
      history.iterates.push_back(flatten(hyper));

      for (t = 1; t < config.epoch_len; ++t) {
        batch = sample_pgpe_batch(env, spec, hyper, config.inner_batch,
                                  config.horizon, rng);
        episodes += config.inner_batch;
        v = pgpe_recursive_update(v, batch.samples, hyper, hyper_prev,
                                  config.gamma, config.mean_baseline);
        hyper_prev = hyper;
        apply_update(hyper, v, config.step_size, config.grad_clip);
        history.records.push_back({episodes, s, t, batch.avg_return, v.norm()});
        history.iterates.push_back(flatten(hyper));
      }
    } catch (const std::runtime_error& e) {
      history.aborted = true;
      history.abort_reason = "srvr-pg-pe aborted at epoch " + std::to_string(s) +
                             ", step " + std::to_string(t) + ": " + e.what();
      break;
    }
  }
  history.final_params = flatten(hyper);
  history.output_params = history.final_params;
  return history;
}

RunHistory pgpe_run(const SrvrPgConfig& config, const Environment& env,
                    const PolicySpec& spec, const HyperParams& init_hyper,
                    Rng& rng, int iterations) {
  config.validate();
  if (iterations < 1) throw std::invalid_argument("pgpe_run: iterations >= 1");
  HyperParams hyper = init_hyper;
  RunHistory history;
  long long episodes = 0;

  for (int k = 0; k < iterations; ++k) {
    try {
      PgpeBatch batch = sample_pgpe_batch(env, spec, hyper, config.snapshot_batch,
                                          config.horizon, rng);
      episodes += config.snapshot_batch;
      const Vector v = pgpe_grad(batch.samples, hyper, config.gamma, config.mean_baseline);
      apply_update(hyper, v, config.step_size, config.grad_clip);
      history.records.push_back({episodes, k, 0, batch.avg_return, v.norm()});
      history.iterates.push_back(flatten(hyper));
    } catch (const std::runtime_error& e) {
      history.aborted = true;
      history.abort_reason =
          "pgpe aborted at iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  history.final_params = flatten(hyper);
  history.output_params = history.final_params;
  return history;
}

}  // namespace pglab
