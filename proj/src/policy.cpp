#include "pglab/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace pglab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

// MLP layer sizes including input and the scalar output.
std::vector<int> mlp_sizes(const PolicySpec& spec) {
  std::vector<int> sizes;
  sizes.push_back(spec.obs_dim);
  for (int h : spec.hidden) sizes.push_back(h);
  sizes.push_back(1);
  return sizes;
}

void check_shape(const PolicySpec& spec, const Vector& params) {
  if (params.size() != spec.param_count()) {
    throw std::invalid_argument("policy: parameter vector does not match spec");
  }
}

// Forward pass of the tanh MLP; optionally accumulates d mu / d theta.
double mlp_mean(const PolicySpec& spec, const Vector& params, const Vector& obs,
                Vector* grad) {
  const auto sizes = mlp_sizes(spec);
  const int n_layers = static_cast<int>(sizes.size()) - 1;

  std::vector<Vector> activations(n_layers + 1);
  activations[0] = obs;
  std::vector<long> offsets(n_layers);
  long offset = 0;
  for (int l = 0; l < n_layers; ++l) {
    offsets[l] = offset;
    const int in = sizes[l];
    const int out = sizes[l + 1];
    Eigen::Map<const Matrix> w(params.data() + offset, out, in);
    Eigen::Map<const Vector> b(params.data() + offset + static_cast<long>(out) * in,
                               out);
    Vector pre = w * activations[l] + b;
    activations[l + 1] = (l + 1 < n_layers) ? pre.array().tanh().matrix() : pre;
    offset += static_cast<long>(out) * in + out;
  }
  const double mu = activations[n_layers][0];
  if (grad == nullptr) return mu;

  grad->setZero(params.size());
  Vector delta = Vector::Ones(1);
  for (int l = n_layers - 1; l >= 0; --l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    Eigen::Map<const Matrix> w(params.data() + offsets[l], out, in);
    Eigen::Map<Matrix> gw(grad->data() + offsets[l], out, in);
    Eigen::Map<Vector> gb(grad->data() + offsets[l] + static_cast<long>(out) * in,
                          out);
    gw = delta * activations[l].transpose();
    gb = delta;
    if (l > 0) {
      // d tanh = 1 - tanh^2, with activations[l] already holding tanh values
      Vector back = w.transpose() * delta;
      delta = back.cwiseProduct(
          (1.0 - activations[l].array().square()).matrix());
    }
  }
  return mu;
}

Vector linear_features(const PolicySpec& spec, const Vector& obs) {
  Vector phi(spec.obs_dim + 1);
  phi.head(spec.obs_dim) = obs;
  phi[spec.obs_dim] = 1.0;
  return phi;
}

int softmax_state(const Vector& obs) { return static_cast<int>(obs[0]); }

}  // namespace

int PolicySpec::param_count() const {
  switch (kind) {
    case PolicyKind::LinearGaussian:
      return obs_dim + 1;
    case PolicyKind::MlpGaussian: {
      int total = 0;
      int prev = obs_dim;
      for (int h : hidden) {
        total += (prev + 1) * h;
        prev = h;
      }
      total += prev + 1;
      return total;
    }
    case PolicyKind::Softmax:
      return n_states * n_actions;
  }
  return 0;
}

PolicySpec linear_gaussian_spec(int obs_dim, double sigma) {
  PolicySpec spec;
  spec.kind = PolicyKind::LinearGaussian;
  spec.obs_dim = obs_dim;
  spec.sigma = sigma;
  return spec;
}

PolicySpec mlp_gaussian_spec(int obs_dim, std::vector<int> hidden, double sigma) {
  PolicySpec spec;
  spec.kind = PolicyKind::MlpGaussian;
  spec.obs_dim = obs_dim;
  spec.hidden = std::move(hidden);
  spec.sigma = sigma;
  return spec;
}

PolicySpec softmax_spec(int n_states, int n_actions) {
  PolicySpec spec;
  spec.kind = PolicyKind::Softmax;
  spec.n_states = n_states;
  spec.n_actions = n_actions;
  return spec;
}

Vector init_params(const PolicySpec& spec, Rng& rng) {
  Vector params(spec.param_count());
  switch (spec.kind) {
    case PolicyKind::LinearGaussian: {
      const double bound = 1.0 / std::sqrt(spec.obs_dim + 1.0);
      for (long i = 0; i < params.size(); ++i) params[i] = rng.uniform(-bound, bound);
      break;
    }
    case PolicyKind::MlpGaussian: {
      const auto sizes = mlp_sizes(spec);
      long offset = 0;
      for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        const long count = static_cast<long>(out) * in + out;
        for (long i = 0; i < count; ++i) {
          params[offset + i] = rng.uniform(-bound, bound);
        }
        offset += count;
      }
      break;
    }
    case PolicyKind::Softmax: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.n_states));
      for (long i = 0; i < params.size(); ++i) params[i] = rng.uniform(-bound, bound);
      break;
    }
  }
  return params;
}

double mean_action(const PolicySpec& spec, const Vector& params, const Vector& obs) {
  check_shape(spec, params);
  switch (spec.kind) {
    case PolicyKind::LinearGaussian:
      return params.dot(linear_features(spec, obs));
    case PolicyKind::MlpGaussian:
      return mlp_mean(spec, params, obs, nullptr);
    case PolicyKind::Softmax:
      throw std::invalid_argument("mean_action: undefined for softmax policy");
  }
  return 0.0;
}

double sample_action(const PolicySpec& spec, const Vector& params, const Vector& obs,
                     Rng& rng) {
  check_shape(spec, params);
  if (spec.kind == PolicyKind::Softmax) {
    const int s = softmax_state(obs);
    Eigen::Map<const Vector> row(params.data() + static_cast<long>(s) * spec.n_actions,
                                 spec.n_actions);
    const double max_logit = row.maxCoeff();
    std::vector<double> probs(spec.n_actions);
    for (int a = 0; a < spec.n_actions; ++a) probs[a] = std::exp(row[a] - max_logit);
    return rng.categorical(probs);
  }
  return mean_action(spec, params, obs) + spec.sigma * rng.normal();
}

double log_prob(const PolicySpec& spec, const Vector& params, const Vector& obs,
                double action) {
  check_shape(spec, params);
  if (spec.kind == PolicyKind::Softmax) {
    const int s = softmax_state(obs);
    const int a = static_cast<int>(std::lround(action));
    Eigen::Map<const Vector> row(params.data() + static_cast<long>(s) * spec.n_actions,
                                 spec.n_actions);
    const double max_logit = row.maxCoeff();
    const double lse =
        max_logit + std::log((row.array() - max_logit).exp().sum());
    return row[a] - lse;
  }
  const double mu = mean_action(spec, params, obs);
  const double z = (action - mu) / spec.sigma;
  return -0.5 * z * z - 0.5 * kLogTwoPi - std::log(spec.sigma);
}

Vector score(const PolicySpec& spec, const Vector& params, const Vector& obs,
             double action) {
  check_shape(spec, params);
  switch (spec.kind) {
    case PolicyKind::LinearGaussian: {
      const Vector phi = linear_features(spec, obs);
      const double mu = params.dot(phi);
      return (action - mu) / (spec.sigma * spec.sigma) * phi;
    }
    case PolicyKind::MlpGaussian: {
      Vector grad;
      const double mu = mlp_mean(spec, params, obs, &grad);
      return (action - mu) / (spec.sigma * spec.sigma) * grad;
    }
    case PolicyKind::Softmax: {
      const int s = softmax_state(obs);
      const int a = static_cast<int>(std::lround(action));
      Eigen::Map<const Vector> row(params.data() +
                                       static_cast<long>(s) * spec.n_actions,
                                   spec.n_actions);
      const double max_logit = row.maxCoeff();
      Vector probs = (row.array() - max_logit).exp();
      probs /= probs.sum();
      Vector grad = Vector::Zero(params.size());
      for (int j = 0; j < spec.n_actions; ++j) {
        grad[static_cast<long>(s) * spec.n_actions + j] =
            (j == a ? 1.0 : 0.0) - probs[j];
      }
      return grad;
    }
  }
  return Vector();
}

Trajectory rollout(const Environment& env, const PolicySpec& spec,
                   const Vector& params, int horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  Trajectory traj;
  EnvState state = env.reset(rng);
  traj.states.push_back(env.observe(state));
  for (int h = 0; h < horizon; ++h) {
    const double action = sample_action(spec, params, traj.states.back(), rng);
    StepResult result = env.step(state, action, rng);
    traj.actions.push_back(action);
    traj.rewards.push_back(result.reward);
    traj.states.push_back(env.observe(result.state));
    state = result.state;
    if (result.done) break;
  }
  return traj;
}

std::pair<double, double> assumption_constants(const PolicySpec& spec,
                                               double action_bound, double m_phi) {
  if (spec.kind != PolicyKind::LinearGaussian) {
    throw std::invalid_argument(
        "assumption_constants: diagnostic unavailable for this policy");
  }
  const double s2 = spec.sigma * spec.sigma;
  return {action_bound * m_phi / s2, m_phi * m_phi / s2};
}

}  // namespace pglab
