#include "pglab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pglab {

double Trajectory::discounted_return(double gamma) const {
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

double Trajectory::undiscounted_return() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

namespace {

double clamp_action(const Environment& env, double action) {
  if (!std::isfinite(action)) {
    throw std::invalid_argument("step: non-finite action on " + env.id());
  }
  return std::clamp(action, env.action_low(), env.action_high());
}

}  // namespace

// ---------------------------------------------------------------------------
// CartPole

EnvState CartPoleEnv::reset(Rng& rng) const {
  EnvState s;
  s.values.resize(4);
  for (int i = 0; i < 4; ++i) s.values[i] = rng.uniform(-0.05, 0.05);
  s.step_index = 0;
  return s;
}

StepResult CartPoleEnv::step(const EnvState& state, double action, Rng& /*rng*/) const {
  const double force = clamp_action(*this, action);
  const double gravity = 9.8;
  const double mass_cart = 1.0;
  const double mass_pole = 0.1;
  const double total_mass = mass_cart + mass_pole;
  const double length = 0.5;  // half pole length
  const double pole_mass_length = mass_pole * length;
  const double dt = 0.02;

  double x = state.values[0];
  double x_dot = state.values[1];
  double theta = state.values[2];
  double theta_dot = state.values[3];

  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp =
      (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (gravity * sin_t - cos_t * temp) /
      (length * (4.0 / 3.0 - mass_pole * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  StepResult out;
  out.state.values.resize(4);
  out.state.values << x + dt * x_dot, x_dot + dt * x_acc, theta + dt * theta_dot,
      theta_dot + dt * theta_acc;
  out.state.step_index = state.step_index + 1;
  out.reward = 1.0;
  const bool failed = std::abs(out.state.values[0]) > kPositionLimit ||
                      std::abs(out.state.values[2]) > kAngleLimit;
  out.done = failed;
  return out;
}

// ---------------------------------------------------------------------------
// Mountain car (continuous)

EnvState MountainCarEnv::reset(Rng& rng) const {
  EnvState s;
  s.values.resize(2);
  s.values << rng.uniform(-0.6, -0.4), 0.0;
  s.step_index = 0;
  return s;
}

StepResult MountainCarEnv::step(const EnvState& state, double action, Rng& /*rng*/) const {
  const double force = clamp_action(*this, action);
  double position = state.values[0];
  double velocity = state.values[1];

  velocity += force * 0.0015 - 0.0025 * std::cos(3.0 * position);
  velocity = std::clamp(velocity, -0.07, 0.07);
  position += velocity;
  position = std::clamp(position, -1.2, 0.6);
  if (position <= -1.2 && velocity < 0.0) velocity = 0.0;

  StepResult out;
  out.state.values.resize(2);
  out.state.values << position, velocity;
  out.state.step_index = state.step_index + 1;
  const bool at_goal = position >= 0.45;
  out.reward = -0.1 * force * force + (at_goal ? 100.0 : 0.0);
  out.done = at_goal;
  return out;
}

// ---------------------------------------------------------------------------
// Pendulum

namespace {
double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}
}  // namespace

EnvState PendulumEnv::reset(Rng& rng) const {
  EnvState s;
  s.values.resize(2);
  s.values << rng.uniform(-M_PI, M_PI), rng.uniform(-1.0, 1.0);
  s.step_index = 0;
  return s;
}

StepResult PendulumEnv::step(const EnvState& state, double action, Rng& /*rng*/) const {
  const double torque = clamp_action(*this, action);
  const double g = 10.0;
  const double mass = 1.0;
  const double length = 1.0;
  const double dt = 0.05;

  double angle = state.values[0];
  double vel = state.values[1];

  const double norm_angle = wrap_angle(angle);
  const double cost =
      norm_angle * norm_angle + 0.1 * vel * vel + 0.001 * torque * torque;

  vel += (3.0 * g / (2.0 * length) * std::sin(angle) +
          3.0 / (mass * length * length) * torque) *
         dt;
  vel = std::clamp(vel, -8.0, 8.0);
  angle += vel * dt;

  StepResult out;
  out.state.values.resize(2);
  out.state.values << angle, vel;
  out.state.step_index = state.step_index + 1;
  out.reward = -cost;
  out.done = false;
  return out;
}

Vector PendulumEnv::observe(const EnvState& state) const {
  Vector obs(3);
  obs << std::cos(state.values[0]), std::sin(state.values[0]), state.values[1];
  return obs;
}

double PendulumEnv::reward_bound() const {
  return M_PI * M_PI + 0.1 * 64.0 + 0.001 * 4.0;
}

// ---------------------------------------------------------------------------
// Tabular MDP

void TabularMdp::validate() const {
  if (n_states < 1 || n_actions < 1 || horizon < 1) {
    throw std::invalid_argument("tabular mdp: sizes must be positive");
  }
  if (initial_dist.size() != n_states ||
      transition.rows() != static_cast<long>(n_states) * n_actions ||
      transition.cols() != n_states || reward.rows() != n_states ||
      reward.cols() != n_actions) {
    throw std::invalid_argument("tabular mdp: table shape mismatch");
  }
  if (std::abs(initial_dist.sum() - 1.0) > 1e-12 ||
      initial_dist.minCoeff() < 0.0) {
    throw std::invalid_argument("tabular mdp: initial distribution invalid");
  }
  for (long row = 0; row < transition.rows(); ++row) {
    if (std::abs(transition.row(row).sum() - 1.0) > 1e-12 ||
        transition.row(row).minCoeff() < 0.0) {
      throw std::invalid_argument("tabular mdp: transition row not stochastic");
    }
  }
}

TabularMdp load_tabular_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tabular mdp file: " + path);
  TabularMdp mdp;
  in >> mdp.n_states >> mdp.n_actions >> mdp.horizon;
  if (!in) throw std::runtime_error("tabular mdp file: bad header: " + path);
  mdp.initial_dist.resize(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) in >> mdp.initial_dist[s];
  mdp.transition.resize(static_cast<long>(mdp.n_states) * mdp.n_actions,
                        mdp.n_states);
  for (long row = 0; row < mdp.transition.rows(); ++row) {
    for (int s = 0; s < mdp.n_states; ++s) in >> mdp.transition(row, s);
  }
  mdp.reward.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) in >> mdp.reward(s, a);
  }
  if (!in) throw std::runtime_error("tabular mdp file: truncated: " + path);
  mdp.validate();
  return mdp;
}

void save_tabular_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tabular mdp file: " + path);
  out.precision(17);
  out << mdp.n_states << ' ' << mdp.n_actions << ' ' << mdp.horizon << '\n';
  for (int s = 0; s < mdp.n_states; ++s) {
    out << mdp.initial_dist[s] << (s + 1 == mdp.n_states ? '\n' : ' ');
  }
  for (long row = 0; row < mdp.transition.rows(); ++row) {
    for (int s = 0; s < mdp.n_states; ++s) {
      out << mdp.transition(row, s) << (s + 1 == mdp.n_states ? '\n' : ' ');
    }
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      out << mdp.reward(s, a) << (a + 1 == mdp.n_actions ? '\n' : ' ');
    }
  }
}

EnvState TabularEnv::reset(Rng& rng) const {
  std::vector<double> probs(mdp_.n_states);
  for (int s = 0; s < mdp_.n_states; ++s) probs[s] = mdp_.initial_dist[s];
  EnvState state;
  state.values.resize(1);
  state.values[0] = rng.categorical(probs);
  state.step_index = 0;
  return state;
}

StepResult TabularEnv::step(const EnvState& state, double action, Rng& rng) const {
  if (!std::isfinite(action)) {
    throw std::invalid_argument("step: non-finite action on tabular mdp");
  }
  const int a = std::clamp(static_cast<int>(std::lround(action)), 0,
                           mdp_.n_actions - 1);
  const int s = static_cast<int>(state.values[0]);
  std::vector<double> probs(mdp_.n_states);
  for (int next = 0; next < mdp_.n_states; ++next) {
    probs[next] = mdp_.transition(static_cast<long>(s) * mdp_.n_actions + a, next);
  }
  StepResult out;
  out.state.values.resize(1);
  out.state.values[0] = rng.categorical(probs);
  out.state.step_index = state.step_index + 1;
  out.reward = mdp_.reward(s, a);
  out.done = out.state.step_index >= mdp_.horizon;
  return out;
}

std::unique_ptr<Environment> make_environment(const std::string& id) {
  if (id == "cartpole") return std::make_unique<CartPoleEnv>();
  if (id == "mountaincar") return std::make_unique<MountainCarEnv>();
  if (id == "pendulum") return std::make_unique<PendulumEnv>();
  if (id.rfind("tabular:", 0) == 0) {
    return std::make_unique<TabularEnv>(load_tabular_mdp(id.substr(8)));
  }
  throw std::invalid_argument("unknown environment id: " + id);
}

std::vector<std::pair<Trajectory, double>> enumerate_trajectories(
    const TabularMdp& mdp, int horizon) {
  mdp.validate();
  if (horizon < 1) throw std::invalid_argument("enumerate: horizon must be >= 1");
  double leaves = mdp.n_states;
  for (int h = 0; h < horizon; ++h) {
    leaves *= static_cast<double>(mdp.n_states) * mdp.n_actions;
    if (leaves > 1e6) {
      throw std::runtime_error("enumerate: trajectory space exceeds 1e6 leaves");
    }
  }

  std::vector<std::pair<Trajectory, double>> out;
  Trajectory traj;
  Vector obs(1);

  // Depth-first over (action, next state) branches with nonzero probability.
  auto recurse = [&](auto&& self, int state, double prob, int depth) -> void {
    if (depth == horizon) {
      out.emplace_back(traj, prob);
      return;
    }
    for (int a = 0; a < mdp.n_actions; ++a) {
      const long row = static_cast<long>(state) * mdp.n_actions + a;
      for (int next = 0; next < mdp.n_states; ++next) {
        const double p = mdp.transition(row, next);
        if (p == 0.0) continue;
        traj.actions.push_back(a);
        traj.rewards.push_back(mdp.reward(state, a));
        obs[0] = next;
        traj.states.push_back(obs);
        self(self, next, prob * p, depth + 1);
        traj.states.pop_back();
        traj.rewards.pop_back();
        traj.actions.pop_back();
      }
    }
  };

  for (int s0 = 0; s0 < mdp.n_states; ++s0) {
    const double p0 = mdp.initial_dist[s0];
    if (p0 == 0.0) continue;
    obs[0] = s0;
    traj.states.push_back(obs);
    recurse(recurse, s0, p0, 0);
    traj.states.pop_back();
  }
  return out;
}

}  // namespace pglab
