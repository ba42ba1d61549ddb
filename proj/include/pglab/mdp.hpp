#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pglab/rng.hpp"

namespace pglab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Internal environment state; observation may differ (see Environment::observe).
struct EnvState {
  Vector values;
  int step_index = 0;
};

struct Trajectory {
  std::vector<Vector> states;  // observations, length + 1 entries
  std::vector<double> actions;
  std::vector<double> rewards;

  int length() const { return static_cast<int>(actions.size()); }
  double discounted_return(double gamma) const;
  double undiscounted_return() const;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvState reset(Rng& rng) const = 0;
  virtual StepResult step(const EnvState& state, double action, Rng& rng) const = 0;
  virtual Vector observe(const EnvState& state) const = 0;
  virtual int obs_dim() const = 0;
  virtual double action_low() const = 0;
  virtual double action_high() const = 0;
  virtual double reward_bound() const = 0;
  virtual std::string id() const = 0;
};

// Cart-pole balancing with a continuous force in [-10, 10].
// State: [x, x_dot, theta, theta_dot]; +1 reward per surviving step.
class CartPoleEnv final : public Environment {
 public:
  EnvState reset(Rng& rng) const override;
  StepResult step(const EnvState& state, double action, Rng& rng) const override;
  Vector observe(const EnvState& state) const override { return state.values; }
  int obs_dim() const override { return 4; }
  double action_low() const override { return -10.0; }
  double action_high() const override { return 10.0; }
  double reward_bound() const override { return 1.0; }
  std::string id() const override { return "cartpole"; }

  static constexpr double kAngleLimit = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr double kPositionLimit = 2.4;
};

// Continuous mountain car, force in [-1, 1]; -0.1 a^2 per step, +100 at goal.
class MountainCarEnv final : public Environment {
 public:
  EnvState reset(Rng& rng) const override;
  StepResult step(const EnvState& state, double action, Rng& rng) const override;
  Vector observe(const EnvState& state) const override { return state.values; }
  int obs_dim() const override { return 2; }
  double action_low() const override { return -1.0; }
  double action_high() const override { return 1.0; }
  double reward_bound() const override { return 100.0; }
  std::string id() const override { return "mountaincar"; }
};

// Pendulum swing-up, torque in [-2, 2]; internal state (angle, angular velocity),
// observed as (cos, sin, angular velocity).
class PendulumEnv final : public Environment {
 public:
  EnvState reset(Rng& rng) const override;
  StepResult step(const EnvState& state, double action, Rng& rng) const override;
  Vector observe(const EnvState& state) const override;
  int obs_dim() const override { return 3; }
  double action_low() const override { return -2.0; }
  double action_high() const override { return 2.0; }
  double reward_bound() const override;
  std::string id() const override { return "pendulum"; }
};

// Finite MDP with explicit tables; the substrate of the enumeration oracle.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  Vector initial_dist;  // rho, length n_states
  Matrix transition;    // row s*n_actions + a -> distribution over next states
  Matrix reward;        // n_states x n_actions, |r| <= reward_bound

  void validate() const;  // throws std::invalid_argument on malformed tables
  double max_abs_reward() const { return reward.cwiseAbs().maxCoeff(); }
};

TabularMdp load_tabular_mdp(const std::string& path);
void save_tabular_mdp(const TabularMdp& mdp, const std::string& path);

class TabularEnv final : public Environment {
 public:
  explicit TabularEnv(TabularMdp mdp) : mdp_(std::move(mdp)) { mdp_.validate(); }

  EnvState reset(Rng& rng) const override;
  StepResult step(const EnvState& state, double action, Rng& rng) const override;
  Vector observe(const EnvState& state) const override { return state.values; }
  int obs_dim() const override { return 1; }
  double action_low() const override { return 0.0; }
  double action_high() const override { return mdp_.n_actions - 1.0; }
  double reward_bound() const override { return mdp_.max_abs_reward(); }
  std::string id() const override { return "tabular"; }

  const TabularMdp& mdp() const { return mdp_; }

 private:
  TabularMdp mdp_;
};

// Counts episodes handed out; wraps another environment for accounting tests.
class CountingEnv final : public Environment {
 public:
  explicit CountingEnv(const Environment& inner) : inner_(inner) {}

  EnvState reset(Rng& rng) const override {
    ++episodes_;
    return inner_.reset(rng);
  }
  StepResult step(const EnvState& s, double a, Rng& rng) const override {
    ++steps_;
    return inner_.step(s, a, rng);
  }
  Vector observe(const EnvState& s) const override { return inner_.observe(s); }
  int obs_dim() const override { return inner_.obs_dim(); }
  double action_low() const override { return inner_.action_low(); }
  double action_high() const override { return inner_.action_high(); }
  double reward_bound() const override { return inner_.reward_bound(); }
  std::string id() const override { return inner_.id(); }

  long long episodes() const { return episodes_; }
  long long steps() const { return steps_; }

 private:
  const Environment& inner_;
  mutable long long episodes_ = 0;
  mutable long long steps_ = 0;
};

// "cartpole" | "mountaincar" | "pendulum" | "tabular:<path>"
std::unique_ptr<Environment> make_environment(const std::string& id);

// Every length-`horizon` trajectory with its environment probability
// rho(s_0) * prod P(s'|s,a); the policy factor is applied later by the oracle.
// Guarded: (n_states * n_actions)^horizon must not exceed 1e6 leaves.
std::vector<std::pair<Trajectory, double>> enumerate_trajectories(
    const TabularMdp& mdp, int horizon);

}  // namespace pglab
