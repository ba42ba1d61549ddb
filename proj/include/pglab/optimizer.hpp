#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pglab/estimator.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

namespace pglab {

struct ConstraintSet {
  enum class Kind { Unconstrained, L2Ball, Box } kind = Kind::Unconstrained;
  Vector center;          // ball
  double radius = 0.0;    // ball
  Vector lower, upper;    // box

  static ConstraintSet unconstrained() { return {}; }
  static ConstraintSet l2_ball(Vector center, double radius);
  static ConstraintSet box(Vector lower, Vector upper);
};

Vector project(const Vector& theta, const ConstraintSet& constraint);

// G_eta(theta) = (P(theta + eta * grad) - theta) / eta; equals grad bitwise
// when unconstrained.
Vector gradient_mapping(const Vector& theta, const Vector& grad, double eta,
                        const ConstraintSet& constraint);

enum class OutputRule { Last, Uniform };

struct SrvrPgConfig {
  int epochs = 1;           // S
  int epoch_len = 1;        // m
  double step_size = 0.01;  // eta
  int snapshot_batch = 1;   // N
  int inner_batch = 1;      // B
  double gamma = 0.99;
  int horizon = 100;
  ConstraintSet constraint;
  EstimatorKind estimator = EstimatorKind::Gpomdp;
  OutputRule output_rule = OutputRule::Last;
  WeightOptions weights;
  // Subtract the batch mean of gamma^h r_h per step from the snapshot-batch
  // estimators (REINFORCE has no per-step form and ignores this).
  bool mean_baseline = true;
  // Rescale any update direction with ||v|| > grad_clip down to that norm
  // before stepping; 0 disables. Applied identically in every run loop.
  double grad_clip = 0.0;

  void validate() const;
};

struct UpdateRecord {
  long long trajectories = 0;  // cumulative episodes consumed
  int epoch = 0;
  int step = 0;                // inner step t (0 = snapshot update)
  double avg_return = 0.0;     // mean undiscounted return over the sampling batch
  double update_norm = 0.0;    // ||v_t||_2
};

struct RunHistory {
  std::vector<UpdateRecord> records;
  std::vector<Vector> iterates;  // parameters after each recorded update
  Vector final_params;
  Vector output_params;
  bool aborted = false;
  std::string abort_reason;

  long long total_trajectories() const {
    return records.empty() ? 0 : records.back().trajectories;
  }
};

RunHistory srvr_pg_run(const SrvrPgConfig& config, const Environment& env,
                       const PolicySpec& spec, const Vector& init_params, Rng& rng);

// Baseline with the epoch-frozen reference gradient; the N snapshot episodes
// are consumed without a policy update, as in the original method.
RunHistory svrpg_run(const SrvrPgConfig& config, const Environment& env,
                     const PolicySpec& spec, const Vector& init_params, Rng& rng);

// Plain projected stochastic ascent with batch N per iteration; `iterations`
// overrides the S*m schedule (epoch_len is ignored).
RunHistory gpomdp_run(const SrvrPgConfig& config, const Environment& env,
                      const PolicySpec& spec, const Vector& init_params, Rng& rng,
                      int iterations);

struct BatchMultipliers {
  double c0 = 1.0, c1 = 1.0, c2 = 1.0, c3 = 1.0;
  std::optional<double> gamma;
};

struct BatchSchedule {
  long long snapshot_batch = 0;  // N
  long long inner_batch = 0;     // B
  long long epoch_len = 0;       // m
  long long epochs = 0;          // S
};

// N = ceil(C0/eps), B = ceil(C1/sqrt(eps)), m = ceil(C2/sqrt(eps)),
// S = ceil(C3/sqrt(eps)); with gamma supplied, N, B, m pick up factors
// (1-gamma)^-3, (1-gamma)^-1, (1-gamma)^-2.
BatchSchedule recommended_batches(double epsilon, const BatchMultipliers& c = {});

// L = M R/(1-gamma)^2 + 2 G^2 R/(1-gamma)^3 and C_g = G R/(1-gamma)^2.
std::pair<double, double> smoothness_constants(double G, double M, double R,
                                               double gamma);

// Closed-form variance bound xi^2 for the PGT estimator under a
// linear-Gaussian policy with bounded rewards and features.
double variance_bound_gaussian(double R, double m_phi, double sigma, double gamma,
                               int horizon);

}  // namespace pglab
