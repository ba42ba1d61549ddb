#pragma once

#include <functional>
#include <utility>

#include "pglab/estimator.hpp"
#include "pglab/mdp.hpp"
#include "pglab/policy.hpp"

namespace pglab {

// Exact J(theta) by full trajectory enumeration.
double exact_performance(const TabularMdp& mdp, const PolicySpec& spec,
                         const Vector& params, double gamma);

// Exact grad J(theta); computed via the score form and, when check_two_forms
// is set, cross-checked against the probability-derivative form to 1e-12.
Vector exact_gradient(const TabularMdp& mdp, const PolicySpec& spec,
                      const Vector& params, double gamma,
                      bool check_two_forms = false);

Vector finite_diff_gradient(const std::function<double(const Vector&)>& fn,
                            const Vector& params, double step = 1e-5);

// Exact mean and trace of covariance of a trajectory estimator under the
// enumerated distribution.
std::pair<Vector, double> estimator_moments(
    const TabularMdp& mdp, const PolicySpec& spec, const Vector& params,
    const std::function<Vector(const Trajectory&)>& estimator, double gamma);

// 2 states, 2 actions, H = 3, seeded random tables with |r| <= 1; paired with
// a softmax policy (d = 4) for all enumeration-based verification.
TabularMdp default_oracle_mdp(std::uint64_t seed = 7);

double rel_err(double a, double b);
double max_rel_err(const Vector& a, const Vector& b);

}  // namespace pglab
