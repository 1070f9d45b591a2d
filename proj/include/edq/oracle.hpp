#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "edq/approximator.hpp"
#include "edq/rng.hpp"

namespace edq {

// Step order within one discrete time unit: feature x_t is drawn, the reward
// y_t is a deterministic function of the history including x_t, then the
// action a_t is drawn conditionally on the same history.
struct DiscreteHistory {
  std::vector<int> features;  // size t or t+1 (mid-step, after drawing x)
  std::vector<int> actions;   // size t

  std::size_t steps() const { return actions.size(); }
  DiscreteHistory with_feature(int x) const;
  DiscreteHistory with_action(int a) const;
  std::string key() const;
};

// Tiny enumerable discrete-time decision process. Conditional tables are
// arbitrary functions of the canonical history; rows must sum to one and the
// target policy must be absolutely continuous w.r.t. the observed one.
struct DiscreteProcess {
  int horizon = 2;     // T
  int n_features = 2;  // |X|
  int n_actions = 2;   // |A|
  std::function<std::vector<double>(const DiscreteHistory&)> feature_dist;
  std::function<double(const DiscreteHistory&)> reward;
  std::function<std::vector<double>(const DiscreteHistory&)> policy_obs;
  std::function<std::vector<double>(const DiscreteHistory&)> policy_target;

  // Checks table shapes, row sums, and overlap over every reachable history.
  void validate() const;
};

enum class Measure { Observed, Target };

// Reproducible random process with all probabilities bounded away from zero,
// so overlap always holds.
DiscreteProcess random_discrete_process(int horizon, int n_features, int n_actions,
                                        std::uint64_t seed);

struct DiscreteTrajectory {
  std::vector<int> features;
  std::vector<double> rewards;
  std::vector<int> actions;

  DiscreteHistory prefix(std::size_t t) const;
  double reward_sum_after(std::size_t t) const;
};

DiscreteTrajectory sample_discrete_trajectory(const DiscreteProcess& proc, RngStream& rng,
                                              Measure under = Measure::Observed);

// Sum of realized rewards along a complete history (derived from the
// deterministic reward tables).
double past_rewards(const DiscreteProcess& proc, const DiscreteHistory& prefix);

// Exact E[Y | prefix] under the chosen measure, by full enumeration of
// trajectory completions. Includes the rewards already realized in the prefix.
double enumerate_expectation(const DiscreteProcess& proc, const DiscreteHistory& prefix,
                             Measure under);

// Exact evaluation of both sides of the d-step disagreement identity:
// lhs = E_P[Y | prefix] under the target measure, rhs = the enumeration over
// the augmented (x, a, a_obs) product space of disagreement-indicator-weighted
// nested expectations plus the all-agree term.
std::pair<double, double> verify_discrete_identity(const DiscreteProcess& proc,
                                                   const DiscreteHistory& prefix, int d);

// Unique solution of the earliest-disagreement self-consistency system, by
// recursion on history length with Q anchored to zero at the horizon. Keys are
// canonical whole-step history keys; values are expected future rewards.
TabularQ edq_fixed_point(const DiscreteProcess& proc);

// Residual of the self-consistency equation at one history under a candidate
// Q; zero (up to enumeration round-off) exactly at the fixed point.
double self_consistency_residual(const DiscreteProcess& proc, const DiscreteHistory& prefix,
                                 const TabularQ& q);

// All whole-step histories reachable with positive probability under the
// observed measure, grouped by increasing length.
std::vector<DiscreteHistory> reachable_histories(const DiscreteProcess& proc);

}  // namespace edq
