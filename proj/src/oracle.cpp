#include "edq/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace edq {

DiscreteHistory DiscreteHistory::with_feature(int x) const {
  if (features.size() != actions.size())
    throw std::logic_error("with_feature: history already holds a pending feature");
  DiscreteHistory h = *this;
  h.features.push_back(x);
  return h;
}

DiscreteHistory DiscreteHistory::with_action(int a) const {
  if (features.size() != actions.size() + 1)
    throw std::logic_error("with_action: no pending feature");
  DiscreteHistory h = *this;
  h.actions.push_back(a);
  return h;
}

std::string DiscreteHistory::key() const {
  std::string k;
  for (std::size_t i = 0; i < features.size(); ++i) {
    k += 'x';
    k += std::to_string(features[i]);
    if (i < actions.size()) {
      k += 'a';
      k += std::to_string(actions[i]);
    }
    k += '.';
  }
  return k;
}

namespace {

void check_dist(const std::vector<double>& p, std::size_t n, const char* what) {
  if (p.size() != n) throw std::runtime_error(std::string(what) + ": wrong row length");
  double s = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v)) throw std::runtime_error(std::string(what) + ": bad entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw std::runtime_error(std::string(what) + ": row does not sum to 1");
}

template <typename F>
void for_each_reachable(const DiscreteProcess& proc, const DiscreteHistory& h, F&& visit) {
  visit(h);
  if (static_cast<int>(h.steps()) >= proc.horizon) return;
  const auto px = proc.feature_dist(h);
  for (int x = 0; x < proc.n_features; ++x) {
    if (px[x] <= 0.0) continue;
    const DiscreteHistory hx = h.with_feature(x);
    const auto pa = proc.policy_obs(hx);
    for (int a = 0; a < proc.n_actions; ++a) {
      if (pa[a] <= 0.0) continue;
      for_each_reachable(proc, hx.with_action(a), visit);
    }
  }
}

}  // namespace

void DiscreteProcess::validate() const {
  if (horizon < 1 || horizon > 5) throw std::invalid_argument("DiscreteProcess: horizon in [1,5]");
  if (n_features < 1 || n_features > 3 || n_actions < 1 || n_actions > 3)
    throw std::invalid_argument("DiscreteProcess: feature/action space caps exceeded");
  for_each_reachable(*this, DiscreteHistory{}, [&](const DiscreteHistory& h) {
    if (static_cast<int>(h.steps()) >= horizon) return;
    const auto px = feature_dist(h);
    check_dist(px, static_cast<std::size_t>(n_features), "feature_dist");
    for (int x = 0; x < n_features; ++x) {
      if (px[x] <= 0.0) continue;
      const DiscreteHistory hx = h.with_feature(x);
      const double y = reward(hx);
      if (!std::isfinite(y)) throw std::runtime_error("reward: non-finite value");
      const auto po = policy_obs(hx);
      const auto pt = policy_target(hx);
      check_dist(po, static_cast<std::size_t>(n_actions), "policy_obs");
      check_dist(pt, static_cast<std::size_t>(n_actions), "policy_target");
      for (int a = 0; a < n_actions; ++a) {
        if (pt[a] > 0.0 && po[a] <= 0.0)
          throw std::runtime_error("overlap violated: target action unsupported under observed");
      }
    }
  });
}

DiscreteProcess random_discrete_process(int horizon, int n_features, int n_actions,
                                        std::uint64_t seed) {
  auto hashed01 = [seed](const std::string& key, const char* tag, int idx) {
    RngStream s = RngStream(seed).split(tag).split(key).split(static_cast<std::uint64_t>(idx));
    return s.u01();
  };
  auto make_dist = [hashed01](const std::string& key, const char* tag, int n) {
    std::vector<double> p(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = 0.3 + hashed01(key, tag, i);  // bounded away from zero
      total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
  };
  DiscreteProcess proc;
  proc.horizon = horizon;
  proc.n_features = n_features;
  proc.n_actions = n_actions;
  proc.feature_dist = [make_dist, n_features](const DiscreteHistory& h) {
    return make_dist(h.key(), "x", n_features);
  };
  proc.policy_obs = [make_dist, n_actions](const DiscreteHistory& h) {
    return make_dist(h.key(), "obs", n_actions);
  };
  proc.policy_target = [make_dist, n_actions](const DiscreteHistory& h) {
    return make_dist(h.key(), "tgt", n_actions);
  };
  proc.reward = [hashed01](const DiscreteHistory& h) {
    return 2.0 * hashed01(h.key(), "y", 0) - 0.5;
  };
  return proc;
}

DiscreteHistory DiscreteTrajectory::prefix(std::size_t t) const {
  DiscreteHistory h;
  h.features.assign(features.begin(), features.begin() + t);
  h.actions.assign(actions.begin(), actions.begin() + t);
  return h;
}

double DiscreteTrajectory::reward_sum_after(std::size_t t) const {
  double s = 0.0;
  for (std::size_t i = t; i < rewards.size(); ++i) s += rewards[i];
  return s;
}

DiscreteTrajectory sample_discrete_trajectory(const DiscreteProcess& proc, RngStream& rng,
                                              Measure under) {
  DiscreteTrajectory traj;
  DiscreteHistory h;
  for (int t = 0; t < proc.horizon; ++t) {
    const auto px = proc.feature_dist(h);
    const int x = static_cast<int>(rng.categorical(px));
    const DiscreteHistory hx = h.with_feature(x);
    const double y = proc.reward(hx);
    const auto pa = under == Measure::Observed ? proc.policy_obs(hx) : proc.policy_target(hx);
    const int a = static_cast<int>(rng.categorical(pa));
    traj.features.push_back(x);
    traj.rewards.push_back(y);
    traj.actions.push_back(a);
    h = hx.with_action(a);
  }
  return traj;
}

double past_rewards(const DiscreteProcess& proc, const DiscreteHistory& prefix) {
  double s = 0.0;
  DiscreteHistory h;
  for (std::size_t i = 0; i < prefix.actions.size(); ++i) {
    h = h.with_feature(prefix.features[i]);
    s += proc.reward(h);
    h = h.with_action(prefix.actions[i]);
  }
  if (prefix.features.size() > prefix.actions.size()) {
    h = h.with_feature(prefix.features.back());
    s += proc.reward(h);
  }
  return s;
}

namespace {

// Expected future rewards E[Y_{>t} | prefix] under the chosen measure.
double future_value(const DiscreteProcess& proc, const DiscreteHistory& h, Measure under,
                    std::unordered_map<std::string, double>& memo) {
  if (static_cast<int>(h.steps()) >= proc.horizon) return 0.0;
  const std::string memo_key = h.key() + (under == Measure::Target ? "|T" : "|O");
  if (const auto it = memo.find(memo_key); it != memo.end()) return it->second;
  const auto px = proc.feature_dist(h);
  double v = 0.0;
  for (int x = 0; x < proc.n_features; ++x) {
    if (px[x] <= 0.0) continue;
    const DiscreteHistory hx = h.with_feature(x);
    double step = proc.reward(hx);
    const auto pa = under == Measure::Observed ? proc.policy_obs(hx) : proc.policy_target(hx);
    for (int a = 0; a < proc.n_actions; ++a) {
      if (pa[a] <= 0.0) continue;
      step += pa[a] * future_value(proc, hx.with_action(a), under, memo);
    }
    v += px[x] * step;
  }
  memo.emplace(memo_key, v);
  return v;
}

double observed_prefix_probability(const DiscreteProcess& proc, const DiscreteHistory& prefix) {
  double p = 1.0;
  DiscreteHistory h;
  for (std::size_t i = 0; i < prefix.features.size(); ++i) {
    const auto px = proc.feature_dist(h);
    p *= px[prefix.features[i]];
    h = h.with_feature(prefix.features[i]);
    if (i < prefix.actions.size()) {
      const auto pa = proc.policy_obs(h);
      p *= pa[prefix.actions[i]];
      h = h.with_action(prefix.actions[i]);
    }
  }
  return p;
}

}  // namespace

double enumerate_expectation(const DiscreteProcess& proc, const DiscreteHistory& prefix,
                             Measure under) {
  if (observed_prefix_probability(proc, prefix) <= 0.0)
    throw std::runtime_error("enumerate_expectation: prefix has zero observed probability");
  std::unordered_map<std::string, double> memo;
  return past_rewards(proc, prefix) + future_value(proc, prefix, under, memo);
}

namespace {

// Recursive enumeration of the augmented (x, a, a_obs) product space for the
// d-step identity. Agreement branches extend the shared history; a
// disagreement branch conditions on the spliced history ending with the
// target action and switches to the target-measure expectation.
double identity_rhs(const DiscreteProcess& proc, const DiscreteHistory& h, int steps_left,
                    std::unordered_map<std::string, double>& memo) {
  const auto px = proc.feature_dist(h);
  double v = 0.0;
  for (int x = 0; x < proc.n_features; ++x) {
    if (px[x] <= 0.0) continue;
    const DiscreteHistory hx = h.with_feature(x);
    const auto p_tgt = proc.policy_target(hx);
    const auto p_obs = proc.policy_obs(hx);
    double inner = 0.0;
    for (int a = 0; a < proc.n_actions; ++a) {
      if (p_tgt[a] <= 0.0) continue;
      for (int a_obs = 0; a_obs < proc.n_actions; ++a_obs) {
        if (p_obs[a_obs] <= 0.0) continue;
        const double w = p_tgt[a] * p_obs[a_obs];
        if (a != a_obs || steps_left == 1) {
          const DiscreteHistory h_next = hx.with_action(a);
          inner += w * (past_rewards(proc, h_next) +
                        future_value(proc, h_next, Measure::Target, memo));
        } else {
          inner += w * identity_rhs(proc, hx.with_action(a), steps_left - 1, memo);
        }
      }
    }
    v += px[x] * inner;
  }
  return v;
}

}  // namespace

std::pair<double, double> verify_discrete_identity(const DiscreteProcess& proc,
                                                   const DiscreteHistory& prefix, int d) {
  const int remaining = proc.horizon - static_cast<int>(prefix.steps());
  if (d < 1 || d > remaining)
    throw std::invalid_argument("verify_discrete_identity: d out of range");
  std::unordered_map<std::string, double> memo;
  const double lhs = past_rewards(proc, prefix) + future_value(proc, prefix, Measure::Target, memo);
  const double rhs = identity_rhs(proc, prefix, d, memo);
  return {lhs, rhs};
}

namespace {

double fixed_point_value(const DiscreteProcess& proc, const DiscreteHistory& h, TabularQ& q,
                         std::unordered_map<std::string, double>& window_memo);

// Expected window value of the earliest-disagreement recursion: rewards until
// the first step where the target and observed draws differ, plus Q at the
// spliced history. Terminates because history length grows on recursion.
double window_value(const DiscreteProcess& proc, const DiscreteHistory& h, TabularQ& q,
                    std::unordered_map<std::string, double>& memo) {
  const std::string memo_key = h.key();
  if (const auto it = memo.find(memo_key); it != memo.end()) return it->second;
  const auto px = proc.feature_dist(h);
  double v = 0.0;
  for (int x = 0; x < proc.n_features; ++x) {
    if (px[x] <= 0.0) continue;
    const DiscreteHistory hx = h.with_feature(x);
    const double y = proc.reward(hx);
    const auto p_tgt = proc.policy_target(hx);
    const auto p_obs = proc.policy_obs(hx);
    double inner = 0.0;
    for (int a = 0; a < proc.n_actions; ++a) {
      for (int a_obs = 0; a_obs < proc.n_actions; ++a_obs) {
        const double w = p_tgt[a] * p_obs[a_obs];
        if (w <= 0.0) continue;
        if (a != a_obs) {
          inner += w * (y + fixed_point_value(proc, hx.with_action(a), q, memo));
        } else if (static_cast<int>(hx.with_action(a_obs).steps()) >= proc.horizon) {
          inner += w * y;  // horizon reached with agreement: no bootstrap
        } else {
          inner += w * (y + window_value(proc, hx.with_action(a_obs), q, memo));
        }
      }
    }
    v += px[x] * inner;
  }
  memo.emplace(memo_key, v);
  return v;
}

double fixed_point_value(const DiscreteProcess& proc, const DiscreteHistory& h, TabularQ& q,
                         std::unordered_map<std::string, double>& window_memo) {
  const std::string key = h.key();
  if (q.contains(key)) return q.value(key);
  double v = 0.0;
  if (static_cast<int>(h.steps()) < proc.horizon) v = window_value(proc, h, q, window_memo);
  q.set(key, v);
  return v;
}

}  // namespace

TabularQ edq_fixed_point(const DiscreteProcess& proc) {
  TabularQ q;
  std::unordered_map<std::string, double> window_memo;
  for (const DiscreteHistory& h : reachable_histories(proc))
    fixed_point_value(proc, h, q, window_memo);
  return q;
}

double self_consistency_residual(const DiscreteProcess& proc, const DiscreteHistory& prefix,
                                 const TabularQ& q) {
  if (static_cast<int>(prefix.steps()) >= proc.horizon) return 0.0;
  // Recompute the window expectation with bootstrap values read from `q`.
  std::unordered_map<std::string, double> memo;
  struct Eval {
    const DiscreteProcess& proc;
    const TabularQ& q;
    std::unordered_map<std::string, double>& memo;
    double window(const DiscreteHistory& h) {
      const std::string memo_key = h.key();
      if (const auto it = memo.find(memo_key); it != memo.end()) return it->second;
      const auto px = proc.feature_dist(h);
      double v = 0.0;
      for (int x = 0; x < proc.n_features; ++x) {
        if (px[x] <= 0.0) continue;
        const DiscreteHistory hx = h.with_feature(x);
        const double y = proc.reward(hx);
        const auto p_tgt = proc.policy_target(hx);
        const auto p_obs = proc.policy_obs(hx);
        double inner = 0.0;
        for (int a = 0; a < proc.n_actions; ++a) {
          for (int a_obs = 0; a_obs < proc.n_actions; ++a_obs) {
            const double w = p_tgt[a] * p_obs[a_obs];
            if (w <= 0.0) continue;
            const DiscreteHistory h_next = hx.with_action(a != a_obs ? a : a_obs);
            if (a != a_obs) {
              inner += w * (y + q.value(h_next.key()));
            } else if (static_cast<int>(h_next.steps()) >= proc.horizon) {
              inner += w * y;
            } else {
              inner += w * (y + window(h_next));
            }
          }
        }
        v += px[x] * inner;
      }
      memo.emplace(memo_key, v);
      return v;
    }
  } eval{proc, q, memo};
  return eval.window(prefix) - q.value(prefix.key());
}

std::vector<DiscreteHistory> reachable_histories(const DiscreteProcess& proc) {
  std::vector<DiscreteHistory> out;
  for_each_reachable(proc, DiscreteHistory{}, [&](const DiscreteHistory& h) {
    out.push_back(h);
  });
  return out;
}

}  // namespace edq
