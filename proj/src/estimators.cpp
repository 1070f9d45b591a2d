#include "edq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace edq {

void Dataset::add(Trajectory traj, double outcome) {
  if (trajectories.empty() && horizon == 0.0) horizon = traj.horizon();
  if (traj.horizon() != horizon)
    throw std::invalid_argument("Dataset: trajectory horizon mismatch");
  trajectories.push_back(std::move(traj));
  outcomes.push_back(outcome);
}

void Dataset::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("Dataset: empty");
  if (trajectories.size() != outcomes.size())
    throw std::logic_error("Dataset: outcome count mismatch");
  for (const Trajectory& t : trajectories)
    if (t.horizon() != horizon) throw std::invalid_argument("Dataset: horizon mismatch");
}

void TrainConfig::validate(bool needs_grid) const {
  if (iterations <= 0) throw std::invalid_argument("TrainConfig: iterations must be positive");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch size must be positive");
  if (!(step_size > 0.0)) throw std::invalid_argument("TrainConfig: step size must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("TrainConfig: tau in (0, 1]");
  if (needs_grid && !(grid_step > 0.0))
    throw std::invalid_argument("TrainConfig: grid step must be positive");
  if (hidden.empty()) throw std::invalid_argument("TrainConfig: need at least one hidden layer");
}

const char* estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Edq: return "edq";
    case EstimatorKind::FqeDiscretized: return "fqe";
    case EstimatorKind::Erm: return "erm";
  }
  throw std::logic_error("estimator_name");
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "edq") return EstimatorKind::Edq;
  if (name == "fqe") return EstimatorKind::FqeDiscretized;
  if (name == "erm") return EstimatorKind::Erm;
  throw std::invalid_argument("unknown estimator: " + name);
}

double QFunction::future_value(const Trajectory& prefix, double t) const {
  const auto feats = featurize(prefix, t, featurizer);
  return net.value(feats);
}

double QFunction::predict(const Trajectory& prefix, double t) const {
  const double v = future_value(prefix, t);
  return kind == EstimatorKind::Erm ? v : v + outcome_sum(prefix);
}

EdqLabel edq_label_detail(const Trajectory& traj, double t, const Policy& target,
                          const QueryFn& q_target, RngStream& rng) {
  if (t >= traj.horizon()) throw std::invalid_argument("edq_label: t must precede the horizon");
  AugmentedSample s = sample_augmented(traj, target, t, rng);
  EdqLabel out;
  out.delta = s.delta;
  out.boundary = s.boundary;
  out.spliced = splice(traj, s.target_treatments, t, s.delta);
  out.value = outcome_sum(out.spliced, t);
  if (s.boundary != Boundary::HorizonReached) out.value += q_target(out.spliced, t + s.delta);
  return out;
}

double edq_label(const Trajectory& traj, double t, const Policy& target, const QueryFn& q_target,
                 RngStream& rng) {
  return edq_label_detail(traj, t, target, q_target, rng).value;
}

namespace {

std::vector<std::size_t> layer_sizes(const TrainConfig& cfg) {
  std::vector<std::size_t> layers{cfg.featurizer.feature_size()};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(1);
  return layers;
}

double draw_update_time(const TrainConfig& cfg, double horizon, RngStream& rng) {
  double t = cfg.time_sampler ? cfg.time_sampler(horizon, rng) : rng.uniform(0.0, horizon);
  if (t < 0.0 || t >= horizon)
    throw std::runtime_error("train: time sampler left [0, horizon)");
  return t;
}

using LabelFn = std::function<std::pair<double, double>(std::size_t traj_index, double t,
                                                        const TargetCopy& frozen, RngStream& rng)>;

// Shared stochastic-regression loop: draw (trajectory, time), build a label
// against the frozen copy, take one gradient step, soft-update the copy.
TrainResult train_loop(const Dataset& data, const TrainConfig& cfg, EstimatorKind kind,
                       const LabelFn& make_label) {
  data.validate();
  RngStream root(cfg.seed);
  RngStream init_rng = root.split("init");
  TrainResult result{QFunction{kind, cfg.featurizer, MlpQ(layer_sizes(cfg), init_rng)}, {}};
  TargetCopy frozen(result.q.net, cfg.tau);
  RngStream loop_rng = root.split("loop");

  std::vector<std::vector<double>> inputs(cfg.batch_size);
  std::vector<double> labels(cfg.batch_size);
  for (long iter = 0; iter < cfg.iterations; ++iter) {
    double label_sum = 0.0;
    double delta_sum = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t i = loop_rng.uniform_index(data.size());
      const double t = draw_update_time(cfg, data.horizon, loop_rng);
      const auto [label, delta] = make_label(i, t, frozen, loop_rng);
      inputs[b] = featurize(data.trajectories[i].up_to(t), t, cfg.featurizer);
      labels[b] = label;
      label_sum += label;
      delta_sum += delta;
    }
    double loss;
    try {
      loss = result.q.net.grad_step(inputs, labels, cfg.step_size);
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at iteration " + std::to_string(iter) + ": " +
                               e.what());
    }
    frozen.soft_update(result.q.net);
    if (cfg.diagnostics_every > 0 && iter % cfg.diagnostics_every == 0) {
      const double n = static_cast<double>(cfg.batch_size);
      result.diagnostics.push_back({iter, loss, label_sum / n, delta_sum / n});
    }
  }
  return result;
}

}  // namespace

TrainResult train_edq(const Dataset& data, const Policy& target, const TrainConfig& cfg) {
  cfg.validate(false);
  const FeaturizerConfig feat = cfg.featurizer;
  return train_loop(data, cfg, EstimatorKind::Edq,
                    [&data, &target, feat](std::size_t i, double t, const TargetCopy& frozen,
                                           RngStream& rng) {
                      const QueryFn q = [&frozen, &feat](const Trajectory& prefix, double tq) {
                        return frozen.value(featurize(prefix, tq, feat));
                      };
                      const EdqLabel lab =
                          edq_label_detail(data.trajectories[i], t, target, q, rng);
                      return std::make_pair(lab.value, lab.delta);
                    });
}

namespace {

// Probability of at least one target treatment in (t, t_end] with the history
// frozen at `hist`, by midpoint integration of the intensity.
double cell_treatment_probability(const Policy& target, const Trajectory& hist, double t,
                                  double t_end) {
  const int n = 8;
  const double h = (t_end - t) / n;
  double integral = 0.0;
  for (int k = 0; k < n; ++k)
    integral += h * target.intensity.evaluate(t + (k + 0.5) * h, hist);
  return 1.0 - std::exp(-integral);
}

}  // namespace

TrainResult train_fqe_discretized(const Dataset& data, const Policy& target,
                                  const TrainConfig& cfg) {
  cfg.validate(true);
  const FeaturizerConfig feat = cfg.featurizer;
  const double h = cfg.grid_step;
  const double T = data.horizon;
  const auto n_cells = static_cast<std::size_t>(std::ceil(T / h - 1e-12));
  TrainConfig grid_cfg = cfg;
  // Snap update times to the grid.
  grid_cfg.time_sampler = [h, n_cells](double, RngStream& rng) {
    return static_cast<double>(rng.uniform_index(n_cells)) * h;
  };
  return train_loop(
      data, grid_cfg, EstimatorKind::FqeDiscretized,
      [&data, &target, feat, h, T](std::size_t i, double t, const TargetCopy& frozen,
                                   RngStream& rng) {
        const Trajectory& base = data.trajectories[i];
        const double t_end = std::min(t + h, T);
        const Trajectory prefix = base.up_to(t);
        double label = 0.0;
        Trajectory forward = prefix;
        const Trajectory window = base.between(t, t_end);
        for (const Event& e : window.events()) {
          if (e.kind == EventKind::Feature || e.kind == EventKind::Outcome) {
            forward.append(e);
            if (e.kind == EventKind::Outcome && !e.mark.empty()) label += e.mark[0];
          }
        }
        if (t_end < T) {
          // Treatment for the cell resampled from the discretized target
          // policy: Bernoulli(1 - exp(-integrated intensity)).
          const double p = cell_treatment_probability(target, prefix, t, t_end);
          if (rng.bernoulli(p)) {
            Event treat{t_end, EventKind::Treatment,
                        target.mark_sampler(t_end, prefix, rng)};
            forward.append(treat);
          }
          // A cell-end treatment tying an event exactly at t_end gets nudged
          // one ulp past it; read the bootstrap at the nudged time.
          const double t_read =
              forward.empty() ? t_end : std::max(t_end, forward.events().back().time);
          label += frozen.value(featurize(forward, t_read, feat));
        }
        return std::make_pair(label, t_end - t);
      });
}

TrainResult train_erm(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate(false);
  return train_loop(data, cfg, EstimatorKind::Erm,
                    [&data](std::size_t i, double t, const TargetCopy&, RngStream&) {
                      return std::make_pair(data.outcomes[i], data.horizon - t);
                    });
}

double discrete_edq_label(const DiscreteProcess& proc, const DiscreteTrajectory& traj,
                          std::size_t t, const TabularQ& q_frozen, RngStream& rng) {
  if (static_cast<int>(t) >= proc.horizon)
    throw std::invalid_argument("discrete_edq_label: t past the horizon");
  DiscreteHistory h = traj.prefix(t);
  double label = 0.0;
  for (std::size_t s = t; s < static_cast<std::size_t>(proc.horizon); ++s) {
    const DiscreteHistory hx = h.with_feature(traj.features[s]);
    label += proc.reward(hx);
    const auto p_tgt = proc.policy_target(hx);
    const int a = static_cast<int>(rng.categorical(p_tgt));
    const int a_obs = traj.actions[s];
    const DiscreteHistory h_next = hx.with_action(a);
    if (a != a_obs) {
      if (static_cast<int>(h_next.steps()) < proc.horizon) label += q_frozen.value(h_next.key());
      break;
    }
    if (static_cast<int>(h_next.steps()) >= proc.horizon) break;
    h = h_next;
  }
  return label;
}

namespace {

// Expected earliest-disagreement label at h with bootstrap reads from `q`.
double expected_label(const DiscreteProcess& proc, const DiscreteHistory& h, const TabularQ& q) {
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
        const DiscreteHistory h_next = hx.with_action(a);
        const bool terminal = static_cast<int>(h_next.steps()) >= proc.horizon;
        if (a != a_obs) {
          inner += w * (y + (terminal ? 0.0 : q.value(h_next.key())));
        } else if (terminal) {
          inner += w * y;
        } else {
          inner += w * (y + expected_label(proc, h_next, q));
        }
      }
    }
    v += px[x] * inner;
  }
  return v;
}

TabularQ zero_initialized(const DiscreteProcess& proc) {
  TabularQ q;
  for (const DiscreteHistory& h : reachable_histories(proc)) q.set(h.key(), 0.0);
  return q;
}

}  // namespace

TabularQ train_edq_tabular_exact(const DiscreteProcess& proc, int sweeps) {
  if (sweeps <= 0) throw std::invalid_argument("train_edq_tabular_exact: sweeps must be positive");
  TabularQ q = zero_initialized(proc);
  const auto histories = reachable_histories(proc);
  for (int s = 0; s < sweeps; ++s) {
    TabularQ next = q;
    for (const DiscreteHistory& h : histories) {
      if (static_cast<int>(h.steps()) >= proc.horizon) continue;
      next.set(h.key(), expected_label(proc, h, q));
    }
    q = next;
  }
  return q;
}

TabularQ train_fqe_tabular_exact(const DiscreteProcess& proc, int sweeps) {
  if (sweeps <= 0) throw std::invalid_argument("train_fqe_tabular_exact: sweeps must be positive");
  TabularQ q = zero_initialized(proc);
  const auto histories = reachable_histories(proc);
  for (int s = 0; s < sweeps; ++s) {
    TabularQ next = q;
    for (const DiscreteHistory& h : histories) {
      if (static_cast<int>(h.steps()) >= proc.horizon) continue;
      const auto px = proc.feature_dist(h);
      double v = 0.0;
      for (int x = 0; x < proc.n_features; ++x) {
        if (px[x] <= 0.0) continue;
        const DiscreteHistory hx = h.with_feature(x);
        double step = proc.reward(hx);
        const auto p_tgt = proc.policy_target(hx);
        for (int a = 0; a < proc.n_actions; ++a) {
          if (p_tgt[a] <= 0.0) continue;
          const DiscreteHistory h_next = hx.with_action(a);
          if (static_cast<int>(h_next.steps()) < proc.horizon)
            step += p_tgt[a] * q.value(h_next.key());
        }
        v += px[x] * step;
      }
      next.set(h.key(), v);
    }
    q = next;
  }
  return q;
}

TabularQ train_edq_tabular_sampled(const DiscreteProcess& proc, long iterations,
                                   std::uint64_t seed) {
  if (iterations <= 0)
    throw std::invalid_argument("train_edq_tabular_sampled: iterations must be positive");
  TabularQ q = zero_initialized(proc);
  std::map<std::string, long> visits;
  RngStream rng = RngStream(seed).split("tabular");
  for (long it = 0; it < iterations; ++it) {
    const DiscreteTrajectory traj = sample_discrete_trajectory(proc, rng, Measure::Observed);
    const auto t = rng.uniform_index(static_cast<std::size_t>(proc.horizon));
    const DiscreteHistory h = traj.prefix(t);
    const std::string key = h.key();
    const double label = discrete_edq_label(proc, traj, t, q, rng);
    const long n = ++visits[key];
    const double step = 1.0 / std::pow(static_cast<double>(n), 0.85);
    q.set(key, q.value(key) + step * (label - q.value(key)));
  }
  return q;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,loss,mean_label,mean_delta\n";
  for (const DiagRow& r : rows)
    out << r.iteration << ',' << r.loss << ',' << r.mean_label << ',' << r.mean_delta << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace edq
