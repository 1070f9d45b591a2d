#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edq/approximator.hpp"
#include "edq/disagreement.hpp"
#include "edq/oracle.hpp"
#include "edq/process.hpp"
#include "edq/rng.hpp"

namespace edq {

struct Dataset {
  double horizon = 0.0;
  std::vector<Trajectory> trajectories;
  std::vector<double> outcomes;

  std::size_t size() const { return trajectories.size(); }
  void add(Trajectory traj, double outcome);
  void validate() const;  // nonempty, shared horizon
};

struct TrainConfig {
  long iterations = 20000;
  std::size_t batch_size = 1;
  double step_size = 1e-3;
  double tau = 0.01;
  // Update-time density on [0, horizon); null means uniform.
  std::function<double(double horizon, RngStream&)> time_sampler;
  double grid_step = 1.0;  // discretization cell width (grid-based training only)
  std::uint64_t seed = 1;
  FeaturizerConfig featurizer;
  std::vector<std::size_t> hidden = {64, 64};
  long diagnostics_every = 200;

  void validate(bool needs_grid) const;
};

struct DiagRow {
  long iteration = 0;
  double loss = 0.0;
  double mean_label = 0.0;
  double mean_delta = 0.0;
};

enum class EstimatorKind { Edq, FqeDiscretized, Erm };

const char* estimator_name(EstimatorKind k);
EstimatorKind estimator_from_name(const std::string& name);

// Trained predictor of the total outcome for a history prefix at time t.
// Bootstrapped estimators carry a future-rewards network and add the realized
// outcome sum; the Monte-Carlo regressor predicts the total directly.
struct QFunction {
  EstimatorKind kind = EstimatorKind::Edq;
  FeaturizerConfig featurizer;
  MlpQ net;

  double predict(const Trajectory& prefix, double t) const;
  // Future-rewards component only (network output).
  double future_value(const Trajectory& prefix, double t) const;
};

struct TrainResult {
  QFunction q;
  std::vector<DiagRow> diagnostics;
};

// One regression label for the earliest-disagreement recursion: outcome mass
// of the spliced window plus a bootstrap read at the disagreement time.
struct EdqLabel {
  double value = 0.0;
  double delta = 0.0;
  Boundary boundary = Boundary::HorizonReached;
  Trajectory spliced;
};

using QueryFn = std::function<double(const Trajectory& prefix, double t)>;

EdqLabel edq_label_detail(const Trajectory& traj, double t, const Policy& target,
                          const QueryFn& q_target, RngStream& rng);
double edq_label(const Trajectory& traj, double t, const Policy& target, const QueryFn& q_target,
                 RngStream& rng);

TrainResult train_edq(const Dataset& data, const Policy& target, const TrainConfig& cfg);
TrainResult train_fqe_discretized(const Dataset& data, const Policy& target,
                                  const TrainConfig& cfg);
TrainResult train_erm(const Dataset& data, const TrainConfig& cfg);

// Discrete-time tabular modes over enumerable processes.

// Sampled label for one observed trajectory and update step: rewards until the
// first step where a freshly drawn target action differs from the logged one,
// plus a frozen bootstrap value at the spliced history.
double discrete_edq_label(const DiscreteProcess& proc, const DiscreteTrajectory& traj,
                          std::size_t t, const TabularQ& q_frozen, RngStream& rng);

// Exact expectation-form sweeps; `sweeps` >= horizon reaches the fixed point
// exactly because bootstrap histories are strictly longer than their sources.
TabularQ train_edq_tabular_exact(const DiscreteProcess& proc, int sweeps);
TabularQ train_fqe_tabular_exact(const DiscreteProcess& proc, int sweeps);

// Stochastic tabular training from sampled trajectories with per-key decaying
// step sizes.
TabularQ train_edq_tabular_sampled(const DiscreteProcess& proc, long iterations,
                                   std::uint64_t seed);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagRow>& rows);

}  // namespace edq
