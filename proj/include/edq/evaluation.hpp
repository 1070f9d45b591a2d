#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edq/estimators.hpp"
#include "edq/process.hpp"
#include "edq/rng.hpp"
#include "edq/simulators.hpp"

namespace edq {

struct EvalPoint {
  Trajectory prefix;
  double time = 0.0;
  double label = 0.0;  // the trajectory's total outcome
};

// Draws one full trajectory and its outcome.
using TrajectorySampler = std::function<std::pair<Trajectory, double>(RngStream&)>;

// Samples n trajectories under the target law and emits one labeled prefix
// per event time.
std::vector<EvalPoint> build_test_set(const TrajectorySampler& sample_target, std::size_t n,
                                      RngStream& rng);
std::vector<EvalPoint> build_test_set(const ProcessSpec& spec_target, std::size_t n,
                                      RngStream& rng);

// Root-mean-squared error divided by the population standard deviation of the
// labels, so a constant predictor at the label mean scores exactly 1.
double normalized_rmse(const std::vector<double>& preds, const std::vector<double>& labels);

double evaluate_nrmse(const QFunction& q, const std::vector<EvalPoint>& points);

struct GridCell {
  EstimatorKind estimator = EstimatorKind::Edq;
  double rate_obs = 0.0;  // observed-policy exponential delay rate
  double rate_int = 0.0;  // target-policy rate
};

struct EvalReport {
  std::string estimator;
  std::string setting_obs;
  std::string setting_int;
  double nrmse_mean = 0.0;
  double nrmse_se = 0.0;
  std::size_t n_test = 0;
  std::size_t n_prefixes = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_nrmse;
};

struct GridConfig {
  FailureSimParams base;  // rates overridden per cell
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  int jobs = 1;
};

// Trains and evaluates every (cell, seed) pair on the failure simulator.
// Test sets are shared across estimators within a (setting, seed) pair; cells
// run in parallel across `jobs` threads on disjoint RNG streams.
std::vector<EvalReport> run_grid(const std::vector<GridCell>& cells, const GridConfig& cfg);

// Per-seed rows: estimator, setting_obs, setting_int, seed, nrmse, n_prefixes.
void write_results_csv(const std::string& path, const std::vector<EvalReport>& reports);
// Aggregate rows: estimator, setting_obs, setting_int, nrmse_mean, nrmse_se
// (standard error over seeds), n_seeds.
void write_aggregate_csv(const std::string& path, const std::vector<EvalReport>& reports);

}  // namespace edq
