#include "edq/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace edq {

std::vector<EvalPoint> build_test_set(const TrajectorySampler& sample_target, std::size_t n,
                                      RngStream& rng) {
  if (n == 0) throw std::invalid_argument("build_test_set: n must be positive");
  std::vector<EvalPoint> points;
  for (std::size_t i = 0; i < n; ++i) {
    auto [traj, outcome] = sample_target(rng);
    for (const Event& e : traj.events())
      points.push_back({traj.up_to(e.time), e.time, outcome});
  }
  return points;
}

std::vector<EvalPoint> build_test_set(const ProcessSpec& spec_target, std::size_t n,
                                      RngStream& rng) {
  return build_test_set(
      [&spec_target](RngStream& r) {
        Trajectory traj = sample_trajectory(spec_target, r);
        const double y = outcome_sum(traj);
        return std::make_pair(std::move(traj), y);
      },
      n, rng);
}

double normalized_rmse(const std::vector<double>& preds, const std::vector<double>& labels) {
  if (preds.size() != labels.size() || preds.size() < 2)
    throw std::invalid_argument("normalized_rmse: need matched lists of length >= 2");
  const double n = static_cast<double>(labels.size());
  double mean = 0.0;
  for (double y : labels) mean += y;
  mean /= n;
  double var = 0.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    var += (labels[i] - mean) * (labels[i] - mean);
    mse += (preds[i] - labels[i]) * (preds[i] - labels[i]);
  }
  var /= n;
  mse /= n;
  if (var <= 0.0) throw std::invalid_argument("normalized_rmse: constant labels");
  return std::sqrt(mse) / std::sqrt(var);
}

double evaluate_nrmse(const QFunction& q, const std::vector<EvalPoint>& points) {
  std::vector<double> preds;
  std::vector<double> labels;
  preds.reserve(points.size());
  labels.reserve(points.size());
  for (const EvalPoint& p : points) {
    preds.push_back(q.predict(p.prefix, p.time));
    labels.push_back(p.label);
  }
  return normalized_rmse(preds, labels);
}

namespace {

std::string rate_name(double rate) {
  std::string s = std::to_string(rate);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return "lambda=" + s;
}

std::uint64_t rate_bits(double rate) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(rate));
  std::memcpy(&bits, &rate, sizeof(bits));
  return bits;
}

double run_cell_seed(const GridCell& cell, const GridConfig& cfg, std::uint64_t seed,
                     std::size_t* n_prefixes) {
  FailureSimParams obs_params = cfg.base;
  obs_params.rate = cell.rate_obs;
  FailureSimParams int_params = cfg.base;
  int_params.rate = cell.rate_int;

  RngStream data_rng = RngStream(seed).split("train-data").split(rate_bits(cell.rate_obs));
  Dataset data;
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    auto [traj, y] = simulate_patient(obs_params, data_rng);
    data.add(std::move(traj), y);
  }

  // Test draws depend only on (seed, target rate) so every estimator in a
  // setting sees the same points.
  RngStream test_rng = RngStream(seed).split("test-data").split(rate_bits(cell.rate_int));
  const auto points = build_test_set(
      [&int_params](RngStream& r) { return simulate_patient(int_params, r); }, cfg.n_test,
      test_rng);
  if (n_prefixes) *n_prefixes = points.size();

  TrainConfig train = cfg.train;
  train.seed = RngStream(seed).split("train").split(estimator_name(cell.estimator)).next_u64();
  const Policy target =
      make_failure_policy(cell.rate_int, int_params.threshold, int_params.max_treatments);
  TrainResult result = [&] {
    switch (cell.estimator) {
      case EstimatorKind::Edq: return train_edq(data, target, train);
      case EstimatorKind::FqeDiscretized: return train_fqe_discretized(data, target, train);
      case EstimatorKind::Erm: return train_erm(data, train);
    }
    throw std::logic_error("run_cell_seed: unknown estimator");
  }();
  return evaluate_nrmse(result.q, points);
}

}  // namespace

std::vector<EvalReport> run_grid(const std::vector<GridCell>& cells, const GridConfig& cfg) {
  // A standard error over seeds needs at least two of them.
  if (cfg.seeds.size() < 2) throw std::invalid_argument("run_grid: need at least 2 seeds");
  struct Job {
    std::size_t cell = 0;
    std::size_t seed_idx = 0;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({c, s});

  std::vector<double> nrmse(jobs.size(), 0.0);
  std::vector<std::size_t> prefixes(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      try {
        nrmse[j] = run_cell_seed(cells[jobs[j].cell], cfg, cfg.seeds[jobs[j].seed_idx],
                                 &prefixes[j]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, cfg.jobs);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error("run_grid: " + first_error);

  std::vector<EvalReport> reports;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    EvalReport rep;
    rep.estimator = estimator_name(cells[c].estimator);
    rep.setting_obs = rate_name(cells[c].rate_obs);
    rep.setting_int = rate_name(cells[c].rate_int);
    rep.n_test = cfg.n_test;
    rep.seeds = cfg.seeds;
    double sum = 0.0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].cell != c) continue;
      rep.per_seed_nrmse.push_back(nrmse[j]);
      rep.n_prefixes = prefixes[j];
      sum += nrmse[j];
    }
    const double k = static_cast<double>(rep.per_seed_nrmse.size());
    rep.nrmse_mean = sum / k;
    double var = 0.0;
    for (double v : rep.per_seed_nrmse) var += (v - rep.nrmse_mean) * (v - rep.nrmse_mean);
    rep.nrmse_se = std::sqrt(var / (k - 1.0)) / std::sqrt(k);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_results_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "estimator,setting_obs,setting_int,seed,nrmse,n_prefixes\n";
  for (const EvalReport& r : reports)
    for (std::size_t i = 0; i < r.per_seed_nrmse.size(); ++i)
      out << r.estimator << ',' << r.setting_obs << ',' << r.setting_int << ',' << r.seeds[i]
          << ',' << r.per_seed_nrmse[i] << ',' << r.n_prefixes << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_aggregate_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# nrmse_se is the standard error over seeds\n";
  out << "estimator,setting_obs,setting_int,nrmse_mean,nrmse_se,n_seeds\n";
  for (const EvalReport& r : reports)
    out << r.estimator << ',' << r.setting_obs << ',' << r.setting_int << ',' << r.nrmse_mean
        << ',' << r.nrmse_se << ',' << r.seeds.size() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace edq
