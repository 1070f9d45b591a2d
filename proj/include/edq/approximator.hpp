#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "edq/process.hpp"
#include "edq/rng.hpp"

namespace edq {

// sin/cos continuous-time positional embedding with base C = 1e5.
// Coordinate k is sin(t * C^(-k/dim)) for even k, cos(t * C^(-(k-1)/dim)) for
// odd k.
std::vector<double> embed_time(double t, std::size_t dim, double base = 1e5);

struct FeaturizerConfig {
  std::size_t last_k = 16;     // event summaries kept
  std::size_t time_dim = 16;   // embedding dimension (even)
  std::size_t mark_dim = 1;    // mark components per event summary
  double embedding_base = 1e5;

  std::size_t feature_size() const;
};

// Deterministic fixed-length featurization of a history prefix at time t:
// [t embedding | time-since-last-event embedding | last-K event summaries
//  (presence flag, kind one-hot, mark, time embedding), most recent first |
//  per-kind counts | running outcome sum].
std::vector<double> featurize(const Trajectory& history, double t, const FeaturizerConfig& cfg);

// Small fully connected regressor with tanh hidden layers, exact
// backpropagation, and Adam updates. All parameters are 64-bit.
class MlpQ {
 public:
  MlpQ(std::vector<std::size_t> layer_sizes, RngStream& rng);

  double value(std::span<const double> input) const;
  static double value_with(std::span<const double> params,
                           const std::vector<std::size_t>& layers,
                           std::span<const double> input);

  // One squared-loss gradient step on a mini-batch; returns the pre-step
  // mean loss.
  double grad_step(const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& labels, double step_size);
  double grad_step(std::span<const double> input, double label, double step_size);

  // Mean-squared-loss gradient at the current parameters, without updating.
  std::vector<double> loss_gradient(const std::vector<std::vector<double>>& inputs,
                                    const std::vector<double>& labels, double* loss_out) const;

  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }
  const std::vector<std::size_t>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front(); }

 private:
  std::vector<std::size_t> layers_;
  std::vector<double> params_;
  // Adam state
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
  long adam_step_ = 0;
};

// Slowly tracking shadow parameter copy: theta' <- tau*theta + (1-tau)*theta'.
class TargetCopy {
 public:
  TargetCopy(const MlpQ& q, double tau);

  void soft_update(const MlpQ& q);
  double value(std::span<const double> input) const;
  const std::vector<double>& params() const { return params_; }
  double tau() const { return tau_; }

 private:
  std::vector<std::size_t> layers_;
  std::vector<double> params_;
  double tau_;
};

// Exact map from canonical discrete-history keys to values. Reads of missing
// keys are errors, not defaults.
class TabularQ {
 public:
  double value(const std::string& key) const;
  void set(const std::string& key, double v) { table_[key] = v; }
  bool contains(const std::string& key) const { return table_.count(key) > 0; }
  const std::map<std::string, double>& table() const { return table_; }
  std::map<std::string, double>& mutable_table() { return table_; }

 private:
  std::map<std::string, double> table_;
};

}  // namespace edq
