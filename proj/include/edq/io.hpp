#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edq/estimators.hpp"
#include "edq/identifiability.hpp"
#include "edq/simulators.hpp"

namespace edq {

// One experiment: a simulator preset, observed/target policy parameters,
// an estimator with its training setup, and evaluation sizes.
struct ExperimentConfig {
  std::string preset = "failure-short";  // failure-short | failure-long | tumor
  FailureSimParams failure;
  TumorSimParams tumor;
  double rate_obs = 0.5;  // failure presets
  double rate_int = 0.5;
  std::pair<double, double> tumor_obs{6.0, 0.75};  // (gamma, beta)
  std::pair<double, double> tumor_int{6.0, 0.75};
  EstimatorKind estimator = EstimatorKind::Edq;
  TrainConfig train;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "out";

  bool is_failure() const { return preset == "failure-short" || preset == "failure-long"; }
  // Canonical serialization used for content hashing.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Parses the JSON config; unknown keys anywhere are hard errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// FNV-1a over the raw bytes.
std::uint64_t content_hash(const std::string& bytes);
std::string read_file(const std::string& path);

// Line-delimited dataset: a header comment with the horizon, then per event
// `traj_id,time,kind,mark...` and per trajectory `traj_id,OUTCOME,y`.
// Reals are hexfloat so round-trips are bit-exact.
void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

// Manifest: JSON with config hash, seed, trajectory count, and the dataset
// file's content hash.
void write_manifest(const std::string& path, const ExperimentConfig& cfg, std::uint64_t seed,
                    std::size_t n_trajectories, std::uint64_t dataset_hash);
struct Manifest {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::size_t n_trajectories = 0;
  std::uint64_t dataset_hash = 0;
};
Manifest read_manifest(const std::string& path);

// Versioned text checkpoint of a trained predictor; hexfloat parameters make
// save/load round-trips bit-identical.
void save_checkpoint(const std::string& path, const QFunction& q, std::uint64_t config_hash);
QFunction load_checkpoint(const std::string& path, std::uint64_t* config_hash = nullptr);

// Graph file: JSON {nodes, edges: [[from, to], ...], unobserved_order}.
LocalIndependenceGraph load_graph(const std::string& path);

}  // namespace edq
