// Command-line front end: simulate | train | evaluate | verify | graph-check.
// Exit codes: 0 success, 2 config/usage error, 3 verification failure,
// 4 runtime error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edq/estimators.hpp"
#include "edq/evaluation.hpp"
#include "edq/identifiability.hpp"
#include "edq/io.hpp"
#include "edq/oracle.hpp"
#include "edq/simulators.hpp"

namespace {

namespace fs = std::filesystem;
using namespace edq;

TrajectorySampler observed_sampler(const ExperimentConfig& cfg) {
  if (cfg.is_failure()) {
    FailureSimParams p = cfg.failure;
    p.rate = cfg.rate_obs;
    return [p](RngStream& rng) { return simulate_patient(p, rng); };
  }
  TumorSimParams p = cfg.tumor;
  const auto pol = cfg.tumor_obs;
  return [p, pol](RngStream& rng) { return simulate_tumor(p, pol, rng); };
}

TrajectorySampler target_sampler(const ExperimentConfig& cfg) {
  if (cfg.is_failure()) {
    FailureSimParams p = cfg.failure;
    p.rate = cfg.rate_int;
    return [p](RngStream& rng) { return simulate_patient(p, rng); };
  }
  TumorSimParams p = cfg.tumor;
  const auto pol = cfg.tumor_int;
  return [p, pol](RngStream& rng) { return simulate_tumor(p, pol, rng); };
}

Policy target_policy(const ExperimentConfig& cfg) {
  if (cfg.is_failure())
    return make_failure_policy(cfg.rate_int, cfg.failure.threshold, cfg.failure.max_treatments);
  return make_tumor_policy(cfg.tumor, cfg.tumor_int.first, cfg.tumor_int.second);
}

ExperimentConfig load_with_overrides(const std::string& config_path,
                                     const std::optional<std::uint64_t>& seed,
                                     const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seeds = {*seed};
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::uint64_t seed = cfg.seeds.front();
  RngStream rng = RngStream(seed).split("simulate");
  const TrajectorySampler sample = observed_sampler(cfg);
  Dataset data;
  data.horizon = cfg.is_failure() ? cfg.failure.horizon : static_cast<double>(cfg.tumor.horizon);
  for (std::size_t i = 0; i < cfg.n_train; ++i) {
    auto [traj, y] = sample(rng);
    data.add(std::move(traj), y);
  }
  const std::string dataset_path = cfg.out_dir + "/dataset.csv";
  write_dataset(dataset_path, data);
  write_manifest(cfg.out_dir + "/manifest.json", cfg, seed, data.size(),
                 content_hash(read_file(dataset_path)));
  std::cout << "wrote " << dataset_path << " (" << data.size() << " trajectories)\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  const std::string dataset_path = cfg.out_dir + "/dataset.csv";
  const Manifest manifest = read_manifest(cfg.out_dir + "/manifest.json");
  if (manifest.config_hash != cfg.hash())
    throw std::runtime_error("manifest config hash does not match this config");
  if (manifest.dataset_hash != content_hash(read_file(dataset_path)))
    throw std::runtime_error("dataset file does not match its manifest hash");
  Dataset data = read_dataset(dataset_path);

  TrainConfig train = cfg.train;
  train.seed = RngStream(cfg.seeds.front()).split("train").next_u64();
  TrainResult result = [&] {
    switch (cfg.estimator) {
      case EstimatorKind::Edq: return train_edq(data, target_policy(cfg), train);
      case EstimatorKind::FqeDiscretized:
        return train_fqe_discretized(data, target_policy(cfg), train);
      case EstimatorKind::Erm: return train_erm(data, train);
    }
    throw std::logic_error("unknown estimator");
  }();
  save_checkpoint(cfg.out_dir + "/checkpoint.txt", result.q, cfg.hash());
  write_diagnostics_csv(cfg.out_dir + "/diagnostics.csv", result.diagnostics);
  std::cout << "wrote " << cfg.out_dir << "/checkpoint.txt\n";
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
  std::uint64_t ckpt_hash = 0;
  const QFunction q = load_checkpoint(cfg.out_dir + "/checkpoint.txt", &ckpt_hash);
  if (ckpt_hash != cfg.hash())
    throw std::runtime_error("checkpoint config hash does not match this config");
  const TrajectorySampler sample = target_sampler(cfg);

  std::ofstream out(cfg.out_dir + "/results.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open results.csv");
  out.precision(17);
  out << "estimator,setting_obs,setting_int,seed,nrmse,n_prefixes\n";
  const std::string setting_obs = cfg.is_failure() ? std::to_string(cfg.rate_obs)
                                                   : std::to_string(cfg.tumor_obs.first);
  const std::string setting_int = cfg.is_failure() ? std::to_string(cfg.rate_int)
                                                   : std::to_string(cfg.tumor_int.first);
  for (const std::uint64_t seed : cfg.seeds) {
    RngStream rng = RngStream(seed).split("evaluate");
    const auto points = build_test_set(sample, cfg.n_test, rng);
    out << estimator_name(cfg.estimator) << ',' << setting_obs << ',' << setting_int << ','
        << seed << ',' << evaluate_nrmse(q, points) << ',' << points.size() << '\n';
  }
  std::cout << "wrote " << cfg.out_dir << "/results.csv\n";
  return 0;
}

int cmd_verify() {
  int failures = 0;
  auto check = [&failures](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };

  // Discrete-time disagreement identity over random processes.
  double worst_identity = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DiscreteProcess proc = random_discrete_process(3, 2, 2, 1000 + s);
    for (int d = 1; d <= 3; ++d) {
      const auto [lhs, rhs] = verify_discrete_identity(proc, {}, d);
      worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
    }
  }
  check("discrete disagreement identity (max err " + std::to_string(worst_identity) + ")",
        worst_identity < 1e-9);

  // Fixed point equals target-measure enumeration.
  double worst_fp = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DiscreteProcess proc = random_discrete_process(3, 2, 2, 2000 + s);
    const TabularQ q = edq_fixed_point(proc);
    for (const DiscreteHistory& h : reachable_histories(proc)) {
      const double expect =
          enumerate_expectation(proc, h, Measure::Target) - past_rewards(proc, h);
      worst_fp = std::max(worst_fp, std::abs(q.value(h.key()) - expect));
    }
  }
  check("tabular fixed point vs enumeration (max err " + std::to_string(worst_fp) + ")",
        worst_fp < 1e-9);

  // Analytic gradient vs central finite differences.
  RngStream grad_rng(7);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MlpQ net({3, 6, 1}, grad_rng);
    std::vector<double> input(3);
    for (double& v : input) v = grad_rng.uniform(-1.0, 1.0);
    const double label = grad_rng.uniform(-1.0, 1.0);
    double loss = 0.0;
    const auto grad = net.loss_gradient({input}, {label}, &loss);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < grad.size(); i += 7) {
      auto perturbed = [&](double delta) {
        std::vector<double> p = net.params();
        p[i] += delta;
        const double pred = MlpQ::value_with(p, net.layers(), input);
        return (pred - label) * (pred - label);
      };
      const double fd = (perturbed(eps) - perturbed(-eps)) / (2.0 * eps);
      const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
      worst_grad = std::max(worst_grad, std::abs(fd - grad[i]) / denom);
    }
  }
  check("gradient vs finite differences (max rel err " + std::to_string(worst_grad) + ")",
        worst_grad < 1e-5);

  // Soft-update geometric law.
  {
    RngStream rng(11);
    MlpQ net({2, 3, 1}, rng);
    const double tau = 0.25;
    TargetCopy copy(net, tau);
    for (double& p : net.mutable_params()) p += 1.0;
    double d0 = 0.0;
    for (std::size_t i = 0; i < net.params().size(); ++i) {
      const double d = copy.params()[i] - net.params()[i];
      d0 += d * d;
    }
    bool ok = true;
    for (int n = 1; n <= 50; ++n) {
      copy.soft_update(net);
      double dn = 0.0;
      for (std::size_t i = 0; i < net.params().size(); ++i) {
        const double d = copy.params()[i] - net.params()[i];
        dn += d * d;
      }
      const double expected = std::pow(1.0 - tau, n) * std::sqrt(d0);
      if (std::abs(std::sqrt(dn) - expected) > 1e-12 * std::max(1.0, expected)) ok = false;
    }
    check("soft-update geometric decay", ok);
  }

  // Bundled graph verdicts.
  check("example graph eliminable", check_eliminability(eliminable_example_graph()).eliminable);
  check("confounded graph rejected",
        !check_eliminability(confounded_example_graph()).eliminable);

  return failures == 0 ? 0 : 3;
}

int cmd_graph_check(const std::string& path) {
  const LocalIndependenceGraph g = load_graph(path);
  const EliminabilityReport report = check_eliminability(g);
  std::cout << "eliminable: " << (report.eliminable ? "true" : "false") << '\n';
  for (const EliminabilityWitness& w : report.witnesses) {
    std::cout << "  " << w.unobserved << " bullet " << w.bullet << ": "
              << (w.satisfied ? "satisfied" : "failed");
    if (!w.satisfied) {
      std::cout << " (unblocked trails:";
      for (const Trail& t : w.failing_trails) {
        std::cout << ' ';
        for (std::size_t i = 0; i < t.vertices.size(); ++i) {
          if (i > 0) std::cout << (t.forward[i - 1] ? "->" : "<-");
          std::cout << t.vertices[i];
        }
      }
      std::cout << ')';
    }
    std::cout << '\n';
  }
  return report.eliminable ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Earliest-disagreement Q-evaluation laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string graph_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment config JSON");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "override the config's seed list with one seed");
    sub->add_option("--jobs", jobs, "worker threads");
    sub->add_option("--out", out_dir, "output directory override");
  };

  CLI::App* sim = app.add_subcommand("simulate", "write a dataset and manifest");
  add_common(sim, true);
  CLI::App* train = app.add_subcommand("train", "train the configured estimator");
  add_common(train, true);
  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on target draws");
  add_common(eval, true);
  CLI::App* verify = app.add_subcommand("verify", "run the exact-correctness suite");
  CLI::App* graph = app.add_subcommand("graph-check", "check eliminability of a graph file");
  graph->add_option("graph", graph_path, "graph JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) return cmd_verify();
    if (graph->parsed()) return cmd_graph_check(graph_path);
    const ExperimentConfig cfg = load_with_overrides(config_path, seed, out_dir);
    if (sim->parsed()) return cmd_simulate(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_evaluate(cfg);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
