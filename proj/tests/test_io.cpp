#include <doctest.h>

#include <cstdio>
#include <string>

#include "edq/io.hpp"
#include "edq/simulators.hpp"

using namespace edq;

namespace {

const char* kMinimalConfig = R"({
  "preset": "failure-short",
  "policy": {"rate_obs": 2.0, "rate_int": 0.2},
  "estimator": "edq",
  "train": {"iterations": 500, "hidden": [16, 16], "last_k": 4, "time_dim": 4},
  "eval": {"n_train": 50, "n_test": 30},
  "seeds": [7]
})";

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("configs parse with overrides applied and defaults elsewhere") {
  const ExperimentConfig cfg = parse_config(kMinimalConfig);
  CHECK(cfg.preset == "failure-short");
  CHECK(cfg.rate_obs == 2.0);
  CHECK(cfg.rate_int == 0.2);
  CHECK(cfg.estimator == EstimatorKind::Edq);
  CHECK(cfg.train.iterations == 500);
  CHECK(cfg.train.hidden == std::vector<std::size_t>{16, 16});
  CHECK(cfg.train.featurizer.last_k == 4);
  CHECK(cfg.n_train == 50);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7});
  CHECK(cfg.failure.horizon == 12.0);      // short preset
  CHECK(cfg.failure.rate == 2.0);          // observed rate flows into the simulator
  CHECK(cfg.train.batch_size == 1);        // untouched default
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS((void)parse_config(R"({"preset": "failure-short", "bogus": 1})"));
  CHECK_THROWS((void)parse_config(R"({"policy": {"rate_obs": 1.0, "rate": 2.0}})"));
  CHECK_THROWS((void)parse_config(R"({"simulator": {"alpha": 1.0, "slope": 2.0}})"));
  CHECK_THROWS((void)parse_config(R"({"train": {"iterations": 10, "lr": 0.1}})"));
  CHECK_THROWS((void)parse_config(R"({"eval": {"n_train": 5, "n": 2}})"));
}

TEST_CASE("bad presets, empty seeds, and degenerate training are rejected") {
  CHECK_THROWS((void)parse_config(R"({"preset": "unknown"})"));
  CHECK_THROWS((void)parse_config(R"({"preset": "failure-short", "seeds": []})"));
  CHECK_THROWS((void)parse_config(R"({"preset": "failure-short", "train": {"iterations": 0}})"));
}

TEST_CASE("tumor configs use the tumor policy and simulator blocks") {
  const ExperimentConfig cfg = parse_config(R"({
    "preset": "tumor",
    "policy": {"gamma_obs": 10.0, "beta_obs": 0.5},
    "simulator": {"rho": 0.1}
  })");
  CHECK(cfg.tumor_obs.first == 10.0);
  CHECK(cfg.tumor_obs.second == 0.5);
  CHECK(cfg.tumor.rho == 0.1);
  // Failure-only keys are rejected under the tumor preset.
  CHECK_THROWS((void)parse_config(R"({"preset": "tumor", "policy": {"rate_obs": 1.0}})"));
}

TEST_CASE("config hashes are stable and sensitive to every field") {
  const ExperimentConfig a = parse_config(kMinimalConfig);
  const ExperimentConfig b = parse_config(kMinimalConfig);
  CHECK(a.hash() == b.hash());
  ExperimentConfig c = a;
  c.rate_int = 0.3;
  CHECK(c.hash() != a.hash());
  ExperimentConfig d = a;
  d.train.iterations = 501;
  CHECK(d.hash() != a.hash());
  ExperimentConfig e = a;
  e.failure.alpha = 1.5;
  CHECK(e.hash() != a.hash());
  // Evaluation sizes and seeds feed the hash too.
  ExperimentConfig f = a;
  f.seeds.push_back(8);
  CHECK(f.hash() != a.hash());
}

TEST_CASE("content hash distinguishes nearby byte strings") {
  CHECK(content_hash("abc") != content_hash("abd"));
  CHECK(content_hash("") != content_hash(" "));
  CHECK(content_hash("abc") == content_hash("abc"));
}

TEST_CASE("datasets round-trip bit-exactly") {
  const FailureSimParams p = failure_preset_short(0.5);
  Dataset data;
  data.horizon = p.horizon;
  RngStream rng(1);
  for (int i = 0; i < 5; ++i) {
    RngStream draw = rng.split(static_cast<std::uint64_t>(i));
    auto [traj, y] = simulate_patient(p, draw);
    data.add(std::move(traj), y);
  }
  const TempFile tmp("/tmp/edq_test_dataset.csv");
  write_dataset(tmp.path, data);
  const Dataset back = read_dataset(tmp.path);
  CHECK(back.horizon == data.horizon);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.outcomes[i] == data.outcomes[i]);
    const auto& ea = data.trajectories[i].events();
    const auto& eb = back.trajectories[i].events();
    REQUIRE(ea.size() == eb.size());
    for (std::size_t j = 0; j < ea.size(); ++j) {
      CHECK(ea[j].time == eb[j].time);  // bitwise equality through hexfloat
      CHECK(ea[j].kind == eb[j].kind);
      CHECK(ea[j].mark == eb[j].mark);
    }
  }
  // Rewriting the parsed copy reproduces the file byte-for-byte.
  const TempFile tmp2("/tmp/edq_test_dataset2.csv");
  write_dataset(tmp2.path, back);
  CHECK(read_file(tmp.path) == read_file(tmp2.path));
}

TEST_CASE("corrupt datasets are rejected") {
  const TempFile tmp("/tmp/edq_test_bad.csv");
  {
    std::FILE* f = std::fopen(tmp.path.c_str(), "w");
    std::fputs("not a dataset\n", f);
    std::fclose(f);
  }
  CHECK_THROWS((void)read_dataset(tmp.path));
}

TEST_CASE("manifests round-trip") {
  const ExperimentConfig cfg = parse_config(kMinimalConfig);
  const TempFile tmp("/tmp/edq_test_manifest.json");
  write_manifest(tmp.path, cfg, 7, 50, 0xdeadbeefULL);
  const Manifest m = read_manifest(tmp.path);
  CHECK(m.config_hash == cfg.hash());
  CHECK(m.seed == 7);
  CHECK(m.n_trajectories == 50);
  CHECK(m.dataset_hash == 0xdeadbeefULL);
}

TEST_CASE("checkpoints restore the exact parameters and metadata") {
  RngStream rng(5);
  FeaturizerConfig feat;
  feat.last_k = 3;
  feat.time_dim = 4;
  QFunction q{EstimatorKind::FqeDiscretized, feat,
              MlpQ({feat.feature_size(), 8, 1}, rng)};
  const TempFile tmp("/tmp/edq_test_checkpoint.txt");
  save_checkpoint(tmp.path, q, 12345);
  std::uint64_t hash = 0;
  const QFunction back = load_checkpoint(tmp.path, &hash);
  CHECK(hash == 12345);
  CHECK(back.kind == EstimatorKind::FqeDiscretized);
  CHECK(back.featurizer.last_k == 3);
  CHECK(back.featurizer.time_dim == 4);
  CHECK(back.net.layers() == q.net.layers());
  CHECK(back.net.params() == q.net.params());  // bitwise through hexfloat
}

TEST_CASE("graph files load and validate") {
  const TempFile tmp("/tmp/edq_test_graph.json");
  {
    std::FILE* f = std::fopen(tmp.path.c_str(), "w");
    std::fputs(R"({"nodes": ["N^x", "N^y", "N^a", "U_1"],
                   "edges": [["U_1", "N^y"], ["N^x", "N^y"]],
                   "unobserved_order": ["U_1"]})",
               f);
    std::fclose(f);
  }
  const LocalIndependenceGraph g = load_graph(tmp.path);
  CHECK(g.nodes.size() == 4);
  CHECK(g.has_edge("U_1", "N^y"));
  CHECK(g.unobserved_order == std::vector<std::string>{"U_1"});

  const TempFile bad("/tmp/edq_test_graph_bad.json");
  {
    std::FILE* f = std::fopen(bad.path.c_str(), "w");
    std::fputs(R"({"nodes": ["N^x"], "edges": [], "unobserved_order": [], "extra": 1})", f);
    std::fclose(f);
  }
  CHECK_THROWS((void)load_graph(bad.path));
}
