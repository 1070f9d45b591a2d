#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "edq/approximator.hpp"
#include "edq/process.hpp"
#include "edq/rng.hpp"

using namespace edq;

namespace {

Event ev(double t, EventKind k, std::vector<double> mark = {0.0}) {
  Event e;
  e.time = t;
  e.kind = k;
  e.mark = std::move(mark);
  return e;
}

}  // namespace

TEST_CASE("time embedding at zero alternates zeros and ones") {
  const auto v = embed_time(0.0, 8);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] == (k % 2 == 0 ? 0.0 : 1.0));
}

TEST_CASE("first embedding coordinate is plain sin") {
  for (double t : {0.3, 1.7, 12.0, 99.5}) {
    const auto v = embed_time(t, 16);
    CHECK(v[0] == doctest::Approx(std::sin(t)).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(std::cos(t)).epsilon(1e-12));
  }
}

TEST_CASE("embedding stays bounded and rejects bad arguments") {
  for (double t = 0.0; t < 200.0; t += 0.7)
    for (double c : embed_time(t, 12)) {
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
    }
  CHECK_THROWS_AS((void)embed_time(1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS((void)embed_time(-0.5, 4), std::invalid_argument);
}

TEST_CASE("embedding distinguishes times on a coarse grid") {
  std::set<std::vector<double>> seen;
  for (int i = 0; i <= 400; ++i) {
    const auto v = embed_time(i * 0.25, 16);
    CHECK(seen.insert(v).second);
  }
}

TEST_CASE("feature vector has the declared size") {
  FeaturizerConfig cfg;
  cfg.last_k = 3;
  cfg.time_dim = 4;
  cfg.mark_dim = 2;
  const Trajectory traj(10.0, {ev(1.0, EventKind::Feature, {0.5}),
                               ev(2.0, EventKind::Outcome, {1.5})});
  CHECK(featurize(traj, 3.0, cfg).size() == cfg.feature_size());
  CHECK(featurize(Trajectory(10.0), 0.0, cfg).size() == cfg.feature_size());
}

TEST_CASE("empty history yields empty slots and zero counts") {
  FeaturizerConfig cfg;
  cfg.last_k = 2;
  cfg.time_dim = 4;
  cfg.mark_dim = 1;
  const auto v = featurize(Trajectory(10.0), 0.0, cfg);
  // After the two time embeddings everything should be zero except the cos
  // coordinates of those embeddings (t = gap = 0).
  for (std::size_t i = 2 * cfg.time_dim; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("featurization exposes the running outcome sum and counts") {
  FeaturizerConfig cfg;
  cfg.last_k = 4;
  cfg.time_dim = 4;
  cfg.mark_dim = 1;
  const Trajectory traj(10.0, {ev(1.0, EventKind::Outcome, {2.0}), ev(2.0, EventKind::Feature, {0.3}),
                               ev(3.0, EventKind::Outcome, {0.25})});
  const auto v = featurize(traj, 4.0, cfg);
  CHECK(v.back() == doctest::Approx(2.25));  // outcome sum
  const std::size_t counts_at = v.size() - 5;
  CHECK(v[counts_at + 0] == 1.0);  // features
  CHECK(v[counts_at + 1] == 2.0);  // outcomes
  CHECK(v[counts_at + 2] == 0.0);
  CHECK(v[counts_at + 3] == 0.0);
}

TEST_CASE("newest event fills the first summary slot") {
  FeaturizerConfig cfg;
  cfg.last_k = 2;
  cfg.time_dim = 2;
  cfg.mark_dim = 1;
  const Trajectory traj(10.0, {ev(1.0, EventKind::Feature, {0.5}),
                               ev(2.0, EventKind::Treatment, {7.0})});
  const auto v = featurize(traj, 2.5, cfg);
  const std::size_t slot0 = 2 * cfg.time_dim;
  CHECK(v[slot0] == 1.0);          // presence
  CHECK(v[slot0 + 1] == 0.0);      // not a feature
  CHECK(v[slot0 + 3] == 1.0);      // treatment one-hot
  CHECK(v[slot0 + 5] == 7.0);      // mark
}

TEST_CASE("featurize rejects histories extending past t") {
  FeaturizerConfig cfg;
  const Trajectory traj(10.0, {ev(5.0, EventKind::Feature)});
  CHECK_THROWS_AS((void)featurize(traj, 4.0, cfg), std::invalid_argument);
}

TEST_CASE("network gradient matches finite differences") {
  RngStream rng(1);
  MlpQ net({5, 8, 6, 1}, rng);
  RngStream data(2);
  std::vector<std::vector<double>> inputs;
  std::vector<double> labels;
  for (int n = 0; n < 3; ++n) {
    std::vector<double> x(5);
    for (double& v : x) v = data.normal();
    inputs.push_back(x);
    labels.push_back(data.normal());
  }
  double loss = 0.0;
  const std::vector<double> grad = net.loss_gradient(inputs, labels, &loss);
  CHECK(loss > 0.0);

  auto loss_at = [&](const std::vector<double>& params) {
    double total = 0.0;
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      const double err = MlpQ::value_with(params, net.layers(), inputs[n]) - labels[n];
      total += err * err / static_cast<double>(inputs.size());
    }
    return total;
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); i += 7) {
    std::vector<double> plus = net.params(), minus = net.params();
    plus[i] += h;
    minus[i] -= h;
    const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("an exactly fitted batch is a no-op") {
  RngStream rng(3);
  MlpQ net({3, 4, 1}, rng);
  const std::vector<double> x{0.1, -0.4, 0.9};
  const double y = net.value(x);
  const std::vector<double> before = net.params();
  CHECK(net.grad_step(x, y, 0.05) == 0.0);
  CHECK(net.params() == before);
}

TEST_CASE("repeated steps on one example drive its loss down") {
  RngStream rng(4);
  MlpQ net({4, 8, 1}, rng);
  const std::vector<double> x{0.5, -0.2, 0.8, 0.1};
  const double first = net.grad_step(x, 2.0, 1e-2);
  double last = first;
  for (int i = 0; i < 500; ++i) last = net.grad_step(x, 2.0, 1e-2);
  CHECK(last < first * 1e-4);
  CHECK(net.value(x) == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("target copy with tau one tracks exactly") {
  RngStream rng(5);
  MlpQ net({3, 4, 1}, rng);
  TargetCopy copy(net, 1.0);
  net.grad_step(std::vector<double>{0.2, 0.3, -0.1}, 1.0, 1e-2);
  copy.soft_update(net);
  CHECK(copy.params() == net.params());
}

TEST_CASE("soft updates follow the exact geometric mixing law") {
  RngStream rng(6);
  MlpQ net({2, 3, 1}, rng);
  const std::vector<double> theta = net.params();
  const double tau = 0.25;
  TargetCopy copy(net, tau);
  // Initialize the copy away from theta, then hold theta fixed: after n
  // updates the copy is theta + (1-tau)^n (theta0' - theta), exactly.
  MlpQ other({2, 3, 1}, rng);
  TargetCopy drifted(other, tau);
  const std::vector<double> start = drifted.params();
  for (int n = 1; n <= 100; ++n) {
    drifted.soft_update(net);
    const double w = std::pow(1.0 - tau, n);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double expect = theta[i] + w * (start[i] - theta[i]);
      CHECK(drifted.params()[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(TargetCopy(net, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(TargetCopy(net, 1.5), std::invalid_argument);
}

TEST_CASE("identical init streams build identical networks") {
  RngStream a(9), b(9);
  MlpQ na({6, 10, 1}, a);
  MlpQ nb({6, 10, 1}, b);
  CHECK(na.params() == nb.params());
}

TEST_CASE("tabular table round-trips and faults on missing keys") {
  TabularQ q;
  q.set("x0a1.", 2.5);
  q.set("", -1.0);
  CHECK(q.value("x0a1.") == 2.5);
  CHECK(q.value("") == -1.0);
  CHECK(q.contains("x0a1."));
  CHECK(!q.contains("x1a1."));
  CHECK_THROWS_AS((void)q.value("x1a1."), std::out_of_range);
}
