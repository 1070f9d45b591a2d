#include <doctest.h>

#include <cmath>
#include <vector>

#include "edq/disagreement.hpp"
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

Policy constant_policy(double rate) {
  return {constant_intensity(rate), constant_mark({1.0})};
}

}  // namespace

TEST_CASE("no treatments on either side reaches the horizon") {
  const Trajectory base(5.0, {ev(1.0, EventKind::Feature), ev(2.0, EventKind::Outcome, {1.0})});
  RngStream rng(1);
  const AugmentedSample s = sample_augmented(base, constant_policy(0.0), 0.5, rng);
  CHECK(s.target_treatments.empty());
  CHECK(s.boundary == Boundary::HorizonReached);
  CHECK(s.delta == doctest::Approx(4.5));
}

TEST_CASE("observed treatment bounds the disagreement when the target is silent") {
  const Trajectory base(5.0, {ev(1.0, EventKind::Outcome, {1.0}), ev(2.0, EventKind::Treatment)});
  RngStream rng(2);
  const AugmentedSample s = sample_augmented(base, constant_policy(0.0), 0.5, rng);
  CHECK(s.boundary == Boundary::ObservedTreats);
  CHECK(s.delta == doctest::Approx(1.5));
}

TEST_CASE("target treatment before the observed one wins") {
  const Trajectory base(5.0, {ev(4.0, EventKind::Treatment)});
  std::vector<Event> segment{ev(2.0, EventKind::Treatment, {1.0})};
  const auto [delta, boundary] = earliest_disagreement(base, segment, 1.0);
  CHECK(boundary == Boundary::TargetTreats);
  CHECK(delta == doctest::Approx(1.0));
}

TEST_CASE("segment events at or before the anchor are rejected") {
  const Trajectory base(5.0, {ev(4.0, EventKind::Treatment)});
  std::vector<Event> segment{ev(1.0, EventKind::Treatment)};
  CHECK_THROWS_AS((void)earliest_disagreement(base, segment, 1.0), std::invalid_argument);
}

TEST_CASE("a treatment landing exactly at the horizon terminates") {
  const Trajectory base_obs(5.0, {ev(5.0, EventKind::Treatment)});
  const auto [d1, b1] = earliest_disagreement(base_obs, {}, 1.0);
  CHECK(b1 == Boundary::HorizonReached);
  CHECK(d1 == doctest::Approx(4.0));

  const Trajectory base_empty(5.0);
  std::vector<Event> segment{ev(5.0, EventKind::Treatment)};
  const auto [d2, b2] = earliest_disagreement(base_empty, segment, 1.0);
  CHECK(b2 == Boundary::HorizonReached);
  CHECK(d2 == doctest::Approx(4.0));
}

TEST_CASE("delta never exceeds the remaining time") {
  const Trajectory base(3.0, {ev(1.0, EventKind::Feature)});
  RngStream rng(7);
  for (int i = 0; i < 200; ++i) {
    const AugmentedSample s = sample_augmented(base, constant_policy(1.0), 0.25, rng);
    CHECK(s.delta > 0.0);
    CHECK(s.delta <= 2.75 + 1e-12);
    if (s.boundary == Boundary::TargetTreats) {
      REQUIRE(!s.target_treatments.empty());
      CHECK(s.target_treatments.front().time == doctest::Approx(0.25 + s.delta));
    }
  }
}

TEST_CASE("first target arrival follows the exponential law") {
  // Constant rate 2 on a long horizon: delta ~ Exp(2).
  const Trajectory base(50.0);
  RngStream rng(11);
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const AugmentedSample a = sample_augmented(base, constant_policy(2.0), 0.0, rng);
    REQUIRE(a.boundary == Boundary::TargetTreats);
    s += a.delta;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("piecewise target intensity is evaluated on the observed history only") {
  // Rate 0 until the base's feature at time 2, then rate 3. The first target
  // arrival is 2 + Exp(3) regardless of any target draws.
  Policy target;
  target.intensity = {[](double, const Trajectory& h) {
                        return h.count_of(EventKind::Feature) > 0 ? 3.0 : 0.0;
                      },
                      [](double, const Trajectory& h) {
                        return h.count_of(EventKind::Feature) > 0 ? 3.0 : 0.0;
                      }};
  target.mark_sampler = constant_mark({1.0});
  const Trajectory base(100.0, {ev(2.0, EventKind::Feature)});
  RngStream rng(13);
  const int n = 20000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream draw = rng.split(static_cast<std::uint64_t>(i));
    const std::vector<Event> seg = sample_target_segment(base, target, 0.0, draw);
    REQUIRE(!seg.empty());
    CHECK(seg.front().time > 2.0);
    s += seg.front().time - 2.0;
  }
  CHECK(s / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("stop_after truncates generation without changing earlier events") {
  const Trajectory base(20.0);
  const Policy target = constant_policy(1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream a(seed), b(seed);
    const std::vector<Event> full = sample_target_segment(base, target, 0.0, a);
    const std::vector<Event> cut = sample_target_segment(base, target, 0.0, b, 3.0);
    REQUIRE(!cut.empty());
    CHECK(cut.size() <= full.size());
    for (std::size_t i = 0; i < cut.size(); ++i) CHECK(cut[i].time == full[i].time);
    // Everything before the stop point is kept; exactly one event lies past it.
    for (std::size_t i = 0; i + 1 < cut.size(); ++i) CHECK(cut[i].time <= 3.0);
  }
}

TEST_CASE("splice keeps the prefix, window features/outcomes, and target treatments") {
  const Trajectory base(10.0, {ev(0.5, EventKind::Feature, {1.0}), ev(1.5, EventKind::Outcome, {2.0}),
                               ev(2.5, EventKind::Treatment, {9.0}), ev(3.5, EventKind::Feature, {4.0}),
                               ev(6.0, EventKind::Outcome, {8.0})});
  const std::vector<Event> segment{ev(2.0, EventKind::Treatment, {5.0}),
                                   ev(4.5, EventKind::Treatment, {6.0})};
  const Trajectory spliced = splice(base, segment, 1.0, 3.0);  // window (1, 4]
  REQUIRE(spliced.size() == 4);
  CHECK(spliced.horizon() == 10.0);
  // Prefix event at 0.5, outcome at 1.5, target treatment at 2.0, feature at
  // 3.5. The observed treatment at 2.5 and everything past 4 are dropped.
  CHECK(spliced.events()[0].time == 0.5);
  CHECK(spliced.events()[1].time == 1.5);
  CHECK(spliced.events()[2].time == 2.0);
  CHECK(spliced.events()[2].kind == EventKind::Treatment);
  CHECK(spliced.events()[2].mark == std::vector<double>{5.0});
  CHECK(spliced.events()[3].time == 3.5);
  CHECK(spliced.count_of(EventKind::Treatment) == 1);
}

TEST_CASE("splice keeps observed treatments strictly inside the prefix") {
  const Trajectory base(10.0, {ev(0.5, EventKind::Treatment), ev(2.0, EventKind::Treatment)});
  const Trajectory spliced = splice(base, {}, 1.0, 2.0);
  REQUIRE(spliced.size() == 1);
  CHECK(spliced.events()[0].time == 0.5);
}

TEST_CASE("splice rejects inconsistent windows") {
  const Trajectory base(10.0);
  CHECK_THROWS_AS((void)splice(base, {}, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)splice(base, {}, 1.0, 10.0), std::invalid_argument);
}

TEST_CASE("augmented view relabels observed treatments and stays ordered") {
  AugmentedSample s;
  s.base = Trajectory(10.0, {ev(1.0, EventKind::Feature), ev(2.0, EventKind::Treatment, {7.0})});
  s.target_treatments = {ev(2.0, EventKind::Treatment, {3.0}), ev(4.0, EventKind::Treatment)};
  const Trajectory merged = augmented_trajectory(s);
  REQUIRE(merged.size() == 4);
  CHECK(merged.count_of(EventKind::ObservedTreatment) == 1);
  CHECK(merged.count_of(EventKind::Treatment) == 2);
  for (std::size_t i = 1; i < merged.size(); ++i)
    CHECK(merged.events()[i].time > merged.events()[i - 1].time);
}

TEST_CASE("augmented sampling is reproducible") {
  const Trajectory base(8.0, {ev(1.0, EventKind::Feature), ev(5.0, EventKind::Treatment)});
  RngStream a(77), b(77);
  const AugmentedSample sa = sample_augmented(base, constant_policy(0.7), 0.5, a);
  const AugmentedSample sb = sample_augmented(base, constant_policy(0.7), 0.5, b);
  CHECK(sa.delta == sb.delta);
  CHECK(sa.boundary == sb.boundary);
  REQUIRE(sa.target_treatments.size() == sb.target_treatments.size());
  for (std::size_t i = 0; i < sa.target_treatments.size(); ++i)
    CHECK(sa.target_treatments[i].time == sb.target_treatments[i].time);
}
