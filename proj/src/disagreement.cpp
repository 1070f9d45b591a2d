#include "edq/disagreement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edq {

const char* boundary_name(Boundary b) {
  switch (b) {
    case Boundary::TargetTreats: return "target_treats";
    case Boundary::ObservedTreats: return "observed_treats";
    case Boundary::HorizonReached: return "horizon_reached";
  }
  throw std::logic_error("boundary_name: invalid value");
}

std::vector<Event> sample_target_segment(const Trajectory& base, const Policy& target,
                                         double t, RngStream& rng,
                                         std::optional<double> stop_after) {
  if (!(t < base.horizon()))
    throw std::invalid_argument("sample_target_segment: t must be before the horizon");
  const double T = base.horizon();
  std::vector<Event> segment;
  double u = t;
  // The intensity is piecewise in u between consecutive base events, so the
  // upper bound taken at an interval start is valid across that interval.
  while (u < T) {
    const Trajectory prefix = base.up_to(u);
    double next_change = T;
    for (const Event& e : base.events()) {
      if (e.time > u) {
        next_change = std::min(next_change, e.time);
        break;
      }
    }
    const double bound = target.intensity.upper_bound(u, prefix);
    if (!std::isfinite(bound) || bound < 0.0)
      throw std::runtime_error("sample_target_segment: bad target upper bound");
    if (bound <= 0.0) {
      u = next_change;
      continue;
    }
    const double candidate = u + rng.exponential(bound);
    if (candidate >= next_change) {
      u = next_change;
      continue;
    }
    u = candidate;
    const double rate = target.intensity.evaluate(u, prefix);
    if (!std::isfinite(rate) || rate < 0.0)
      throw std::runtime_error("sample_target_segment: target intensity not evaluable");
    if (rate > bound * (1.0 + 1e-12))
      throw std::runtime_error("sample_target_segment: target upper bound violated");
    if (rng.u01() * bound < rate) {
      Event e;
      e.time = u;
      e.kind = EventKind::Treatment;
      e.mark = target.mark_sampler(u, prefix, rng);
      segment.push_back(std::move(e));
      if (stop_after && u > *stop_after) break;
    }
  }
  return segment;
}

std::pair<double, Boundary> earliest_disagreement(const Trajectory& base,
                                                  const std::vector<Event>& segment,
                                                  double t) {
  const double T = base.horizon();
  const Event* obs = base.first_after(t, EventKind::Treatment);
  const Event* tgt = nullptr;
  for (const Event& e : segment) {
    if (e.time <= t)
      throw std::invalid_argument("earliest_disagreement: segment event at or before t");
    if (e.time > t) {
      tgt = &e;
      break;
    }
  }
  double best = T;
  Boundary boundary = Boundary::HorizonReached;
  if (obs && obs->time < best) {
    best = obs->time;
    boundary = Boundary::ObservedTreats;
  }
  if (tgt && tgt->time < best) {
    best = tgt->time;
    boundary = Boundary::TargetTreats;
  }
  return {best - t, boundary};
}

Trajectory splice(const Trajectory& base, const std::vector<Event>& segment, double t,
                  double delta) {
  if (!(delta > 0.0) || t + delta > base.horizon() * (1.0 + 1e-12))
    throw std::invalid_argument("splice: delta inconsistent with inputs");
  const double t_end = t + delta;
  std::vector<Event> merged;
  const Trajectory head = base.up_to(t);
  const Trajectory window = base.between(t, t_end);
  for (const Event& e : head.events()) merged.push_back(e);
  for (const Event& e : window.events()) {
    if (e.kind == EventKind::Feature || e.kind == EventKind::Outcome) merged.push_back(e);
  }
  for (const Event& e : segment) {
    if (e.time > t && e.time <= t_end) merged.push_back(e);
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  return Trajectory(base.horizon(), std::move(merged));
}

AugmentedSample sample_augmented(const Trajectory& base, const Policy& target, double t,
                                 RngStream& rng) {
  AugmentedSample s;
  s.base = base;
  s.anchor = t;
  // Only events up to the first one past the earliest observed treatment
  // matter for the disagreement time.
  const Event* obs = base.first_after(t, EventKind::Treatment);
  const std::optional<double> stop = obs ? obs->time : t;
  s.target_treatments = sample_target_segment(base, target, t, rng, stop);
  auto [delta, boundary] = earliest_disagreement(base, s.target_treatments, t);
  s.delta = delta;
  s.boundary = boundary;
  return s;
}

Trajectory augmented_trajectory(const AugmentedSample& s) {
  std::vector<Event> merged;
  for (Event e : s.base.events()) {
    if (e.kind == EventKind::Treatment) e.kind = EventKind::ObservedTreatment;
    merged.push_back(std::move(e));
  }
  for (const Event& e : s.target_treatments) merged.push_back(e);
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  // Exact time ties between an observed and a target treatment have measure
  // zero; nudge to keep the strict-ordering invariant.
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (!(merged[i].time > merged[i - 1].time))
      merged[i].time = std::nextafter(merged[i - 1].time, s.base.horizon() * 2.0 + 1.0);
  }
  return Trajectory(s.base.horizon(), std::move(merged));
}

}  // namespace edq
