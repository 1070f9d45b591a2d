#include "edq/process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace edq {

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Feature: return "X";
    case EventKind::Outcome: return "Y";
    case EventKind::Treatment: return "A";
    case EventKind::ObservedTreatment: return "A_OBS";
  }
  throw std::logic_error("kind_name: invalid kind");
}

EventKind kind_from_name(const std::string& name) {
  if (name == "X") return EventKind::Feature;
  if (name == "Y") return EventKind::Outcome;
  if (name == "A") return EventKind::Treatment;
  if (name == "A_OBS") return EventKind::ObservedTreatment;
  throw std::invalid_argument("unknown event kind: " + name);
}

Trajectory::Trajectory(double horizon, std::vector<Event> events)
    : horizon_(horizon), events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (e.time < 0.0 || e.time > horizon_ || !std::isfinite(e.time))
      throw std::invalid_argument("Trajectory: event time outside [0, horizon]");
    if (i > 0 && !(events_[i - 1].time < e.time))
      throw std::invalid_argument("Trajectory: event times must be strictly increasing");
  }
}

void Trajectory::append(Event e) {
  if (e.time < 0.0 || !std::isfinite(e.time))
    throw std::invalid_argument("Trajectory::append: bad event time");
  if (!events_.empty() && e.time <= events_.back().time) {
    // Ties occur with probability 0 in the model; break them by one ulp.
    e.time = std::nextafter(events_.back().time, horizon_ * 2.0 + 1.0);
  }
  if (e.time > horizon_)
    throw std::invalid_argument("Trajectory::append: event beyond horizon");
  events_.push_back(std::move(e));
}

Trajectory Trajectory::up_to(double t) const {
  Trajectory out(horizon_);
  for (const Event& e : events_) {
    if (e.time <= t) out.events_.push_back(e);
  }
  return out;
}

Trajectory Trajectory::between(double t, double t_end) const {
  Trajectory out(horizon_);
  for (const Event& e : events_) {
    if (e.time > t && e.time <= t_end) out.events_.push_back(e);
  }
  return out;
}

std::vector<Event> Trajectory::events_of(EventKind k) const {
  std::vector<Event> out;
  for (const Event& e : events_)
    if (e.kind == k) out.push_back(e);
  return out;
}

std::size_t Trajectory::count_of(EventKind k) const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(),
                    [k](const Event& e) { return e.kind == k; }));
}

const Event* Trajectory::first_after(double t, EventKind k) const {
  for (const Event& e : events_) {
    if (e.time > t && e.kind == k) return &e;
  }
  return nullptr;
}

IntensityFn constant_intensity(double rate) {
  if (rate < 0.0) throw std::invalid_argument("constant_intensity: negative rate");
  return IntensityFn{
      [rate](double, const Trajectory&) { return rate; },
      [rate](double, const Trajectory&) { return rate; },
  };
}

IntensityFn zero_intensity() { return constant_intensity(0.0); }

MarkSampler constant_mark(std::vector<double> mark) {
  return [mark](double, const Trajectory&, RngStream&) { return mark; };
}

namespace {

double checked_rate(const IntensityFn& fn, double t, const Trajectory& hist,
                    const char* component) {
  const double r = fn.evaluate(t, hist);
  if (!std::isfinite(r))
    throw std::runtime_error(std::string("non-finite intensity in component ") + component);
  if (r < 0.0)
    throw std::runtime_error(std::string("negative intensity in component ") + component);
  return r;
}

}  // namespace

double total_intensity(const ProcessSpec& spec, double t, const Trajectory& history) {
  return checked_rate(spec.feature_intensity, t, history, "feature") +
         checked_rate(spec.outcome_intensity, t, history, "outcome") +
         checked_rate(spec.policy.intensity, t, history, "treatment");
}

Trajectory sample_trajectory(const ProcessSpec& spec, RngStream& rng) {
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("sample_trajectory: horizon must be > 0");
  Trajectory traj(spec.horizon);
  double t = 0.0;
  const char* names[3] = {"feature", "outcome", "treatment"};
  while (t < spec.horizon) {
    const IntensityFn* comps[3] = {&spec.feature_intensity, &spec.outcome_intensity,
                                   &spec.policy.intensity};
    double bounds[3];
    double bound_total = 0.0;
    for (int i = 0; i < 3; ++i) {
      bounds[i] = comps[i]->upper_bound(t, traj);
      if (!std::isfinite(bounds[i]) || bounds[i] < 0.0)
        throw std::runtime_error(std::string("bad upper bound in component ") + names[i]);
      bound_total += bounds[i];
    }
    if (bound_total <= 0.0) break;  // process extinct given this history
    t += rng.exponential(bound_total);
    if (t >= spec.horizon) break;
    double rates[3];
    double rate_total = 0.0;
    for (int i = 0; i < 3; ++i) {
      rates[i] = checked_rate(*comps[i], t, traj, names[i]);
      if (rates[i] > bounds[i] * (1.0 + 1e-12))
        throw std::runtime_error(std::string("thinning upper bound violated by component ") +
                                 names[i]);
      rate_total += rates[i];
    }
    if (rng.u01() * bound_total >= rate_total) continue;  // rejected candidate
    const std::size_t which = rng.categorical(std::span<const double>(rates, 3));
    Event e;
    e.time = t;
    switch (which) {
      case 0:
        e.kind = EventKind::Feature;
        e.mark = spec.feature_marks(t, traj, rng);
        break;
      case 1:
        e.kind = EventKind::Outcome;
        e.mark = spec.outcome_marks(t, traj, rng);
        break;
      default:
        e.kind = EventKind::Treatment;
        e.mark = spec.policy.mark_sampler(t, traj, rng);
        break;
    }
    traj.append(std::move(e));
    t = traj.events().back().time;
  }
  return traj;
}

double outcome_sum(const Trajectory& traj, double after) {
  double s = 0.0;
  for (const Event& e : traj.events()) {
    if (e.kind == EventKind::Outcome && e.time > after) {
      if (e.mark.empty()) throw std::runtime_error("outcome event without a mark");
      s += e.mark[0];
    }
  }
  return s;
}

double outcome_sum(const Trajectory& traj) { return outcome_sum(traj, -1.0); }

}  // namespace edq
