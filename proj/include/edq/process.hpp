#pragma once

#include <functional>
#include <string>
#include <vector>

#include "edq/rng.hpp"

namespace edq {

enum class EventKind { Feature, Outcome, Treatment, ObservedTreatment };

const char* kind_name(EventKind k);
EventKind kind_from_name(const std::string& name);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Feature;
  std::vector<double> mark;
};

// Time-ordered marked event list over [0, horizon]. Times are strictly
// increasing; restriction operators return copies and never mutate.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(double horizon) : horizon_(horizon) {}
  Trajectory(double horizon, std::vector<Event> events);

  double horizon() const { return horizon_; }
  const std::vector<Event>& events() const { return events_; }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }

  // Appends an event; nudges the time up by one ulp if it ties the last one.
  void append(Event e);

  // H_t: events with time <= t.
  Trajectory up_to(double t) const;
  // Events with time in (t, t + delta].
  Trajectory between(double t, double t_end) const;

  std::vector<Event> events_of(EventKind k) const;
  std::size_t count_of(EventKind k) const;

  // First event of the given kind strictly after t, or nullptr.
  const Event* first_after(double t, EventKind k) const;

 private:
  double horizon_ = 0.0;
  std::vector<Event> events_;
};

// Intensity with a thinning upper bound. `upper_bound(t, hist)` must dominate
// `evaluate` on [t, next event of the process); violations are detected at
// sampling time, not clipped.
struct IntensityFn {
  std::function<double(double t, const Trajectory& hist)> evaluate;
  std::function<double(double t, const Trajectory& hist)> upper_bound;
};

using MarkSampler =
    std::function<std::vector<double>(double t, const Trajectory& hist, RngStream& rng)>;

// Treatment timing intensity plus mark distribution.
struct Policy {
  IntensityFn intensity;
  MarkSampler mark_sampler;
};

// A decision point process: feature/outcome components plus a policy.
struct ProcessSpec {
  IntensityFn feature_intensity;
  MarkSampler feature_marks;
  IntensityFn outcome_intensity;
  MarkSampler outcome_marks;
  Policy policy;
  double horizon = 0.0;
};

IntensityFn constant_intensity(double rate);
IntensityFn zero_intensity();
MarkSampler constant_mark(std::vector<double> mark);

// Sum of the three component intensities at t given the history.
double total_intensity(const ProcessSpec& spec, double t, const Trajectory& history);

// Samples one trajectory from the process law by thinning: candidate times at
// the summed upper-bound rate, accepted with probability lambda_total / bound,
// component chosen proportionally to intensities, mark from the matching
// sampler.
Trajectory sample_trajectory(const ProcessSpec& spec, RngStream& rng);

// Sum of Outcome marks with event time strictly greater than `after`.
double outcome_sum(const Trajectory& traj, double after);
// Sum over the whole trajectory (the `after = 0^-` convention).
double outcome_sum(const Trajectory& traj);

}  // namespace edq
