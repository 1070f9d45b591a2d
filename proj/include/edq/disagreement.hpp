#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "edq/process.hpp"
#include "edq/rng.hpp"

namespace edq {

enum class Boundary { TargetTreats, ObservedTreats, HorizonReached };

const char* boundary_name(Boundary b);

// One augmented-process draw: an observed base trajectory, target-policy
// treatments sampled against it on (t, T], and the earliest disagreement.
struct AugmentedSample {
  Trajectory base;
  std::vector<Event> target_treatments;
  double anchor = 0.0;
  double delta = 0.0;
  Boundary boundary = Boundary::HorizonReached;
};

// Samples treatment events on (t, T] by thinning from the target intensity
// evaluated on the observed history only (the target's own draws never feed
// back into the intensity). If `stop_after` is set, generation stops at the
// first event with time > stop_after; the full conditional law up to that
// point is preserved.
std::vector<Event> sample_target_segment(
    const Trajectory& base, const Policy& target, double t, RngStream& rng,
    std::optional<double> stop_after = std::nullopt);

// Minimum of (first observed treatment after t) and (first target treatment)
// minus t; (T - t, HorizonReached) when neither exists. A treatment landing
// exactly at the horizon terminates rather than bootstraps.
std::pair<double, Boundary> earliest_disagreement(const Trajectory& base,
                                                  const std::vector<Event>& segment,
                                                  double t);

// H_t plus the base's feature/outcome events in (t, t+delta] plus the target
// treatments in (t, t+delta]. Observed treatments inside the window are
// excluded.
Trajectory splice(const Trajectory& base, const std::vector<Event>& segment, double t,
                  double delta);

// Full augmented draw: segment, disagreement time, boundary tag.
AugmentedSample sample_augmented(const Trajectory& base, const Policy& target, double t,
                                 RngStream& rng);

// Merged view with the base's treatments relabeled ObservedTreatment; only
// used by tests that inspect the augmented process directly.
Trajectory augmented_trajectory(const AugmentedSample& s);

}  // namespace edq
