#pragma once

#include <optional>
#include <string>
#include <utility>

#include "edq/process.hpp"
#include "edq/rng.hpp"

namespace edq {

// Time-to-failure vitals simulator. The vital drops linearly with slope
// -(alpha + xi), xi redrawn each time unit; measurements at obs_period
// spacing; a below-threshold measurement schedules a treatment after an
// exponential delay; the k-th treatment raises the vital by effect/k plus
// dose noise; the outcome is the failure time, emitted once.
struct FailureSimParams {
  double alpha = 1.0;            // drop slope
  double noise_sd = 0.05;        // per-unit-time vital noise
  double dose_noise_sd = -1.0;   // defaults to 0.05 * effect when negative
  double threshold = 2.0;        // vital level triggering treatment scheduling
  double rate = 0.5;             // exponential delay rate (lambda^a)
  int max_treatments = 1;        // m
  double initial_vital = 5.0;    // x_0 (or mean when initial_vital_jitter > 0)
  double initial_vital_jitter = 0.0;  // uniform +/- jitter on x_0
  double obs_period = 1.0;       // feature measurement spacing
  double horizon = 12.0;         // T
  double effect_scale = -1.0;    // c in effect c/k; defaults to x_0 / 2

  void validate() const;
};

FailureSimParams failure_preset_short(double rate);
FailureSimParams failure_preset_long(double rate);

std::pair<Trajectory, double> simulate_patient(const FailureSimParams& params, RngStream& rng);

// Treatment timing of the failure simulator as a point-process policy:
// constant hazard `rate` while an eligible threshold crossing is pending
// (a measured vital below the threshold after the last treatment, fewer than
// max_treatments applied, patient not yet failed), zero otherwise.
Policy make_failure_policy(double rate, double threshold, int max_treatments);

// Full observed process for the failure simulator, usable with
// sample_trajectory-style consumers via direct simulation.
struct FailureWorld {
  FailureSimParams params;
  Policy observed_policy() const;
};

// Tumor growth simulator: Gompertz-type finite-difference volume dynamics
// with chemo/radio effects, volume observed with probability
// sigma(mean recent volume / v_max - 1.5), and treatments drawn per step with
// probability sigma(gamma * (v_last - beta) + t - t_last). Volumes are
// normalized by v_max in events and outcomes.
struct TumorSimParams {
  double rho = 0.07;             // growth coefficient
  double carrying_capacity = 30.0;  // K, in volume units
  double beta_c = 0.028;         // chemotherapy effect
  double alpha_r = 0.0398;       // radiotherapy linear effect
  double beta_r = 0.0199;        // radiotherapy quadratic effect
  double chemo_dose = 5.0;       // concentration applied on a chemo step
  double radio_dose = 2.0;       // dosage applied on a radio step
  double noise_sd = 0.01;        // e_t standard deviation
  double gamma = 6.0;            // policy slope
  double beta = 0.75;            // policy intercept (on normalized volume)
  int lookback = 15;             // window for the observation-probability mean
  double v_max = 40.0;           // largest modeled volume
  int horizon = 20;              // discrete steps
  double param_jitter = 0.1;     // lognormal sd of the per-patient coefficient prior
  double initial_volume_lo = 2.0;
  double initial_volume_hi = 15.0;

  void validate() const;
};

std::pair<Trajectory, double> simulate_tumor(const TumorSimParams& params,
                                             std::optional<std::pair<double, double>> policy_override,
                                             RngStream& rng);

// Per-step treatment probability of the tumor policy given a history.
double tumor_treatment_probability(const TumorSimParams& params, double gamma, double beta,
                                   int step, const Trajectory& history);

// Tumor policy as a point process: cell [t, t+1) carries constant intensity
// -log(1 - p_t) so the chance of at least one event in the cell equals the
// simulator's per-step Bernoulli probability of any therapy.
Policy make_tumor_policy(const TumorSimParams& params, double gamma, double beta);

}  // namespace edq
