#include "edq/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace edq {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool has_failed(const Trajectory& hist) { return hist.count_of(EventKind::Outcome) > 0; }

std::size_t treatment_count(const Trajectory& hist) {
  return hist.count_of(EventKind::Treatment) + hist.count_of(EventKind::ObservedTreatment);
}

double last_treatment_time(const Trajectory& hist, bool* any = nullptr) {
  double t = 0.0;
  bool found = false;
  for (const Event& e : hist.events()) {
    if (e.kind == EventKind::Treatment || e.kind == EventKind::ObservedTreatment) {
      t = e.time;
      found = true;
    }
  }
  if (any) *any = found;
  return t;
}

}  // namespace

void FailureSimParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("FailureSimParams: alpha must be positive");
  if (noise_sd < 0.0) throw std::invalid_argument("FailureSimParams: noise_sd must be nonnegative");
  if (!(rate > 0.0)) throw std::invalid_argument("FailureSimParams: rate must be positive");
  if (max_treatments < 1) throw std::invalid_argument("FailureSimParams: max_treatments >= 1");
  if (!(initial_vital > 0.0))
    throw std::invalid_argument("FailureSimParams: initial_vital must be positive");
  if (!(obs_period > 0.0)) throw std::invalid_argument("FailureSimParams: obs_period must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("FailureSimParams: horizon must be positive");
}

FailureSimParams failure_preset_short(double rate) {
  FailureSimParams p;
  p.alpha = 1.0;
  p.noise_sd = 0.05;
  p.threshold = 2.0;
  p.rate = rate;
  p.max_treatments = 1;
  p.initial_vital = 5.5;
  p.initial_vital_jitter = 1.5;
  p.horizon = 12.0;
  return p;
}

FailureSimParams failure_preset_long(double rate) {
  FailureSimParams p;
  p.alpha = 0.25;
  p.noise_sd = 0.02;
  p.threshold = 2.0;
  p.rate = rate;
  p.max_treatments = 5;
  p.initial_vital = 5.5;
  p.initial_vital_jitter = 1.5;
  p.horizon = 100.0;
  return p;
}

std::pair<Trajectory, double> simulate_patient(const FailureSimParams& params, RngStream& rng) {
  params.validate();
  const double x0 = params.initial_vital_jitter > 0.0
                        ? params.initial_vital +
                              rng.uniform(-params.initial_vital_jitter, params.initial_vital_jitter)
                        : params.initial_vital;
  if (!(x0 > 0.0)) throw std::invalid_argument("simulate_patient: initial vital must be positive");
  const double effect = params.effect_scale < 0.0 ? x0 / 2.0 : params.effect_scale;
  const double dose_sd = params.dose_noise_sd < 0.0 ? 0.05 * effect : params.dose_noise_sd;

  Trajectory traj(params.horizon);
  traj.append({0.0, EventKind::Feature, {x0}});

  double t = 0.0;
  double v = x0;
  int unit = 0;
  double slope = -(params.alpha + (params.noise_sd > 0.0 ? rng.normal(0.0, params.noise_sd) : 0.0));
  int n_treat = 0;
  std::optional<double> scheduled;
  long meas_index = 1;
  const double inf = std::numeric_limits<double>::infinity();

  auto maybe_schedule = [&](double now, double measured) {
    if (measured < params.threshold && n_treat < params.max_treatments && !scheduled)
      scheduled = now + rng.exponential(params.rate);
  };
  maybe_schedule(0.0, x0);

  double failure_time = params.horizon;
  bool failed = false;
  while (t < params.horizon) {
    const double unit_end = static_cast<double>(unit + 1);
    const double next_meas = static_cast<double>(meas_index) * params.obs_period;
    const double t_next =
        std::min({unit_end, next_meas, scheduled ? *scheduled : inf, params.horizon});
    if (slope < 0.0 && v + slope * (t_next - t) <= 0.0) {
      failure_time = t - v / slope;
      failed = true;
      break;
    }
    v += slope * (t_next - t);
    t = t_next;
    if (scheduled && t == *scheduled) {
      ++n_treat;
      const double dose = effect / static_cast<double>(n_treat) +
                          (dose_sd > 0.0 ? rng.normal(0.0, dose_sd) : 0.0);
      v += dose;
      traj.append({t, EventKind::Treatment, {dose}});
      scheduled.reset();
    }
    if (t == next_meas && t < params.horizon) {
      traj.append({t, EventKind::Feature, {v}});
      maybe_schedule(t, v);
      ++meas_index;
    }
    if (t == unit_end) {
      ++unit;
      slope = -(params.alpha + (params.noise_sd > 0.0 ? rng.normal(0.0, params.noise_sd) : 0.0));
    }
  }
  if (failed && failure_time > params.horizon) {
    failed = false;
    failure_time = params.horizon;
  }
  traj.append({failure_time, EventKind::Outcome, {failure_time}});
  return {std::move(traj), failure_time};
}

Policy make_failure_policy(double rate, double threshold, int max_treatments) {
  if (!(rate > 0.0)) throw std::invalid_argument("make_failure_policy: rate must be positive");
  auto eligible = [threshold, max_treatments](const Trajectory& hist) {
    if (has_failed(hist)) return false;
    if (treatment_count(hist) >= static_cast<std::size_t>(max_treatments)) return false;
    const double t_last = last_treatment_time(hist);
    for (const Event& e : hist.events())
      if (e.kind == EventKind::Feature && e.time >= t_last && !e.mark.empty() &&
          e.mark[0] < threshold)
        return true;
    return false;
  };
  Policy p;
  p.intensity.evaluate = [rate, eligible](double, const Trajectory& hist) {
    return eligible(hist) ? rate : 0.0;
  };
  p.intensity.upper_bound = [rate](double, const Trajectory&) { return rate; };
  p.mark_sampler = [](double, const Trajectory&, RngStream&) { return std::vector<double>{1.0}; };
  return p;
}

Policy FailureWorld::observed_policy() const {
  return make_failure_policy(params.rate, params.threshold, params.max_treatments);
}

void TumorSimParams::validate() const {
  if (!(carrying_capacity > 0.0)) throw std::invalid_argument("TumorSimParams: K must be positive");
  if (horizon < 1) throw std::invalid_argument("TumorSimParams: horizon must be a positive integer");
  if (lookback < 1) throw std::invalid_argument("TumorSimParams: lookback >= 1");
  if (noise_sd < 0.0) throw std::invalid_argument("TumorSimParams: noise_sd must be nonnegative");
  if (!(v_max > 0.0)) throw std::invalid_argument("TumorSimParams: v_max must be positive");
  if (!(initial_volume_lo > 0.0) || initial_volume_hi < initial_volume_lo)
    throw std::invalid_argument("TumorSimParams: bad initial volume range");
}

double tumor_treatment_probability(const TumorSimParams& params, double gamma, double beta,
                                   int step, const Trajectory& history) {
  double v_last = 0.0;
  for (const Event& e : history.events())
    if (e.kind == EventKind::Feature && !e.mark.empty()) v_last = e.mark[0];
  const double t_last = last_treatment_time(history);
  (void)params;
  return sigmoid(gamma * (v_last - beta) + (static_cast<double>(step) - t_last));
}

std::pair<Trajectory, double> simulate_tumor(const TumorSimParams& params,
                                             std::optional<std::pair<double, double>> policy_override,
                                             RngStream& rng) {
  params.validate();
  const double gamma = policy_override ? policy_override->first : params.gamma;
  const double beta = policy_override ? policy_override->second : params.beta;

  auto draw_coeff = [&](double base) {
    return params.param_jitter > 0.0 ? base * std::exp(rng.normal(0.0, params.param_jitter)) : base;
  };
  const double rho = draw_coeff(params.rho);
  const double beta_c = draw_coeff(params.beta_c);
  const double alpha_r = draw_coeff(params.alpha_r);
  const double beta_r = draw_coeff(params.beta_r);

  double volume = rng.uniform(params.initial_volume_lo, params.initial_volume_hi);
  std::vector<double> volumes{volume};  // includes unobserved steps

  Trajectory traj(static_cast<double>(params.horizon));
  traj.append({0.0, EventKind::Feature, {volume / params.v_max}});

  for (int t = 0; t < params.horizon; ++t) {
    // Therapy decisions for step t, applied mid-cell so events stay ordered.
    const double p = tumor_treatment_probability(params, gamma, beta, t, traj);
    const bool chemo = rng.bernoulli(p);
    const bool radio = rng.bernoulli(p);
    if (chemo || radio) {
      traj.append({static_cast<double>(t) + 0.5,
                   EventKind::Treatment,
                   {chemo ? 1.0 : 0.0, radio ? 1.0 : 0.0}});
    }
    const double conc = chemo ? params.chemo_dose : 0.0;
    const double dose = radio ? params.radio_dose : 0.0;
    const double noise = params.noise_sd > 0.0 ? rng.normal(0.0, params.noise_sd) : 0.0;
    const double delta = rho * std::log(params.carrying_capacity / volume) - beta_c * conc -
                         (alpha_r * dose + beta_r * dose * dose) + noise;
    volume = volume + delta * volume;
    if (!std::isfinite(volume) || volume > 100.0 * params.v_max)
      throw std::runtime_error("simulate_tumor: volume overflow");
    if (volume < 1e-9) volume = 1e-9;  // therapy cannot make the volume negative
    volumes.push_back(volume);

    const int step = t + 1;
    if (step < params.horizon) {
      const std::size_t lo =
          volumes.size() > static_cast<std::size_t>(params.lookback)
              ? volumes.size() - static_cast<std::size_t>(params.lookback)
              : 0;
      const double mean =
          std::accumulate(volumes.begin() + static_cast<std::ptrdiff_t>(lo), volumes.end(), 0.0) /
          static_cast<double>(volumes.size() - lo);
      if (rng.bernoulli(sigmoid(mean / params.v_max - 1.5)))
        traj.append({static_cast<double>(step), EventKind::Feature, {volume / params.v_max}});
    }
  }
  const double final_volume = volume / params.v_max;
  traj.append({static_cast<double>(params.horizon), EventKind::Outcome, {final_volume}});
  return {std::move(traj), final_volume};
}

Policy make_tumor_policy(const TumorSimParams& params, double gamma, double beta) {
  Policy p;
  const double horizon = static_cast<double>(params.horizon);
  auto cell_prob = [params, gamma, beta](double u, const Trajectory& hist) {
    const int step = static_cast<int>(std::floor(u));
    return tumor_treatment_probability(params, gamma, beta, step, hist);
  };
  p.intensity.evaluate = [cell_prob](double u, const Trajectory& hist) {
    const double q = cell_prob(u, hist);
    const double p_any = 1.0 - (1.0 - q) * (1.0 - q);
    return -std::log1p(-p_any);
  };
  // The per-step probability grows with time since the last treatment; with the
  // history frozen it is largest at the horizon, which gives a valid bound for
  // any window that contains no further events.
  p.intensity.upper_bound = [params, gamma, beta, horizon](double, const Trajectory& hist) {
    const double q =
        tumor_treatment_probability(params, gamma, beta, static_cast<int>(horizon), hist);
    const double p_any = 1.0 - (1.0 - q) * (1.0 - q);
    return -std::log1p(-p_any) + 1e-12;
  };
  p.mark_sampler = [params, gamma, beta](double u, const Trajectory& hist, RngStream& rng) {
    const int step = static_cast<int>(std::floor(u));
    const double q = tumor_treatment_probability(params, gamma, beta, step, hist);
    // Joint therapy flags conditioned on at least one being applied.
    const double p_any = 1.0 - (1.0 - q) * (1.0 - q);
    const double both = q * q / p_any;
    const double single = q * (1.0 - q) / p_any;
    const double roll = rng.u01();
    if (roll < both) return std::vector<double>{1.0, 1.0};
    if (roll < both + single) return std::vector<double>{1.0, 0.0};
    return std::vector<double>{0.0, 1.0};
  };
  return p;
}

}  // namespace edq
