#include "edq/approximator.hpp"

#include <cmath>
#include <stdexcept>

namespace edq {

std::vector<double> embed_time(double t, std::size_t dim, double base) {
  if (dim % 2 != 0) throw std::invalid_argument("embed_time: dim must be even");
  if (t < 0.0) throw std::invalid_argument("embed_time: t must be nonnegative");
  std::vector<double> out(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t exp_k = (k % 2 == 0) ? k : k - 1;
    const double freq = std::pow(base, -static_cast<double>(exp_k) / static_cast<double>(dim));
    out[k] = (k % 2 == 0) ? std::sin(t * freq) : std::cos(t * freq);
  }
  return out;
}

std::size_t FeaturizerConfig::feature_size() const {
  const std::size_t per_event = 1 + 4 + mark_dim + time_dim;
  return 2 * time_dim + last_k * per_event + 4 + 1;
}

namespace {

std::size_t kind_index(EventKind k) {
  switch (k) {
    case EventKind::Feature: return 0;
    case EventKind::Outcome: return 1;
    case EventKind::Treatment: return 2;
    case EventKind::ObservedTreatment: return 3;
  }
  throw std::logic_error("kind_index");
}

}  // namespace

std::vector<double> featurize(const Trajectory& history, double t, const FeaturizerConfig& cfg) {
  std::vector<double> out;
  out.reserve(cfg.feature_size());
  const auto& events = history.events();
  for (const Event& e : events) {
    if (e.time > t) throw std::invalid_argument("featurize: history extends beyond t");
  }
  const double last_time = events.empty() ? 0.0 : events.back().time;
  const auto t_embed = embed_time(t, cfg.time_dim, cfg.embedding_base);
  const auto gap_embed = embed_time(t - last_time, cfg.time_dim, cfg.embedding_base);
  out.insert(out.end(), t_embed.begin(), t_embed.end());
  out.insert(out.end(), gap_embed.begin(), gap_embed.end());
  // Most recent K events, newest first; zero-padded with a presence flag.
  for (std::size_t slot = 0; slot < cfg.last_k; ++slot) {
    if (slot < events.size()) {
      const Event& e = events[events.size() - 1 - slot];
      out.push_back(1.0);
      for (std::size_t k = 0; k < 4; ++k) out.push_back(kind_index(e.kind) == k ? 1.0 : 0.0);
      for (std::size_t m = 0; m < cfg.mark_dim; ++m)
        out.push_back(m < e.mark.size() ? e.mark[m] : 0.0);
      const auto e_embed = embed_time(e.time, cfg.time_dim, cfg.embedding_base);
      out.insert(out.end(), e_embed.begin(), e_embed.end());
    } else {
      out.insert(out.end(), 1 + 4 + cfg.mark_dim + cfg.time_dim, 0.0);
    }
  }
  double counts[4] = {0, 0, 0, 0};
  double y_sum = 0.0;
  for (const Event& e : events) {
    counts[kind_index(e.kind)] += 1.0;
    if (e.kind == EventKind::Outcome && !e.mark.empty()) y_sum += e.mark[0];
  }
  out.insert(out.end(), counts, counts + 4);
  out.push_back(y_sum);
  return out;
}

namespace {

std::size_t param_count(const std::vector<std::size_t>& layers) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l] * layers[l + 1] + layers[l + 1];
  return n;
}

}  // namespace

MlpQ::MlpQ(std::vector<std::size_t> layer_sizes, RngStream& rng)
    : layers_(std::move(layer_sizes)) {
  if (layers_.size() < 2) throw std::invalid_argument("MlpQ: need at least input and output layers");
  if (layers_.back() != 1) throw std::invalid_argument("MlpQ: output layer must be scalar");
  params_.resize(param_count(layers_));
  std::size_t idx = 0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const double scale = std::sqrt(1.0 / static_cast<double>(layers_[l]));
    for (std::size_t i = 0; i < layers_[l] * layers_[l + 1]; ++i)
      params_[idx++] = rng.uniform(-scale, scale);
    for (std::size_t i = 0; i < layers_[l + 1]; ++i) params_[idx++] = 0.0;
  }
  adam_m_.assign(params_.size(), 0.0);
  adam_v_.assign(params_.size(), 0.0);
}

double MlpQ::value_with(std::span<const double> params, const std::vector<std::size_t>& layers,
                        std::span<const double> input) {
  if (input.size() != layers.front()) throw std::invalid_argument("MlpQ: input size mismatch");
  std::vector<double> act(input.begin(), input.end());
  std::size_t idx = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const std::size_t in = layers[l];
    const std::size_t out = layers[l + 1];
    std::vector<double> next(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = 0.0;
      const double* w = &params[idx + j * in];
      for (std::size_t i = 0; i < in; ++i) s += w[i] * act[i];
      next[j] = s;
    }
    idx += in * out;
    for (std::size_t j = 0; j < out; ++j) next[j] += params[idx + j];
    idx += out;
    if (l + 2 < layers.size())
      for (double& v : next) v = std::tanh(v);
    act = std::move(next);
  }
  return act[0];
}

double MlpQ::value(std::span<const double> input) const {
  return value_with(params_, layers_, input);
}

std::vector<double> MlpQ::loss_gradient(const std::vector<std::vector<double>>& inputs,
                                        const std::vector<double>& labels,
                                        double* loss_out) const {
  if (inputs.empty() || inputs.size() != labels.size())
    throw std::invalid_argument("loss_gradient: batch size mismatch");
  std::vector<double> grad(params_.size(), 0.0);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    // Forward pass keeping activations.
    std::vector<std::vector<double>> acts;
    acts.emplace_back(inputs[n].begin(), inputs[n].end());
    if (acts[0].size() != layers_.front())
      throw std::invalid_argument("loss_gradient: input size mismatch");
    std::size_t idx = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const std::size_t in = layers_[l];
      const std::size_t out = layers_[l + 1];
      std::vector<double> next(out);
      for (std::size_t j = 0; j < out; ++j) {
        double s = params_[idx + in * out + j];
        const double* w = &params_[idx + j * in];
        for (std::size_t i = 0; i < in; ++i) s += w[i] * acts[l][i];
        next[j] = s;
      }
      idx += in * out + out;
      if (l + 2 < layers_.size())
        for (double& v : next) v = std::tanh(v);
      acts.push_back(std::move(next));
    }
    const double pred = acts.back()[0];
    const double err = pred - labels[n];
    if (!std::isfinite(err))
      throw std::runtime_error("loss_gradient: non-finite prediction or label");
    loss += err * err * inv_n;
    // Backward pass.
    std::vector<double> delta{2.0 * err * inv_n};
    for (std::size_t l = layers_.size() - 1; l-- > 0;) {
      const std::size_t in = layers_[l];
      const std::size_t out = layers_[l + 1];
      idx -= in * out + out;
      std::vector<double> delta_prev(in, 0.0);
      for (std::size_t j = 0; j < out; ++j) {
        grad[idx + in * out + j] += delta[j];
        for (std::size_t i = 0; i < in; ++i) {
          grad[idx + j * in + i] += delta[j] * acts[l][i];
          delta_prev[i] += delta[j] * params_[idx + j * in + i];
        }
      }
      if (l > 0) {
        for (std::size_t i = 0; i < in; ++i) {
          const double a = acts[l][i];  // tanh output
          delta_prev[i] *= (1.0 - a * a);
        }
      }
      delta = std::move(delta_prev);
    }
  }
  if (loss_out) *loss_out = loss;
  return grad;
}

double MlpQ::grad_step(const std::vector<std::vector<double>>& inputs,
                       const std::vector<double>& labels, double step_size) {
  double loss = 0.0;
  const std::vector<double> grad = loss_gradient(inputs, labels, &loss);
  if (loss == 0.0) return 0.0;  // exact stationary point, leave params untouched
  ++adam_step_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam_step_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam_step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * grad[i];
    adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * grad[i] * grad[i];
    const double update =
        step_size * (adam_m_[i] / corr1) / (std::sqrt(adam_v_[i] / corr2) + eps);
    if (!std::isfinite(update)) throw std::runtime_error("grad_step: non-finite update");
    params_[i] -= update;
  }
  return loss;
}

double MlpQ::grad_step(std::span<const double> input, double label, double step_size) {
  const std::vector<std::vector<double>> batch{std::vector<double>(input.begin(), input.end())};
  const std::vector<double> labels{label};
  return grad_step(batch, labels, step_size);
}

TargetCopy::TargetCopy(const MlpQ& q, double tau)
    : layers_(q.layers()), params_(q.params()), tau_(tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("TargetCopy: tau must be in (0, 1]");
}

void TargetCopy::soft_update(const MlpQ& q) {
  const auto& theta = q.params();
  if (theta.size() != params_.size()) throw std::invalid_argument("soft_update: size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i)
    params_[i] = tau_ * theta[i] + (1.0 - tau_) * params_[i];
}

double TargetCopy::value(std::span<const double> input) const {
  return MlpQ::value_with(params_, layers_, input);
}

double TabularQ::value(const std::string& key) const {
  const auto it = table_.find(key);
  if (it == table_.end()) throw std::out_of_range("TabularQ: missing key " + key);
  return it->second;
}

}  // namespace edq
