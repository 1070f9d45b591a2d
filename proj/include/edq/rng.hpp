#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

namespace edq {

// Deterministic splittable random stream based on splitmix64.
// Every stochastic operation in the project takes one of these explicitly,
// so runs are reproducible and parallel workers can use disjoint streams.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix_seed(seed)) {}

  // Derives an independent child stream. Does not advance this stream.
  RngStream split(std::uint64_t label) const {
    return RngStream(state_ ^ mix_seed(label ^ 0x9e3779b97f4a7c15ULL));
  }

  RngStream split(std::string_view label) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return split(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1); never returns 0 or 1.
  double u01() {
    const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(u01()) / rate;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = u01();
    const double u2 = u01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + sd * z;
  }

  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    return static_cast<std::size_t>(next_u64() % n);
  }

  bool bernoulli(double p) { return u01() < p; }

  // Index drawn proportionally to nonnegative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("categorical: bad weight");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: zero total weight");
    double u = u01() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  static std::uint64_t mix_seed(std::uint64_t s) {
    s += 0x9e3779b97f4a7c15ULL;
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ULL;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebULL;
    return s ^ (s >> 31);
  }

  std::uint64_t state_;
};

}  // namespace edq
