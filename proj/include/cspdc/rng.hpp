#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cspdc::rng {

inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

/// Deterministic random substream. The (seed, stream_id, block) triple fully
/// determines the sequence, so modules and parallel blocks can draw without
/// sharing state and results never depend on scheduling.
/// Core generator: xoshiro256** seeded through splitmix64.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0,
                  std::uint64_t block = 0) noexcept {
    std::uint64_t sm = seed;
    std::uint64_t h = splitmix64_next(sm);
    sm ^= 0x6a09e667f3bcc909ull + stream_id;
    h ^= splitmix64_next(sm);
    sm ^= 0xbb67ae8584caa73bull + block;
    h ^= splitmix64_next(sm);
    std::uint64_t init = h;
    for (auto& w : s_) w = splitmix64_next(init);
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform01() noexcept { return (next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe for log().
  double uniform_oc() noexcept {
    return ((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Standard normal via Box-Muller, caching the second deviate.
  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_oc();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double sigma) noexcept {
    return mean + sigma * gaussian();
  }

  /// Gaussian restricted to [lo, hi] by rejection; the callers keep the bounds
  /// far enough from the mean that this terminates almost immediately.
  double truncated_gaussian(double mean, double sigma, double lo, double hi) {
    if (sigma <= 0.0) {
      return mean < lo ? lo : (mean > hi ? hi : mean);
    }
    for (int i = 0; i < 100000; ++i) {
      const double x = gaussian(mean, sigma);
      if (x >= lo && x <= hi) return x;
    }
    throw std::runtime_error(
        "truncated_gaussian: bounds exclude essentially all probability mass");
  }

  /// Number of Bernoulli(p) failures before the first success.
  /// Returns UINT64_MAX when p <= 0 (no success ever).
  std::uint64_t geometric_failures(double p) noexcept {
    if (p >= 1.0) return 0;
    if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    const double u = uniform_oc();
    const double k = std::floor(std::log(u) / std::log1p(-p));
    if (!(k < 9.0e18)) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(k);
  }

  std::uint64_t poisson(double mean) noexcept {
    if (!(mean > 0.0)) return 0;
    if (mean < 500.0) {
      // Knuth: multiply uniforms until the product drops below exp(-mean).
      const double target = std::exp(-mean);
      std::uint64_t k = 0;
      double prod = uniform_oc();
      while (prod > target) {
        ++k;
        prod *= uniform_oc();
      }
      return k;
    }
    const double v = mean + gaussian() * std::sqrt(mean);
    return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
  }

  std::uint64_t binomial(std::uint64_t n, double p) noexcept {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double mean = static_cast<double>(n) * p;
    if (n <= 64) {
      std::uint64_t k = 0;
      for (std::uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
      return k;
    }
    if (p < 1e-6) {
      const std::uint64_t k = poisson(mean);
      return k > n ? n : k;
    }
    if (mean <= 50.0) {
      // Inverse-CDF walk on the pmf recurrence (BINV).
      const double odds = p / (1.0 - p);
      double pk = std::exp(static_cast<double>(n) * std::log1p(-p));
      double u = uniform01();
      std::uint64_t k = 0;
      while (u > pk && k < n) {
        u -= pk;
        ++k;
        pk *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * odds;
      }
      return k;
    }
    const double sd = std::sqrt(mean * (1.0 - p));
    const double v = mean + gaussian() * sd;
    if (v <= 0.0) return 0;
    const auto k = static_cast<std::uint64_t>(std::llround(v));
    return k > n ? n : k;
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Splits `total` into bins proportional to `weights` by chained conditional
/// binomials; exactly multinomial in distribution.
inline std::vector<std::uint64_t> multinomial(Stream& s, std::uint64_t total,
                                              const std::vector<double>& weights) {
  double remaining_w = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("multinomial: negative weight");
    remaining_w += w;
  }
  std::vector<std::uint64_t> out(weights.size(), 0);
  std::uint64_t remaining = total;
  for (std::size_t i = 0; i + 1 < weights.size() && remaining > 0; ++i) {
    if (remaining_w <= 0.0) break;
    const double frac = weights[i] / remaining_w;
    out[i] = s.binomial(remaining, frac > 1.0 ? 1.0 : frac);
    remaining -= out[i];
    remaining_w -= weights[i];
  }
  if (!weights.empty()) out.back() = remaining;
  return out;
}

}  // namespace cspdc::rng
