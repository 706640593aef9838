#include "cspdc/fock.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cspdc::fock {

namespace {

using cvec = std::vector<std::complex<double>>;

struct Basis {
  int dim_per_mode;  // n_max + 1

  std::size_t size() const {
    const std::size_t d = dim_per_mode;
    return d * d * d * d;
  }
  std::size_t index(int n0, int n1, int n2, int n3) const {
    const std::size_t d = dim_per_mode;
    return ((static_cast<std::size_t>(n0) * d + n1) * d + n2) * d + n3;
  }
  Occupation occupation(std::size_t idx) const {
    const int d = dim_per_mode;
    Occupation o{};
    o[3] = static_cast<int>(idx % d);
    idx /= d;
    o[2] = static_cast<int>(idx % d);
    idx /= d;
    o[1] = static_cast<int>(idx % d);
    idx /= d;
    o[0] = static_cast<int>(idx);
    return o;
  }
};

void validate_couplings(const CascadeParams& p) {
  if (p.lambda1 < 0.0 || p.lambda2 < 0.0)
    throw std::invalid_argument("cascade couplings must be non-negative");
}

// H1 = lambda1 (alpha a0+ a1+ + conj(alpha) a0 a1)
void apply_h1(const Basis& b, const CascadeParams& p, const cvec& v, cvec& out) {
  const int nmax = b.dim_per_mode - 1;
  std::fill(out.begin(), out.end(), std::complex<double>{});
  const std::complex<double> up = p.lambda1 * p.alpha;
  const std::complex<double> down = p.lambda1 * std::conj(p.alpha);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto a = v[i];
    if (a == std::complex<double>{}) continue;
    const Occupation o = b.occupation(i);
    if (o[0] + 1 <= nmax && o[1] + 1 <= nmax) {
      const double w = std::sqrt(double(o[0] + 1) * double(o[1] + 1));
      out[b.index(o[0] + 1, o[1] + 1, o[2], o[3])] += up * w * a;
    }
    if (o[0] >= 1 && o[1] >= 1) {
      const double w = std::sqrt(double(o[0]) * double(o[1]));
      out[b.index(o[0] - 1, o[1] - 1, o[2], o[3])] += down * w * a;
    }
  }
}

// H2 = lambda2 (a0 a2+ a3+ + a0+ a2 a3)
void apply_h2(const Basis& b, const CascadeParams& p, const cvec& v, cvec& out) {
  const int nmax = b.dim_per_mode - 1;
  std::fill(out.begin(), out.end(), std::complex<double>{});
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto a = v[i];
    if (a == std::complex<double>{}) continue;
    const Occupation o = b.occupation(i);
    if (o[0] >= 1 && o[2] + 1 <= nmax && o[3] + 1 <= nmax) {
      const double w =
          std::sqrt(double(o[0]) * double(o[2] + 1) * double(o[3] + 1));
      out[b.index(o[0] - 1, o[1], o[2] + 1, o[3] + 1)] += p.lambda2 * w * a;
    }
    if (o[0] + 1 <= nmax && o[2] >= 1 && o[3] >= 1) {
      const double w =
          std::sqrt(double(o[0] + 1) * double(o[2]) * double(o[3]));
      out[b.index(o[0] + 1, o[1], o[2] - 1, o[3] - 1)] += p.lambda2 * w * a;
    }
  }
}

double sup_norm(const cvec& v) {
  double m = 0.0;
  for (const auto& a : v) m = std::max(m, std::abs(a));
  return m;
}

// v <- exp(-iH) v by Taylor series, with 2^s-fold scaling when the spectral
// bound exceeds 1 so every segment converges fast.
template <typename ApplyH>
void apply_exp_minus_ih(ApplyH&& apply_h, cvec& v, double norm_bound) {
  constexpr double kTol = 1e-12;
  constexpr int kMaxTerms = 400;
  int s = 0;
  while (norm_bound > 1.0 && s < 60) {
    norm_bound *= 0.5;
    ++s;
  }
  if (s >= 60)
    throw std::runtime_error("matrix exponential: coupling too large to scale");
  const long segments = 1L << s;
  const std::complex<double> factor{0.0, -1.0 / static_cast<double>(segments)};
  const double seg_tol = kTol / static_cast<double>(segments);

  cvec term(v.size()), scratch(v.size()), acc(v.size());
  for (long seg = 0; seg < segments; ++seg) {
    acc = v;
    term = v;
    bool converged = false;
    for (int k = 1; k <= kMaxTerms; ++k) {
      apply_h(term, scratch);
      const std::complex<double> c = factor / static_cast<double>(k);
      for (std::size_t i = 0; i < term.size(); ++i) term[i] = c * scratch[i];
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
      if (sup_norm(term) < seg_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error(
          "matrix exponential series did not converge within the iteration cap");
    v = acc;
  }
}

QuantumState to_state(const Basis& b, const cvec& v, int n_max) {
  QuantumState s;
  s.truncation = n_max;
  s.normalized = true;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == std::complex<double>{}) continue;
    const Occupation o = b.occupation(i);
    s.amplitudes[o] = v[i];
    const bool boundary =
        o[0] == n_max || o[1] == n_max || o[2] == n_max || o[3] == n_max;
    if (boundary) s.truncation_leakage += std::norm(v[i]);
  }
  return s;
}

}  // namespace

bool perturbative_ok(const CascadeParams& p) {
  return p.lambda1 * std::abs(p.alpha) <= 0.1 && p.lambda2 <= 0.1;
}

QuantumState apply_first_order_cascade(const CascadeParams& p) {
  validate_couplings(p);
  QuantumState s;
  s.truncation = 1;
  s.normalized = false;
  s.amplitudes[{0, 0, 0, 0}] = 1.0;
  const std::complex<double> pair =
      std::complex<double>{0.0, -1.0} * p.lambda1 * p.alpha;
  const std::complex<double> triple = -p.lambda1 * p.lambda2 * p.alpha;
  if (pair != std::complex<double>{}) s.amplitudes[{1, 1, 0, 0}] = pair;
  if (triple != std::complex<double>{}) s.amplitudes[{0, 1, 1, 1}] = triple;
  return s;
}

QuantumState evolve_exact(const CascadeParams& p, int n_max) {
  validate_couplings(p);
  if (n_max < 2)
    throw std::invalid_argument("evolve_exact requires n_max >= 2");

  const Basis b{n_max + 1};
  cvec v(b.size(), std::complex<double>{});
  v[b.index(0, 0, 0, 0)] = 1.0;

  const double np1 = static_cast<double>(n_max + 1);
  const double h1_bound = 2.0 * p.lambda1 * std::abs(p.alpha) * np1;
  const double h2_bound = 2.0 * p.lambda2 * np1 * std::sqrt(np1);

  apply_exp_minus_ih(
      [&](const cvec& in, cvec& out) { apply_h1(b, p, in, out); }, v, h1_bound);
  apply_exp_minus_ih(
      [&](const cvec& in, cvec& out) { apply_h2(b, p, in, out); }, v, h2_bound);

  return to_state(b, v, n_max);
}

double triplet_probability(const CascadeParams& p) {
  validate_couplings(p);
  return std::norm(p.lambda1 * p.lambda2 * p.alpha);
}

QuantumState normalize(QuantumState s) {
  const double n2 = norm_squared(s);
  if (n2 <= 0.0)
    throw std::invalid_argument("cannot normalize a zero state");
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& [occ, amp] : s.amplitudes) amp *= inv;
  s.normalized = true;
  return s;
}

std::complex<double> amplitude(const QuantumState& s, const Occupation& occ) {
  const auto it = s.amplitudes.find(occ);
  return it == s.amplitudes.end() ? std::complex<double>{} : it->second;
}

double norm_squared(const QuantumState& s) {
  double n2 = 0.0;
  for (const auto& [occ, amp] : s.amplitudes) n2 += std::norm(amp);
  return n2;
}

}  // namespace cspdc::fock
