#pragma once

#include <array>
#include <complex>
#include <map>

namespace cspdc::fock {

/// Photon occupation per spatial mode. Mode 0 is the intermediate photon that
/// pumps the second crystal; mode 1 its partner; modes 2 and 3 the final pair.
using Occupation = std::array<int, 4>;

/// Couplings of the two-stage cascade. The pump is a classical amplitude
/// alpha; lambda1 and lambda2 are real non-negative interaction strengths.
struct CascadeParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::complex<double> alpha{1.0, 0.0};
};

struct QuantumState {
  std::map<Occupation, std::complex<double>> amplitudes;
  int truncation = 0;               // max occupation per mode in the basis
  bool normalized = false;           // first-order states stay unnormalized
  double truncation_leakage = 0.0;   // probability sitting on boundary states
};

/// True when lambda1*|alpha| and lambda2 are both at most 0.1, the regime in
/// which the first-order expansion is meaningful.
bool perturbative_ok(const CascadeParams& p);

/// First-order state: amplitude 1 on |0,0,0,0>, -i*lambda1*alpha on
/// |1,1,0,0>, -lambda1*lambda2*alpha on |0,1,1,1>. Left unnormalized.
/// Throws std::invalid_argument on negative couplings.
QuantumState apply_first_order_cascade(const CascadeParams& p);

/// Full evolution exp(-iH2) exp(-iH1) |vacuum> in the Fock space truncated at
/// n_max photons per mode, via a scaled Taylor expansion of each exponential
/// (sup-norm tolerance 1e-12). Throws std::invalid_argument for n_max < 2 or
/// negative couplings, std::runtime_error if the series fails to converge.
QuantumState evolve_exact(const CascadeParams& p, int n_max);

/// |lambda1*lambda2*alpha|^2, the first-order triplet emission probability.
/// Exactly proportional to the pump intensity |alpha|^2.
double triplet_probability(const CascadeParams& p);

/// Returns the state scaled to unit norm. Never applied implicitly.
QuantumState normalize(QuantumState s);

/// Amplitude lookup; absent basis states read as exactly zero.
std::complex<double> amplitude(const QuantumState& s, const Occupation& occ);

/// Sum of |amplitude|^2 over the whole state.
double norm_squared(const QuantumState& s);

}  // namespace cspdc::fock
