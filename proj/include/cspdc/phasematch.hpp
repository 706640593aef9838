#pragma once

#include <optional>
#include <span>
#include <vector>

namespace cspdc::pm {

/// Coefficients of a temperature-dependent single-resonance dispersion
/// formula for the extraordinary index:
///   n^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
///       + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2
/// with l the wavelength in um and f = (T - 24.5)(T + 570.82), T in Celsius.
struct SellmeierSet {
  double a1, a2, a3, a4, a5, a6;
  double b1, b2, b3, b4;
};

/// Published coefficient set for congruent lithium niobate, extraordinary ray.
SellmeierSet congruent_linbo3_e();

/// n(lambda, T). Domain: wavelength in [350, 5000] nm, T in [0, 250] C;
/// throws std::invalid_argument outside it.
double refractive_index(const SellmeierSet& s, double wavelength_nm,
                        double temperature_c);

struct CrystalSpec {
  SellmeierSet sellmeier;
  double poling_period_um = 0.0;
  double crystal_length_mm = 0.0;
  double temperature_c = 25.0;
  int qpm_order = 1;
};

/// Energy-conservation partner: 1/pump = 1/signal + 1/idler.
double idler_wavelength_nm(double pump_nm, double signal_nm);

/// Collinear quasi-phase-matched momentum mismatch in rad/um,
/// k(pump) - k(signal) - k(idler) - order * 2 pi / poling_period,
/// evaluated at the crystal temperature. Requires signal > pump.
double phase_mismatch(const CrystalSpec& c, double pump_nm, double signal_nm);

struct PairSolution {
  double signal_nm = 0.0;
  double idler_nm = 0.0;
};

/// Non-degenerate root of the phase-matching condition with signal < idler,
/// or nothing when the crystal temperature sits below the cutoff. Pump must
/// lie in the 770-780 nm band. Sign changes are bracketed on a 0.1 nm grid
/// over [1400, 1700] nm and refined by bisection.
std::optional<PairSolution> solve_pair_wavelengths(const CrystalSpec& c,
                                                   double pump_nm);

/// Temperature at which the phase-matched pair becomes degenerate
/// (signal = idler = 2 * pump); below it no solution exists. Searches
/// [t_lo, t_hi] and throws std::runtime_error when no degeneracy is bracketed.
double min_phasematch_temperature(const CrystalSpec& c, double pump_nm,
                                  double t_lo = 20.0, double t_hi = 120.0);

/// One calibration or tuning-curve sample.
struct TuningPoint {
  double pump_nm = 0.0;
  double temperature_c = 0.0;
  double signal_nm = 0.0;
  double idler_nm = 0.0;
};

struct PolingFit {
  double poling_period_um = 0.0;
  double rms_residual = 0.0;  // rad/um at the fitted period
};

/// Least-squares poling period over calibration points. The mismatch is
/// linear in the grating vector K = order*2pi/period, so the optimum is the
/// mean of the per-point material mismatches, in closed form.
/// Requires at least one point; each point must satisfy energy conservation
/// to 1e-6 relative.
PolingFit fit_poling_period(std::span<const TuningPoint> points,
                            const SellmeierSet& s, int qpm_order = 1);

/// Two-point linear temperature-to-wavelength map for the primary source.
struct PpktpCalibration {
  double temp0_c = 0.0;
  double wavelength0_nm = 0.0;
  double temp1_c = 0.0;
  double wavelength1_nm = 0.0;
};

/// Linear interpolation through the two anchors; valid within 5 C of them.
double ppktp_output_wavelength(const PpktpCalibration& cal,
                               double temperature_c);

/// Solved tuning curve sampled on [t_lo, t_hi] with step t_step; temperatures
/// without a solution are skipped.
std::vector<TuningPoint> tuning_curve(const CrystalSpec& c, double pump_nm,
                                      double t_lo, double t_hi, double t_step);

}  // namespace cspdc::pm
