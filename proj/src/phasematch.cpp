#include "cspdc/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cspdc::pm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wavevector(const SellmeierSet& s, double wavelength_nm,
                  double temperature_c) {
  const double lam_um = wavelength_nm * 1e-3;
  return kTwoPi * refractive_index(s, wavelength_nm, temperature_c) / lam_um;
}

// Material mismatch k_p - k_s - k_i without the grating term, rad/um.
double material_mismatch(const SellmeierSet& s, double pump_nm,
                         double signal_nm, double idler_nm,
                         double temperature_c) {
  return wavevector(s, pump_nm, temperature_c) -
         wavevector(s, signal_nm, temperature_c) -
         wavevector(s, idler_nm, temperature_c);
}

double mismatch_at(const CrystalSpec& c, double pump_nm, double signal_nm,
                   double temperature_c) {
  const double idler = idler_wavelength_nm(pump_nm, signal_nm);
  return material_mismatch(c.sellmeier, pump_nm, signal_nm, idler,
                           temperature_c) -
         c.qpm_order * kTwoPi / c.poling_period_um;
}

void validate_crystal(const CrystalSpec& c) {
  if (c.poling_period_um <= 0.0)
    throw std::invalid_argument("poling period must be positive");
  if (c.qpm_order < 1)
    throw std::invalid_argument("QPM order must be a positive integer");
}

void validate_pump_band(double pump_nm) {
  if (pump_nm < 770.0 || pump_nm > 780.0)
    throw std::invalid_argument("pump wavelength outside the 770-780 nm band");
}

}  // namespace

SellmeierSet congruent_linbo3_e() {
  return SellmeierSet{5.35583,   0.100473, 0.20692,  100.0, 11.34927,
                      1.5334e-2, 4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5};
}

double refractive_index(const SellmeierSet& s, double wavelength_nm,
                        double temperature_c) {
  if (wavelength_nm < 350.0 || wavelength_nm > 5000.0)
    throw std::invalid_argument("wavelength outside dispersion-model domain");
  if (temperature_c < 0.0 || temperature_c > 250.0)
    throw std::invalid_argument("temperature outside dispersion-model domain");
  const double f = (temperature_c - 24.5) * (temperature_c + 570.82);
  const double lam = wavelength_nm * 1e-3;
  const double l2 = lam * lam;
  const double res = s.a3 + s.b3 * f;
  const double n2 = s.a1 + s.b1 * f + (s.a2 + s.b2 * f) / (l2 - res * res) +
                    (s.a4 + s.b4 * f) / (l2 - s.a5 * s.a5) - s.a6 * l2;
  if (!(n2 > 1.0))
    throw std::invalid_argument("dispersion formula left its validity range");
  return std::sqrt(n2);
}

double idler_wavelength_nm(double pump_nm, double signal_nm) {
  if (signal_nm <= pump_nm)
    throw std::invalid_argument(
        "signal wavelength must exceed the pump wavelength");
  return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm);
}

double phase_mismatch(const CrystalSpec& c, double pump_nm, double signal_nm) {
  validate_crystal(c);
  return mismatch_at(c, pump_nm, signal_nm, c.temperature_c);
}

std::optional<PairSolution> solve_pair_wavelengths(const CrystalSpec& c,
                                                   double pump_nm) {
  validate_crystal(c);
  validate_pump_band(pump_nm);
  const double degenerate = 2.0 * pump_nm;
  const double lo = 1400.0;
  const double hi = std::min(1700.0, degenerate);
  const double step = 0.1;

  double prev_s = lo;
  double prev_v = mismatch_at(c, pump_nm, prev_s, c.temperature_c);
  for (double s = lo + step; s < hi; s += step) {
    const double v = mismatch_at(c, pump_nm, s, c.temperature_c);
    if (prev_v == 0.0 || prev_v * v < 0.0) {
      double a = prev_s, b = s;
      double fa = prev_v;
      for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = mismatch_at(c, pump_nm, m, c.temperature_c);
        if (fa * fm <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      const double root = 0.5 * (a + b);
      return PairSolution{root, idler_wavelength_nm(pump_nm, root)};
    }
    prev_s = s;
    prev_v = v;
  }
  return std::nullopt;
}

double min_phasematch_temperature(const CrystalSpec& c, double pump_nm,
                                  double t_lo, double t_hi) {
  validate_crystal(c);
  validate_pump_band(pump_nm);
  const double degenerate = 2.0 * pump_nm;
  const auto f = [&](double t) {
    return mismatch_at(c, pump_nm, degenerate - 1e-9, t);
  };
  const double step = 1.0;
  double prev_t = t_lo;
  double prev_v = f(prev_t);
  for (double t = t_lo + step; t <= t_hi + 1e-9; t += step) {
    const double v = f(t);
    if (prev_v == 0.0 || prev_v * v < 0.0) {
      double a = prev_t, b = t;
      double fa = prev_v;
      for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fa * fm <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      return 0.5 * (a + b);
    }
    prev_t = t;
    prev_v = v;
  }
  throw std::runtime_error(
      "no degeneracy temperature bracketed in the scan window");
}

PolingFit fit_poling_period(std::span<const TuningPoint> points,
                            const SellmeierSet& s, int qpm_order) {
  if (points.empty())
    throw std::invalid_argument("poling fit needs at least one point");
  if (qpm_order < 1)
    throw std::invalid_argument("QPM order must be a positive integer");
  double sum = 0.0;
  for (const auto& p : points) {
    const double recon = idler_wavelength_nm(p.pump_nm, p.signal_nm);
    if (std::abs(recon - p.idler_nm) > 1e-6 * p.idler_nm)
      throw std::invalid_argument(
          "tuning point violates energy conservation beyond 1e-6 relative");
    sum += material_mismatch(s, p.pump_nm, p.signal_nm, p.idler_nm,
                             p.temperature_c);
  }
  const double k_star = sum / static_cast<double>(points.size());
  if (k_star <= 0.0)
    throw std::runtime_error(
        "calibration points give a non-positive grating vector");
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = material_mismatch(s, p.pump_nm, p.signal_nm, p.idler_nm,
                                       p.temperature_c) -
                     k_star;
    ss += r * r;
  }
  return PolingFit{qpm_order * kTwoPi / k_star,
                   std::sqrt(ss / static_cast<double>(points.size()))};
}

double ppktp_output_wavelength(const PpktpCalibration& cal,
                               double temperature_c) {
  if (cal.temp0_c == cal.temp1_c)
    throw std::invalid_argument("calibration anchors need distinct temperatures");
  const double lo = std::min(cal.temp0_c, cal.temp1_c) - 5.0;
  const double hi = std::max(cal.temp0_c, cal.temp1_c) + 5.0;
  if (temperature_c < lo || temperature_c > hi)
    throw std::invalid_argument(
        "temperature more than 5 C outside the calibration anchors");
  const double slope = (cal.wavelength1_nm - cal.wavelength0_nm) /
                       (cal.temp1_c - cal.temp0_c);
  return cal.wavelength0_nm + slope * (temperature_c - cal.temp0_c);
}

std::vector<TuningPoint> tuning_curve(const CrystalSpec& c, double pump_nm,
                                      double t_lo, double t_hi, double t_step) {
  if (t_step <= 0.0) throw std::invalid_argument("scan step must be positive");
  std::vector<TuningPoint> out;
  CrystalSpec probe = c;
  for (double t = t_lo; t <= t_hi + 1e-9; t += t_step) {
    probe.temperature_c = t;
    if (const auto sol = solve_pair_wavelengths(probe, pump_nm)) {
      out.push_back(TuningPoint{pump_nm, t, sol->signal_nm, sol->idler_nm});
    }
  }
  return out;
}

}  // namespace cspdc::pm
