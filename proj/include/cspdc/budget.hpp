#pragma once

#include <cstdint>
#include <string>

#include "cspdc/uncertain.hpp"

#include "json.hpp"

namespace cspdc::budget {

/// Every chain parameter as value +/- 1 sigma. eta_duty and eta_tac are exact
/// by convention and carry sigma 0. Dark probabilities and gate geometry ride
/// along because the dark-count budget needs them.
struct EfficiencyBudget {
  UncertainValue r_trigger_hz{8.70e5, 0.05e5};
  UncertainValue eta_d1{0.45, 0.05};
  UncertainValue eta_775{0.53, 0.06};
  UncertainValue p_coinc{2.5e-11, 0.2e-11};
  UncertainValue eta_lp{0.50, 0.03};
  UncertainValue eta_duty{0.01, 0.0};
  UncertainValue eta_tac{0.5, 0.0};
  UncertainValue eta_cw{0.67, 0.05};
  UncertainValue eta_in{0.50, 0.05};
  UncertainValue eta_out{0.50, 0.05};
  UncertainValue eta_bs{0.45, 0.05};
  UncertainValue eta_d2{0.20, 0.02};
  UncertainValue eta_d3{0.10, 0.01};
  double dark_prob_d2 = 1.8e-3;
  double dark_prob_d3 = 4.5e-6;
  double gate_d2_ns = 20.0;
  double gate_d3_ns = 1.5;
  double bin_width_ns = 0.8;
};

/// Raw measurements the budget formulas invert.
struct MeasuredInputs {
  double coinc_to_singles_ratio = 0.24;
  UncertainValue triplet_rate_per_hour{4.7, 0.6};
  double pump_power_in_w = 1.1e-3;
  UncertainValue spdc_power_out_w{0.9e-9, 0.1e-9};
  double coinc_rate_hz = 24.0;
  double coinc_pump_power_w = 245e-9;
  double coinc_pump_wavelength_nm = 775.0;
};

// Plug-in central values of the chain formulas.

/// Triple-detection probability per trigger given the secondary conversion
/// probability: eta_775 eta_in p_spdc eta_out^2 2 eta_bs^2 eta_d2 eta_d3.
double p_triple(const EfficiencyBudget& b, double p_spdc);

/// Pair-coincidence probability per 775 nm photon in the input fiber:
/// eta_in p_spdc eta_out^2 eta_lp^2 2 eta_bs^2 eta_d2 eta_d3 eta_duty.
double p_coincidence(const EfficiencyBudget& b, double p_spdc);

/// Triple probability per trigger via the measured coincidence probability:
/// eta_775 p_coinc / (eta_lp^2 eta_duty).
double p_triple_from_coinc(const EfficiencyBudget& b);

/// Predicted recorded triplet rate per hour:
/// 3600 r_trigger eta_775 p_coinc / (eta_lp^2 eta_duty) eta_tac eta_cw.
double r_triple_per_hour(const EfficiencyBudget& b);

/// Conversion probability from the measured coincidence probability.
double p_spdc_from_coinc(const EfficiencyBudget& b);

/// Conversion probability from a measured net triplet rate (per hour).
double p_spdc_from_triplets(const EfficiencyBudget& b,
                            double triplet_rate_per_hour);

/// Conversion probability from pump power in and parametric power out;
/// detected power is the attenuated sum of both photons' power, one loss
/// factor per element: p_out / (eta_in eta_out eta_lp p_in).
double p_spdc_from_power(const EfficiencyBudget& b, double pump_power_in_w,
                         double spdc_power_out_w);

/// Accidental triple expectation from detector noise alone:
/// r_trigger dark_d2 dark_d3 eta_tac duration.
double expected_dark_triples(const EfficiencyBudget& b, double duration_s);

/// Coincidence probability per input photon from a measured coincidence rate
/// at a known pump power and wavelength.
double measured_p_coinc(double coinc_rate_hz, double pump_power_w,
                        double pump_wavelength_nm);

/// Fiber-coupling probability of the intermediate photon from the measured
/// coincidence-to-singles ratio, with first-order error propagation.
UncertainValue infer_eta_775(double coinc_to_singles, UncertainValue eta_d1);

enum class Quantity {
  RTriplePerHour,
  PTriple,
  PSpdcFromCoinc,
  PSpdcFromTriplets,
  PSpdcFromPower,
  ExpectedDarkTriples,
  BackgroundPerBin,
  Eta775,
};

/// Monte Carlo propagation: draws every input as an independent Gaussian
/// truncated to its physical range, evaluates the chain, and returns the
/// sample mean and standard deviation. Deterministic for a fixed seed;
/// requires samples >= 10^4.
UncertainValue propagate(const EfficiencyBudget& b, const MeasuredInputs& m,
                         Quantity q, int samples, std::uint64_t seed,
                         double duration_s = 72000.0);

/// First-order (Taylor) propagated sigma for the same quantity; the
/// cross-check companion to the sampling estimate.
double taylor_sigma(const EfficiencyBudget& b, const MeasuredInputs& m,
                    Quantity q, double duration_s = 72000.0);

/// Everything the budget evaluation produces. Means are the plug-in central
/// values; sigmas come from the Monte Carlo propagation (Taylor values are
/// kept alongside as a method cross-check).
struct BudgetReport {
  UncertainValue r_triple_per_hour;
  UncertainValue p_triple;
  UncertainValue p_spdc_from_coinc;
  UncertainValue p_spdc_from_triplets;
  UncertainValue p_spdc_from_power;
  UncertainValue expected_dark_triples;
  UncertainValue background_per_bin;
  UncertainValue eta_775_inferred;
  bool p_spdc_consistent = false;  // pairwise overlap within 1 sigma
  double taylor_sigma_r_triple = 0.0;
  double taylor_sigma_eta_775 = 0.0;
  double duration_s = 72000.0;
  int mc_samples = 0;
  std::uint64_t seed = 0;
};

BudgetReport compute_report(const EfficiencyBudget& b, const MeasuredInputs& m,
                            int mc_samples, std::uint64_t seed,
                            double duration_s = 72000.0);

/// JSON with fields r_triple_per_hour, p_triple, p_spdc_from_coinc,
/// p_spdc_from_triplets, p_spdc_from_power, expected_dark_triples,
/// background_per_bin (each {mean, sigma}) plus the eta_775 inference and
/// the consistency verdict.
nlohmann::ordered_json report_to_json(const BudgetReport& r);

}  // namespace cspdc::budget
