#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cspdc/budget.hpp"
#include "cspdc/detection.hpp"
#include "cspdc/phasematch.hpp"
#include "json.hpp"

namespace cspdc::config {

/// Raised on malformed, unknown, or out-of-range configuration input; the
/// message names the offending key path. Treated as a usage error by the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Waveguide crystal settings for the phase-matching commands. The dispersion
/// model is either a named built-in set or inline coefficients; the poling
/// period is either given directly or fitted to calibration points at load
/// time. The pump calibration maps the primary-source crystal temperature to
/// the 775-band output wavelength.
struct CrystalConfig {
  double poling_period_um = 18.91975738345657;
  double length_mm = 30.0;
  double temperature_c = 60.0;
  int qpm_order = 1;
  double pump_nm = 776.0;
  std::string sellmeier_name = "congruent_linbo3_e";  // empty: inline coeffs
  pm::SellmeierSet sellmeier = pm::congruent_linbo3_e();
  pm::PpktpCalibration pump_calibration{43.6, 776.0, 40.8, 775.4};
  std::vector<pm::TuningPoint> fit_points;  // non-empty: period was fitted
};

/// Fully resolved run configuration. The simulation block's efficiencies and
/// trigger rate mirror the budget central values; p_spdc is derived from the
/// measured triplet rate unless the file pins it explicitly.
struct Config {
  budget::EfficiencyBudget budget;
  budget::MeasuredInputs measurements;
  det::SimParams sim;
  CrystalConfig crystal;
  int mc_samples = 100000;
  bool p_spdc_pinned = false;  // true when the file set simulation.p_spdc
};

/// Built-in defaults (the reference experiment).
Config default_config();

/// Strict parse: unknown keys, wrong types, and out-of-range values raise
/// ConfigError naming the dotted key path. Absent keys keep their defaults.
Config from_json(const nlohmann::json& j);
Config load_file(const std::string& path);

/// Full resolved configuration, echoed into every JSON output.
nlohmann::ordered_json to_json(const Config& c);

}  // namespace cspdc::config
