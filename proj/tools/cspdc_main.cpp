#include <complex>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cspdc/budget.hpp"
#include "cspdc/config.hpp"
#include "cspdc/detection.hpp"
#include "cspdc/fock.hpp"
#include "cspdc/histogram.hpp"
#include "cspdc/phasematch.hpp"
#include "cspdc/version.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

void emit(const std::string& text, const std::string& output) {
  if (output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(output);
  if (!f) throw std::runtime_error("cannot open for writing: " + output);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + output);
}

void emit_json(ordered_json j, const cspdc::config::Config& cfg,
               const std::string& output) {
  ordered_json out;
  out["version"] = cspdc::kVersion;
  out["config"] = cspdc::config::to_json(cfg);
  for (auto& [k, v] : j.items()) out[k] = std::move(v);
  emit(out.dump(2) + "\n", output);
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<cspdc::pm::TuningPoint> read_tuning_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw cspdc::hist::ParseError("cannot open tuning csv: " + path);
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& what) {
    throw cspdc::hist::ParseError("tuning csv line " + std::to_string(lineno) +
                                  ": " + what);
  };
  std::vector<cspdc::pm::TuningPoint> pts;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "pump_nm,temperature_C,signal_nm,idler_nm")
        bad("expected header 'pump_nm,temperature_C,signal_nm,idler_nm'");
      continue;
    }
    std::istringstream row(line);
    std::string field;
    double vals[4];
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(row, field, ',')) bad("expected four fields");
      try {
        std::size_t used = 0;
        vals[i] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        bad("bad number '" + field + "'");
      }
    }
    if (std::getline(row, field, ',')) bad("expected exactly four fields");
    pts.push_back({vals[0], vals[1], vals[2], vals[3]});
  }
  if (pts.empty()) throw cspdc::hist::ParseError("tuning csv: no data rows");
  return pts;
}

int run(int argc, char** argv) {
  CLI::App app{
      "Photon-triplet cascade toolkit: efficiency budgets, phase matching, "
      "and chained-gating detection simulation"};
  app.set_version_flag("--version", std::string(cspdc::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config,-c", config_path, "JSON configuration file");
  std::uint64_t seed = 0;
  auto* seed_opt =
      app.add_option("--seed", seed, "random seed (overrides the config)");
  std::string output = "-";
  app.add_option("--output,--out,-o", output,
                 "write the report to this file ('-' for stdout)");

  auto* cmd_budget = app.add_subcommand(
      "budget", "rate and probability budget of the detection chain");
  int samples = 0;
  auto* samples_opt = cmd_budget->add_option(
      "--samples", samples, "Monte Carlo samples for the uncertainties");
  double budget_duration = 0.0;
  auto* budget_dur_opt = cmd_budget->add_option(
      "--duration-s", budget_duration, "integration time for noise counts");

  auto* cmd_pm = app.add_subcommand(
      "phasematch", "quasi-phase-matched pair wavelengths vs temperature");
  double pm_temp = 0.0, pm_pump = 0.0, pm_ppktp_temp = 0.0;
  auto* pm_temp_opt = cmd_pm->add_option("--temp-c,--temperature", pm_temp,
                                         "crystal temperature in C");
  auto* pm_pump_opt =
      cmd_pm->add_option("--pump-nm,--pump", pm_pump, "pump wavelength in nm");
  auto* pm_ppktp_opt = cmd_pm->add_option(
      "--ppktp-temp-c", pm_ppktp_temp,
      "derive the pump wavelength from the primary-source crystal temperature");
  pm_ppktp_opt->excludes(pm_pump_opt);
  std::vector<double> pm_scan;
  auto* pm_scan_opt =
      cmd_pm->add_option("--scan", pm_scan,
                         "emit a CSV tuning curve over LO HI STEP degrees C")
          ->expected(3);
  std::string pm_fit_path;
  cmd_pm->add_option("--fit", pm_fit_path,
                     "fit the poling period to a calibration CSV "
                     "(pump_nm,temperature_C,signal_nm,idler_nm)");
  bool pm_tmin = false;
  cmd_pm->add_flag("--tmin", pm_tmin,
                   "report the degeneracy temperature for the pump");

  auto* cmd_sim = app.add_subcommand(
      "simulate", "run the chained-gating detection simulation");
  std::string sim_mode;
  cmd_sim->add_option("--mode", sim_mode, "simulation mode")
      ->check(CLI::IsMember({"aggregated", "event_driven"}));
  double sim_duration = 0.0, sim_delay = 0.0, sim_p_spdc = 0.0;
  auto* sim_dur_opt =
      cmd_sim->add_option("--duration-s", sim_duration, "integration time");
  auto* sim_delay_opt = cmd_sim->add_option(
      "--delay-ns", sim_delay, "third-detector gate offset");
  auto* sim_pspdc_opt = cmd_sim->add_option(
      "--p-spdc", sim_p_spdc, "secondary conversion probability override");
  std::string hist_out;
  cmd_sim->add_option("--hist-out", hist_out,
                      "also write the arrival-time histogram CSV here");

  auto* cmd_analyze = app.add_subcommand(
      "analyze", "peak and background analysis of a histogram CSV");
  std::string analyze_path;
  cmd_analyze->add_option("histogram", analyze_path, "histogram CSV file")
      ->required();
  int window = 3;
  cmd_analyze->add_option("--window", window, "peak window width in bins");
  double analyze_duration = 0.0;
  auto* analyze_dur_opt = cmd_analyze->add_option(
      "--duration-s", analyze_duration,
      "integration time behind the histogram (for rates)");

  auto* cmd_fock = app.add_subcommand(
      "fock", "two-stage cascade state in a truncated photon-number basis");
  double l1 = 1e-3, l2 = 1e-2, alpha_abs = 1.0, alpha_arg = 0.0;
  int n_max = 3;
  cmd_fock->add_option("--lambda1", l1, "first-stage coupling");
  cmd_fock->add_option("--lambda2", l2, "second-stage coupling");
  cmd_fock->add_option("--alpha", alpha_abs, "pump amplitude magnitude");
  cmd_fock->add_option("--alpha-arg", alpha_arg, "pump amplitude phase (rad)");
  cmd_fock->add_option("--nmax", n_max, "per-mode occupation cutoff");

  for (CLI::App* sub : {cmd_budget, cmd_pm, cmd_sim, cmd_analyze, cmd_fock})
    sub->fallthrough();  // global flags also work after the subcommand name

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help text or the parse error
    return code == 0 ? 0 : 1;      // all usage problems map to 1
  }

  cspdc::config::Config cfg = config_path.empty()
                                  ? cspdc::config::default_config()
                                  : cspdc::config::load_file(config_path);
  if (seed_opt->count() > 0) cfg.sim.seed = seed;

  if (cmd_budget->parsed()) {
    if (samples_opt->count() > 0) cfg.mc_samples = samples;
    if (budget_dur_opt->count() > 0) cfg.sim.duration_s = budget_duration;
    const cspdc::budget::BudgetReport rep = cspdc::budget::compute_report(
        cfg.budget, cfg.measurements, cfg.mc_samples, cfg.sim.seed,
        cfg.sim.duration_s);
    emit_json(cspdc::budget::report_to_json(rep), cfg, output);
    return 0;
  }

  if (cmd_pm->parsed()) {
    if (pm_temp_opt->count() > 0) cfg.crystal.temperature_c = pm_temp;
    if (pm_pump_opt->count() > 0) cfg.crystal.pump_nm = pm_pump;

    ordered_json extra;
    if (pm_ppktp_opt->count() > 0) {
      cfg.crystal.pump_nm = cspdc::pm::ppktp_output_wavelength(
          cfg.crystal.pump_calibration, pm_ppktp_temp);
      extra["ppktp_temp_c"] = pm_ppktp_temp;
    }
    if (!pm_fit_path.empty()) {
      const auto pts = read_tuning_csv(pm_fit_path);
      const cspdc::pm::PolingFit fit = cspdc::pm::fit_poling_period(
          pts, cfg.crystal.sellmeier, cfg.crystal.qpm_order);
      cfg.crystal.poling_period_um = fit.poling_period_um;
      extra["fit"] = {{"poling_period_um", fit.poling_period_um},
                      {"rms_residual_rad_per_um", fit.rms_residual},
                      {"points", pts.size()}};
    }

    cspdc::pm::CrystalSpec spec{
        cfg.crystal.sellmeier, cfg.crystal.poling_period_um,
        cfg.crystal.length_mm, cfg.crystal.temperature_c,
        cfg.crystal.qpm_order};

    if (pm_scan_opt->count() > 0) {
      const auto curve = cspdc::pm::tuning_curve(
          spec, cfg.crystal.pump_nm, pm_scan[0], pm_scan[1], pm_scan[2]);
      std::string csv = "temperature_C,signal_nm,idler_nm\n";
      for (const auto& pt : curve)
        csv += fmt_g(pt.temperature_c) + "," + fmt_g(pt.signal_nm) + "," +
               fmt_g(pt.idler_nm) + "\n";
      emit(csv, output);
      return 0;
    }

    ordered_json j;
    j["pump_nm"] = cfg.crystal.pump_nm;
    j["temperature_c"] = cfg.crystal.temperature_c;
    j["poling_period_um"] = cfg.crystal.poling_period_um;
    const auto sol = cspdc::pm::solve_pair_wavelengths(spec, cfg.crystal.pump_nm);
    j["phase_matched"] = sol.has_value();
    if (sol) {
      j["signal_nm"] = sol->signal_nm;
      j["idler_nm"] = sol->idler_nm;
      j["delta_k_rad_per_um"] =
          cspdc::pm::phase_mismatch(spec, cfg.crystal.pump_nm, sol->signal_nm);
    } else {
      j["signal_nm"] = nullptr;
      j["idler_nm"] = nullptr;
    }
    if (pm_tmin) {
      try {
        j["t_min_c"] =
            cspdc::pm::min_phasematch_temperature(spec, cfg.crystal.pump_nm);
      } catch (const std::runtime_error&) {
        j["t_min_c"] = nullptr;
      }
    }
    for (auto& [k, v] : extra.items()) j[k] = std::move(v);
    emit_json(std::move(j), cfg, output);
    return 0;
  }

  if (cmd_sim->parsed()) {
    if (!sim_mode.empty())
      cfg.sim.mode = sim_mode == "aggregated" ? cspdc::det::SimMode::Aggregated
                                              : cspdc::det::SimMode::EventDriven;
    if (sim_dur_opt->count() > 0) cfg.sim.duration_s = sim_duration;
    if (sim_delay_opt->count() > 0) cfg.sim.delay_ns = sim_delay;
    if (sim_pspdc_opt->count() > 0) cfg.sim.p_spdc = sim_p_spdc;

    const cspdc::det::SimResult res = cspdc::det::simulate(cfg.sim);
    const cspdc::det::ExpectedCounts exp = cspdc::det::expected_counters(cfg.sim);

    ordered_json j;
    j["counters"] = cspdc::det::counters_to_json(res.counters);
    j["expected"] = {{"triggers", exp.triggers},
                     {"d2_fires", exp.d2_fires},
                     {"d3_fires", exp.d3_fires},
                     {"signal_triples", exp.signal_triples},
                     {"dark_triples", exp.dark_triples},
                     {"tac_recorded", exp.tac_recorded}};
    j["histogram"] = {{"bin_width_ns", res.histogram.bin_width_ns},
                      {"start_ns", res.histogram.start_ns},
                      {"duration_s", res.histogram.duration_s},
                      {"total", res.histogram.total()},
                      {"counts", res.histogram.counts}};
    if (!hist_out.empty()) {
      cspdc::hist::write_csv(res.histogram, hist_out);
      j["histogram_csv"] = hist_out;
    }
    emit_json(std::move(j), cfg, output);
    return 0;
  }

  if (cmd_analyze->parsed()) {
    cspdc::hist::Histogram h = cspdc::hist::read_csv(analyze_path);
    h.duration_s = analyze_dur_opt->count() > 0 ? analyze_duration
                                                : cfg.sim.duration_s;
    const cspdc::hist::PeakReport rep = cspdc::hist::analyze_peak(h, window);
    ordered_json j;
    j["input"] = analyze_path;
    j["bins"] = h.counts.size();
    j["total_counts"] = h.total();
    j["duration_s"] = h.duration_s;
    j["peak"] = cspdc::hist::report_to_json(rep);
    emit_json(std::move(j), cfg, output);
    return 0;
  }

  // fock
  const cspdc::fock::CascadeParams p{l1, l2,
                                     std::polar(alpha_abs, alpha_arg)};
  const cspdc::fock::QuantumState exact = cspdc::fock::evolve_exact(p, n_max);
  const cspdc::fock::QuantumState first =
      cspdc::fock::apply_first_order_cascade(p);

  auto amp_json = [](const cspdc::fock::QuantumState& s,
                     const cspdc::fock::Occupation& occ) {
    const auto a = cspdc::fock::amplitude(s, occ);
    return ordered_json{{"re", a.real()}, {"im", a.imag()}};
  };
  const cspdc::fock::Occupation vac{0, 0, 0, 0}, pair{1, 1, 0, 0},
      triplet{0, 1, 1, 1};

  ordered_json j;
  j["lambda1"] = l1;
  j["lambda2"] = l2;
  j["alpha"] = {{"abs", alpha_abs}, {"arg", alpha_arg}};
  j["n_max"] = n_max;
  j["perturbative_ok"] = cspdc::fock::perturbative_ok(p);
  j["exact"] = {{"vacuum", amp_json(exact, vac)},
                {"pair", amp_json(exact, pair)},
                {"triplet", amp_json(exact, triplet)},
                {"norm_squared", cspdc::fock::norm_squared(exact)},
                {"truncation_leakage", exact.truncation_leakage},
                {"basis_states", exact.amplitudes.size()}};
  j["first_order"] = {{"vacuum", amp_json(first, vac)},
                      {"pair", amp_json(first, pair)},
                      {"triplet", amp_json(first, triplet)}};
  j["triplet_probability_first_order"] = cspdc::fock::triplet_probability(p);
  emit_json(std::move(j), cfg, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cspdc::config::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cspdc::hist::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
