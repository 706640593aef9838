#include "cspdc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace cspdc::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

/// Strict accessor for one JSON object: every key must be consumed, every
/// value must have the requested type, and finish() rejects leftovers.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  std::string sub(const char* key) const { return path_ + "." + key; }

  void number(const char* key, double& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(sub(key), "expected a number");
    out = v.get<double>();
  }

  void integer(const char* key, int& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(sub(key), "expected an integer");
    out = v.get<int>();
  }

  void unsigned64(const char* key, std::uint64_t& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      fail(sub(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void text(const char* key, std::string& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(sub(key), "expected a string");
    out = v.get<std::string>();
  }

  /// {"mean": x, "sigma": y} with sigma optional (defaults to 0).
  void uncertain(const char* key, UncertainValue& out) {
    if (!take(key)) return;
    const json& v = j_.at(key);
    if (v.is_number()) {  // bare number means an exact value
      out = {v.get<double>(), 0.0};
      return;
    }
    Section s(v, sub(key));
    bool have_mean = s.has("mean");
    s.number("mean", out.mean);
    if (!have_mean) fail(sub(key), "missing 'mean'");
    s.number("sigma", out.sigma);
    s.finish();
    if (out.sigma < 0.0) fail(sub(key) + ".sigma", "must be non-negative");
  }

  const json* object(const char* key) {
    if (!take(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown key");
  }

 private:
  bool take(const char* key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check_range(double v, double lo, double hi, const std::string& path) {
  if (!(v >= lo && v <= hi))
    fail(path, "value " + std::to_string(v) + " outside [" +
                   std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_positive(double v, const std::string& path) {
  if (!(v > 0.0)) fail(path, "must be positive");
}

void validate(const Config& c) {
  auto eff = [&](const UncertainValue& u, const char* name) {
    check_range(u.mean, 0.0, 1.0, std::string("budget.") + name + ".mean");
  };
  eff(c.budget.eta_d1, "eta_d1");
  eff(c.budget.eta_775, "eta_775");
  eff(c.budget.eta_lp, "eta_lp");
  eff(c.budget.eta_duty, "eta_duty");
  eff(c.budget.eta_tac, "eta_tac");
  eff(c.budget.eta_cw, "eta_cw");
  eff(c.budget.eta_in, "eta_in");
  eff(c.budget.eta_out, "eta_out");
  eff(c.budget.eta_bs, "eta_bs");
  eff(c.budget.eta_d2, "eta_d2");
  eff(c.budget.eta_d3, "eta_d3");
  check_positive(c.budget.r_trigger_hz.mean, "budget.r_trigger.mean");
  check_positive(c.budget.p_coinc.mean, "budget.p_coinc.mean");

  check_range(c.measurements.coinc_to_singles_ratio, 0.0, 1.0,
              "measurements.coinc_to_singles_ratio");
  check_positive(c.measurements.triplet_rate_per_hour.mean,
                 "measurements.triplet_rate_per_hour.mean");
  check_positive(c.measurements.pump_power_in_w, "measurements.pump_power_in_w");
  check_positive(c.measurements.coinc_pump_power_w,
                 "measurements.coinc_pump_power_w");
  check_positive(c.measurements.coinc_pump_wavelength_nm,
                 "measurements.coinc_pump_wavelength_nm");

  check_range(c.sim.dark_prob_d2, 0.0, 1.0, "detectors.dark_prob_d2");
  check_range(c.sim.dark_prob_d3, 0.0, 1.0, "detectors.dark_prob_d3");
  check_positive(c.sim.gate_d2_ns, "detectors.gate_d2_ns");
  check_positive(c.sim.gate_d3_ns, "detectors.gate_d3_ns");
  if (c.sim.jitter_d1_ns < 0.0 || c.sim.jitter_d2_ns < 0.0 ||
      c.sim.jitter_d3_ns < 0.0)
    fail("detectors", "jitters must be non-negative");
  if (c.sim.dead_time_s < 0.0) fail("detectors.dead_time_s", "must be non-negative");

  if (c.sim.tac_resolution_ps < 1) fail("tac.resolution_ps", "must be >= 1");
  if (c.sim.tac_keep_every < 1) fail("tac.keep_every", "must be >= 1");
  check_positive(c.sim.bin_width_ns, "tac.bin_width_ns");

  check_positive(c.sim.duration_s, "simulation.duration_s");
  check_range(c.sim.p_spdc, 0.0, 1.0, "simulation.p_spdc");
  if (!(c.sim.signal_delay_ns >= 0.0 && c.sim.signal_delay_ns < c.sim.gate_d2_ns))
    fail("simulation.signal_delay_ns", "must fall inside the long gate");
  if (c.mc_samples < 10000) fail("simulation.mc_samples", "must be >= 10000");

  check_positive(c.crystal.poling_period_um, "crystal.poling_period_um");
  check_positive(c.crystal.length_mm, "crystal.length_mm");
  if (c.crystal.qpm_order < 1 || c.crystal.qpm_order % 2 == 0)
    fail("crystal.qpm_order", "must be an odd positive integer");
  check_positive(c.crystal.pump_nm, "crystal.pump_nm");
  if (c.crystal.pump_calibration.temp0_c == c.crystal.pump_calibration.temp1_c)
    fail("crystal.pump_calibration", "anchors need distinct temperatures");
  check_positive(c.crystal.pump_calibration.wavelength0_nm,
                 "crystal.pump_calibration.wavelength0_nm");
  check_positive(c.crystal.pump_calibration.wavelength1_nm,
                 "crystal.pump_calibration.wavelength1_nm");
}

void sync_sim_with_budget(Config& c) {
  c.sim.r_trigger_hz = c.budget.r_trigger_hz.mean;
  c.sim.eta_775 = c.budget.eta_775.mean;
  c.sim.eta_in = c.budget.eta_in.mean;
  c.sim.eta_out = c.budget.eta_out.mean;
  c.sim.eta_bs = c.budget.eta_bs.mean;
  c.sim.eta_d2 = c.budget.eta_d2.mean;
  c.sim.eta_d3 = c.budget.eta_d3.mean;
  c.sim.eta_cw = c.budget.eta_cw.mean;
  c.budget.dark_prob_d2 = c.sim.dark_prob_d2;
  c.budget.dark_prob_d3 = c.sim.dark_prob_d3;
  c.budget.gate_d2_ns = c.sim.gate_d2_ns;
  c.budget.gate_d3_ns = c.sim.gate_d3_ns;
  c.budget.bin_width_ns = c.sim.bin_width_ns;
}

}  // namespace

Config default_config() {
  Config c;
  // Struct defaults already describe the reference experiment; derive the
  // conversion probability from the measured triplet rate.
  c.sim.p_spdc = budget::p_spdc_from_triplets(
      c.budget, c.measurements.triplet_rate_per_hour.mean);
  sync_sim_with_budget(c);
  return c;
}

Config from_json(const nlohmann::json& j) {
  Config c;

  Section top(j, "config");
  if (const json* b = top.object("budget")) {
    Section s(*b, "budget");
    s.uncertain("r_trigger", c.budget.r_trigger_hz);
    s.uncertain("eta_d1", c.budget.eta_d1);
    s.uncertain("eta_775", c.budget.eta_775);
    s.uncertain("p_coinc", c.budget.p_coinc);
    s.uncertain("eta_lp", c.budget.eta_lp);
    s.uncertain("eta_duty", c.budget.eta_duty);
    s.uncertain("eta_tac", c.budget.eta_tac);
    s.uncertain("eta_cw", c.budget.eta_cw);
    s.uncertain("eta_in", c.budget.eta_in);
    s.uncertain("eta_out", c.budget.eta_out);
    s.uncertain("eta_bs", c.budget.eta_bs);
    s.uncertain("eta_d2", c.budget.eta_d2);
    s.uncertain("eta_d3", c.budget.eta_d3);
    s.finish();
  }
  if (const json* m = top.object("measurements")) {
    Section s(*m, "measurements");
    s.number("coinc_to_singles_ratio", c.measurements.coinc_to_singles_ratio);
    s.uncertain("triplet_rate_per_hour", c.measurements.triplet_rate_per_hour);
    s.number("pump_power_in_w", c.measurements.pump_power_in_w);
    s.uncertain("spdc_power_out_w", c.measurements.spdc_power_out_w);
    s.number("coinc_rate_hz", c.measurements.coinc_rate_hz);
    s.number("coinc_pump_power_w", c.measurements.coinc_pump_power_w);
    s.number("coinc_pump_wavelength_nm",
             c.measurements.coinc_pump_wavelength_nm);
    s.finish();
  }
  if (const json* d = top.object("detectors")) {
    Section s(*d, "detectors");
    s.number("dark_prob_d2", c.sim.dark_prob_d2);
    s.number("dark_prob_d3", c.sim.dark_prob_d3);
    s.number("gate_d2_ns", c.sim.gate_d2_ns);
    s.number("gate_d3_ns", c.sim.gate_d3_ns);
    s.number("jitter_d1_ns", c.sim.jitter_d1_ns);
    s.number("jitter_d2_ns", c.sim.jitter_d2_ns);
    s.number("jitter_d3_ns", c.sim.jitter_d3_ns);
    s.number("dead_time_s", c.sim.dead_time_s);
    s.finish();
  }
  if (const json* t = top.object("tac")) {
    Section s(*t, "tac");
    s.integer("resolution_ps", c.sim.tac_resolution_ps);
    s.integer("keep_every", c.sim.tac_keep_every);
    s.number("bin_width_ns", c.sim.bin_width_ns);
    s.finish();
  }
  if (const json* cr = top.object("crystal")) {
    Section s(*cr, "crystal");
    const bool period_given = s.has("poling_period_um");
    s.number("poling_period_um", c.crystal.poling_period_um);
    s.number("length_mm", c.crystal.length_mm);
    s.number("temperature_c", c.crystal.temperature_c);
    s.integer("qpm_order", c.crystal.qpm_order);
    s.number("pump_nm", c.crystal.pump_nm);
    if (s.has("sellmeier")) {
      const json* sm = s.object("sellmeier");
      if (sm->is_string()) {
        const std::string name = sm->get<std::string>();
        if (name != "congruent_linbo3_e")
          fail("crystal.sellmeier", "unknown coefficient set '" + name + "'");
        c.crystal.sellmeier_name = name;
        c.crystal.sellmeier = pm::congruent_linbo3_e();
      } else {
        Section cs(*sm, "crystal.sellmeier");
        pm::SellmeierSet& set = c.crystal.sellmeier;
        struct {
          const char* key;
          double* slot;
        } coeffs[] = {{"a1", &set.a1}, {"a2", &set.a2}, {"a3", &set.a3},
                      {"a4", &set.a4}, {"a5", &set.a5}, {"a6", &set.a6},
                      {"b1", &set.b1}, {"b2", &set.b2}, {"b3", &set.b3},
                      {"b4", &set.b4}};
        for (const auto& coef : coeffs) {
          if (!cs.has(coef.key))
            fail("crystal.sellmeier", std::string("missing '") + coef.key + "'");
          cs.number(coef.key, *coef.slot);
        }
        cs.finish();
        c.crystal.sellmeier_name.clear();
      }
    }
    if (s.has("pump_calibration")) {
      Section cal(*s.object("pump_calibration"), "crystal.pump_calibration");
      cal.number("temp0_c", c.crystal.pump_calibration.temp0_c);
      cal.number("wavelength0_nm", c.crystal.pump_calibration.wavelength0_nm);
      cal.number("temp1_c", c.crystal.pump_calibration.temp1_c);
      cal.number("wavelength1_nm", c.crystal.pump_calibration.wavelength1_nm);
      cal.finish();
    }
    if (s.has("fit_points")) {
      if (period_given)
        fail("crystal", "give either poling_period_um or fit_points, not both");
      const json* fp = s.object("fit_points");
      if (!fp->is_array()) fail("crystal.fit_points", "expected an array");
      for (std::size_t i = 0; i < fp->size(); ++i) {
        const std::string path =
            "crystal.fit_points[" + std::to_string(i) + "]";
        Section pt((*fp)[i], path);
        pm::TuningPoint p;
        for (const char* key :
             {"pump_nm", "temperature_c", "signal_nm", "idler_nm"})
          if (!pt.has(key)) fail(path, std::string("missing '") + key + "'");
        pt.number("pump_nm", p.pump_nm);
        pt.number("temperature_c", p.temperature_c);
        pt.number("signal_nm", p.signal_nm);
        pt.number("idler_nm", p.idler_nm);
        pt.finish();
        c.crystal.fit_points.push_back(p);
      }
      if (c.crystal.fit_points.empty())
        fail("crystal.fit_points", "needs at least one point");
    }
    s.finish();
  }
  bool p_spdc_given = false;
  if (const json* sim = top.object("simulation")) {
    Section s(*sim, "simulation");
    std::string mode;
    s.text("mode", mode);
    if (!mode.empty()) {
      if (mode == "aggregated")
        c.sim.mode = det::SimMode::Aggregated;
      else if (mode == "event_driven")
        c.sim.mode = det::SimMode::EventDriven;
      else
        fail("simulation.mode", "expected 'aggregated' or 'event_driven'");
    }
    s.number("duration_s", c.sim.duration_s);
    if (s.has("p_spdc")) p_spdc_given = true;
    s.number("p_spdc", c.sim.p_spdc);
    s.number("signal_delay_ns", c.sim.signal_delay_ns);
    s.number("delay_ns", c.sim.delay_ns);
    s.unsigned64("seed", c.sim.seed);
    s.integer("mc_samples", c.mc_samples);
    s.unsigned64("event_trigger_cap", c.sim.event_trigger_cap);
    s.finish();
  }
  top.finish();

  c.p_spdc_pinned = p_spdc_given;
  if (!c.crystal.fit_points.empty()) {
    try {
      c.crystal.poling_period_um =
          pm::fit_poling_period(c.crystal.fit_points, c.crystal.sellmeier,
                                c.crystal.qpm_order)
              .poling_period_um;
    } catch (const std::exception& e) {
      fail("crystal.fit_points", e.what());
    }
  }
  sync_sim_with_budget(c);
  validate(c);
  // Derive after validation so budget range errors surface with their key
  // path instead of leaking out of the rate arithmetic.
  if (!p_spdc_given) {
    c.sim.p_spdc = budget::p_spdc_from_triplets(
        c.budget, c.measurements.triplet_rate_per_hour.mean);
    check_range(c.sim.p_spdc, 0.0, 1.0, "simulation.p_spdc (derived)");
  }
  return c;
}

Config load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json to_json(const Config& c) {
  using oj = nlohmann::ordered_json;
  auto uv = [](const UncertainValue& u) {
    return oj{{"mean", u.mean}, {"sigma", u.sigma}};
  };
  oj j;
  j["budget"] = {{"r_trigger", uv(c.budget.r_trigger_hz)},
                 {"eta_d1", uv(c.budget.eta_d1)},
                 {"eta_775", uv(c.budget.eta_775)},
                 {"p_coinc", uv(c.budget.p_coinc)},
                 {"eta_lp", uv(c.budget.eta_lp)},
                 {"eta_duty", uv(c.budget.eta_duty)},
                 {"eta_tac", uv(c.budget.eta_tac)},
                 {"eta_cw", uv(c.budget.eta_cw)},
                 {"eta_in", uv(c.budget.eta_in)},
                 {"eta_out", uv(c.budget.eta_out)},
                 {"eta_bs", uv(c.budget.eta_bs)},
                 {"eta_d2", uv(c.budget.eta_d2)},
                 {"eta_d3", uv(c.budget.eta_d3)}};
  j["measurements"] = {
      {"coinc_to_singles_ratio", c.measurements.coinc_to_singles_ratio},
      {"triplet_rate_per_hour", uv(c.measurements.triplet_rate_per_hour)},
      {"pump_power_in_w", c.measurements.pump_power_in_w},
      {"spdc_power_out_w", uv(c.measurements.spdc_power_out_w)},
      {"coinc_rate_hz", c.measurements.coinc_rate_hz},
      {"coinc_pump_power_w", c.measurements.coinc_pump_power_w},
      {"coinc_pump_wavelength_nm", c.measurements.coinc_pump_wavelength_nm}};
  j["detectors"] = {{"dark_prob_d2", c.sim.dark_prob_d2},
                    {"dark_prob_d3", c.sim.dark_prob_d3},
                    {"gate_d2_ns", c.sim.gate_d2_ns},
                    {"gate_d3_ns", c.sim.gate_d3_ns},
                    {"jitter_d1_ns", c.sim.jitter_d1_ns},
                    {"jitter_d2_ns", c.sim.jitter_d2_ns},
                    {"jitter_d3_ns", c.sim.jitter_d3_ns},
                    {"dead_time_s", c.sim.dead_time_s}};
  j["tac"] = {{"resolution_ps", c.sim.tac_resolution_ps},
              {"keep_every", c.sim.tac_keep_every},
              {"bin_width_ns", c.sim.bin_width_ns}};
  oj crystal;
  if (c.crystal.fit_points.empty())  // the fitted period re-resolves on load
    crystal["poling_period_um"] = c.crystal.poling_period_um;
  crystal["length_mm"] = c.crystal.length_mm;
  crystal["temperature_c"] = c.crystal.temperature_c;
  crystal["qpm_order"] = c.crystal.qpm_order;
  crystal["pump_nm"] = c.crystal.pump_nm;
  if (!c.crystal.sellmeier_name.empty()) {
    crystal["sellmeier"] = c.crystal.sellmeier_name;
  } else {
    const pm::SellmeierSet& s = c.crystal.sellmeier;
    crystal["sellmeier"] = oj{{"a1", s.a1}, {"a2", s.a2}, {"a3", s.a3},
                              {"a4", s.a4}, {"a5", s.a5}, {"a6", s.a6},
                              {"b1", s.b1}, {"b2", s.b2}, {"b3", s.b3},
                              {"b4", s.b4}};
  }
  crystal["pump_calibration"] = {
      {"temp0_c", c.crystal.pump_calibration.temp0_c},
      {"wavelength0_nm", c.crystal.pump_calibration.wavelength0_nm},
      {"temp1_c", c.crystal.pump_calibration.temp1_c},
      {"wavelength1_nm", c.crystal.pump_calibration.wavelength1_nm}};
  if (!c.crystal.fit_points.empty()) {
    oj arr = oj::array();
    for (const pm::TuningPoint& p : c.crystal.fit_points)
      arr.push_back(oj{{"pump_nm", p.pump_nm},
                       {"temperature_c", p.temperature_c},
                       {"signal_nm", p.signal_nm},
                       {"idler_nm", p.idler_nm}});
    crystal["fit_points"] = arr;
  }
  j["crystal"] = crystal;
  j["simulation"] = {
      {"mode",
       c.sim.mode == det::SimMode::Aggregated ? "aggregated" : "event_driven"},
      {"duration_s", c.sim.duration_s},
      {"p_spdc", c.sim.p_spdc},
      {"signal_delay_ns", c.sim.signal_delay_ns},
      {"delay_ns", c.sim.delay_ns},
      {"seed", c.sim.seed},
      {"mc_samples", c.mc_samples},
      {"event_trigger_cap", c.sim.event_trigger_cap}};
  return j;
}

}  // namespace cspdc::config
