#include "cspdc/budget.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cspdc/rng.hpp"

namespace cspdc::budget {

namespace {

constexpr double kPlanck = 6.62607015e-34;   // J s
constexpr double kLightSpeed = 299792458.0;  // m/s

void check_prob(double v, const char* name) {
  if (v < 0.0 || v > 1.0)
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

void check_budget(const EfficiencyBudget& b) {
  check_prob(b.eta_d1.mean, "eta_d1");
  check_prob(b.eta_775.mean, "eta_775");
  check_prob(b.eta_lp.mean, "eta_lp");
  check_prob(b.eta_duty.mean, "eta_duty");
  check_prob(b.eta_tac.mean, "eta_tac");
  check_prob(b.eta_cw.mean, "eta_cw");
  check_prob(b.eta_in.mean, "eta_in");
  check_prob(b.eta_out.mean, "eta_out");
  check_prob(b.eta_bs.mean, "eta_bs");
  check_prob(b.eta_d2.mean, "eta_d2");
  check_prob(b.eta_d3.mean, "eta_d3");
  if (b.r_trigger_hz.mean <= 0.0)
    throw std::invalid_argument("r_trigger must be positive");
}

// Snapshot of one Monte Carlo draw (or of the central values).
struct ParamDraw {
  double r_trigger, eta_d1, eta_775, p_coinc, eta_lp, eta_duty, eta_tac,
      eta_cw, eta_in, eta_out, eta_bs, eta_d2, eta_d3;
  double triplet_rate, spdc_power_out;
};

ParamDraw central(const EfficiencyBudget& b, const MeasuredInputs& m) {
  return ParamDraw{b.r_trigger_hz.mean, b.eta_d1.mean,  b.eta_775.mean,
                   b.p_coinc.mean,      b.eta_lp.mean,  b.eta_duty.mean,
                   b.eta_tac.mean,      b.eta_cw.mean,  b.eta_in.mean,
                   b.eta_out.mean,      b.eta_bs.mean,  b.eta_d2.mean,
                   b.eta_d3.mean,       m.triplet_rate_per_hour.mean,
                   m.spdc_power_out_w.mean};
}

ParamDraw sample(rng::Stream& s, const EfficiencyBudget& b,
                 const MeasuredInputs& m) {
  const double inf = std::numeric_limits<double>::infinity();
  auto eff = [&](const UncertainValue& u) {
    return s.truncated_gaussian(u.mean, u.sigma, 0.0, 1.0);
  };
  auto pos = [&](const UncertainValue& u) {
    return s.truncated_gaussian(u.mean, u.sigma, 0.0, inf);
  };
  return ParamDraw{pos(b.r_trigger_hz), eff(b.eta_d1),  eff(b.eta_775),
                   pos(b.p_coinc),      eff(b.eta_lp),  eff(b.eta_duty),
                   eff(b.eta_tac),      eff(b.eta_cw),  eff(b.eta_in),
                   eff(b.eta_out),      eff(b.eta_bs),  eff(b.eta_d2),
                   eff(b.eta_d3),       pos(m.triplet_rate_per_hour),
                   pos(m.spdc_power_out_w)};
}

double eval(const ParamDraw& d, const EfficiencyBudget& b,
            const MeasuredInputs& m, Quantity q, double duration_s) {
  switch (q) {
    case Quantity::RTriplePerHour:
      return 3600.0 * d.r_trigger * d.eta_775 * d.p_coinc /
             (d.eta_lp * d.eta_lp * d.eta_duty) * d.eta_tac * d.eta_cw;
    case Quantity::PTriple:
      return d.eta_775 * d.p_coinc / (d.eta_lp * d.eta_lp * d.eta_duty);
    case Quantity::PSpdcFromCoinc:
      return d.p_coinc /
             (d.eta_in * d.eta_out * d.eta_out * d.eta_lp * d.eta_lp * 2.0 *
              d.eta_bs * d.eta_bs * d.eta_d2 * d.eta_d3 * d.eta_duty);
    case Quantity::PSpdcFromTriplets: {
      const double per_trigger =
          (d.triplet_rate / 3600.0) / (d.r_trigger * d.eta_tac * d.eta_cw);
      return per_trigger / (d.eta_775 * d.eta_in * d.eta_out * d.eta_out *
                            2.0 * d.eta_bs * d.eta_bs * d.eta_d2 * d.eta_d3);
    }
    case Quantity::PSpdcFromPower:
      return d.spdc_power_out /
             (d.eta_in * d.eta_out * d.eta_lp * m.pump_power_in_w);
    case Quantity::ExpectedDarkTriples:
      return d.r_trigger * b.dark_prob_d2 * b.dark_prob_d3 * d.eta_tac *
             duration_s;
    case Quantity::BackgroundPerBin:
      return d.r_trigger * b.dark_prob_d2 * b.dark_prob_d3 * d.eta_tac *
             duration_s / (b.gate_d2_ns / b.bin_width_ns);
    case Quantity::Eta775:
      return m.coinc_to_singles_ratio / d.eta_d1;
  }
  throw std::logic_error("unknown quantity");
}

}  // namespace

double p_triple(const EfficiencyBudget& b, double p_spdc) {
  check_budget(b);
  check_prob(p_spdc, "p_spdc");
  return b.eta_775.mean * b.eta_in.mean * p_spdc * b.eta_out.mean *
         b.eta_out.mean * 2.0 * b.eta_bs.mean * b.eta_bs.mean * b.eta_d2.mean *
         b.eta_d3.mean;
}

double p_coincidence(const EfficiencyBudget& b, double p_spdc) {
  check_budget(b);
  check_prob(p_spdc, "p_spdc");
  return b.eta_in.mean * p_spdc * b.eta_out.mean * b.eta_out.mean *
         b.eta_lp.mean * b.eta_lp.mean * 2.0 * b.eta_bs.mean * b.eta_bs.mean *
         b.eta_d2.mean * b.eta_d3.mean * b.eta_duty.mean;
}

double p_triple_from_coinc(const EfficiencyBudget& b) {
  check_budget(b);
  return b.eta_775.mean * b.p_coinc.mean /
         (b.eta_lp.mean * b.eta_lp.mean * b.eta_duty.mean);
}

double r_triple_per_hour(const EfficiencyBudget& b) {
  return 3600.0 * b.r_trigger_hz.mean * b.eta_tac.mean * b.eta_cw.mean *
         p_triple_from_coinc(b);
}

double p_spdc_from_coinc(const EfficiencyBudget& b) {
  check_budget(b);
  return eval(central(b, MeasuredInputs{}), b, MeasuredInputs{},
              Quantity::PSpdcFromCoinc, 0.0);
}

double p_spdc_from_triplets(const EfficiencyBudget& b,
                            double triplet_rate_per_hour) {
  check_budget(b);
  if (triplet_rate_per_hour < 0.0)
    throw std::invalid_argument("triplet rate must be non-negative");
  MeasuredInputs m;
  m.triplet_rate_per_hour = {triplet_rate_per_hour, 0.0};
  return eval(central(b, m), b, m, Quantity::PSpdcFromTriplets, 0.0);
}

double p_spdc_from_power(const EfficiencyBudget& b, double pump_power_in_w,
                         double spdc_power_out_w) {
  check_budget(b);
  if (pump_power_in_w <= 0.0)
    throw std::invalid_argument("pump power must be positive");
  if (spdc_power_out_w < 0.0)
    throw std::invalid_argument("parametric output power must be non-negative");
  return spdc_power_out_w /
         (b.eta_in.mean * b.eta_out.mean * b.eta_lp.mean * pump_power_in_w);
}

double expected_dark_triples(const EfficiencyBudget& b, double duration_s) {
  check_budget(b);
  if (duration_s <= 0.0)
    throw std::invalid_argument("duration must be positive");
  return b.r_trigger_hz.mean * b.dark_prob_d2 * b.dark_prob_d3 *
         b.eta_tac.mean * duration_s;
}

double measured_p_coinc(double coinc_rate_hz, double pump_power_w,
                        double pump_wavelength_nm) {
  if (coinc_rate_hz < 0.0 || pump_power_w <= 0.0 || pump_wavelength_nm <= 0.0)
    throw std::invalid_argument("invalid coincidence measurement inputs");
  const double photon_energy =
      kPlanck * kLightSpeed / (pump_wavelength_nm * 1e-9);
  const double photon_flux = pump_power_w / photon_energy;
  return coinc_rate_hz / photon_flux;
}

UncertainValue infer_eta_775(double coinc_to_singles, UncertainValue eta_d1) {
  if (coinc_to_singles <= 0.0 || coinc_to_singles > 1.0)
    throw std::invalid_argument("coincidence-to-singles ratio must be in (0, 1]");
  if (eta_d1.mean <= 0.0 || eta_d1.mean > 1.0)
    throw std::invalid_argument("eta_d1 mean must be in (0, 1]");
  return propagate_product(coinc_to_singles,
                           {{eta_d1.mean, eta_d1.sigma, -1.0}});
}

UncertainValue propagate(const EfficiencyBudget& b, const MeasuredInputs& m,
                         Quantity q, int samples, std::uint64_t seed,
                         double duration_s) {
  check_budget(b);
  if (samples < 10000)
    throw std::invalid_argument("propagation needs at least 10^4 samples");
  rng::Stream stream(seed, 0x42554447u + static_cast<std::uint64_t>(q));
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double v = eval(sample(stream, b, m), b, m, q, duration_s);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / samples;
  const double var = (sum2 - sum * sum / samples) / (samples - 1);
  return {mean, var > 0.0 ? std::sqrt(var) : 0.0};
}

double taylor_sigma(const EfficiencyBudget& b, const MeasuredInputs& m,
                    Quantity q, double duration_s) {
  check_budget(b);
  auto t = [](const UncertainValue& u, double p) {
    return ProductTerm{u.mean, u.sigma, p};
  };
  switch (q) {
    case Quantity::RTriplePerHour:
      return propagate_product(3600.0,
                               {t(b.r_trigger_hz, 1), t(b.eta_775, 1),
                                t(b.p_coinc, 1), t(b.eta_lp, -2),
                                t(b.eta_duty, -1), t(b.eta_tac, 1),
                                t(b.eta_cw, 1)})
          .sigma;
    case Quantity::PTriple:
      return propagate_product(1.0, {t(b.eta_775, 1), t(b.p_coinc, 1),
                                     t(b.eta_lp, -2), t(b.eta_duty, -1)})
          .sigma;
    case Quantity::PSpdcFromCoinc:
      return propagate_product(
                 0.5, {t(b.p_coinc, 1), t(b.eta_in, -1), t(b.eta_out, -2),
                       t(b.eta_lp, -2), t(b.eta_bs, -2), t(b.eta_d2, -1),
                       t(b.eta_d3, -1), t(b.eta_duty, -1)})
          .sigma;
    case Quantity::PSpdcFromTriplets:
      return propagate_product(
                 1.0 / (2.0 * 3600.0),
                 {t(m.triplet_rate_per_hour, 1), t(b.r_trigger_hz, -1),
                  t(b.eta_tac, -1), t(b.eta_cw, -1), t(b.eta_775, -1),
                  t(b.eta_in, -1), t(b.eta_out, -2), t(b.eta_bs, -2),
                  t(b.eta_d2, -1), t(b.eta_d3, -1)})
          .sigma;
    case Quantity::PSpdcFromPower:
      return propagate_product(1.0 / m.pump_power_in_w,
                               {t(m.spdc_power_out_w, 1), t(b.eta_in, -1),
                                t(b.eta_out, -1), t(b.eta_lp, -1)})
          .sigma;
    case Quantity::ExpectedDarkTriples:
      return propagate_product(
                 b.dark_prob_d2 * b.dark_prob_d3 * duration_s,
                 {t(b.r_trigger_hz, 1), t(b.eta_tac, 1)})
          .sigma;
    case Quantity::BackgroundPerBin:
      return propagate_product(b.dark_prob_d2 * b.dark_prob_d3 * duration_s /
                                   (b.gate_d2_ns / b.bin_width_ns),
                               {t(b.r_trigger_hz, 1), t(b.eta_tac, 1)})
          .sigma;
    case Quantity::Eta775:
      return infer_eta_775(m.coinc_to_singles_ratio, b.eta_d1).sigma;
  }
  throw std::logic_error("unknown quantity");
}

BudgetReport compute_report(const EfficiencyBudget& b, const MeasuredInputs& m,
                            int mc_samples, std::uint64_t seed,
                            double duration_s) {
  check_budget(b);
  BudgetReport r;
  r.duration_s = duration_s;
  r.mc_samples = mc_samples;
  r.seed = seed;

  const ParamDraw c = central(b, m);
  auto field = [&](Quantity q) {
    const UncertainValue mc = propagate(b, m, q, mc_samples, seed, duration_s);
    return UncertainValue{eval(c, b, m, q, duration_s), mc.sigma};
  };
  r.r_triple_per_hour = field(Quantity::RTriplePerHour);
  r.p_triple = field(Quantity::PTriple);
  r.p_spdc_from_coinc = field(Quantity::PSpdcFromCoinc);
  r.p_spdc_from_triplets = field(Quantity::PSpdcFromTriplets);
  r.p_spdc_from_power = field(Quantity::PSpdcFromPower);
  r.expected_dark_triples = field(Quantity::ExpectedDarkTriples);
  r.background_per_bin = field(Quantity::BackgroundPerBin);

  const UncertainValue e7_mc =
      propagate(b, m, Quantity::Eta775, mc_samples, seed, duration_s);
  r.eta_775_inferred = {m.coinc_to_singles_ratio / b.eta_d1.mean, e7_mc.sigma};

  r.taylor_sigma_r_triple =
      taylor_sigma(b, m, Quantity::RTriplePerHour, duration_s);
  r.taylor_sigma_eta_775 = taylor_sigma(b, m, Quantity::Eta775, duration_s);

  auto overlap = [](const UncertainValue& x, const UncertainValue& y) {
    return std::abs(x.mean - y.mean) <= x.sigma + y.sigma;
  };
  r.p_spdc_consistent = overlap(r.p_spdc_from_coinc, r.p_spdc_from_triplets) &&
                        overlap(r.p_spdc_from_coinc, r.p_spdc_from_power) &&
                        overlap(r.p_spdc_from_triplets, r.p_spdc_from_power);
  return r;
}

nlohmann::ordered_json report_to_json(const BudgetReport& r) {
  nlohmann::ordered_json j;
  auto uv = [](const UncertainValue& u) {
    return nlohmann::ordered_json{{"mean", u.mean}, {"sigma", u.sigma}};
  };
  j["r_triple_per_hour"] = uv(r.r_triple_per_hour);
  j["p_triple"] = uv(r.p_triple);
  j["p_spdc_from_coinc"] = uv(r.p_spdc_from_coinc);
  j["p_spdc_from_triplets"] = uv(r.p_spdc_from_triplets);
  j["p_spdc_from_power"] = uv(r.p_spdc_from_power);
  j["expected_dark_triples"] = uv(r.expected_dark_triples);
  j["background_per_bin"] = uv(r.background_per_bin);
  j["eta_775"] = uv(r.eta_775_inferred);
  j["p_spdc_consistent_within_1sigma"] = r.p_spdc_consistent;
  j["propagation"] = {{"mc_samples", r.mc_samples},
                      {"seed", r.seed},
                      {"duration_s", r.duration_s},
                      {"taylor_sigma_r_triple", r.taylor_sigma_r_triple},
                      {"taylor_sigma_eta_775", r.taylor_sigma_eta_775}};
  return j;
}

}  // namespace cspdc::budget
