#include <cmath>
#include <set>
#include <string>

#include "cspdc/budget.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cspdc::budget;
using cspdc::UncertainValue;

namespace {
const EfficiencyBudget kBudget{};   // reference chain parameters
const MeasuredInputs kMeasured{};   // reference measurements
constexpr double kTwentyHours = 72000.0;
}  // namespace

TEST_CASE("central chain values reproduce the reference arithmetic") {
  // All expected numbers are plug-in evaluations of the chain formulas,
  // computed independently and pinned.
  CHECK(r_triple_per_hour(kBudget) ==
        doctest::Approx(5.560866).epsilon(1e-12));
  CHECK(p_triple_from_coinc(kBudget) ==
        doctest::Approx(5.3e-9).epsilon(1e-12));
  CHECK(p_spdc_from_coinc(kBudget) ==
        doctest::Approx(9.876543209876542e-06).epsilon(1e-12));
  CHECK(p_spdc_from_triplets(kBudget, 4.7) ==
        doctest::Approx(8.347576274346432e-06).epsilon(1e-12));
  CHECK(p_spdc_from_power(kBudget, 1.1e-3, 0.9e-9) ==
        doctest::Approx(6.545454545454545e-06).epsilon(1e-12));
  CHECK(expected_dark_triples(kBudget, kTwentyHours) ==
        doctest::Approx(253.692).epsilon(1e-12));
}

TEST_CASE("dark triples scale linearly in time and split evenly over bins") {
  const double d20 = expected_dark_triples(kBudget, kTwentyHours);
  const double d1 = expected_dark_triples(kBudget, 3600.0);
  CHECK(d20 == doctest::Approx(20.0 * d1).epsilon(1e-12));
  CHECK(d20 / 25.0 == doctest::Approx(10.147680000000001).epsilon(1e-12));
}

TEST_CASE("measured coincidence probability uses the photon flux") {
  // 24 Hz of pairs against 245 nW of 775 nm photons.
  CHECK(measured_p_coinc(24.0, 245e-9, 775.0) ==
        doctest::Approx(2.510846639714248e-11).epsilon(1e-12));
  CHECK_THROWS_AS(measured_p_coinc(24.0, 0.0, 775.0), std::invalid_argument);
}

TEST_CASE("intermediate coupling efficiency from the coincidence ratio") {
  const UncertainValue eta = infer_eta_775(0.24, {0.45, 0.05});
  CHECK(eta.mean == doctest::Approx(0.24 / 0.45).epsilon(1e-12));
  CHECK(eta.sigma ==
        doctest::Approx(0.05925925925925926).epsilon(1e-12));
  CHECK_THROWS_AS(infer_eta_775(0.0, {0.45, 0.05}), std::invalid_argument);
  CHECK_THROWS_AS(infer_eta_775(0.24, {0.0, 0.05}), std::invalid_argument);
}

TEST_CASE("forward and inverse chain formulas are mutual inverses") {
  // Solving for the conversion probability and substituting back must
  // reproduce the measurement each path started from.
  const double ps_c = p_spdc_from_coinc(kBudget);
  CHECK(p_coincidence(kBudget, ps_c) ==
        doctest::Approx(kBudget.p_coinc.mean).epsilon(1e-12));

  const double ps_t = p_spdc_from_triplets(kBudget, 4.7);
  const EfficiencyBudget& b = kBudget;
  const double rate = 3600.0 * b.r_trigger_hz.mean * b.eta_tac.mean *
                      b.eta_cw.mean * p_triple(b, ps_t);
  CHECK(rate == doctest::Approx(4.7).epsilon(1e-12));

  const double ps_p = p_spdc_from_power(kBudget, 1.1e-3, 0.9e-9);
  const double power = ps_p * b.eta_in.mean * b.eta_out.mean * b.eta_lp.mean *
                       1.1e-3;
  CHECK(power == doctest::Approx(0.9e-9).epsilon(1e-12));
}

TEST_CASE("first-order propagated sigmas match the pinned references") {
  const auto sigma = [&](Quantity q) {
    return taylor_sigma(kBudget, kMeasured, q, kTwentyHours);
  };
  CHECK(sigma(Quantity::RTriplePerHour) ==
        doctest::Approx(1.1012501145244367).epsilon(1e-12));
  CHECK(sigma(Quantity::PTriple) ==
        doctest::Approx(9.717365898225711e-10).epsilon(1e-12));
  CHECK(sigma(Quantity::PSpdcFromCoinc) ==
        doctest::Approx(3.697874801531055e-06).epsilon(1e-12));
  CHECK(sigma(Quantity::PSpdcFromTriplets) ==
        doctest::Approx(3.2768658165365352e-06).epsilon(1e-12));
  CHECK(sigma(Quantity::PSpdcFromPower) ==
        doctest::Approx(1.2409753562060543e-06).epsilon(1e-12));
  CHECK(sigma(Quantity::ExpectedDarkTriples) ==
        doctest::Approx(1.458).epsilon(1e-12));
  CHECK(sigma(Quantity::BackgroundPerBin) ==
        doctest::Approx(0.05832).epsilon(1e-12));
  CHECK(sigma(Quantity::Eta775) ==
        doctest::Approx(0.05925925925925926).epsilon(1e-12));
}

TEST_CASE("sampling propagation is deterministic in the seed") {
  const UncertainValue a =
      propagate(kBudget, kMeasured, Quantity::RTriplePerHour, 20000, 7);
  const UncertainValue b =
      propagate(kBudget, kMeasured, Quantity::RTriplePerHour, 20000, 7);
  CHECK(a.mean == b.mean);
  CHECK(a.sigma == b.sigma);
  const UncertainValue c =
      propagate(kBudget, kMeasured, Quantity::RTriplePerHour, 20000, 8);
  CHECK(a.sigma != c.sigma);
}

TEST_CASE("sampling propagation agrees with the first-order sigma") {
  // The chain is a smooth product, so the two methods must land close;
  // the sampled sigma runs a little wide because products of Gaussians
  // are right-skewed.
  for (Quantity q : {Quantity::RTriplePerHour, Quantity::PTriple,
                     Quantity::PSpdcFromTriplets, Quantity::Eta775}) {
    const UncertainValue mc = propagate(kBudget, kMeasured, q, 100000, 1);
    const double taylor = taylor_sigma(kBudget, kMeasured, q, kTwentyHours);
    CHECK(mc.sigma == doctest::Approx(taylor).epsilon(0.25));
    CHECK(mc.sigma > 0.0);
  }
}

TEST_CASE("sampling propagation rejects undersized runs") {
  CHECK_THROWS_AS(
      propagate(kBudget, kMeasured, Quantity::RTriplePerHour, 9999, 1),
      std::invalid_argument);
}

TEST_CASE("report means are the plug-in central values") {
  const BudgetReport r =
      compute_report(kBudget, kMeasured, 20000, 11, kTwentyHours);
  // Up to last-bit reassociation, every mean is the plug-in central value.
  const auto close = [](double a, double b) {
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
  };
  close(r.r_triple_per_hour.mean, r_triple_per_hour(kBudget));
  close(r.p_triple.mean, p_triple_from_coinc(kBudget));
  close(r.p_spdc_from_coinc.mean, p_spdc_from_coinc(kBudget));
  close(r.p_spdc_from_triplets.mean,
        p_spdc_from_triplets(kBudget, kMeasured.triplet_rate_per_hour.mean));
  close(r.p_spdc_from_power.mean,
        p_spdc_from_power(kBudget, kMeasured.pump_power_in_w,
                          kMeasured.spdc_power_out_w.mean));
  close(r.expected_dark_triples.mean,
        expected_dark_triples(kBudget, kTwentyHours));
  close(r.background_per_bin.mean,
        expected_dark_triples(kBudget, kTwentyHours) / 25.0);
  CHECK(r.eta_775_inferred.mean == doctest::Approx(0.24 / 0.45).epsilon(1e-12));
  CHECK(r.mc_samples == 20000);
  CHECK(r.seed == 11);
  CHECK(r.duration_s == kTwentyHours);
}

TEST_CASE("report sigmas land in the expected windows") {
  const BudgetReport r =
      compute_report(kBudget, kMeasured, 100000, 1, kTwentyHours);
  CHECK(r.r_triple_per_hour.sigma > 0.9);
  CHECK(r.r_triple_per_hour.sigma < 1.3);
  CHECK(r.eta_775_inferred.sigma > 0.05);
  CHECK(r.eta_775_inferred.sigma < 0.08);
  CHECK(r.taylor_sigma_r_triple ==
        doctest::Approx(1.1012501145244367).epsilon(1e-12));
  CHECK(r.taylor_sigma_eta_775 ==
        doctest::Approx(0.05925925925925926).epsilon(1e-12));
}

TEST_CASE("the three conversion-probability paths agree within one sigma") {
  const BudgetReport r =
      compute_report(kBudget, kMeasured, 100000, 1, kTwentyHours);
  CHECK(r.p_spdc_consistent);
  const auto overlap = [](const UncertainValue& x, const UncertainValue& y) {
    return std::abs(x.mean - y.mean) <= x.sigma + y.sigma;
  };
  CHECK(overlap(r.p_spdc_from_coinc, r.p_spdc_from_triplets));
  CHECK(overlap(r.p_spdc_from_coinc, r.p_spdc_from_power));
  CHECK(overlap(r.p_spdc_from_triplets, r.p_spdc_from_power));
}

TEST_CASE("the consistency verdict can fail") {
  // A wildly wrong longpass transmission inflates the coincidence-derived
  // conversion probability far away from the other two paths.
  EfficiencyBudget b = kBudget;
  b.eta_lp = {0.05, 0.001};
  const BudgetReport r =
      compute_report(b, kMeasured, 20000, 1, kTwentyHours);
  CHECK_FALSE(r.p_spdc_consistent);
}

TEST_CASE("report serialization exposes the stable field names") {
  const BudgetReport r =
      compute_report(kBudget, kMeasured, 20000, 11, kTwentyHours);
  const nlohmann::ordered_json j = report_to_json(r);

  const std::set<std::string> want{
      "r_triple_per_hour",    "p_triple",
      "p_spdc_from_coinc",    "p_spdc_from_triplets",
      "p_spdc_from_power",    "expected_dark_triples",
      "background_per_bin",   "eta_775",
      "p_spdc_consistent_within_1sigma", "propagation"};
  for (const auto& key : want) CHECK(j.contains(key));

  for (const auto& key :
       {"r_triple_per_hour", "p_triple", "p_spdc_from_coinc",
        "p_spdc_from_triplets", "p_spdc_from_power", "expected_dark_triples",
        "background_per_bin", "eta_775"}) {
    CHECK(j.at(key).contains("mean"));
    CHECK(j.at(key).contains("sigma"));
  }
  CHECK(j.at("r_triple_per_hour").at("mean").get<double>() ==
        doctest::Approx(5.560866).epsilon(1e-12));
  CHECK(j.at("p_spdc_consistent_within_1sigma").is_boolean());
  CHECK(j.at("propagation").at("mc_samples").get<int>() == 20000);
  CHECK(j.at("propagation").at("seed").get<std::uint64_t>() == 11);
}

TEST_CASE("chain formulas reject nonsense inputs") {
  EfficiencyBudget bad = kBudget;
  bad.eta_d2 = {1.5, 0.0};
  CHECK_THROWS_AS(p_triple(bad, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(p_spdc_from_triplets(kBudget, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(p_spdc_from_power(kBudget, 0.0, 1e-9),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_dark_triples(kBudget, 0.0), std::invalid_argument);
}
