#include <cmath>
#include <numeric>
#include <vector>

#include "cspdc/detection.hpp"
#include "doctest.h"

using namespace cspdc::det;

namespace {

// Relative timing spread between the trigger-anchored long gate and the
// third detector: both 360 ps jitters in quadrature.
constexpr double kSigma23 = 0.36;
constexpr double kHalfGate3 = 0.75;

SimParams ten_minutes(std::uint64_t seed, SimMode mode) {
  SimParams p;
  p.mode = mode;
  p.duration_s = 600.0;
  p.seed = seed;
  return p;
}

double normal_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

struct CounterStats {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

CounterStats stats(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

}  // namespace

TEST_CASE("gate acceptance matches the pinned Gaussian windows") {
  CHECK(gate_acceptance(0.0, kSigma23, kHalfGate3) ==
        doctest::Approx(0.9627791496202271).epsilon(1e-12));
  CHECK(gate_acceptance(0.5, kSigma23, kHalfGate3) ==
        doctest::Approx(0.756040150724299).epsilon(1e-12));
  CHECK(gate_acceptance(-0.5, kSigma23, kHalfGate3) ==
        doctest::Approx(0.756040150724299).epsilon(1e-12));
  CHECK(gate_acceptance(0.5, kSigma23, kHalfGate3) /
            gate_acceptance(0.0, kSigma23, kHalfGate3) ==
        doctest::Approx(0.7852685125374004).epsilon(1e-12));
  CHECK(gate_acceptance(10.0, kSigma23, kHalfGate3) < 1e-12);
}

TEST_CASE("gate acceptance degenerates to an indicator without jitter") {
  CHECK(gate_acceptance(0.4, 0.0, 0.75) == 1.0);
  CHECK(gate_acceptance(-0.74, 0.0, 0.75) == 1.0);
  CHECK(gate_acceptance(0.8, 0.0, 0.75) == 0.0);
}

TEST_CASE("gate acceptance agrees with direct numerical integration") {
  for (double delay : {0.0, 0.3, 0.5, -0.7, 1.2}) {
    const int n = 200000;
    const double lo = -kHalfGate3 - delay, hi = kHalfGate3 - delay;
    const double dx = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      sum += normal_pdf(lo + (i + 0.5) * dx, kSigma23) * dx;
    CHECK(gate_acceptance(delay, kSigma23, kHalfGate3) ==
          doctest::Approx(sum).epsilon(1e-9));
  }
}

TEST_CASE("mean clipped-gate overlap matches the pinned values") {
  CHECK(mean_gate_overlap(0.0, kHalfGate3, 20.0) ==
        doctest::Approx(1.471875).epsilon(1e-12));
  CHECK(mean_gate_overlap(0.5, kHalfGate3, 20.0) ==
        doctest::Approx(1.459375).epsilon(1e-12));
}

TEST_CASE("mean clipped-gate overlap agrees with direct averaging") {
  for (double delay : {0.0, 0.5, -0.5, 2.0}) {
    const int n = 400000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) * 20.0 / n;
      const double lo = std::max(t + delay - kHalfGate3, 0.0);
      const double hi = std::min(t + delay + kHalfGate3, 20.0);
      sum += std::max(hi - lo, 0.0);
    }
    CHECK(mean_gate_overlap(delay, kHalfGate3, 20.0) ==
          doctest::Approx(sum / n).epsilon(1e-6));
  }
}

TEST_CASE("overlap shrinks as the gate slides off the window") {
  double prev = mean_gate_overlap(0.0, kHalfGate3, 20.0);
  CHECK(prev <= 2.0 * kHalfGate3);
  for (double delay : {1.0, 3.0, 8.0, 15.0, 19.0}) {
    const double cur = mean_gate_overlap(delay, kHalfGate3, 20.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("second-detector signal probability matches the chain product") {
  const SimParams p;
  CHECK(p_signal2(p) ==
        doctest::Approx(3.001277139208174e-08).epsilon(1e-12));
  // eta_775 eta_in p_spdc eta_cw eta_out^2 2 eta_bs^2 eta_d2, term by term.
  const double direct = 0.53 * 0.50 * p.p_spdc * 0.67 * 0.25 * 2.0 * 0.2025 *
                        0.20;
  CHECK(p_signal2(p) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("expected counters reproduce the pinned reference run") {
  SimParams p;  // 20 hour reference configuration
  const ExpectedCounts e = expected_counters(p);
  CHECK(e.triggers == doctest::Approx(62640000000.0).epsilon(1e-12));
  CHECK(e.d2_fires == doctest::Approx(112753876.616).epsilon(1e-7));
  CHECK(e.d3_fires == doctest::Approx(678.8806606749672).epsilon(1e-7));
  CHECK(e.signal_triples == doctest::Approx(181.00248012860277).epsilon(1e-7));
  CHECK(e.dark_triples == doctest::Approx(497.8781805463645).epsilon(1e-7));
  CHECK(e.tac_recorded == doctest::Approx(339.4403303374836).epsilon(1e-7));
  CHECK(e.d3_fires ==
        doctest::Approx(e.signal_triples + e.dark_triples).epsilon(1e-12));
  CHECK(e.tac_recorded == doctest::Approx(e.d3_fires / 2.0).epsilon(1e-12));

  p.duration_s = 600.0;
  const ExpectedCounts t = expected_counters(p);
  CHECK(t.d2_fires == doctest::Approx(939615.6384666666).epsilon(1e-7));
  CHECK(t.d3_fires == doctest::Approx(5.657338838958061).epsilon(1e-7));
  CHECK(t.signal_triples == doctest::Approx(1.5083540010716898).epsilon(1e-7));
  CHECK(t.dark_triples == doctest::Approx(4.1489848378863705).epsilon(1e-7));
}

TEST_CASE("a chain with no light and no noise stays silent") {
  for (SimMode mode : {SimMode::Aggregated, SimMode::EventDriven}) {
    SimParams p = ten_minutes(3, mode);
    p.p_spdc = 0.0;
    p.dark_prob_d2 = 0.0;
    p.dark_prob_d3 = 0.0;
    const SimResult r = simulate(p);
    CHECK(r.counters.d2_fires == 0);
    CHECK(r.counters.d3_fires == 0);
    CHECK(r.counters.tac_recorded == 0);
    CHECK(r.histogram.total() == 0);
  }
}

TEST_CASE("dark-only runs land near the closed-form expectation") {
  for (SimMode mode : {SimMode::Aggregated, SimMode::EventDriven}) {
    SimParams p = ten_minutes(5, mode);
    p.p_spdc = 0.0;
    const SimResult r = simulate(p);
    const ExpectedCounts e = expected_counters(p);
    CHECK(r.counters.signal_triples == 0);
    CHECK(std::abs(static_cast<double>(r.counters.d3_fires) - e.dark_triples) <
          5.0 * std::sqrt(e.dark_triples) + 1.0);
    CHECK(r.counters.d3_fires == r.counters.dark_triples);
  }
}

TEST_CASE("simulation counters respect the chain ordering invariants") {
  for (SimMode mode : {SimMode::Aggregated, SimMode::EventDriven}) {
    const SimParams p = ten_minutes(42, mode);
    const SimResult r = simulate(p);
    const Counters& c = r.counters;
    CHECK(c.triggers == 522000000);
    CHECK(c.d2_fires <= c.triggers);
    CHECK(c.d3_fires <= c.d2_fires);
    CHECK(c.d3_fires == c.signal_triples + c.dark_triples);
    CHECK(c.tac_recorded <= c.d3_fires);
    CHECK(c.tac_recorded == c.signal_recorded + c.dark_recorded);
    CHECK(r.histogram.total() == c.tac_recorded);
    CHECK(r.histogram.counts.size() == 25);
    CHECK(r.histogram.bin_width_ns == 0.8);
    CHECK(r.histogram.duration_s == 600.0);
    if (mode == SimMode::EventDriven) {
      // Alternating recorder: at most one unrecorded remainder event.
      CHECK(std::abs(static_cast<double>(c.tac_recorded) -
                     static_cast<double>(c.d3_fires) / 2.0) <= 0.5);
    }
  }
}

TEST_CASE("identical seeds replay identical runs in both modes") {
  for (SimMode mode : {SimMode::Aggregated, SimMode::EventDriven}) {
    const SimParams p = ten_minutes(7, mode);
    const SimResult a = simulate(p);
    const SimResult b = simulate(p);
    CHECK(a.counters.d2_fires == b.counters.d2_fires);
    CHECK(a.counters.d3_fires == b.counters.d3_fires);
    CHECK(a.counters.tac_recorded == b.counters.tac_recorded);
    CHECK(a.histogram.counts == b.histogram.counts);

    SimParams q = p;
    q.stream = 1;
    const SimResult c = simulate(q);
    CHECK(a.counters.d2_fires != c.counters.d2_fires);
  }
}

TEST_CASE("mode dispatch routes to the requested engine") {
  SimParams p = ten_minutes(9, SimMode::EventDriven);
  const SimResult via_dispatch = simulate(p);
  const SimResult direct = simulate_event_driven(p);
  CHECK(via_dispatch.counters.d3_fires == direct.counters.d3_fires);
  CHECK(via_dispatch.histogram.counts == direct.histogram.counts);
}

TEST_CASE("event-driven and aggregated means agree with the closed form") {
  // Light version of the acceptance cross-check: 20 seeds per mode on the
  // 10-minute configuration, each counter within 4 combined standard errors.
  const int kSeeds = 20;
  std::vector<double> d2[2], d3[2], sig[2], dark[2], tac[2];
  for (int m = 0; m < 2; ++m) {
    const SimMode mode = m == 0 ? SimMode::Aggregated : SimMode::EventDriven;
    for (int s = 0; s < kSeeds; ++s) {
      const SimResult r = simulate(ten_minutes(1000 + s, mode));
      d2[m].push_back(static_cast<double>(r.counters.d2_fires));
      d3[m].push_back(static_cast<double>(r.counters.d3_fires));
      sig[m].push_back(static_cast<double>(r.counters.signal_triples));
      dark[m].push_back(static_cast<double>(r.counters.dark_triples));
      tac[m].push_back(static_cast<double>(r.counters.tac_recorded));
    }
  }
  const ExpectedCounts e = expected_counters(ten_minutes(0, SimMode::Aggregated));
  const auto close_to = [](const std::vector<double>& xs, double want,
                           double floor_se) {
    const CounterStats st = stats(xs);
    const double se = std::max(st.se, floor_se);
    CHECK(std::abs(st.mean - want) < 4.0 * se);
  };
  for (int m = 0; m < 2; ++m) {
    close_to(d2[m], e.d2_fires, 1.0);
    close_to(d3[m], e.d3_fires, 0.2);
    close_to(sig[m], e.signal_triples, 0.2);
    close_to(dark[m], e.dark_triples, 0.2);
    close_to(tac[m], e.tac_recorded, 0.2);
  }
  // And the two engines against each other.
  CHECK(std::abs(stats(d3[0]).mean - stats(d3[1]).mean) <
        4.0 * std::sqrt(std::pow(stats(d3[0]).se, 2) +
                        std::pow(stats(d3[1]).se, 2) + 0.01));
}

TEST_CASE("signal arrivals concentrate in the triple-coincidence peak") {
  SimParams p;  // 20 hours, aggregated
  p.seed = 7;
  const SimResult r = simulate(p);
  // The recorded arrival distribution peaks at the 10 ns nominal delay
  // (bin 12) and the three central bins catch most of the signal.
  std::uint64_t central = r.histogram.counts[11] + r.histogram.counts[12] +
                          r.histogram.counts[13];
  CHECK(r.histogram.counts[12] >= r.histogram.counts[11]);
  CHECK(r.histogram.counts[12] >= r.histogram.counts[13]);
  CHECK(central > r.counters.signal_recorded * 9 / 10);
}

TEST_CASE("delay scan echoes offsets and suppresses the shifted gate") {
  SimParams base;
  base.duration_s = 720000.0;  // long run so the suppression is unambiguous
  base.seed = 13;
  const std::vector<double> delays{0.0, 0.5, -0.5};
  const auto points = scan_delay(base, delays);
  REQUIRE(points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(points[i].delay_ns == delays[i]);

  const double s0 = static_cast<double>(points[0].result.counters.signal_triples);
  const double sp = static_cast<double>(points[1].result.counters.signal_triples);
  const double sm = static_cast<double>(points[2].result.counters.signal_triples);
  CHECK(s0 > sp);
  CHECK(s0 > sm);

  // The suppression matches the jitter-gate overlap ratio within 3 sigma.
  const double want = 0.7852685125374004;
  for (double shifted : {sp, sm}) {
    const double ratio = shifted / s0;
    const double sigma = ratio * std::sqrt(1.0 / shifted + 1.0 / s0);
    CHECK(std::abs(ratio - want) < 3.0 * sigma);
  }
}

TEST_CASE("delay scan points are independent deterministic substreams") {
  SimParams base;
  base.duration_s = 7200.0;
  base.seed = 21;
  const auto a = scan_delay(base, {0.0, 0.5});
  const auto b = scan_delay(base, {0.0, 0.5});
  CHECK(a[0].result.counters.d3_fires == b[0].result.counters.d3_fires);
  CHECK(a[1].result.counters.d3_fires == b[1].result.counters.d3_fires);
  // A scan point must not replay the base stream.
  const SimResult base_run = simulate(base);
  CHECK(a[0].result.counters.d2_fires != base_run.counters.d2_fires);
}

TEST_CASE("event-driven runs refuse to exceed the trigger cap") {
  SimParams p;
  p.mode = SimMode::EventDriven;
  p.duration_s = 2000.0;  // 1.74e9 triggers > 1e9 cap
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);
  p.event_trigger_cap = 2'000'000'000;
  CHECK_NOTHROW(simulate(p));
}

TEST_CASE("dead time vetoes trigger slots after each fire") {
  SimParams p;
  p.mode = SimMode::EventDriven;
  p.r_trigger_hz = 1000.0;
  p.duration_s = 0.3;  // 300 trigger slots
  p.p_spdc = 0.0;
  p.dark_prob_d2 = 1.0;  // fire on every live slot
  p.dark_prob_d3 = 0.0;
  p.dead_time_s = 2.0e-3;  // two slots of hold-off
  const SimResult r = simulate(p);
  CHECK(r.counters.triggers == 300);
  // Fire, skip two, fire again: exactly every third slot.
  CHECK(r.counters.d2_fires == 100);
}

TEST_CASE("recorder keep-every-n thins the stop events") {
  // keep_every = 1 records everything in both engines.
  for (SimMode mode : {SimMode::Aggregated, SimMode::EventDriven}) {
    SimParams p = ten_minutes(17, mode);
    p.tac_keep_every = 1;
    const SimResult all = simulate(p);
    CHECK(all.counters.tac_recorded == all.counters.d3_fires);
  }
  // The per-event engine keeps a strict every-n-th cadence.
  SimParams p = ten_minutes(17, SimMode::EventDriven);
  p.tac_keep_every = 3;
  const SimResult third = simulate(p);
  const double want = static_cast<double>(third.counters.d3_fires) / 3.0;
  CHECK(std::abs(static_cast<double>(third.counters.tac_recorded) - want) <=
        1.0);
}

TEST_CASE("invalid simulation parameters are rejected") {
  SimParams p;
  p.eta_d2 = 1.5;
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);

  p = SimParams{};
  p.signal_delay_ns = 25.0;  // outside the 20 ns long gate
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);

  p = SimParams{};
  p.jitter_d1_ns = -0.1;
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);

  p = SimParams{};
  p.duration_s = 0.0;
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);

  p = SimParams{};  // conversion so bright the fire probability leaves [0,1]
  p.p_spdc = 1.0;
  p.eta_775 = 1.0;
  p.eta_in = 1.0;
  p.eta_out = 1.0;
  p.eta_bs = 1.0;
  p.eta_d2 = 1.0;
  p.eta_cw = 1.0;
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);

  p = SimParams{};
  p.bin_width_ns = 0.7;  // does not divide the 20 ns gate
  CHECK_THROWS_AS(simulate(p), std::invalid_argument);
}

TEST_CASE("counter serialization exposes every field") {
  const SimResult r = simulate(ten_minutes(2, SimMode::Aggregated));
  const nlohmann::ordered_json j = counters_to_json(r.counters);
  for (const char* key :
       {"triggers", "d2_fires", "d3_fires", "signal_triples", "dark_triples",
        "tac_recorded", "signal_recorded", "dark_recorded"})
    CHECK(j.contains(key));
  CHECK(j["triggers"].get<std::uint64_t>() == r.counters.triggers);
}
