#pragma once

#include <cstdint>
#include <vector>

#include "cspdc/histogram.hpp"
#include "json.hpp"

namespace cspdc::det {

enum class SimMode { EventDriven, Aggregated };

/// Full parameter set of the chained-gating detection simulation.
///
/// Chain model per trigger: the second detector fires on a converted photon
/// with probability p_s2 = eta_775 eta_in p_spdc eta_cw eta_out^2 2 eta_bs^2
/// eta_d2, or on a dark count with probability dark_prob_d2. A second-detector
/// fire opens the third detector's short gate at the fire time plus delay_ns;
/// the partner photon is accepted when it falls inside the gate and passes
/// eta_d3, otherwise the gate can still dark-fire with probability
/// dark_prob_d3 scaled by the in-window fraction of the gate. The recorder
/// keeps every tac_keep_every-th third-detector fire and quantizes arrival
/// times to tac_resolution_ps before binning.
struct SimParams {
  SimMode mode = SimMode::Aggregated;
  double duration_s = 72000.0;
  double r_trigger_hz = 8.70e5;

  double p_spdc = 8.347576274346432e-06;  // secondary conversion probability
  double eta_775 = 0.53;
  double eta_in = 0.50;
  double eta_out = 0.50;
  double eta_bs = 0.45;
  double eta_d2 = 0.20;
  double eta_d3 = 0.10;
  double eta_cw = 0.67;

  double dark_prob_d2 = 1.8e-3;  // per 20 ns gate
  double dark_prob_d3 = 4.5e-6;  // per 1.5 ns gate

  double gate_d2_ns = 20.0;
  double gate_d3_ns = 1.5;
  double signal_delay_ns = 10.0;  // nominal partner arrival inside the gate
  double delay_ns = 0.0;          // third-detector gate offset (scan knob)

  double jitter_d1_ns = 0.360;
  double jitter_d2_ns = 0.0;
  double jitter_d3_ns = 0.360;

  int tac_resolution_ps = 103;
  int tac_keep_every = 2;  // record every n-th stop event
  double bin_width_ns = 0.8;

  double dead_time_s = 0.0;  // second-detector hold-off after a fire

  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // substream selector, e.g. for delay scans

  // Guard: the per-trigger walk refuses runs longer than this many triggers;
  // use the aggregated mode (or raise the cap) for long integrations.
  std::uint64_t event_trigger_cap = 1'000'000'000;
};

struct Counters {
  std::uint64_t triggers = 0;
  std::uint64_t d2_fires = 0;
  std::uint64_t d3_fires = 0;
  std::uint64_t signal_triples = 0;
  std::uint64_t dark_triples = 0;
  std::uint64_t tac_recorded = 0;
  std::uint64_t signal_recorded = 0;
  std::uint64_t dark_recorded = 0;
};

struct SimResult {
  Counters counters;
  hist::Histogram histogram;  // sum of counts == counters.tac_recorded
};

/// Expected values of the chain counters (pre-histogram), for closed-form
/// cross-checks of either simulation mode.
struct ExpectedCounts {
  double triggers = 0.0;
  double d2_fires = 0.0;
  double d3_fires = 0.0;
  double signal_triples = 0.0;
  double dark_triples = 0.0;
  double tac_recorded = 0.0;
};

/// Probability that the partner photon falls inside the offset short gate:
/// Phi((half_width - delay)/sigma) - Phi((-half_width - delay)/sigma), where
/// sigma is the relative timing spread between the two gated detectors.
double gate_acceptance(double delay_ns, double sigma_ns, double half_width_ns);

/// Mean in-window length of the short gate [t + delay - half, t + delay + half]
/// when its anchor t is uniform over [0, window): exact piecewise-linear
/// integral. Scales the dark probability of edge-clipped gates.
double mean_gate_overlap(double delay_ns, double half_width_ns,
                         double window_ns);

/// Second-detector fire probability per trigger from converted photons.
double p_signal2(const SimParams& p);

ExpectedCounts expected_counters(const SimParams& p);

/// Dispatches on p.mode. Deterministic for fixed (seed, stream).
SimResult simulate(const SimParams& p);
SimResult simulate_event_driven(const SimParams& p);
SimResult simulate_aggregated(const SimParams& p);

struct DelayPoint {
  double delay_ns = 0.0;
  SimResult result;
};

/// Repeats the simulation across gate offsets, one RNG substream per point.
std::vector<DelayPoint> scan_delay(const SimParams& base,
                                   const std::vector<double>& delays_ns);

nlohmann::ordered_json counters_to_json(const Counters& c);

}  // namespace cspdc::det
