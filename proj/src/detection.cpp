#include "cspdc/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cspdc/rng.hpp"

namespace cspdc::det {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

struct Derived {
  std::uint64_t n_triggers;
  int n_bins;
  double p_s2;      // converted-photon fire probability per trigger
  double p_fire;    // merged fire probability (signal or dark)
  double half3;     // short-gate half width
  double sigma13;   // trigger-to-third-detector timing spread
  double sigma23;   // second-to-third-detector timing spread
  double ov_signal; // in-window gate length at the nominal arrival
};

Derived derive(const SimParams& p) {
  check_unit(p.p_spdc, "p_spdc");
  check_unit(p.eta_775, "eta_775");
  check_unit(p.eta_in, "eta_in");
  check_unit(p.eta_out, "eta_out");
  check_unit(p.eta_bs, "eta_bs");
  check_unit(p.eta_d2, "eta_d2");
  check_unit(p.eta_d3, "eta_d3");
  check_unit(p.eta_cw, "eta_cw");
  check_unit(p.dark_prob_d2, "dark_prob_d2");
  check_unit(p.dark_prob_d3, "dark_prob_d3");
  if (!(p.r_trigger_hz > 0.0)) throw std::invalid_argument("r_trigger_hz must be positive");
  if (!(p.duration_s > 0.0)) throw std::invalid_argument("duration_s must be positive");
  if (!(p.gate_d2_ns > 0.0) || !(p.gate_d3_ns > 0.0))
    throw std::invalid_argument("gate widths must be positive");
  if (!(p.signal_delay_ns >= 0.0 && p.signal_delay_ns < p.gate_d2_ns))
    throw std::invalid_argument("signal_delay_ns must fall inside the long gate");
  if (p.jitter_d1_ns < 0.0 || p.jitter_d2_ns < 0.0 || p.jitter_d3_ns < 0.0)
    throw std::invalid_argument("jitters must be non-negative");
  if (p.tac_resolution_ps < 1) throw std::invalid_argument("tac_resolution_ps must be >= 1");
  if (p.tac_keep_every < 1) throw std::invalid_argument("tac_keep_every must be >= 1");
  if (p.dead_time_s < 0.0) throw std::invalid_argument("dead_time_s must be non-negative");
  if (!(p.bin_width_ns > 0.0)) throw std::invalid_argument("bin_width_ns must be positive");

  Derived d;
  d.n_bins = static_cast<int>(std::llround(p.gate_d2_ns / p.bin_width_ns));
  if (d.n_bins < 1 ||
      std::abs(d.n_bins * p.bin_width_ns - p.gate_d2_ns) > 1e-9 * p.gate_d2_ns)
    throw std::invalid_argument("bin_width_ns must divide the long gate evenly");

  const double n_trig = p.duration_s * p.r_trigger_hz;
  if (n_trig > 9e18) throw std::invalid_argument("trigger count overflows");
  d.n_triggers = static_cast<std::uint64_t>(std::llround(n_trig));

  d.p_s2 = p_signal2(p);
  if (d.p_s2 > 1.0) throw std::invalid_argument("chain probability exceeds 1");
  d.p_fire = d.p_s2 + (1.0 - d.p_s2) * p.dark_prob_d2;
  d.half3 = 0.5 * p.gate_d3_ns;
  d.sigma13 = std::hypot(p.jitter_d1_ns, p.jitter_d3_ns);
  d.sigma23 = std::hypot(p.jitter_d2_ns, p.jitter_d3_ns);

  const double lo = std::max(p.signal_delay_ns + p.delay_ns - d.half3, 0.0);
  const double hi = std::min(p.signal_delay_ns + p.delay_ns + d.half3, p.gate_d2_ns);
  d.ov_signal = std::max(hi - lo, 0.0);
  return d;
}

hist::Histogram empty_hist(const SimParams& p, int n_bins) {
  hist::Histogram h;
  h.bin_width_ns = p.bin_width_ns;
  h.start_ns = 0.0;
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  h.duration_s = p.duration_s;
  return h;
}

int quantized_bin(double t_ns, const SimParams& p, int n_bins) {
  const long long m =
      static_cast<long long>(std::floor(t_ns * 1000.0 / p.tac_resolution_ps));
  const long long tq_ps = m * p.tac_resolution_ps;
  const long long bw_ps = std::llround(p.bin_width_ns * 1000.0);
  long long b = tq_ps / bw_ps;
  if (b < 0) b = 0;
  if (b >= n_bins) b = n_bins - 1;
  return static_cast<int>(b);
}

}  // namespace

double gate_acceptance(double delay_ns, double sigma_ns, double half_width_ns) {
  if (!(half_width_ns > 0.0))
    throw std::invalid_argument("half_width_ns must be positive");
  if (sigma_ns < 0.0) throw std::invalid_argument("sigma_ns must be non-negative");
  if (sigma_ns == 0.0) return std::abs(delay_ns) <= half_width_ns ? 1.0 : 0.0;
  return norm_cdf((half_width_ns - delay_ns) / sigma_ns) -
         norm_cdf((-half_width_ns - delay_ns) / sigma_ns);
}

double mean_gate_overlap(double delay_ns, double half_width_ns, double window_ns) {
  if (!(half_width_ns > 0.0) || !(window_ns > 0.0))
    throw std::invalid_argument("gate and window must be positive");

  auto overlap = [&](double t) {
    const double lo = std::max(t + delay_ns - half_width_ns, 0.0);
    const double hi = std::min(t + delay_ns + half_width_ns, window_ns);
    return std::max(hi - lo, 0.0);
  };

  // The integrand is piecewise linear; its kinks sit where a gate edge meets a
  // window edge. Midpoint integration per segment is exact.
  std::vector<double> pts{0.0, window_ns};
  for (double t : {half_width_ns - delay_ns, -half_width_ns - delay_ns,
                   window_ns - delay_ns - half_width_ns,
                   window_ns - delay_ns + half_width_ns})
    if (t > 0.0 && t < window_ns) pts.push_back(t);
  std::sort(pts.begin(), pts.end());

  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = pts[i + 1] - pts[i];
    integral += len * overlap(0.5 * (pts[i] + pts[i + 1]));
  }
  return integral / window_ns;
}

double p_signal2(const SimParams& p) {
  return p.eta_775 * p.eta_in * p.p_spdc * p.eta_cw * p.eta_out * p.eta_out *
         2.0 * p.eta_bs * p.eta_bs * p.eta_d2;
}

ExpectedCounts expected_counters(const SimParams& p) {
  const Derived d = derive(p);
  const double n = static_cast<double>(d.n_triggers);
  const double q3 = gate_acceptance(p.delay_ns, d.sigma23, d.half3);
  const double ovbar = mean_gate_overlap(p.delay_ns, d.half3, p.gate_d2_ns);

  ExpectedCounts e;
  e.triggers = n;
  const double e_s2 = n * d.p_s2;
  const double e_d2dark = n * (1.0 - d.p_s2) * p.dark_prob_d2;
  e.d2_fires = e_s2 + e_d2dark;
  e.signal_triples = e_s2 * p.eta_d3 * q3;
  const double e_s2dark = (e_s2 - e.signal_triples) * p.dark_prob_d3 *
                          d.ov_signal / p.gate_d3_ns;
  const double e_darkdark =
      e_d2dark * p.dark_prob_d3 * ovbar / p.gate_d3_ns;
  e.dark_triples = e_s2dark + e_darkdark;
  e.d3_fires = e.signal_triples + e.dark_triples;
  e.tac_recorded = e.d3_fires / p.tac_keep_every;
  return e;
}

SimResult simulate_event_driven(const SimParams& p) {
  const Derived d = derive(p);
  if (d.n_triggers > p.event_trigger_cap)
    throw std::invalid_argument(
        "trigger count exceeds the per-event cap; use the aggregated mode or "
        "raise event_trigger_cap");

  rng::Stream s(p.seed, p.stream);
  SimResult r;
  r.counters.triggers = d.n_triggers;
  r.histogram = empty_hist(p, d.n_bins);

  if (d.p_fire <= 0.0) return r;

  const std::uint64_t keep = static_cast<std::uint64_t>(p.tac_keep_every);
  const std::uint64_t phase = s.next_u64() % keep;
  const std::uint64_t dead =
      static_cast<std::uint64_t>(std::llround(p.dead_time_s * p.r_trigger_hz));
  const double w2 = p.gate_d2_ns;
  const double p_sig_given_fire = d.p_s2 / d.p_fire;

  std::uint64_t fire3 = 0;
  std::uint64_t idx = 0;
  while (idx < d.n_triggers) {
    const std::uint64_t skip = s.geometric_failures(d.p_fire);
    if (skip >= d.n_triggers - idx) break;
    idx += skip;

    ++r.counters.d2_fires;
    const bool from_signal = s.bernoulli(p_sig_given_fire);

    bool fired3 = false, is_signal = false;
    double t_fire = 0.0;
    if (from_signal) {
      const double j1 = s.gaussian(0.0, p.jitter_d1_ns);
      const double j2
          = p.jitter_d2_ns > 0.0 ? s.gaussian(0.0, p.jitter_d2_ns) : 0.0;
      double t2 = p.signal_delay_ns - j1 + j2;
      t2 = std::clamp(t2, 0.0, w2 * (1.0 - 1e-12));
      const double glo = std::max(t2 + p.delay_ns - d.half3, 0.0);
      const double ghi = std::min(t2 + p.delay_ns + d.half3, w2);

      const double j3 = s.gaussian(0.0, p.jitter_d3_ns);
      const double t3 = p.signal_delay_ns - j1 + j3;
      if (t3 >= glo && t3 < ghi && s.bernoulli(p.eta_d3)) {
        fired3 = true;
        is_signal = true;
        t_fire = t3;
      } else if (ghi > glo &&
                 s.bernoulli(p.dark_prob_d3 * (ghi - glo) / p.gate_d3_ns)) {
        fired3 = true;
        t_fire = s.uniform(glo, ghi);
      }
    } else {
      const double t2 = s.uniform(0.0, w2);
      const double glo = std::max(t2 + p.delay_ns - d.half3, 0.0);
      const double ghi = std::min(t2 + p.delay_ns + d.half3, w2);
      if (ghi > glo &&
          s.bernoulli(p.dark_prob_d3 * (ghi - glo) / p.gate_d3_ns)) {
        fired3 = true;
        t_fire = s.uniform(glo, ghi);
      }
    }

    if (fired3) {
      ++r.counters.d3_fires;
      if (is_signal)
        ++r.counters.signal_triples;
      else
        ++r.counters.dark_triples;
      if (fire3 % keep == phase) {
        ++r.counters.tac_recorded;
        if (is_signal)
          ++r.counters.signal_recorded;
        else
          ++r.counters.dark_recorded;
        ++r.histogram.counts[static_cast<std::size_t>(
            quantized_bin(t_fire, p, d.n_bins))];
      }
      ++fire3;
    }

    const std::uint64_t advance = 1 + dead;
    if (advance >= d.n_triggers - idx) break;
    idx += advance;
  }
  return r;
}

SimResult simulate_aggregated(const SimParams& p) {
  const Derived d = derive(p);
  rng::Stream s(p.seed, p.stream);

  const double q3 = gate_acceptance(p.delay_ns, d.sigma23, d.half3);
  const double ovbar = mean_gate_overlap(p.delay_ns, d.half3, p.gate_d2_ns);
  const double keep_frac = 1.0 / p.tac_keep_every;

  const std::uint64_t n_s2 = s.binomial(d.n_triggers, d.p_s2);
  const std::uint64_t n_sig3 = s.binomial(n_s2, p.eta_d3 * q3);
  const std::uint64_t n_s2dark = s.binomial(
      n_s2 - n_sig3, p.dark_prob_d3 * d.ov_signal / p.gate_d3_ns);
  const std::uint64_t n_d2dark =
      s.binomial(d.n_triggers - n_s2, p.dark_prob_d2);
  const std::uint64_t n_darkdark =
      s.binomial(n_d2dark, p.dark_prob_d3 * ovbar / p.gate_d3_ns);

  SimResult r;
  r.counters.triggers = d.n_triggers;
  r.counters.d2_fires = n_s2 + n_d2dark;
  r.counters.signal_triples = n_sig3;
  r.counters.dark_triples = n_s2dark + n_darkdark;
  r.counters.d3_fires = r.counters.signal_triples + r.counters.dark_triples;
  r.counters.signal_recorded = s.binomial(n_sig3, keep_frac);
  r.counters.dark_recorded = s.binomial(n_s2dark + n_darkdark, keep_frac);
  r.counters.tac_recorded =
      r.counters.signal_recorded + r.counters.dark_recorded;

  r.histogram = empty_hist(p, d.n_bins);
  const int last = d.n_bins - 1;
  for (std::uint64_t i = 0; i < r.counters.signal_recorded; ++i) {
    const double t = p.signal_delay_ns + s.gaussian(0.0, d.sigma13);
    int b = static_cast<int>(std::floor(t / p.bin_width_ns));
    b = std::clamp(b, 0, last);
    ++r.histogram.counts[static_cast<std::size_t>(b)];
  }
  for (std::uint64_t i = 0; i < r.counters.dark_recorded; ++i) {
    int b = static_cast<int>(s.uniform01() * d.n_bins);
    b = std::clamp(b, 0, last);
    ++r.histogram.counts[static_cast<std::size_t>(b)];
  }
  return r;
}

SimResult simulate(const SimParams& p) {
  return p.mode == SimMode::EventDriven ? simulate_event_driven(p)
                                        : simulate_aggregated(p);
}

std::vector<DelayPoint> scan_delay(const SimParams& base,
                                   const std::vector<double>& delays_ns) {
  std::vector<DelayPoint> out;
  out.reserve(delays_ns.size());
  for (std::size_t i = 0; i < delays_ns.size(); ++i) {
    SimParams q = base;
    q.delay_ns = delays_ns[i];
    q.stream = base.stream + 1 + i;
    out.push_back({delays_ns[i], simulate(q)});
  }
  return out;
}

nlohmann::ordered_json counters_to_json(const Counters& c) {
  nlohmann::ordered_json j;
  j["triggers"] = c.triggers;
  j["d2_fires"] = c.d2_fires;
  j["d3_fires"] = c.d3_fires;
  j["signal_triples"] = c.signal_triples;
  j["dark_triples"] = c.dark_triples;
  j["tac_recorded"] = c.tac_recorded;
  j["signal_recorded"] = c.signal_recorded;
  j["dark_recorded"] = c.dark_recorded;
  return j;
}

}  // namespace cspdc::det
