#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cspdc::hist {

/// Raised when a histogram CSV cannot be parsed; the message carries the
/// offending line number. Treated as a usage error by the CLI.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniformly binned arrival-time histogram. duration_s is metadata for rate
/// conversion only; the CSV format does not carry it.
struct Histogram {
  double bin_width_ns = 0.8;
  double start_ns = 0.0;
  std::vector<std::uint64_t> counts;
  double duration_s = 0.0;

  double end_ns() const { return start_ns + bin_width_ns * counts.size(); }
  std::uint64_t total() const;
};

/// Two-column CSV: header "bin_start_ns,counts", one row per bin, trailing
/// newline. Bin width is implicit in the spacing of the start column.
void write_csv(const Histogram& h, std::ostream& out);
void write_csv(const Histogram& h, const std::string& path);

/// Inverse of write_csv. Requires at least two rows (the spacing defines the
/// bin width), uniform spacing, and non-negative integer counts; violations
/// raise ParseError naming the line.
Histogram read_csv(std::istream& in);
Histogram read_csv(const std::string& path);

/// Flat-background estimate over a set of off-peak bins: per-bin mean and
/// sample standard deviation. Requires at least five contributing bins.
struct BackgroundEstimate {
  double mean_per_bin = 0.0;
  double stdev_per_bin = 0.0;
  int bins_used = 0;
};

/// Background from every bin outside [exclude_first, exclude_first + exclude_len).
/// Pass exclude_len = 0 to use all bins.
BackgroundEstimate estimate_background(const Histogram& h, int exclude_first = 0,
                                       int exclude_len = 0);

/// Peak analysis of a coincidence histogram: locate the contiguous window of
/// `window_bins` bins with the largest summed counts, estimate the flat
/// background from every other bin, and report background-subtracted counts
/// with Poisson uncertainties.
struct PeakReport {
  int window_bins = 0;
  int window_first = 0;        // index of the first window bin
  double window_start_ns = 0.0;
  double window_end_ns = 0.0;
  double raw_counts = 0.0;     // summed counts inside the window
  double background_per_bin = 0.0;
  double background_stdev = 0.0;
  int background_bins = 0;
  double expected_background = 0.0;  // window_bins * background_per_bin
  double net_counts = 0.0;           // raw - expected_background
  double net_sigma = 0.0;            // sqrt(raw + expected_background)
  double net_rate_per_hour = 0.0;    // 0 when the histogram has no duration
  double net_rate_sigma_per_hour = 0.0;
  double max_bin_counts = 0.0;
  double max_bin_start_ns = 0.0;
  double significance_max_bin = 0.0;  // (max_bin - bg) / sqrt(bg)
  double significance_window = 0.0;   // net / net_sigma
  double fwhm_ns = 0.0;               // 0 when no interpolated width exists
};

PeakReport analyze_peak(const Histogram& h, int window_bins = 3);

/// Full width at half maximum of the background-subtracted peak, linearly
/// interpolated between bin centers. Returns 0 if either half-crossing is
/// missing.
double peak_fwhm_ns(const Histogram& h, double background_per_bin);

nlohmann::ordered_json report_to_json(const PeakReport& r);

}  // namespace cspdc::hist
