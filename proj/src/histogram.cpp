#include "cspdc/histogram.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cspdc::hist {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("histogram csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::uint64_t Histogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void write_csv(const Histogram& h, std::ostream& out) {
  out << "bin_start_ns,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << fmt_g(h.start_ns + h.bin_width_ns * static_cast<double>(i)) << ','
        << h.counts[i] << '\n';
}

void write_csv(const Histogram& h, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(h, f);
  if (!f) throw std::runtime_error("write failed: " + path);
}

Histogram read_csv(std::istream& in) {
  std::string line;
  int lineno = 0;

  auto next_line = [&](std::string& s) {
    if (!std::getline(in, s)) return false;
    ++lineno;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return true;
  };

  if (!next_line(line)) throw ParseError("histogram csv: empty input");
  if (line != "bin_start_ns,counts")
    fail(lineno, "expected header 'bin_start_ns,counts', got '" + line + "'");

  std::vector<double> starts;
  std::vector<std::uint64_t> counts;
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(lineno, "expected two comma-separated fields");
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    if (b.find(',') != std::string::npos) fail(lineno, "expected exactly two fields");

    std::size_t used = 0;
    double start = 0.0;
    try {
      start = std::stod(a, &used);
    } catch (const std::exception&) {
      fail(lineno, "bad bin start '" + a + "'");
    }
    if (used != a.size()) fail(lineno, "bad bin start '" + a + "'");

    long long n = 0;
    try {
      n = std::stoll(b, &used);
    } catch (const std::exception&) {
      fail(lineno, "bad count '" + b + "'");
    }
    if (used != b.size()) fail(lineno, "bad count '" + b + "'");
    if (n < 0) fail(lineno, "negative count " + std::to_string(n));

    starts.push_back(start);
    counts.push_back(static_cast<std::uint64_t>(n));
  }

  if (starts.size() < 2)
    throw ParseError("histogram csv: need at least two bins to infer the bin width");

  const double width = starts[1] - starts[0];
  if (!(width > 0.0))
    throw ParseError("histogram csv: bin starts must be strictly increasing");
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double expect = starts[0] + width * static_cast<double>(i);
    if (std::abs(starts[i] - expect) > 1e-6 * width)
      fail(static_cast<int>(i) + 2, "non-uniform bin spacing");
  }

  Histogram h;
  h.bin_width_ns = width;
  h.start_ns = starts[0];
  h.counts = std::move(counts);
  return h;
}

Histogram read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open histogram csv: " + path);
  return read_csv(f);
}

BackgroundEstimate estimate_background(const Histogram& h, int exclude_first,
                                       int exclude_len) {
  const int n = static_cast<int>(h.counts.size());
  if (exclude_len < 0 || exclude_first < 0 || exclude_first + exclude_len > n)
    throw std::invalid_argument("background exclusion window out of range");

  double sum = 0.0, sum2 = 0.0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    if (exclude_len > 0 && i >= exclude_first && i < exclude_first + exclude_len)
      continue;
    const double c = static_cast<double>(h.counts[i]);
    sum += c;
    sum2 += c * c;
    ++used;
  }
  if (used < 5)
    throw std::invalid_argument(
        "background estimate needs at least five off-peak bins");

  BackgroundEstimate e;
  e.bins_used = used;
  e.mean_per_bin = sum / used;
  const double var = (sum2 - sum * sum / used) / (used - 1);
  e.stdev_per_bin = var > 0.0 ? std::sqrt(var) : 0.0;
  return e;
}

PeakReport analyze_peak(const Histogram& h, int window_bins) {
  const int n = static_cast<int>(h.counts.size());
  if (window_bins < 1) throw std::invalid_argument("window must be >= 1 bin");
  if (window_bins > n)
    throw std::invalid_argument("window wider than the histogram");

  // Max-sum contiguous window; ties keep the earliest.
  double best = -1.0;
  int best_first = 0;
  for (int first = 0; first + window_bins <= n; ++first) {
    double s = 0.0;
    for (int i = 0; i < window_bins; ++i)
      s += static_cast<double>(h.counts[first + i]);
    if (s > best) {
      best = s;
      best_first = first;
    }
  }

  const BackgroundEstimate bg = estimate_background(h, best_first, window_bins);

  PeakReport r;
  r.window_bins = window_bins;
  r.window_first = best_first;
  r.window_start_ns = h.start_ns + h.bin_width_ns * best_first;
  r.window_end_ns = r.window_start_ns + h.bin_width_ns * window_bins;
  r.raw_counts = best;
  r.background_per_bin = bg.mean_per_bin;
  r.background_stdev = bg.stdev_per_bin;
  r.background_bins = bg.bins_used;
  r.expected_background = window_bins * bg.mean_per_bin;
  r.net_counts = r.raw_counts - r.expected_background;
  r.net_sigma = std::sqrt(r.raw_counts + r.expected_background);
  if (h.duration_s > 0.0) {
    r.net_rate_per_hour = r.net_counts / h.duration_s * 3600.0;
    r.net_rate_sigma_per_hour = r.net_sigma / h.duration_s * 3600.0;
  }

  int max_i = 0;
  for (int i = 1; i < n; ++i)
    if (h.counts[i] > h.counts[max_i]) max_i = i;
  r.max_bin_counts = static_cast<double>(h.counts[max_i]);
  r.max_bin_start_ns = h.start_ns + h.bin_width_ns * max_i;
  r.significance_max_bin =
      bg.mean_per_bin > 0.0
          ? (r.max_bin_counts - bg.mean_per_bin) / std::sqrt(bg.mean_per_bin)
          : 0.0;
  r.significance_window = r.net_sigma > 0.0 ? r.net_counts / r.net_sigma : 0.0;
  r.fwhm_ns = peak_fwhm_ns(h, bg.mean_per_bin);
  return r;
}

double peak_fwhm_ns(const Histogram& h, double background_per_bin) {
  const int n = static_cast<int>(h.counts.size());
  if (n == 0) return 0.0;

  std::vector<double> net(n);
  int max_i = 0;
  for (int i = 0; i < n; ++i) {
    net[i] = static_cast<double>(h.counts[i]) - background_per_bin;
    if (net[i] > net[max_i]) max_i = i;
  }
  const double half = net[max_i] / 2.0;
  if (!(half > 0.0)) return 0.0;

  // Walk out from the maximum to the first crossings of the half level and
  // interpolate linearly between bin centers.
  double left = 0.0, right = 0.0;
  bool have_left = false, have_right = false;
  for (int i = max_i; i > 0; --i) {
    if (net[i - 1] <= half && net[i] > half) {
      const double frac = (half - net[i - 1]) / (net[i] - net[i - 1]);
      left = (i - 1 + frac + 0.5) * h.bin_width_ns + h.start_ns;
      have_left = true;
      break;
    }
  }
  for (int i = max_i; i + 1 < n; ++i) {
    if (net[i] > half && net[i + 1] <= half) {
      const double frac = (net[i] - half) / (net[i] - net[i + 1]);
      right = (i + frac + 0.5) * h.bin_width_ns + h.start_ns;
      have_right = true;
      break;
    }
  }
  return (have_left && have_right) ? right - left : 0.0;
}

nlohmann::ordered_json report_to_json(const PeakReport& r) {
  nlohmann::ordered_json j;
  j["window_bins"] = r.window_bins;
  j["window_first"] = r.window_first;
  j["window_start_ns"] = r.window_start_ns;
  j["window_end_ns"] = r.window_end_ns;
  j["raw_counts"] = r.raw_counts;
  j["background_per_bin"] = r.background_per_bin;
  j["background_stdev"] = r.background_stdev;
  j["background_bins"] = r.background_bins;
  j["expected_background"] = r.expected_background;
  j["net_counts"] = r.net_counts;
  j["net_sigma"] = r.net_sigma;
  j["net_rate_per_hour"] = r.net_rate_per_hour;
  j["net_rate_sigma_per_hour"] = r.net_rate_sigma_per_hour;
  j["max_bin_counts"] = r.max_bin_counts;
  j["max_bin_start_ns"] = r.max_bin_start_ns;
  j["significance_max_bin"] = r.significance_max_bin;
  j["significance_window"] = r.significance_window;
  j["fwhm_ns"] = r.fwhm_ns;
  return j;
}

}  // namespace cspdc::hist
