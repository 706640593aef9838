#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cspdc/rng.hpp"
#include "doctest.h"

using cspdc::rng::Stream;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename F>
Moments sample_moments(int n, F&& draw) {
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  return {mean, sum2 / n - mean * mean};
}

}  // namespace

TEST_CASE("identical stream coordinates replay the same sequence") {
  Stream a(12345, 7, 3), b(12345, 7, 3);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("seed, stream id and block all separate sequences") {
  Stream base(42, 0, 0);
  Stream other_seed(43, 0, 0);
  Stream other_stream(42, 1, 0);
  Stream other_block(42, 0, 1);
  const std::uint64_t first = base.next_u64();
  // A clash in any one draw would be a catastrophic mixing failure.
  CHECK(first != other_seed.next_u64());
  CHECK(first != other_stream.next_u64());
  CHECK(first != other_block.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) with the right first two moments") {
  Stream s(1001);
  double lo = 1.0, hi = -1.0;
  const Moments m = sample_moments(200000, [&] {
    const double x = s.uniform01();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    return x;
  });
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(m.mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(m.var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("uniform_oc never returns zero") {
  Stream s(1002);
  for (int i = 0; i < 100000; ++i) {
    const double x = s.uniform_oc();
    CHECK(x > 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("bounded uniform respects its interval") {
  Stream s(1003);
  for (int i = 0; i < 1000; ++i) {
    const double x = s.uniform(3.0, 7.0);
    CHECK(x >= 3.0);
    CHECK(x < 7.0);
  }
}

TEST_CASE("gaussian matches the standard normal moments") {
  Stream s(1004);
  const Moments m = sample_moments(200000, [&] { return s.gaussian(); });
  CHECK(std::abs(m.mean) < 0.01);
  CHECK(m.var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("scaled gaussian shifts and stretches") {
  Stream s(1005);
  const Moments m =
      sample_moments(200000, [&] { return s.gaussian(10.0, 0.36); });
  CHECK(m.mean == doctest::Approx(10.0).epsilon(0.001));
  CHECK(std::sqrt(m.var) == doctest::Approx(0.36).epsilon(0.02));
}

TEST_CASE("truncated gaussian honours its bounds") {
  Stream s(1006);
  for (int i = 0; i < 50000; ++i) {
    const double x = s.truncated_gaussian(0.5, 0.4, 0.0, 1.0);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("degenerate truncated gaussian clamps the mean") {
  Stream s(1007);
  CHECK(s.truncated_gaussian(0.5, 0.0, 0.0, 1.0) == 0.5);
  CHECK(s.truncated_gaussian(1.5, 0.0, 0.0, 1.0) == 1.0);
  CHECK(s.truncated_gaussian(-2.0, -1.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("truncated gaussian rejects unreachable bounds") {
  Stream s(1008);
  CHECK_THROWS_AS(s.truncated_gaussian(0.0, 1e-9, 10.0, 11.0),
                  std::runtime_error);
}

TEST_CASE("geometric failure count edge cases") {
  Stream s(1009);
  CHECK(s.geometric_failures(1.0) == 0);
  CHECK(s.geometric_failures(1.5) == 0);
  CHECK(s.geometric_failures(0.0) ==
        std::numeric_limits<std::uint64_t>::max());
  CHECK(s.geometric_failures(-0.1) ==
        std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("geometric failure count has mean (1-p)/p") {
  Stream s(1010);
  const double p = 0.25;
  const Moments m = sample_moments(
      200000, [&] { return static_cast<double>(s.geometric_failures(p)); });
  CHECK(m.mean == doctest::Approx((1.0 - p) / p).epsilon(0.02));
}

TEST_CASE("geometric failure count starts at P(0) = p") {
  Stream s(1011);
  const int n = 200000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += s.geometric_failures(0.3) == 0 ? 1 : 0;
  CHECK(static_cast<double>(zeros) / n == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("poisson matches mean and variance in both regimes") {
  Stream s(1012);
  CHECK(s.poisson(0.0) == 0);
  CHECK(s.poisson(-3.0) == 0);

  const Moments small = sample_moments(
      200000, [&] { return static_cast<double>(s.poisson(5.0)); });
  CHECK(small.mean == doctest::Approx(5.0).epsilon(0.01));
  CHECK(small.var == doctest::Approx(5.0).epsilon(0.05));

  const Moments large = sample_moments(
      50000, [&] { return static_cast<double>(s.poisson(1000.0)); });
  CHECK(large.mean == doctest::Approx(1000.0).epsilon(0.002));
  CHECK(large.var == doctest::Approx(1000.0).epsilon(0.05));
}

TEST_CASE("binomial edge cases") {
  Stream s(1013);
  CHECK(s.binomial(0, 0.5) == 0);
  CHECK(s.binomial(100, 0.0) == 0);
  CHECK(s.binomial(100, -0.5) == 0);
  CHECK(s.binomial(100, 1.0) == 100);
  CHECK(s.binomial(100, 1.5) == 100);
}

TEST_CASE("binomial small-n branch matches exact moments") {
  Stream s(1014);
  const Moments m = sample_moments(
      100000, [&] { return static_cast<double>(s.binomial(40, 0.3)); });
  CHECK(m.mean == doctest::Approx(12.0).epsilon(0.01));
  CHECK(m.var == doctest::Approx(40 * 0.3 * 0.7).epsilon(0.05));
}

TEST_CASE("binomial tiny-p branch behaves like its Poisson limit") {
  Stream s(1015);
  const std::uint64_t n = 10000000;
  const double p = 1e-8;  // mean 0.1
  const Moments m = sample_moments(
      200000, [&] { return static_cast<double>(s.binomial(n, p)); });
  CHECK(m.mean == doctest::Approx(0.1).epsilon(0.05));
  CHECK(m.var == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("binomial inverse-cdf branch matches exact moments") {
  Stream s(1016);
  const Moments m = sample_moments(
      100000, [&] { return static_cast<double>(s.binomial(1000, 0.01)); });
  CHECK(m.mean == doctest::Approx(10.0).epsilon(0.01));
  CHECK(m.var == doctest::Approx(1000 * 0.01 * 0.99).epsilon(0.05));
}

TEST_CASE("binomial normal branch matches exact moments") {
  Stream s(1017);
  const std::uint64_t n = 1000000;
  const double p = 0.4;
  double mx = 0.0;
  const Moments m = sample_moments(20000, [&] {
    const double x = static_cast<double>(s.binomial(n, p));
    mx = std::max(mx, x);
    return x;
  });
  CHECK(mx <= static_cast<double>(n));
  CHECK(m.mean == doctest::Approx(400000.0).epsilon(0.0005));
  CHECK(m.var == doctest::Approx(n * p * 0.6).epsilon(0.05));
}

TEST_CASE("binomial complement branch keeps p > 0.5 exact") {
  Stream s(1018);
  double mx = 0.0;
  const Moments m = sample_moments(100000, [&] {
    const double x = static_cast<double>(s.binomial(100, 0.8));
    mx = std::max(mx, x);
    return x;
  });
  CHECK(mx <= 100.0);
  CHECK(m.mean == doctest::Approx(80.0).epsilon(0.005));
  CHECK(m.var == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("multinomial splits conserve the total") {
  Stream s(1019);
  const std::vector<double> w{1.0, 2.0, 3.0, 4.0};
  const std::uint64_t total = 100000;
  const auto counts = cspdc::rng::multinomial(s, total, w);
  REQUIRE(counts.size() == 4);
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  CHECK(sum == total);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double p = w[i] / 10.0;
    const double expect = total * p;
    const double sd = std::sqrt(total * p * (1.0 - p));
    CHECK(std::abs(static_cast<double>(counts[i]) - expect) < 5.0 * sd);
  }
}

TEST_CASE("multinomial edge cases") {
  Stream s(1020);
  CHECK(cspdc::rng::multinomial(s, 0, {1.0, 1.0}) ==
        std::vector<std::uint64_t>{0, 0});
  CHECK(cspdc::rng::multinomial(s, 100, {}).empty());
  // Zero-weight bins get nothing; the whole mass lands on the live bin.
  CHECK(cspdc::rng::multinomial(s, 100, {0.0, 1.0, 0.0}) ==
        std::vector<std::uint64_t>{0, 100, 0});
  CHECK_THROWS_AS(cspdc::rng::multinomial(s, 10, {1.0, -1.0}),
                  std::invalid_argument);
}

TEST_CASE("multinomial replays deterministically") {
  Stream a(1021), b(1021);
  const std::vector<double> w{0.2, 0.3, 0.5};
  CHECK(cspdc::rng::multinomial(a, 12345, w) ==
        cspdc::rng::multinomial(b, 12345, w));
}
