#include "doctest.h"

#include <numbers>
#include <numeric>
#include <random>

#include "isac/waveform.hpp"
#include "support.hpp"

using namespace isac;
using isac::test::argmax_abs;

namespace {

const Complex j{0.0, 1.0};

ComplexVector shifted(const ComplexSequence& s, std::size_t d) {
  const std::size_t n = s.size();
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[(i + d) % n] = s.samples[i];
  return out;
}

// Direct O(N^2) periodic autocorrelation magnitude, largest over nonzero lags.
double max_sidelobe(const ComplexSequence& s) {
  const std::size_t n = s.size();
  double worst = 0.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    Complex acc{};
    for (std::size_t i = 0; i < n; ++i) {
      acc += s.samples[i] * std::conj(s.samples[(i + lag) % n]);
    }
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace

TEST_SUITE("waveform") {

TEST_CASE("length-4 sequence by hand") {
  const ComplexSequence s = zadoff_chu(4, 1);
  REQUIRE(s.size() == 4);
  const Complex e = std::exp(-j * std::numbers::pi / 4.0);
  const Complex expected[] = {1.0, e, -1.0, e};
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(std::abs(s.samples[n] - expected[n]) < 1e-15);
  }
}

TEST_CASE("odd length uses n(n+1)") {
  const ComplexSequence s = zadoff_chu(5, 2);
  for (std::size_t n = 0; n < 5; ++n) {
    const double phase = -std::numbers::pi * 2.0 * static_cast<double>(n * (n + 1)) / 5.0;
    CHECK(std::abs(s.samples[n] - std::exp(j * phase)) < 1e-14);
  }
}

TEST_CASE("unit modulus for any valid pair") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 2 + rng() % 3000;
    std::size_t root = 1 + rng() % (len - 1);
    while (std::gcd(root, len) != 1) root = root % (len - 1) + 1;
    const ComplexSequence s = zadoff_chu(len, root);
    for (const Complex& x : s.samples) CHECK(std::abs(std::abs(x) - 1.0) < 1e-12);
  }
}

TEST_CASE("ideal periodic autocorrelation, brute force") {
  for (std::size_t root : {1u, 3u}) {
    const ComplexSequence s = zadoff_chu(8192, root);
    CHECK(max_sidelobe(s) < 1e-9 * 8192);
  }
  CHECK(max_sidelobe(zadoff_chu(1031, 5)) < 1e-9 * 1031);  // odd, prime length
}

TEST_CASE("rejects bad arguments") {
  CHECK_THROWS_AS(zadoff_chu(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(zadoff_chu(8192, 4), std::invalid_argument);
  CHECK_THROWS_AS(zadoff_chu(15, 5), std::invalid_argument);
}

TEST_CASE("autocorrelation through the correlator") {
  const ComplexSequence& ref = test::default_reference();
  const RangeProfile p = range_profile(ref.samples, ref);
  CHECK(std::abs(std::abs(p.bins[0]) - 1.0) < 1e-12);
  for (std::size_t d = 1; d < p.bins.size(); ++d) REQUIRE(std::abs(p.bins[d]) < 1e-9);
}

TEST_CASE("circular shift of 133 samples") {
  const ComplexSequence& ref = test::default_reference();
  const ComplexVector rx = shifted(ref, 133);
  const RangeProfile p = test::default_correlator().correlate(rx);
  CHECK(argmax_abs(p.bins) == 133);
  CHECK(std::abs(p.bins[133]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noisy shifted copies at 20 dB") {
  const ComplexSequence& ref = test::default_reference();
  const std::size_t n = ref.size();
  // Post-correlation bin noise is sigma^2 / N for a 1/N-scaled correlator.
  const double sigma = std::sqrt(static_cast<double>(n) * std::pow(10.0, -2.0) / 2.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, sigma);
  std::uniform_int_distribution<std::size_t> lag(0, n - 1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = lag(rng);
    ComplexVector rx = shifted(ref, d);
    const Complex a = std::exp(j * phase(rng));
    for (auto& x : rx) x = a * x + Complex(g(rng), g(rng));
    hits += argmax_abs(test::default_correlator().correlate(rx).bins) == d;
  }
  CHECK(hits >= 99);
}

TEST_CASE("energy bookkeeping") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  ComplexVector rx(8192);
  for (auto& x : rx) x = Complex(g(rng), g(rng));
  const RangeProfile p = test::default_correlator().correlate(rx);
  double e_rx = 0, e_bins = 0;
  for (const auto& x : rx) e_rx += std::norm(x);
  for (const auto& x : p.bins) e_bins += std::norm(x);
  CHECK(e_bins == doctest::Approx(e_rx / 8192.0).epsilon(1e-9));
}

TEST_CASE("linearity") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  ComplexVector x(8192), y(8192), z(8192);
  const Complex a(0.7, -1.3), b(-2.1, 0.4);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = Complex(g(rng), g(rng));
    y[i] = Complex(g(rng), g(rng));
    z[i] = a * x[i] + b * y[i];
  }
  const auto& c = test::default_correlator();
  const auto px = c.correlate(x).bins, py = c.correlate(y).bins, pz = c.correlate(z).bins;
  double worst = 0;
  for (std::size_t i = 0; i < pz.size(); ++i) {
    worst = std::max(worst, std::abs(pz[i] - (a * px[i] + b * py[i])));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("two scatterers keep their amplitude ratio") {
  const ComplexSequence& ref = test::default_reference();
  const ComplexVector s1 = shifted(ref, 400), s2 = shifted(ref, 1500);
  ComplexVector rx(ref.size());
  for (std::size_t i = 0; i < rx.size(); ++i) rx[i] = 1.0 * s1[i] + Complex(0, 0.3) * s2[i];
  const auto bins = test::default_correlator().correlate(rx).bins;
  CHECK(std::abs(bins[1500]) / std::abs(bins[400]) == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("length mismatch") {
  ComplexVector rx(100);
  CHECK_THROWS_AS(test::default_correlator().correlate(rx), std::invalid_argument);
}

}
