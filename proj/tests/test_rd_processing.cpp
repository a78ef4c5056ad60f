#include "doctest.h"

#include <numbers>
#include <random>

#include "isac/rd_processing.hpp"
#include "support.hpp"

using namespace isac;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProfileMatrix random_profiles(std::size_t pulses, std::size_t bins, std::uint64_t seed) {
  ProfileMatrix m(pulses, bins);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (std::size_t p = 0; p < pulses; ++p) {
    for (auto& x : m.row(p)) x = Complex(g(rng), g(rng));
  }
  return m;
}

DerivedParams small_params() {
  SystemConfig c;
  c.sequence_length = 200;  // not a multiple of the Doppler tile width
  c.cpi_pulses = 64;
  return derive(c);
}

}  // namespace

TEST_SUITE("rd_processing") {

TEST_CASE("identical profiles: clutter equals the profile") {
  ProfileMatrix m = random_profiles(1, 300, 1);
  ProfileMatrix same(512, 300);
  for (std::size_t p = 0; p < 512; ++p) {
    std::copy(m.row(0).begin(), m.row(0).end(), same.row(p).begin());
  }
  const ComplexVector c = estimate_clutter(same);
  for (std::size_t r = 0; r < 300; ++r) CHECK(std::abs(c[r] - m(0, r)) < 1e-12);
}

TEST_CASE("full-period tone averages out of the clutter") {
  ProfileMatrix m(512, 50);
  for (std::size_t p = 0; p < 512; ++p) {
    for (std::size_t r = 0; r < 50; ++r) {
      const Complex c(r * 0.1, -1.0), s(0.5, r * 0.02);
      m(p, r) = c + std::polar(1.0, kTwoPi * 7 * p / 512.0) * s;
    }
  }
  const ComplexVector c = estimate_clutter(m);
  for (std::size_t r = 0; r < 50; ++r) CHECK(std::abs(c[r] - Complex(r * 0.1, -1.0)) < 1e-12);
}

TEST_CASE("clutter matches a brute-force column mean") {
  const ProfileMatrix m = random_profiles(512, 333, 9);
  const ComplexVector c = estimate_clutter(m);
  for (std::size_t r = 0; r < 333; ++r) {
    long double re = 0, im = 0;
    for (std::size_t p = 0; p < 512; ++p) {
      re += m(p, r).real();
      im += m(p, r).imag();
    }
    CHECK(std::abs(c[r] - Complex(static_cast<double>(re / 512), static_cast<double>(im / 512))) < 1e-12);
  }
}

TEST_CASE("periodic Hann") {
  const auto w = periodic_hann(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(w[7]));
}

TEST_CASE("static scatterer is nulled at zero Doppler") {
  const ProfileMatrix m = test::cpi_profiles({{133 * test::default_params().range_bin, 0.0, 1.0}});
  const RangeDopplerMap map = range_doppler_map(m, test::default_params());
  CHECK(map.at(map.zero_doppler_row(), 133) <= -100.0f);
  for (std::size_t r = 0; r < map.rows; ++r) CHECK(map.at(r, 133) <= -100.0f);
}

TEST_CASE("1 m/s at 5 m peaks at range bin 133, Doppler row 256 + 112") {
  const DerivedParams& p = test::default_params();
  // Bin arithmetic: 5 / 0.0374741 = 133.4 -> 133; 1.0 / 0.00893451 = 111.9 -> 112.
  CHECK(std::lround(5.0 / p.range_bin) == 133);
  CHECK(std::lround(1.0 / p.velocity_bin) == 112);
  const RangeDopplerMap map = range_doppler_map(test::cpi_profiles({{5.0, 1.0, 1.0}}), p);
  const test::Peak pk = test::map_peak(map);
  CHECK(pk.col == 133);
  CHECK(pk.row == 368);
  CHECK(map.velocity_of_row(pk.row) == doctest::Approx(112 * p.velocity_bin));
}

TEST_CASE("on-grid tone reads 0 dB, exactly 10 bins up") {
  // Pure slow-time tone placed directly into the profiles. A receding target's
  // carrier phase -4 pi r / lambda decreases from pulse to pulse.
  const DerivedParams p = small_params();
  ProfileMatrix m(p.cpi_pulses(), p.sequence_length());
  for (std::size_t k = 0; k < p.cpi_pulses(); ++k) {
    m(k, 40) = std::polar(1.0, -kTwoPi * 10.0 * k / p.cpi_pulses());
  }
  const RangeDopplerMap map = range_doppler_map(m, p);
  const test::Peak pk = test::map_peak(map);
  CHECK(pk.col == 40);
  CHECK(pk.row == map.zero_doppler_row() + 10);
  CHECK(std::abs(pk.db) <= 0.1f);
}

TEST_CASE("synthesized mover at 10 velocity bins") {
  const DerivedParams& p = test::default_params();
  const RangeDopplerMap map =
      range_doppler_map(test::cpi_profiles({{107 * p.range_bin, 10.0 * p.velocity_bin, 1.0}}), p);
  const test::Peak pk = test::map_peak(map);
  CHECK(pk.row == 266);
  CHECK(pk.col == 107);
  CHECK(std::abs(pk.db) <= 0.1f);
}

TEST_CASE("conjugate scene mirrors the Doppler axis") {
  const DerivedParams p = small_params();
  ProfileMatrix a = random_profiles(p.cpi_pulses(), p.sequence_length(), 4);
  ProfileMatrix b(p.cpi_pulses(), p.sequence_length());
  for (std::size_t k = 0; k < p.cpi_pulses(); ++k) {
    for (std::size_t r = 0; r < p.sequence_length(); ++r) b(k, r) = std::conj(a(k, r));
  }
  const RangeDopplerMap ma = range_doppler_map(a, p), mb = range_doppler_map(b, p);
  const std::size_t rows = ma.rows;
  for (std::size_t row = 1; row < rows; ++row) {
    for (std::size_t col = 0; col < ma.cols; ++col) {
      REQUIRE(std::abs(ma.at(row, col) - mb.at(rows - row, col)) < 1e-3f);
    }
  }
}

TEST_CASE("two movers superpose") {
  const test::Mover m1{3.0, 0.8, 1.0}, m2{8.0, -1.5, 0.5};
  const DerivedParams& p = test::default_params();
  const auto solo1 = test::map_peak(range_doppler_map(test::cpi_profiles({m1}), p));
  const auto solo2 = test::map_peak(range_doppler_map(test::cpi_profiles({m2}), p));
  const RangeDopplerMap both = range_doppler_map(test::cpi_profiles({m1, m2}), p);
  CHECK(std::abs(both.at(solo1.row, solo1.col) - solo1.db) < 0.2f);
  CHECK(std::abs(both.at(solo2.row, solo2.col) - solo2.db) < 0.2f);
}

TEST_CASE("map shape, axes and floor") {
  const DerivedParams p = small_params();
  const RangeDopplerMap map = range_doppler_map(random_profiles(64, 200, 2), p);
  CHECK(map.rows == 64);
  CHECK(map.cols == 200);
  CHECK(map.velocity_of_row(0) == doctest::Approx(-p.max_unambiguous_velocity));
  CHECK(map.velocity_of_row(63) < p.max_unambiguous_velocity);
  for (float v : map.power_db) REQUIRE((std::isfinite(v) && v >= kMapFloorDb));
  ProfileMatrix zero(64, 200);
  for (float v : range_doppler_map(zero, p).power_db) REQUIRE(v == kMapFloorDb);
}

TEST_CASE("shape mismatch") {
  CHECK_THROWS_AS(range_doppler_map(ProfileMatrix(10, 8192), test::default_params()),
                  std::invalid_argument);
}

TEST_CASE("dB kernel") {
  std::vector<float> v = {1.0f, 100.0f, 0.0f, 1e-20f};
  power_to_db(v, -3.0f, -120.0f);
  CHECK(v[0] == doctest::Approx(-3.0f).epsilon(1e-5));
  CHECK(v[1] == doctest::Approx(17.0f).epsilon(1e-5));
  CHECK(v[2] == -120.0f);
  CHECK(v[3] == -120.0f);
}

}
