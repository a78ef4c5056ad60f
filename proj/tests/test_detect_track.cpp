#include "doctest.h"

#include <random>

#include <Eigen/Eigenvalues>

#include "isac/detect_track.hpp"
#include "support.hpp"

using namespace isac;

namespace {

DetectionScope scope_for(std::size_t lo, std::size_t hi, std::size_t guard = 1) {
  return DetectionScope{lo, hi, guard};
}

Detection measurement(double r, double v) {
  Detection d;
  d.range = r;
  d.velocity = v;
  d.power_db = 30;
  return d;
}

bool spd(const Eigen::Matrix2d& m) {
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * m.norm()) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

TEST_SUITE("detect_track") {

TEST_CASE("scope from metres") {
  const DerivedParams& p = test::default_params();
  const DetectionScope s = make_scope(p, 1.0, 10.0, 1);
  CHECK(s.min_range_bin == 26);   // floor(1 / 0.0374741)
  CHECK(s.max_range_bin == 268);  // ceil(10 / 0.0374741) + 1, exclusive
  CHECK_THROWS_AS(make_scope(p, 5.0, 2.0, 1), ConfigError);
  CHECK_THROWS_AS(make_scope(p, 1.0, 10.0, 0), ConfigError);
}

TEST_CASE("single off-guard peak") {
  RangeDopplerMap m = test::floor_map();
  m.at(368, 133) = -3.0f;
  const Detection d = scope_max(m, scope_for(26, 268));
  CHECK(d.range_bin == 133);
  CHECK(d.doppler_bin == 368);
  CHECK(d.range == doctest::Approx(133 * m.range_bin));
  CHECK(d.velocity == doctest::Approx(112 * m.velocity_bin));
  CHECK(d.power_db == -3.0f);
}

TEST_CASE("all-floor map falls to the tie-break corner") {
  const RangeDopplerMap m = test::floor_map();
  const Detection d = scope_max(m, scope_for(26, 268, 3));
  CHECK(d.range_bin == 26);
  CHECK(d.doppler_bin == 0);
  CHECK(d.power_db == kMapFloorDb);
}

TEST_CASE("ties prefer lower range, then lower Doppler") {
  RangeDopplerMap m = test::floor_map();
  m.at(400, 100) = 5.0f;
  m.at(300, 100) = 5.0f;
  m.at(10, 150) = 5.0f;
  const Detection d = scope_max(m, scope_for(26, 268));
  CHECK(d.range_bin == 100);
  CHECK(d.doppler_bin == 300);
}

TEST_CASE("guard band peak is skipped") {
  RangeDopplerMap m = test::floor_map();
  m.at(257, 120) = 10.0f;  // inside guard 1
  m.at(300, 90) = 0.0f;
  const Detection d = scope_max(m, scope_for(26, 268, 1));
  CHECK(d.range_bin == 90);
  CHECK(d.doppler_bin == 300);
}

TEST_CASE("argmax invariant under a dB offset") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-60.0f, 0.0f);
  RangeDopplerMap m = test::floor_map(64, 300);
  for (auto& v : m.power_db) v = u(rng);
  const Detection a = scope_max(m, scope_for(10, 290));
  for (auto& v : m.power_db) v += 17.25f;
  const Detection b = scope_max(m, scope_for(10, 290));
  CHECK(a.range_bin == b.range_bin);
  CHECK(a.doppler_bin == b.doppler_bin);
}

TEST_CASE("invalid scope") {
  const RangeDopplerMap m = test::floor_map(64, 300);
  CHECK_THROWS_AS(scope_max(m, scope_for(50, 50)), std::invalid_argument);
  CHECK_THROWS_AS(scope_max(m, scope_for(0, 301)), std::invalid_argument);
  CHECK_THROWS_AS(scope_max(m, scope_for(0, 100, 32)), std::invalid_argument);
}

TEST_CASE("hysteresis trace") {
  HysteresisState s;  // 15 / 10
  s = hysteresis_step(s, 12);
  CHECK_FALSE(s.active);
  s = hysteresis_step(s, 16);
  CHECK(s.active);
  s = hysteresis_step(s, 12);
  CHECK(s.active);
  s = hysteresis_step(s, 9);
  CHECK_FALSE(s.active);
  s = hysteresis_step(s, 15.0);  // strict
  CHECK_FALSE(s.active);
  s.active = true;
  s = hysteresis_step(s, 10.0);
  CHECK(s.active);
}

TEST_CASE("hysteresis toggles at most once and is memoryless") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 25);
  for (int i = 0; i < 1000; ++i) {
    HysteresisState s;
    s.active = rng() & 1;
    const double x = u(rng);
    const HysteresisState a = hysteresis_step(s, x), b = hysteresis_step(s, x);
    CHECK(a.active == b.active);
    const bool expected = s.active ? !(x < 10.0) : x > 15.0;
    CHECK(a.active == expected);
  }
}

TEST_CASE("constant-velocity prediction") {
  TargetTrack t;
  t.state = Eigen::Vector2d(5, 1);
  const TargetTrack p = kalman_predict(t, 0.1048576, 1.0);
  CHECK(p.state(0) == doctest::Approx(5.1048576).epsilon(1e-14));
  CHECK(p.state(1) == 1.0);
}

TEST_CASE("no noise, no growth") {
  TargetTrack t;
  t.covariance.setZero();
  CHECK(kalman_predict(t, 0.3, 0.0).covariance.isZero(0.0));
}

TEST_CASE("covariance prediction by hand") {
  TargetTrack t;
  const TargetTrack p = kalman_predict(t, 0.1, 1.0);
  Eigen::Matrix2d expected;
  expected << 1.010025, 0.1005, 0.1005, 1.01;
  CHECK((p.covariance - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero innovation keeps the state and shrinks the covariance") {
  TargetTrack t;
  t.state = Eigen::Vector2d(3, -0.2);
  t.covariance << 0.04, 0.001, 0.001, 0.01;
  Eigen::Matrix2d R;
  R << 0.002, 0, 0, 0.003;
  const TargetTrack u = kalman_update(t, measurement(3, -0.2), R);
  CHECK((u.state - t.state).norm() < 1e-15);
  CHECK(u.covariance.trace() < t.covariance.trace());
}

TEST_CASE("an uninformative measurement changes nothing") {
  TargetTrack t;
  t.state = Eigen::Vector2d(3, -0.2);
  t.covariance << 0.04, 0.001, 0.001, 0.01;
  const TargetTrack u = kalman_update(t, measurement(7, 1.5), 1e12 * Eigen::Matrix2d::Identity());
  CHECK((u.state - t.state).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((u.covariance - t.covariance).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rejects non-positive-definite inputs") {
  TargetTrack t;
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(kalman_update(t, measurement(0, 0), bad), std::invalid_argument);
  t.covariance = bad;
  CHECK_THROWS_AS(kalman_update(t, measurement(0, 0), Eigen::Matrix2d::Identity()),
                  std::invalid_argument);
}

TEST_CASE("bin-quantized constant-velocity target over 20 frames") {
  const DerivedParams& p = test::default_params();
  const KalmanSettings ks;
  HysteresisState active;
  active.active = true;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> start(3.0, 8.0), speed(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    const double r0 = start(rng), v = speed(rng);
    std::optional<TargetTrack> track;
    double r = r0;
    for (std::size_t k = 0; k < 20; ++k) {
      r = r0 + v * p.cpi * static_cast<double>(k);
      const Detection z = measurement(std::round(r / p.range_bin) * p.range_bin,
                                      std::round(v / p.velocity_bin) * p.velocity_bin);
      track = track_lifecycle(track, active, z, p.cpi, k, p.cpi * k, p, ks);
    }
    REQUIRE(track);
    CHECK(std::abs(track->state(0) - r) < p.range_bin);
    CHECK(std::abs(track->state(1) - v) < 2 * p.velocity_bin);
  }
}

TEST_CASE("covariance stays symmetric positive definite") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dt(0.01, 0.5), z(-5, 5), sig(1e-4, 1.0);
  TargetTrack t;
  for (int i = 0; i < 10000; ++i) {
    t = kalman_predict(t, dt(rng), sig(rng));
    REQUIRE(spd(t.covariance));
    Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
    R(0, 0) = sig(rng) * sig(rng);
    R(1, 1) = sig(rng) * sig(rng);
    t = kalman_update(t, measurement(z(rng), z(rng)), R);
    REQUIRE(spd(t.covariance));
  }
}

TEST_CASE("lifecycle: start, follow, drop") {
  const DerivedParams& p = test::default_params();
  const KalmanSettings ks;
  HysteresisState on;
  on.active = true;
  auto t = track_lifecycle(std::nullopt, on, measurement(5.0, 0.5), p.cpi, 0, 0.05, p, ks);
  REQUIRE(t);
  CHECK(t->state(0) == 5.0);
  CHECK(t->covariance(0, 0) == doctest::Approx(std::pow(10 * p.range_bin, 2)));
  CHECK(t->covariance(1, 1) == doctest::Approx(std::pow(10 * p.velocity_bin, 2)));
  CHECK(t->history.size() == 1);
  t = track_lifecycle(t, on, measurement(5.0 + 0.5 * p.cpi, 0.5), p.cpi, 1, 0.15, p, ks);
  REQUIRE(t);
  CHECK(t->history.size() == 2);
  CHECK(t->last_update_frame == 1);
  HysteresisState off;
  CHECK_FALSE(track_lifecycle(t, off, measurement(5, 0.5), p.cpi, 2, 0.25, p, ks));
}

TEST_CASE("gate: coast on outliers, restart after the coast limit") {
  const DerivedParams& p = test::default_params();
  KalmanSettings ks;
  HysteresisState on;
  on.active = true;
  std::optional<TargetTrack> t;
  for (std::size_t k = 0; k < 10; ++k) {
    t = track_lifecycle(t, on, measurement(5.0, 0.0), p.cpi, k, k * p.cpi, p, ks);
  }
  const Detection outlier = measurement(8.0, 1.2);
  CHECK(normalized_innovation(kalman_predict(*t, p.cpi, ks.accel_sigma), outlier,
                              measurement_covariance(p, ks)) > ks.gate_nis);
  for (std::size_t k = 10; k < 13; ++k) {
    t = track_lifecycle(t, on, outlier, p.cpi, k, k * p.cpi, p, ks);
    CHECK(t->state(0) == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(t->consecutive_misses == k - 9);
  }
  t = track_lifecycle(t, on, outlier, p.cpi, 13, 13 * p.cpi, p, ks);
  CHECK(t->state(0) == 8.0);
  CHECK(t->consecutive_misses == 0);
  CHECK(t->history.size() > 1);  // kept for drift
}

TEST_CASE("gate: weaker in-gate cell replaces an out-of-gate maximum") {
  const DerivedParams& p = test::default_params();
  const KalmanSettings ks;
  HysteresisState on;
  on.active = true;
  std::optional<TargetTrack> t;
  for (std::size_t k = 0; k < 10; ++k) {
    t = track_lifecycle(t, on, measurement(133 * p.range_bin, 0.0), p.cpi, k, k * p.cpi, p, ks);
  }
  RangeDopplerMap m = test::floor_map();
  m.at(380, 200) = 10.0f;  // far away, strongest
  m.at(262, 133) = -5.0f;  // near the prediction
  m.at(263, 134) = -30.0f;
  const DetectionScope scope = scope_for(26, 268);
  const Detection global = scope_max(m, scope);
  CHECK(global.range_bin == 200);
  const auto predicted = kalman_predict(*t, p.cpi, ks.accel_sigma);
  const auto in_gate = gated_scope_max(m, scope, predicted, measurement_covariance(p, ks), ks.gate_nis);
  REQUIRE(in_gate);
  CHECK(in_gate->range_bin == 133);
  CHECK(in_gate->doppler_bin == 262);

  const GatedSearch search{&m, scope, -10.0};
  const auto next = track_lifecycle(t, on, global, p.cpi, 10, 10 * p.cpi, p, ks, &search);
  CHECK(next->consecutive_misses == 0);
  CHECK(next->last_update_frame == 10);
  const GatedSearch strict{&m, scope, 0.0};  // in-gate cell too weak to count
  const auto coasted = track_lifecycle(t, on, global, p.cpi, 10, 10 * p.cpi, p, ks, &strict);
  CHECK(coasted->consecutive_misses == 1);
}

}
