#include <doctest.h>

#include <cmath>

#include <Eigen/LU>

#include "rslam/errors.hpp"
#include "rslam/geometry.hpp"
#include "rslam/rng.hpp"
#include "rslam/sim.hpp"

using namespace rslam;

namespace {

constexpr double c = kSpeedOfLight;

bool near(const Vec2& a, const Vec2& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

PathMeasurement as_measurement(const ChannelParams& p) {
  return PathMeasurement(p.toa, p.aod, p.aoa, 1.0);
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(2 * kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-0.5) == doctest::Approx(-0.5));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50, 50);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::remainder(a - w, 2 * kPi)) < 1e-9);
  }
}

TEST_CASE("rotation") {
  CHECK(rotation(0.0).isApprox(Mat2::Identity()));
  CHECK(near(rotation(kPi / 2) * Vec2(1, 0), Vec2(0, 1), 1e-15));
  CHECK(near(rotation(0.7) * rotation(-0.7) * Vec2(1, 0), Vec2(1, 0), 1e-15));
  CHECK(near(rotation(0.7) * rotation(-0.7) * Vec2(0, 1), Vec2(0, 1), 1e-15));
  CHECK(rotation(1.3).determinant() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unit_vectors") {
  const auto [u1, v1] = unit_vectors(kPi / 4, 0.3, 0.0, 0.0);
  CHECK(near(u1, Vec2(std::sqrt(0.5), std::sqrt(0.5)), 1e-15));
  CHECK(v1.norm() == doctest::Approx(1.0));

  const auto [u2, v2] = unit_vectors(0.0, 0.0, kPi / 2, kPi);
  CHECK(near(u2, Vec2(0, 1), 1e-15));
  CHECK(near(v2, Vec2(-1, 0), 1e-15));

  const UeState ue(Vec2(10, 0), kPi, 0.0);
  const Pose bs(Vec2(0, 0), 0.0);
  const ChannelParams los = measurement_model(ue, bs);
  CHECK(los.aod == doctest::Approx(0.0));
  CHECK(los.aoa == doctest::Approx(0.0));
  const auto [u0, v0] = unit_vectors(los.aod, los.aoa, bs.orientation, ue.orientation);
  CHECK(near(u0, Vec2(1, 0), 1e-15));
  CHECK(near(v0, -u0, 1e-12));
}

TEST_CASE("measurement_model hand geometry") {
  const Pose bs(Vec2(0, 0), 0.0);
  const UeState ue(Vec2(10, 0), kPi, 0.0);

  const ChannelParams los = measurement_model(ue, bs);
  CHECK(los.toa == doctest::Approx(10.0 / c).epsilon(1e-15));
  CHECK(los.aod == doctest::Approx(0.0));
  CHECK(std::abs(los.aoa) < 1e-15);

  const ChannelParams nlos = measurement_model(ue, bs, Vec2(5, 5));
  CHECK(nlos.toa == doctest::Approx(2 * std::sqrt(50.0) / c).epsilon(1e-15));
  CHECK(nlos.aod == doctest::Approx(kPi / 4));
  // The UE faces -x, so the landmark at +y behind it appears at -pi/4.
  CHECK(nlos.aoa == doctest::Approx(-kPi / 4));

  const UeState biased(ue.position, ue.orientation, 5e-9);
  const ChannelParams shifted = measurement_model(biased, bs, Vec2(5, 5));
  CHECK(shifted.toa - nlos.toa == doctest::Approx(5e-9).epsilon(1e-9));
  CHECK(shifted.aod == nlos.aod);
  CHECK(shifted.aoa == nlos.aoa);

  CHECK_THROWS_AS(measurement_model(UeState(Vec2(0, 0), 0, 0), bs), DegenerateGeometry);
  CHECK_THROWS_AS(measurement_model(ue, bs, Vec2(0, 0)), DegenerateGeometry);
  CHECK_THROWS_AS(measurement_model(ue, bs, Vec2(10, 0)), DegenerateGeometry);
}

TEST_CASE("measurement_model outputs are wrapped and 2pi invariant") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Pose bs(Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5)), rng.uniform(-kPi, kPi));
    const UeState ue(Vec2(rng.uniform(-20, 20), rng.uniform(-20, 20)), rng.uniform(-kPi, kPi),
                     rng.uniform(-1e-7, 1e-7));
    const Vec2 lm(rng.uniform(-20, 20), rng.uniform(-20, 20));
    const ChannelParams p = measurement_model(ue, bs, lm);
    CHECK(p.aod > -kPi);
    CHECK(p.aod <= kPi);
    CHECK(p.aoa > -kPi);
    CHECK(p.aoa <= kPi);

    Pose bs2 = bs;
    bs2.orientation += 2 * kPi;
    UeState ue2 = ue;
    ue2.orientation -= 2 * kPi;
    const ChannelParams q = measurement_model(ue2, bs2, lm);
    CHECK(std::abs(std::remainder(p.aod - q.aod, 2 * kPi)) < 1e-12);
    CHECK(std::abs(std::remainder(p.aoa - q.aoa, 2 * kPi)) < 1e-12);
  }
}

TEST_CASE("LoS rays are antiparallel") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Pose bs(Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5)), rng.uniform(-kPi, kPi));
    const UeState ue(Vec2(rng.uniform(-20, 20), rng.uniform(-20, 20)), rng.uniform(-kPi, kPi), 0);
    const ChannelParams p = measurement_model(ue, bs);
    const auto [u, v] = unit_vectors(p.aod, p.aoa, bs.orientation, ue.orientation);
    CHECK(near(v, -u, 1e-12));
  }
}

TEST_CASE("single-bounce relation reproduces the UE position") {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const Pose bs(Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5)), rng.uniform(-kPi, kPi));
    const UeState ue(Vec2(rng.uniform(-20, 20), rng.uniform(-20, 20)), rng.uniform(-kPi, kPi),
                     rng.uniform(-1e-7, 1e-7));
    const Vec2 lm(rng.uniform(-20, 20), rng.uniform(-20, 20));
    if ((lm - bs.position).norm() < 0.5 || (lm - ue.position).norm() < 0.5) continue;
    const ChannelParams p = measurement_model(ue, bs, lm);
    const auto [u, v] = unit_vectors(p.aod, p.aoa, bs.orientation, ue.orientation);
    const double d = c * (p.toa - ue.clock_bias);
    const double gamma = (lm - bs.position).norm() / d;
    const Vec2 rebuilt = bs.position + d * gamma * u - d * (1 - gamma) * v;
    CHECK((rebuilt - ue.position).norm() <= 1e-9);
  }
}

TEST_CASE("mirror_point") {
  const Segment x_axis{Vec2(-1, 0), Vec2(1, 0)};
  CHECK(near(mirror_point(Vec2(1, 1), x_axis), Vec2(1, -1), 1e-15));
  const Segment vertical{Vec2(1, -3), Vec2(1, 7)};
  CHECK(near(mirror_point(Vec2(0, 2), vertical), Vec2(2, 2), 1e-15));
  CHECK_THROWS_AS(mirror_point(Vec2(0, 0), Segment{Vec2(1, 1), Vec2(1, 1)}), DegenerateGeometry);

  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const Segment w{Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5)),
                    Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5))};
    if ((w.a - w.b).norm() < 1e-3) continue;
    const Vec2 p(rng.uniform(-10, 10), rng.uniform(-10, 10));
    const Vec2 m = mirror_point(p, w);
    CHECK(near(mirror_point(m, w), p, 1e-12));
    const Vec2 on_line = w.a + rng.uniform(-2, 2) * (w.b - w.a);
    CHECK(std::abs((p - on_line).norm() - (m - on_line).norm()) <= 1e-12 * (1 + p.norm()));
  }
  CHECK(near(mirror_point(mirror_point(Vec2(3, -2), x_axis), x_axis), Vec2(3, -2), 1e-15));
}

TEST_CASE("gamma_of") {
  const Pose bs(Vec2(0, 0), 0.0);
  const UeState ue(Vec2(10, 0), kPi, 2e-9);

  const PathMeasurement sym = as_measurement(measurement_model(ue, bs, Vec2(5, 5)));
  CHECK(gamma_of(ue, sym, bs) == doctest::Approx(0.5).epsilon(1e-12));

  const Vec2 lm(2, 4);
  const PathMeasurement asym = as_measurement(measurement_model(ue, bs, lm));
  const double expected = lm.norm() / (lm.norm() + (Vec2(10, 0) - lm).norm());
  CHECK(gamma_of(ue, asym, bs) == doctest::Approx(expected).epsilon(1e-12));

  const PathMeasurement los = as_measurement(measurement_model(ue, bs));
  CHECK_THROWS_AS(gamma_of(ue, los, bs), NearParallel);

  const UeState late(ue.position, ue.orientation, sym.toa + 1e-9);
  CHECK_THROWS_AS(gamma_of(late, sym, bs), DegenerateGeometry);
}

TEST_CASE("traced single bounces satisfy the forward model") {
  Scene scene;
  scene.bs = Pose(Vec2(0, 0), 0.4);
  scene.walls = {{{Vec2(-10, -6), Vec2(10, -6)}, 3.0},
                 {{Vec2(10, -6), Vec2(10, 6)}, 3.0},
                 {{Vec2(10, 6), Vec2(-10, 6)}, 3.0},
                 {{Vec2(-10, 6), Vec2(-10, -6)}, 3.0}};
  const UeState ue(Vec2(6, 2), -1.1, 30e-9);
  const auto paths = trace_paths(scene, ue, 1);
  REQUIRE(paths.size() == 5);
  for (const TruePath& p : paths) {
    if (p.kind != PathKind::kSingleBounce) continue;
    const ChannelParams h = measurement_model(ue, scene.bs, p.incidence_points.front());
    CHECK(std::abs(h.toa - p.params.toa) * c <= 1e-9);
    CHECK(std::abs(wrap_angle(h.aod - p.params.aod)) <= 1e-12);
    CHECK(std::abs(wrap_angle(h.aoa - p.params.aoa)) <= 1e-12);
  }
}
