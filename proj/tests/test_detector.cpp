#include <doctest.h>

#include <cmath>
#include <limits>

#include "rslam/detector.hpp"
#include "rslam/errors.hpp"
#include "support/scenes.hpp"

using namespace rslam;
using namespace rslam::testing;

TEST_CASE("path_loss_mean") {
  const PathLossModel m;
  CHECK(path_loss_mean(1.0, m) == doctest::Approx(13.0));
  CHECK(path_loss_mean(10.0, m) == doctest::Approx(30.0));
  CHECK(path_loss_mean(100.0, m) == doctest::Approx(47.0));
  CHECK_THROWS_AS(path_loss_mean(0.0, m), DegenerateGeometry);
  CHECK_THROWS_AS(path_loss_mean(-1.0, m), DegenerateGeometry);
}

TEST_CASE("los_statistic and los_test") {
  const PathLossModel m;
  const Pose bs(Vec2(1, 1), 0.2);
  const Vec2 p(7, 9);
  const double f = path_loss_mean((p - bs.position).norm(), m);

  const double base = 0.5 * std::log(2 * kPi * 1.8 * 1.8);
  CHECK(base == doctest::Approx(1.507).epsilon(1e-3));
  CHECK(los_statistic(f, (p - bs.position).norm(), m) == doctest::Approx(base));
  const DetectionResult exact = los_test(f, p, bs, m, kDefaultLosThreshold, 4);
  CHECK(exact.decided == Hypothesis::kLoS);
  CHECK(exact.candidate == 4);
  CHECK(exact.threshold == kDefaultLosThreshold);

  const DetectionResult far = los_test(f + 10 * 1.8, p, bs, m, kDefaultLosThreshold);
  CHECK(far.statistic == doctest::Approx(base + 50.0));
  CHECK(far.statistic == doctest::Approx(51.5).epsilon(1e-3));
  CHECK(far.decided == Hypothesis::kNLoS);

  const double minus_inf = -std::numeric_limits<double>::infinity();
  CHECK(los_test(f, p, bs, m, minus_inf).decided == Hypothesis::kNLoS);

  // statistic == threshold decides LoS.
  const DetectionResult at = los_test(f + 1.8, p, bs, m, kDefaultLosThreshold);
  CHECK(los_test(f + 1.8, p, bs, m, at.statistic).decided == Hypothesis::kLoS);
  CHECK(los_test(f + 1.8, p, bs, m, std::nextafter(at.statistic, 0.0)).decided ==
        Hypothesis::kNLoS);
}

TEST_CASE("mixed_solve on LoS scenes matches the LoS-only solve") {
  int accepted = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    TestScene t = random_room_scene(rng, 1);
    const Snapshot s = snapshot_from("s", t, t.paths, zero_noise(), rng);
    const RobustConfig cfg;
    const MixedResult mixed = mixed_solve(s, cfg, PathLossModel{});
    CHECK(mixed.detection.candidate == 0);
    if (mixed.detection.decided != Hypothesis::kLoS) continue;
    ++accepted;
    const SlamSolution h0 = robust_solve(s, Hypothesis::kLoS, cfg);
    CHECK(mixed.solution.ue.position == h0.ue.position);
    CHECK(mixed.solution.ue.orientation == h0.ue.orientation);
    CHECK(mixed.solution.ue.clock_bias == h0.ue.clock_bias);
    CHECK(mixed.solution.inliers == h0.inliers);
    CHECK(mixed.solution.cost == h0.cost);
  }
  // The gain draw is N(0, 1.8 dB); a rejection here would be a 4.3 sigma event.
  CHECK(accepted == 20);
}

TEST_CASE("mixed_solve falls back to NLoS without the LoS path") {
  Scene scene;
  scene.bs = Pose(Vec2(0, 0), 0.0);
  scene.walls = room_walls(Room{Vec2(3, 1), 9.0, 7.0, 0.2}, 10.0);
  const UeState ue(Vec2(6, 3), 1.1, 20e-9);
  TestScene t{scene, ue, trace_paths(scene, ue, 1)};
  Rng rng(7);
  const Snapshot s =
      snapshot_from("s", t, paths_of_kind(t.paths, {PathKind::kSingleBounce}), zero_noise(), rng);
  REQUIRE(s.paths.size() == 4);
  const MixedResult mixed = mixed_solve(s, RobustConfig{}, PathLossModel{});
  CHECK(mixed.detection.decided == Hypothesis::kNLoS);
  CHECK(mixed.solution.hypothesis == Hypothesis::kNLoS);
  CHECK(mixed.detection.statistic > kDefaultLosThreshold);
}

TEST_CASE("mixed_solve with too few paths for either hypothesis") {
  Scene scene;
  scene.bs = Pose(Vec2(0, 0), 0.0);
  scene.walls = room_walls(Room{Vec2(3, 1), 9.0, 7.0, 0.2}, 10.0);
  const UeState ue(Vec2(6, 3), 1.1, 20e-9);
  TestScene t{scene, ue, trace_paths(scene, ue, 1)};
  Rng rng(8);
  auto singles = paths_of_kind(t.paths, {PathKind::kSingleBounce});
  singles.resize(3);
  const Snapshot s = snapshot_from("s", t, singles, zero_noise(), rng);
  CHECK_THROWS_AS(mixed_solve(s, RobustConfig{}, PathLossModel{}), NoFeasibleSolution);

  const Snapshot one = snapshot_from("s", t, {singles[0]}, zero_noise(), rng);
  CHECK_THROWS_AS(mixed_solve(one, RobustConfig{}, PathLossModel{}), NoFeasibleSolution);
}
