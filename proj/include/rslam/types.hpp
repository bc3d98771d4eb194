#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rslam {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using IndexSet = std::vector<std::size_t>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact SI value
inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Known anchor pose (the BS). Orientation is wrapped on construction.
struct Pose {
  Vec2 position = Vec2::Zero();
  double orientation = 0.0;

  Pose() = default;
  Pose(const Vec2& p, double alpha) : position(p), orientation(wrap_angle(alpha)) {}
};

/// Receiver state: position, heading and clock bias (seconds).
struct UeState {
  Vec2 position = Vec2::Zero();
  double orientation = 0.0;
  double clock_bias = 0.0;

  UeState() = default;
  UeState(const Vec2& p, double alpha, double bias)
      : position(p), orientation(wrap_angle(alpha)), clock_bias(bias) {}
};

/// Channel parameters of one resolved propagation path.
///   toa  - biased time of arrival [s]
///   aod  - departure angle in the BS frame [rad]
///   aoa  - arrival angle in the UE frame [rad]
///   gain - linear path power |xi|^2
struct PathMeasurement {
  double toa = 0.0;
  double aod = 0.0;
  double aoa = 0.0;
  double gain = 1.0;

  PathMeasurement() = default;
  PathMeasurement(double toa_s, double aod_rad, double aoa_rad, double g)
      : toa(toa_s), aod(wrap_angle(aod_rad)), aoa(wrap_angle(aoa_rad)), gain(g) {}
};

/// Diagonal measurement noise (per-path covariance diag(s_toa^2, s_aod^2, s_aoa^2)).
struct NoiseModel {
  double sigma_toa = 1e-9;
  double sigma_aod = deg2rad(1.0);
  double sigma_aoa = deg2rad(1.0);
};

enum class Hypothesis { kLoS, kNLoS };

const char* to_string(Hypothesis h);

enum class PathLabel { kLoS, kSingle, kMulti };

const char* to_string(PathLabel label);

struct SnapshotTruth {
  UeState ue;
  std::vector<PathLabel> labels;
  std::vector<std::optional<Vec2>> incidence;

  bool has_los() const;
};

/// One BS anchor plus the measured path set at a single UE position.
struct Snapshot {
  std::string id;
  Pose bs;
  std::vector<PathMeasurement> paths;
  std::optional<SnapshotTruth> truth;
};

}  // namespace rslam
