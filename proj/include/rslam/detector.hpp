#pragma once

#include <span>

#include "rslam/robust.hpp"
#include "rslam/types.hpp"

namespace rslam {

/// Log-distance model of the LoS path power in dB.
struct PathLossModel {
  double l0_db = 13.0;
  double zeta = 1.7;
  double sigma_db = 1.8;
};

inline constexpr double kDefaultLosThreshold = 10.8;

/// L0 + 10 zeta log10(distance). Throws DegenerateGeometry for distance <= 0.
double path_loss_mean(double distance, const PathLossModel& model);

/// Negative log-likelihood of `gain_db` under the model at `distance`.
double los_statistic(double gain_db, double distance, const PathLossModel& model);

struct DetectionResult {
  Hypothesis decided = Hypothesis::kNLoS;
  double statistic = 0.0;  // nats
  double threshold = kDefaultLosThreshold;
  std::size_t candidate = 0;
};

/// LoS is accepted iff statistic <= threshold.
DetectionResult los_test(double gain_db, const Vec2& estimated_position, const Pose& bs,
                         const PathLossModel& model, double threshold,
                         std::size_t candidate = 0);

struct MixedResult {
  SlamSolution solution;
  DetectionResult detection;
};

/// Solve assuming LoS on the earliest path, validate with the path-loss test
/// and fall back to the NLoS solve when the test rejects it.
MixedResult mixed_solve(std::span<const PathMeasurement> paths, const Pose& bs,
                        const RobustConfig& config, const PathLossModel& model,
                        double threshold = kDefaultLosThreshold);
MixedResult mixed_solve(const Snapshot& snapshot, const RobustConfig& config,
                        const PathLossModel& model, double threshold = kDefaultLosThreshold);

}  // namespace rslam
