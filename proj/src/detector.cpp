#include "rslam/detector.hpp"

#include <cmath>
#include <limits>

#include "rslam/errors.hpp"

namespace rslam {

double path_loss_mean(double distance, const PathLossModel& model) {
  if (!(distance > 0.0)) throw DegenerateGeometry("path-loss distance must be positive");
  return model.l0_db + 10.0 * model.zeta * std::log10(distance);
}

double los_statistic(double gain_db, double distance, const PathLossModel& model) {
  const double var = model.sigma_db * model.sigma_db;
  const double z = gain_db - path_loss_mean(distance, model);
  return 0.5 * (std::log(2.0 * kPi * var) + z * z / var);
}

DetectionResult los_test(double gain_db, const Vec2& estimated_position, const Pose& bs,
                         const PathLossModel& model, double threshold, std::size_t candidate) {
  DetectionResult r;
  r.statistic = los_statistic(gain_db, (bs.position - estimated_position).norm(), model);
  r.threshold = threshold;
  r.candidate = candidate;
  r.decided = r.statistic <= threshold ? Hypothesis::kLoS : Hypothesis::kNLoS;
  return r;
}

MixedResult mixed_solve(std::span<const PathMeasurement> paths, const Pose& bs,
                        const RobustConfig& config, const PathLossModel& model, double threshold) {
  if (paths.empty()) throw NoFeasibleSolution("no paths");
  const std::size_t candidate = smallest_delay_index(paths);

  // Statistic stays +inf when the LoS branch produced nothing to test.
  DetectionResult detection;
  detection.statistic = std::numeric_limits<double>::infinity();
  detection.threshold = threshold;
  detection.candidate = candidate;

  try {
    SlamSolution los = robust_solve(paths, bs, Hypothesis::kLoS, config);
    const double gain_db = 10.0 * std::log10(paths[candidate].gain);
    detection = los_test(gain_db, los.ue.position, bs, model, threshold, candidate);
    if (detection.decided == Hypothesis::kLoS) return {std::move(los), detection};
  } catch (const NoFeasibleSolution&) {
  } catch (const DegenerateGeometry&) {
  }

  try {
    return {robust_solve(paths, bs, Hypothesis::kNLoS, config), detection};
  } catch (const NoFeasibleSolution& e) {
    throw NoFeasibleSolution(std::string("LoS rejected and NLoS failed: ") + e.what());
  }
}

MixedResult mixed_solve(const Snapshot& snapshot, const RobustConfig& config,
                        const PathLossModel& model, double threshold) {
  return mixed_solve(snapshot.paths, snapshot.bs, config, model, threshold);
}

}  // namespace rslam
