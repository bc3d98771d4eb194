#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rslam/detector.hpp"
#include "rslam/robust.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct ErrorRecord {
  std::string id;
  double position_error = 0.0;  // m
  double heading_error = 0.0;   // rad, wrapped absolute
  double bias_error = 0.0;      // s
  double solve_time = 0.0;      // s
  Hypothesis decided = Hypothesis::kNLoS;
  std::optional<Hypothesis> truth;
};

ErrorRecord make_error_record(const std::string& id, const UeState& truth, const UeState& estimate,
                              Hypothesis decided, std::optional<Hypothesis> true_hypothesis = {},
                              double solve_time = 0.0);

struct Rmse {
  double position = 0.0;
  double heading = 0.0;
  double bias = 0.0;
};

/// Throws EmptyInput.
Rmse rmse(std::span<const ErrorRecord> records);

/// Empirical CDF of the position errors as sorted (error, fraction) pairs.
std::vector<std::pair<double, double>> error_cdf(std::span<const ErrorRecord> records);

/// Removes paths whose Mahalanobis residual at the true UE state exceeds
/// `t_outlier`; non-LoS paths are first fitted with their best landmark.
/// Throws MissingTruth.
Snapshot strip_outliers_by_truth(const Snapshot& snapshot, const NoiseModel& noise,
                                 double t_outlier, const GaussNewtonOptions& options = {});

struct SweepResult {
  std::vector<double> p_los_detect;
  std::vector<double> rmse_curve;
  std::vector<double> rmse_curve_excluding;
  std::size_t trials = 0;
  std::size_t dropped = 0;  // snapshots without a usable solve
};

/// Monte Carlo sweep over P(H0 | LoS). Every LoS snapshot is solved once under
/// each hypothesis; per trial a coin flip shared across grid points picks one.
/// Each curve point is the trial-average of the per-trial position RMSE.
SweepResult los_sensitivity_sweep(std::span<const Snapshot> dataset, const RobustConfig& config,
                                  std::span<const double> p_grid, std::size_t trials,
                                  std::uint64_t seed, std::span<const std::string> exclude = {},
                                  unsigned workers = 1);

/// Spearman rank correlation with average ranks for ties. NaN if either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace rslam
