#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rslam/estimator.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct RobustConfig {
  double t_eps = 0.1;            // inlier threshold on J_i [m^2]
  double t_nu = 0.1;             // near-parallel threshold on ||u + v||^2
  std::size_t grid_size = 361;   // heading grid size under NLoS
  NoiseModel noise;              // landmark refinement weights
  GaussNewtonOptions gauss_newton;
};

struct MinimalSet {
  std::size_t n_los = 0;
  std::size_t n_nlos = 0;
  std::size_t total() const { return n_los + n_nlos; }
};

/// (1, 1) under LoS, (0, 4) under NLoS.
MinimalSet minimal_set(Hypothesis h);

/// Minimal index sets in lexicographic order. Under LoS every set pairs
/// `los_candidate` with one other path; under NLoS all 4-subsets.
/// Throws TooFewPaths below the minimal set size.
std::vector<IndexSet> enumerate_combinations(std::size_t n_paths, Hypothesis h,
                                             std::size_t los_candidate = 0);

/// Physical-validity gate applied to every candidate solution.
bool feasibility_check(const Vec2& position, double clock_bias, double alpha_ue,
                       std::span<const std::size_t> inliers,
                       std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                       const RobustConfig& config);

struct SlamSolution {
  UeState ue;
  std::vector<LandmarkEstimate> landmarks;
  IndexSet inliers;
  IndexSet outliers;
  Hypothesis hypothesis = Hypothesis::kNLoS;
  std::optional<std::size_t> los_path;
  double cost = 0.0;
  bool feasible = false;
};

/// Full exhaustive search record: one row per combination, one column per heading.
struct RobustSearch {
  Hypothesis hypothesis = Hypothesis::kNLoS;
  std::vector<IndexSet> combinations;
  std::vector<double> grid;
  Eigen::MatrixXd cost;  // +inf marks infeasible cells
  std::optional<std::size_t> los_candidate;
  // Winning cell and its re-solved estimate; empty when every cell is infeasible.
  std::optional<std::size_t> best_combination;
  std::optional<std::size_t> best_grid;
  UeState best_state;
  IndexSet best_inliers;
};

RobustSearch robust_search(std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                           const RobustConfig& config);

/// Exhaustive minimal-set search with inlier partitioning. Throws TooFewPaths
/// or NoFeasibleSolution.
SlamSolution robust_solve(std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                          const RobustConfig& config);
SlamSolution robust_solve(const Snapshot& snapshot, Hypothesis h, const RobustConfig& config);

/// Non-robust reference: NLoS heading grid search over every path.
SlamSolution benchmark_solve(std::span<const PathMeasurement> paths, const Pose& bs,
                             const RobustConfig& config);
SlamSolution benchmark_solve(const Snapshot& snapshot, const RobustConfig& config);

/// Index of the path with the smallest delay.
std::size_t smallest_delay_index(std::span<const PathMeasurement> paths);

/// Polyline BS -> midpoint -> UE drawn for a path with gamma fixed at 0.5,
/// used to plot paths that were rejected as outliers.
std::vector<Vec2> outlier_polyline(const PathMeasurement& path, const UeState& ue, const Pose& bs);

}  // namespace rslam
