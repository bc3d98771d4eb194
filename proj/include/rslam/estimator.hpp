#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rslam/geometry.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct PathCost {
  std::size_t index = 0;
  double cost = 0.0;  // m^2
};

/// Position and clock bias for a fixed UE orientation.
struct ConditionalEstimate {
  Vec2 position = Vec2::Zero();
  double clock_bias = 0.0;
  std::vector<PathCost> per_path_cost;
  double total_cost = 0.0;  // sum of gain * cost over the index set
};

/// Closed-form weighted least-squares position/bias for a given UE heading.
/// `los_index`, when set, names the path treated as LoS (identity projector).
/// Throws SingularGeometry when the normal matrix condition number exceeds
/// kMaxConditionNumber.
ConditionalEstimate conditional_estimate(std::span<const PathMeasurement> paths,
                                         std::span<const std::size_t> index_set, double alpha_ue,
                                         const Pose& bs,
                                         std::optional<std::size_t> los_index = std::nullopt);

/// Squared distance of the path from the single-bounce model at (position, bias).
double path_cost(const PathMeasurement& path, const Vec2& position, double clock_bias,
                 double alpha_ue, const Pose& bs, bool is_los = false);

/// Closed-form UE heading from the LoS path.
double los_orientation(const PathMeasurement& los_path, const Pose& bs);

/// linspace(-pi, pi, m), both endpoints included.
std::vector<double> orientation_grid(std::size_t m);

struct OrientationEstimate {
  double alpha = 0.0;
  std::size_t grid_index = 0;
  ConditionalEstimate estimate;
};

/// Grid search for the heading minimising the conditional cost; ties go to
/// the smallest grid index. Throws SingularGeometry if no grid point is solvable.
OrientationEstimate nlos_orientation_search(std::span<const PathMeasurement> paths,
                                            std::span<const std::size_t> index_set,
                                            std::span<const double> grid, const Pose& bs);

struct GaussNewtonOptions {
  int max_iter = 50;
  double step_tol = 1e-10;  // m
  int max_halvings = 8;
};

struct LandmarkEstimate {
  Vec2 position = Vec2::Zero();
  Mat2 covariance = Mat2::Zero();  // m^2
  std::size_t source_path = 0;
  bool converged = false;
  int iterations = 0;
};

/// Gauss-Newton initial point: midpoint of the BS-side and UE-side ray ends.
Vec2 landmark_initializer(const PathMeasurement& path, const UeState& ue, const Pose& bs,
                          double t_nu = kDefaultNearParallel);

/// Jacobian of (toa, aod, aoa) w.r.t. the landmark position (units s/m, rad/m).
Eigen::Matrix<double, 3, 2> landmark_jacobian(const Vec2& landmark, const UeState& ue,
                                              const Pose& bs);

/// Whitened residual (z - h(x, landmark)) ./ sigma with wrapped angle terms.
/// An empty landmark evaluates the LoS model.
Eigen::Vector3d whitened_residual(const PathMeasurement& path, const UeState& ue, const Pose& bs,
                                  const std::optional<Vec2>& landmark, const NoiseModel& noise);

/// Per-path landmark estimate by Gauss-Newton on the Mahalanobis objective.
/// Non-convergence is reported through `converged`; a rank-deficient Jacobian
/// at the optimum throws DegenerateGeometry.
LandmarkEstimate landmark_refine(const PathMeasurement& path, std::size_t source_path,
                                 const UeState& ue, const Pose& bs, const NoiseModel& noise,
                                 const GaussNewtonOptions& options = {});

inline constexpr double kMaxConditionNumber = 1e12;

/// Building blocks of the closed-form estimate, shared with the robust search.
/// The state is [px, py, c * bias] so every entry is in metres.
namespace linear {

struct PathTerms {
  Vec2 v;        // UE-side unit vector
  Vec2 mu;       // p_BS - c tau v
  Vec2 nu_bar;   // normalised u + v; zero for LoS
  double weight;
};

PathTerms make_terms(const PathMeasurement& path, double alpha_ue, const Pose& bs, bool is_los);

/// Solves the weighted normal equations over `index_set`; nullopt if ill-conditioned.
std::optional<Eigen::Vector3d> solve(std::span<const PathTerms> terms,
                                     std::span<const std::size_t> index_set);

/// Unweighted projected residual ||(I - nu nu^T)(H x - mu)||^2.
double cost(const PathTerms& terms, const Eigen::Vector3d& state);

}  // namespace linear

}  // namespace rslam
