#include "rslam/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "rslam/errors.hpp"

namespace rslam {

namespace linear {

PathTerms make_terms(const PathMeasurement& path, double alpha_ue, const Pose& bs, bool is_los) {
  const auto [u, v] = unit_vectors(path.aod, path.aoa, bs.orientation, alpha_ue);
  PathTerms t;
  t.v = v;
  t.mu = bs.position - kSpeedOfLight * path.toa * v;
  const Vec2 nu = u + v;
  const double n = nu.norm();
  // Exactly opposite directions carry no gamma information: treat as LoS.
  t.nu_bar = (is_los || n < 1e-12) ? Vec2::Zero() : Vec2(nu / n);
  t.weight = path.gain;
  return t;
}

std::optional<Eigen::Vector3d> solve(std::span<const PathTerms> terms,
                                     std::span<const std::size_t> index_set) {
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i : index_set) {
    const PathTerms& t = terms[i];
    Eigen::Matrix<double, 2, 3> h;
    h << 1.0, 0.0, -t.v.x(), 0.0, 1.0, -t.v.y();
    const Mat2 projector = Mat2::Identity() - t.nu_bar * t.nu_bar.transpose();
    const Eigen::Matrix<double, 3, 2> ht_p = h.transpose() * projector;
    normal.noalias() += t.weight * ht_p * h;
    rhs.noalias() += t.weight * ht_p * t.mu;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig;
  eig.computeDirect(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(2);
  if (!(hi > 0.0) || !(lo > hi / kMaxConditionNumber)) return std::nullopt;
  const Eigen::LDLT<Eigen::Matrix3d> ldlt = normal.ldlt();
  Eigen::Vector3d x = ldlt.solve(rhs);
  // One step of iterative refinement with the gradient taken from the residuals.
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (std::size_t i : index_set) {
    const PathTerms& t = terms[i];
    Vec2 r = x.head<2>() - x(2) * t.v - t.mu;
    r -= t.nu_bar.dot(r) * t.nu_bar;
    grad.head<2>() += t.weight * r;
    grad(2) -= t.weight * t.v.dot(r);
  }
  x -= ldlt.solve(grad);
  return x;
}

double cost(const PathTerms& t, const Eigen::Vector3d& state) {
  const Vec2 r = state.head<2>() - state(2) * t.v - t.mu;
  return (r - t.nu_bar.dot(r) * t.nu_bar).squaredNorm();
}

}  // namespace linear

namespace {

void check_indices(std::span<const PathMeasurement> paths, std::span<const std::size_t> index_set) {
  if (index_set.empty()) throw EmptyInput("empty path index set");
  for (std::size_t i : index_set) {
    if (i >= paths.size()) throw std::out_of_range("path index out of range");
  }
}

std::vector<linear::PathTerms> all_terms(std::span<const PathMeasurement> paths, double alpha_ue,
                                         const Pose& bs, std::optional<std::size_t> los_index) {
  std::vector<linear::PathTerms> terms;
  terms.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    terms.push_back(linear::make_terms(paths[i], alpha_ue, bs, los_index == i));
  }
  return terms;
}

ConditionalEstimate package(std::span<const linear::PathTerms> terms,
                            std::span<const std::size_t> index_set, const Eigen::Vector3d& x) {
  ConditionalEstimate est;
  est.position = x.head<2>();
  est.clock_bias = x(2) / kSpeedOfLight;
  est.per_path_cost.reserve(index_set.size());
  for (std::size_t i : index_set) {
    const double j = linear::cost(terms[i], x);
    est.per_path_cost.push_back({i, j});
    est.total_cost += terms[i].weight * j;
  }
  return est;
}

}  // namespace

ConditionalEstimate conditional_estimate(std::span<const PathMeasurement> paths,
                                         std::span<const std::size_t> index_set, double alpha_ue,
                                         const Pose& bs, std::optional<std::size_t> los_index) {
  check_indices(paths, index_set);
  const auto terms = all_terms(paths, alpha_ue, bs, los_index);
  const auto x = linear::solve(terms, index_set);
  if (!x) throw SingularGeometry("normal matrix is ill-conditioned for this path set");
  return package(terms, index_set, *x);
}

double path_cost(const PathMeasurement& path, const Vec2& position, double clock_bias,
                 double alpha_ue, const Pose& bs, bool is_los) {
  const auto t = linear::make_terms(path, alpha_ue, bs, is_los);
  return linear::cost(t, Eigen::Vector3d(position.x(), position.y(), kSpeedOfLight * clock_bias));
}

double los_orientation(const PathMeasurement& los_path, const Pose& bs) {
  const Vec2 u0 = rotation(bs.orientation) * Vec2(std::cos(los_path.aod), std::sin(los_path.aod));
  const Vec2 xy = -(rotation(-los_path.aoa) * u0);
  return wrap_angle(std::atan2(xy.y(), xy.x()));
}

std::vector<double> orientation_grid(std::size_t m) {
  if (m == 0) throw std::invalid_argument("orientation grid needs at least one point");
  if (m == 1) return {kPi};
  std::vector<double> grid(m);
  const double step = 2.0 * kPi / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) grid[i] = -kPi + static_cast<double>(i) * step;
  grid.back() = kPi;
  return grid;
}

OrientationEstimate nlos_orientation_search(std::span<const PathMeasurement> paths,
                                            std::span<const std::size_t> index_set,
                                            std::span<const double> grid, const Pose& bs) {
  check_indices(paths, index_set);
  if (grid.empty()) throw EmptyInput("empty orientation grid");
  std::optional<OrientationEstimate> best;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const auto terms = all_terms(paths, grid[m], bs, std::nullopt);
    const auto x = linear::solve(terms, index_set);
    if (!x) continue;
    ConditionalEstimate est = package(terms, index_set, *x);
    if (!best || est.total_cost < best->estimate.total_cost) {
      best = OrientationEstimate{wrap_angle(grid[m]), m, std::move(est)};
    }
  }
  if (!best) throw SingularGeometry("no orientation on the grid gives a solvable system");
  return *best;
}

// ---------------------------------------------------------------------------
// Landmark refinement

Vec2 landmark_initializer(const PathMeasurement& path, const UeState& ue, const Pose& bs,
                          double t_nu) {
  double gamma = 0.5;
  try {
    gamma = gamma_of(ue, path, bs, t_nu);
    if (!(gamma >= 0.0 && gamma <= 1.0)) gamma = std::clamp(gamma, 0.05, 0.95);
  } catch (const NearParallel&) {
    gamma = 0.5;
  }
  const auto [u, v] = unit_vectors(path.aod, path.aoa, bs.orientation, ue.orientation);
  const double d = kSpeedOfLight * (path.toa - ue.clock_bias);
  const Vec2 from_bs = bs.position + d * gamma * u;
  const Vec2 from_ue = ue.position + d * (1.0 - gamma) * v;
  return 0.5 * (from_bs + from_ue);
}

Eigen::Matrix<double, 3, 2> landmark_jacobian(const Vec2& landmark, const UeState& ue,
                                              const Pose& bs) {
  const Vec2 a = landmark - bs.position;
  const Vec2 b = landmark - ue.position;
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DegenerateGeometry("landmark coincides with the BS or the UE");
  Eigen::Matrix<double, 3, 2> jac;
  jac.row(0) = ((a / na + b / nb) / kSpeedOfLight).transpose();
  jac.row(1) << -a.y() / (na * na), a.x() / (na * na);
  jac.row(2) << -b.y() / (nb * nb), b.x() / (nb * nb);
  return jac;
}

Eigen::Vector3d whitened_residual(const PathMeasurement& path, const UeState& ue, const Pose& bs,
                                  const std::optional<Vec2>& landmark, const NoiseModel& noise) {
  const ChannelParams h = measurement_model(ue, bs, landmark);
  return {(path.toa - h.toa) / noise.sigma_toa, wrap_angle(path.aod - h.aod) / noise.sigma_aod,
          wrap_angle(path.aoa - h.aoa) / noise.sigma_aoa};
}

namespace {

Eigen::Vector3d whitening(const NoiseModel& noise) {
  return {1.0 / noise.sigma_toa, 1.0 / noise.sigma_aod, 1.0 / noise.sigma_aoa};
}

std::optional<Mat2> invert_normal(const Mat2& normal) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig;
  eig.computeDirect(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (!(hi > 0.0) || !(lo > hi / kMaxConditionNumber)) return std::nullopt;
  return normal.inverse();
}

}  // namespace

LandmarkEstimate landmark_refine(const PathMeasurement& path, std::size_t source_path,
                                 const UeState& ue, const Pose& bs, const NoiseModel& noise,
                                 const GaussNewtonOptions& options) {
  const Eigen::Vector3d w = whitening(noise);
  auto objective = [&](const Vec2& p) {
    return whitened_residual(path, ue, bs, p, noise).squaredNorm();
  };

  LandmarkEstimate est;
  est.source_path = source_path;
  Vec2 p = landmark_initializer(path, ue, bs);
  double obj = objective(p);

  for (int it = 1; it <= options.max_iter; ++it) {
    est.iterations = it;
    const Eigen::Vector3d r = whitened_residual(path, ue, bs, p, noise);
    const Eigen::Matrix<double, 3, 2> jac = w.asDiagonal() * landmark_jacobian(p, ue, bs);
    const auto inv = invert_normal(jac.transpose() * jac);
    if (!inv) throw DegenerateGeometry("landmark Jacobian is rank-deficient");
    const Vec2 step = *inv * (jac.transpose() * r);

    if (step.norm() < options.step_tol) {
      const Vec2 cand = p + step;
      const double cand_obj = objective(cand);
      if (cand_obj <= obj) {
        p = cand;
        obj = cand_obj;
      }
      est.converged = true;
      break;
    }

    Vec2 scaled = step;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const Vec2 cand = p + scaled;
      const double cand_obj = objective(cand);
      if (cand_obj <= obj) {
        p = cand;
        obj = cand_obj;
        accepted = true;
        break;
      }
      scaled *= 0.5;
    }
    if (!accepted) break;
  }

  const Eigen::Matrix<double, 3, 2> jac = w.asDiagonal() * landmark_jacobian(p, ue, bs);
  const auto cov = invert_normal(jac.transpose() * jac);
  if (!cov) throw DegenerateGeometry("landmark Jacobian is rank-deficient at the optimum");
  est.position = p;
  est.covariance = 0.5 * (*cov + cov->transpose());
  return est;
}

}  // namespace rslam
