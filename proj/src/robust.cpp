#include "rslam/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rslam/errors.hpp"

namespace rslam {

MinimalSet minimal_set(Hypothesis h) {
  return h == Hypothesis::kLoS ? MinimalSet{1, 1} : MinimalSet{0, 4};
}

std::vector<IndexSet> enumerate_combinations(std::size_t n_paths, Hypothesis h,
                                             std::size_t los_candidate) {
  const MinimalSet ms = minimal_set(h);
  if (n_paths < ms.total()) {
    throw TooFewPaths(std::to_string(n_paths) + " paths, at least " + std::to_string(ms.total()) +
                      " required under " + to_string(h));
  }
  std::vector<IndexSet> out;
  if (h == Hypothesis::kLoS) {
    if (los_candidate >= n_paths) throw std::out_of_range("LoS candidate index out of range");
    for (std::size_t k = 0; k < n_paths; ++k) {
      if (k == los_candidate) continue;
      out.push_back({std::min(k, los_candidate), std::max(k, los_candidate)});
    }
    return out;
  }
  IndexSet pick(ms.n_nlos);
  std::iota(pick.begin(), pick.end(), 0);
  const std::size_t r = pick.size();
  while (true) {
    out.push_back(pick);
    std::size_t pos = r;
    while (pos > 0 && pick[pos - 1] == n_paths - r + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t k = pos; k < r; ++k) pick[k] = pick[k - 1] + 1;
  }
  return out;
}

bool feasibility_check(const Vec2& position, double clock_bias, double alpha_ue,
                       std::span<const std::size_t> inliers,
                       std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                       const RobustConfig& config) {
  if (inliers.size() < minimal_set(h).total()) return false;
  const std::size_t j = *std::min_element(inliers.begin(), inliers.end(),
                                          [&](std::size_t a, std::size_t b) {
                                            return paths[a].toa < paths[b].toa;
                                          });
  if (paths[j].toa - clock_bias < 0.0) return false;

  const UeState ue(position, alpha_ue, clock_bias);
  auto gamma_ok = [&](std::size_t i) {
    const double g = gamma_unchecked(ue, paths[i], bs);
    return g >= 0.0 && g <= 1.0;
  };
  const auto [u, v] = unit_vectors(paths[j].aod, paths[j].aoa, bs.orientation, alpha_ue);
  if (!(gamma_ok(j) || (u + v).squaredNorm() <= config.t_nu)) return false;
  for (std::size_t i : inliers) {
    if (i != j && !gamma_ok(i)) return false;
  }
  return true;
}

std::size_t smallest_delay_index(std::span<const PathMeasurement> paths) {
  if (paths.empty()) throw EmptyInput("no paths");
  return static_cast<std::size_t>(
      std::min_element(paths.begin(), paths.end(),
                       [](const auto& a, const auto& b) { return a.toa < b.toa; }) -
      paths.begin());
}

RobustSearch robust_search(std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                           const RobustConfig& config) {
  const std::size_t n = paths.size();
  RobustSearch s;
  s.hypothesis = h;
  if (h == Hypothesis::kLoS) {
    if (n < minimal_set(h).total()) {
      throw TooFewPaths(std::to_string(n) + " paths, at least 2 required under H0");
    }
    s.los_candidate = smallest_delay_index(paths);
    s.grid = {0.0};  // placeholder column; the heading comes from the LoS path
  } else {
    s.grid = orientation_grid(config.grid_size);
  }
  s.combinations = enumerate_combinations(n, h, s.los_candidate.value_or(0));
  const std::size_t rows = s.combinations.size();
  const std::size_t cols = s.grid.size();
  s.cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                                     std::numeric_limits<double>::infinity());

  const double los_alpha = s.los_candidate ? los_orientation(paths[*s.los_candidate], bs) : 0.0;
  std::vector<linear::PathTerms> terms(n);
  IndexSet inliers;
  inliers.reserve(n);
  double best_cost = std::numeric_limits<double>::infinity();

  for (std::size_t m = 0; m < cols; ++m) {
    const double alpha = s.los_candidate ? los_alpha : s.grid[m];
    for (std::size_t i = 0; i < n; ++i) {
      terms[i] = linear::make_terms(paths[i], alpha, bs, s.los_candidate == i);
    }
    for (std::size_t l = 0; l < rows; ++l) {
      const auto minimal = linear::solve(terms, s.combinations[l]);
      if (!minimal) continue;
      inliers.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (linear::cost(terms[i], *minimal) <= config.t_eps) inliers.push_back(i);
      }
      if (inliers.empty()) continue;
      const auto x = linear::solve(terms, inliers);
      if (!x) continue;
      const Vec2 p = x->head<2>();
      const double bias = (*x)(2) / kSpeedOfLight;
      if (!feasibility_check(p, bias, alpha, inliers, paths, bs, h, config)) continue;

      double c = 0.0;
      std::size_t next = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (next < inliers.size() && inliers[next] == i) {
          c += terms[i].weight * linear::cost(terms[i], *x);
          ++next;
        } else {
          c += terms[i].weight * config.t_eps;
        }
      }
      s.cost(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m)) = c;
      if (c < best_cost) {
        best_cost = c;
        s.best_combination = l;
        s.best_grid = m;
        s.best_state = UeState(p, alpha, bias);
        s.best_inliers = inliers;
      }
    }
  }
  return s;
}

namespace {

std::vector<LandmarkEstimate> refine_landmarks(std::span<const PathMeasurement> paths,
                                               std::span<const std::size_t> indices,
                                               std::optional<std::size_t> los, const UeState& ue,
                                               const Pose& bs, const RobustConfig& config) {
  std::vector<LandmarkEstimate> out;
  for (std::size_t i : indices) {
    if (los == i) continue;
    try {
      out.push_back(landmark_refine(paths[i], i, ue, bs, config.noise, config.gauss_newton));
    } catch (const DegenerateGeometry&) {
      // No identifiable landmark for this path (bearings collinear with the baseline).
    }
  }
  return out;
}

IndexSet complement(std::size_t n, std::span<const std::size_t> subset) {
  IndexSet out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next < subset.size() && subset[next] == i) {
      ++next;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

SlamSolution robust_solve(std::span<const PathMeasurement> paths, const Pose& bs, Hypothesis h,
                          const RobustConfig& config) {
  RobustSearch s = robust_search(paths, bs, h, config);
  if (!s.best_combination) {
    throw NoFeasibleSolution(std::string("every cell is infeasible under ") + to_string(h));
  }
  SlamSolution sol;
  sol.ue = s.best_state;
  sol.hypothesis = h;
  sol.inliers = std::move(s.best_inliers);
  sol.outliers = complement(paths.size(), sol.inliers);
  sol.cost = s.cost(static_cast<Eigen::Index>(*s.best_combination),
                    static_cast<Eigen::Index>(*s.best_grid));
  sol.feasible = true;
  if (s.los_candidate &&
      std::binary_search(sol.inliers.begin(), sol.inliers.end(), *s.los_candidate)) {
    sol.los_path = s.los_candidate;
  }
  sol.landmarks = refine_landmarks(paths, sol.inliers, s.los_candidate, sol.ue, bs, config);
  return sol;
}

SlamSolution robust_solve(const Snapshot& snapshot, Hypothesis h, const RobustConfig& config) {
  return robust_solve(snapshot.paths, snapshot.bs, h, config);
}

SlamSolution benchmark_solve(std::span<const PathMeasurement> paths, const Pose& bs,
                             const RobustConfig& config) {
  if (paths.size() < 4) {
    throw TooFewPaths(std::to_string(paths.size()) + " paths, the benchmark needs at least 4");
  }
  IndexSet all(paths.size());
  std::iota(all.begin(), all.end(), 0);
  const auto grid = orientation_grid(config.grid_size);
  const OrientationEstimate o = nlos_orientation_search(paths, all, grid, bs);

  SlamSolution sol;
  sol.ue = UeState(o.estimate.position, o.alpha, o.estimate.clock_bias);
  sol.hypothesis = Hypothesis::kNLoS;
  sol.inliers = all;
  sol.cost = o.estimate.total_cost;
  sol.feasible = true;
  sol.landmarks = refine_landmarks(paths, all, std::nullopt, sol.ue, bs, config);
  return sol;
}

SlamSolution benchmark_solve(const Snapshot& snapshot, const RobustConfig& config) {
  return benchmark_solve(snapshot.paths, snapshot.bs, config);
}

std::vector<Vec2> outlier_polyline(const PathMeasurement& path, const UeState& ue, const Pose& bs) {
  const auto [u, v] = unit_vectors(path.aod, path.aoa, bs.orientation, ue.orientation);
  const double d = kSpeedOfLight * (path.toa - ue.clock_bias);
  const Vec2 bounce = bs.position + 0.5 * d * u;
  return {bs.position, bounce, bounce - 0.5 * d * v};
}

}  // namespace rslam
