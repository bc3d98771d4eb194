#include "rslam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rslam/errors.hpp"
#include "rslam/parallel.hpp"
#include "rslam/rng.hpp"

namespace rslam {

ErrorRecord make_error_record(const std::string& id, const UeState& truth, const UeState& estimate,
                              Hypothesis decided, std::optional<Hypothesis> true_hypothesis,
                              double solve_time) {
  ErrorRecord r;
  r.id = id;
  r.position_error = (estimate.position - truth.position).norm();
  r.heading_error = std::abs(wrap_angle(estimate.orientation - truth.orientation));
  r.bias_error = std::abs(estimate.clock_bias - truth.clock_bias);
  r.solve_time = solve_time;
  r.decided = decided;
  r.truth = true_hypothesis;
  return r;
}

Rmse rmse(std::span<const ErrorRecord> records) {
  if (records.empty()) throw EmptyInput("no error records");
  double pos = 0.0, head = 0.0, bias = 0.0;
  for (const ErrorRecord& r : records) {
    pos += r.position_error * r.position_error;
    const double h = wrap_angle(r.heading_error);
    head += h * h;
    bias += r.bias_error * r.bias_error;
  }
  const double n = static_cast<double>(records.size());
  return {std::sqrt(pos / n), std::sqrt(head / n), std::sqrt(bias / n)};
}

std::vector<std::pair<double, double>> error_cdf(std::span<const ErrorRecord> records) {
  if (records.empty()) throw EmptyInput("no error records");
  std::vector<double> e;
  e.reserve(records.size());
  for (const ErrorRecord& r : records) e.push_back(r.position_error);
  std::sort(e.begin(), e.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(e.size());
  const double n = static_cast<double>(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    cdf.emplace_back(e[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

Snapshot strip_outliers_by_truth(const Snapshot& snapshot, const NoiseModel& noise,
                                 double t_outlier, const GaussNewtonOptions& options) {
  if (!snapshot.truth) throw MissingTruth("snapshot " + snapshot.id + " has no ground truth");
  const SnapshotTruth& truth = *snapshot.truth;
  Snapshot out = snapshot;
  out.paths.clear();
  out.truth->labels.clear();
  out.truth->incidence.clear();
  for (std::size_t i = 0; i < snapshot.paths.size(); ++i) {
    const PathMeasurement& path = snapshot.paths[i];
    double residual = std::numeric_limits<double>::infinity();
    try {
      if (truth.labels.at(i) == PathLabel::kLoS) {
        residual = whitened_residual(path, truth.ue, snapshot.bs, std::nullopt, noise).squaredNorm();
      } else {
        const LandmarkEstimate lm = landmark_refine(path, i, truth.ue, snapshot.bs, noise, options);
        residual = whitened_residual(path, truth.ue, snapshot.bs, lm.position, noise).squaredNorm();
      }
    } catch (const Error&) {
      // No single-bounce fit exists; keep the infinite residual.
    }
    if (residual > t_outlier) continue;
    out.paths.push_back(path);
    out.truth->labels.push_back(truth.labels[i]);
    out.truth->incidence.push_back(truth.incidence.at(i));
  }
  return out;
}

namespace {

struct Prepared {
  bool usable = false;
  bool los = false;
  bool excluded = false;
  double err_los = 0.0;   // position error of the LoS-hypothesis solve
  double err_nlos = 0.0;  // position error of the NLoS-hypothesis solve
};

Prepared prepare(const Snapshot& snap, const RobustConfig& config,
                 std::span<const std::string> exclude) {
  Prepared p;
  const SnapshotTruth& truth = *snap.truth;
  p.los = truth.has_los();
  p.excluded = std::find(exclude.begin(), exclude.end(), snap.id) != exclude.end();
  auto error_of = [&](Hypothesis h) -> std::optional<double> {
    try {
      return (robust_solve(snap, h, config).ue.position - truth.ue.position).norm();
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  const auto nlos = error_of(Hypothesis::kNLoS);
  if (!nlos) return p;
  p.err_nlos = *nlos;
  if (p.los) {
    // A failed LoS solve falls back to NLoS, as in the mixed pipeline.
    p.err_los = error_of(Hypothesis::kLoS).value_or(*nlos);
  }
  p.usable = true;
  return p;
}

double coin(std::uint64_t seed, std::size_t trial, std::size_t snapshot) {
  return static_cast<double>(mix_seed(seed, trial, snapshot) >> 11) * 0x1.0p-53;
}

}  // namespace

SweepResult los_sensitivity_sweep(std::span<const Snapshot> dataset, const RobustConfig& config,
                                  std::span<const double> p_grid, std::size_t trials,
                                  std::uint64_t seed, std::span<const std::string> exclude,
                                  unsigned workers) {
  if (trials == 0) throw std::invalid_argument("sweep needs at least one trial");
  for (const Snapshot& s : dataset) {
    if (!s.truth) throw MissingTruth("snapshot " + s.id + " has no ground truth");
  }
  std::vector<Prepared> prepared(dataset.size());
  parallel_for(dataset.size(), workers,
               [&](std::size_t i) { prepared[i] = prepare(dataset[i], config, exclude); });

  SweepResult result;
  result.p_los_detect.assign(p_grid.begin(), p_grid.end());
  result.trials = trials;
  result.dropped = static_cast<std::size_t>(
      std::count_if(prepared.begin(), prepared.end(), [](const Prepared& p) { return !p.usable; }));

  for (double p : p_grid) {
    double sum_all = 0.0, sum_kept = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      double se_all = 0.0, se_kept = 0.0;
      std::size_t n_all = 0, n_kept = 0;
      for (std::size_t k = 0; k < prepared.size(); ++k) {
        const Prepared& s = prepared[k];
        if (!s.usable) continue;
        const double e = (s.los && coin(seed, t, k) < p) ? s.err_los : s.err_nlos;
        se_all += e * e;
        ++n_all;
        if (!s.excluded) {
          se_kept += e * e;
          ++n_kept;
        }
      }
      sum_all += n_all ? std::sqrt(se_all / static_cast<double>(n_all))
                       : std::numeric_limits<double>::quiet_NaN();
      sum_kept += n_kept ? std::sqrt(se_kept / static_cast<double>(n_kept))
                         : std::numeric_limits<double>::quiet_NaN();
    }
    result.rmse_curve.push_back(sum_all / static_cast<double>(trials));
    result.rmse_curve_excluding.push_back(sum_kept / static_cast<double>(trials));
  }
  return result;
}

namespace {

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace rslam
