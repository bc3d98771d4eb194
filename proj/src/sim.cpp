#include "rslam/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "rslam/errors.hpp"
#include "rslam/estimator.hpp"

namespace rslam {

namespace {

constexpr double kEdgeTol = 1e-9;

struct Crossing {
  double t;  // along p -> q
  double s;  // along the wall
};

std::optional<Crossing> cross(const Vec2& p, const Vec2& q, const Segment& wall) {
  const Vec2 d = q - p;
  const Vec2 e = wall.b - wall.a;
  const double den = d.x() * e.y() - d.y() * e.x();
  if (std::abs(den) < 1e-15 * d.norm() * e.norm()) return std::nullopt;
  const Vec2 w = wall.a - p;
  return Crossing{(w.x() * e.y() - w.y() * e.x()) / den, (w.x() * d.y() - w.y() * d.x()) / den};
}

// True when no wall other than `skip_a`/`skip_b` cuts the open segment p -> q.
bool visible(const Scene& scene, const Vec2& p, const Vec2& q, std::size_t skip_a,
             std::size_t skip_b) {
  for (std::size_t w = 0; w < scene.walls.size(); ++w) {
    if (w == skip_a || w == skip_b) continue;
    const auto c = cross(p, q, scene.walls[w].segment);
    if (c && c->t > kEdgeTol && c->t < 1.0 - kEdgeTol && c->s >= 0.0 && c->s <= 1.0) {
      return false;
    }
  }
  return true;
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::optional<TruePath> trace_sequence(const Scene& scene, const UeState& ue,
                                       const std::vector<std::size_t>& seq) {
  const std::size_t k = seq.size();
  std::vector<Vec2> images{scene.bs.position};
  for (std::size_t w : seq) images.push_back(mirror_point(images.back(), scene.walls[w].segment));

  std::vector<Vec2> points(k);
  Vec2 target = ue.position;
  for (std::size_t r = k; r-- > 0;) {
    const auto c = cross(images[r + 1], target, scene.walls[seq[r]].segment);
    if (!c || c->t <= kEdgeTol || c->t >= 1.0 - kEdgeTol || c->s < 0.0 || c->s > 1.0) {
      return std::nullopt;
    }
    points[r] = images[r + 1] + c->t * (target - images[r + 1]);
    target = points[r];
  }

  std::vector<Vec2> chain{scene.bs.position};
  chain.insert(chain.end(), points.begin(), points.end());
  chain.push_back(ue.position);
  for (std::size_t leg = 0; leg + 1 < chain.size(); ++leg) {
    const std::size_t wa = leg == 0 ? kNone : seq[leg - 1];
    const std::size_t wb = leg == k ? kNone : seq[leg];
    if ((chain[leg + 1] - chain[leg]).norm() < kEdgeTol) return std::nullopt;
    if (!visible(scene, chain[leg], chain[leg + 1], wa, wb)) return std::nullopt;
  }

  TruePath path;
  path.kind = static_cast<PathKind>(k);
  path.incidence_points = points;
  path.walls = seq;
  for (std::size_t leg = 0; leg + 1 < chain.size(); ++leg) {
    path.length += (chain[leg + 1] - chain[leg]).norm();
  }
  for (std::size_t w : seq) path.reflection_loss_db += scene.walls[w].reflection_loss_db;
  const Vec2 first = chain[1] - chain[0];
  const Vec2 last = chain[chain.size() - 2] - chain.back();
  path.params.toa = path.length / kSpeedOfLight + ue.clock_bias;
  path.params.aod = wrap_angle(std::atan2(first.y(), first.x()) - scene.bs.orientation);
  path.params.aoa = wrap_angle(std::atan2(last.y(), last.x()) - ue.orientation);
  return path;
}

void sequences(std::size_t n_walls, std::size_t depth, std::vector<std::size_t>& cur,
               std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == depth) {
    out.push_back(cur);
    return;
  }
  for (std::size_t w = 0; w < n_walls; ++w) {
    if (!cur.empty() && cur.back() == w) continue;
    cur.push_back(w);
    sequences(n_walls, depth, cur, out);
    cur.pop_back();
  }
}

}  // namespace

void validate_scene(const Scene& scene) {
  for (std::size_t i = 0; i < scene.walls.size(); ++i) {
    const Wall& w = scene.walls[i];
    if (!w.segment.a.allFinite() || !w.segment.b.allFinite()) {
      throw ValidationError("wall " + std::to_string(i) + " has non-finite endpoints");
    }
    if ((w.segment.b - w.segment.a).norm() == 0.0) {
      throw ValidationError("wall " + std::to_string(i) + " has zero length");
    }
    if (!(w.reflection_loss_db >= 0.0)) {
      throw ValidationError("wall " + std::to_string(i) + " has a negative reflection loss");
    }
  }
}

PathLabel label_of(PathKind kind) {
  switch (kind) {
    case PathKind::kLoS:
      return PathLabel::kLoS;
    case PathKind::kSingleBounce:
      return PathLabel::kSingle;
    default:
      return PathLabel::kMulti;
  }
}

std::vector<TruePath> trace_paths(const Scene& scene, const UeState& ue, int max_bounces) {
  std::vector<TruePath> out;
  const std::size_t none = kNone;
  if ((ue.position - scene.bs.position).norm() > kEdgeTol &&
      visible(scene, scene.bs.position, ue.position, none, none)) {
    out.push_back(*trace_sequence(scene, ue, {}));
  }
  const int depth_max = std::clamp(max_bounces, 0, 3);
  for (int depth = 1; depth <= depth_max; ++depth) {
    std::vector<std::vector<std::size_t>> seqs;
    std::vector<std::size_t> cur;
    sequences(scene.walls.size(), static_cast<std::size_t>(depth), cur, seqs);
    for (const auto& seq : seqs) {
      if (auto p = trace_sequence(scene, ue, seq)) out.push_back(std::move(*p));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TruePath& a, const TruePath& b) { return a.params.toa < b.params.toa; });
  return out;
}

void synthesize_gains(std::vector<TruePath>& paths, const PathLossModel& model,
                      double per_bounce_extra_db, Rng& rng) {
  for (TruePath& p : paths) {
    const double bounces = static_cast<double>(p.incidence_points.size());
    const double gain_db = path_loss_mean(p.length, model) - p.reflection_loss_db -
                           per_bounce_extra_db * bounces + model.sigma_db * rng.normal();
    p.gain = std::pow(10.0, gain_db / 10.0);
  }
}

std::vector<PathMeasurement> corrupt(std::span<const TruePath> paths, const NoiseModel& noise,
                                     Rng& rng) {
  std::vector<PathMeasurement> out;
  out.reserve(paths.size());
  for (const TruePath& p : paths) {
    const double toa = p.params.toa + noise.sigma_toa * rng.normal();
    const double aod = p.params.aod + noise.sigma_aod * rng.normal();
    const double aoa = p.params.aoa + noise.sigma_aoa * rng.normal();
    out.emplace_back(toa, aod, aoa, p.gain);
  }
  return out;
}

void validate_placement(const Scene& scene, const Vec2& position) {
  if (!position.allFinite()) throw InvalidPosition("non-finite UE position");
  if ((position - scene.bs.position).norm() < kEdgeTol) {
    throw InvalidPosition("UE position coincides with the BS");
  }
  if (scene.walls.empty()) return;
  Vec2 lo = scene.walls.front().segment.a;
  Vec2 hi = lo;
  for (std::size_t i = 0; i < scene.walls.size(); ++i) {
    const Segment& s = scene.walls[i].segment;
    lo = lo.cwiseMin(s.a).cwiseMin(s.b);
    hi = hi.cwiseMax(s.a).cwiseMax(s.b);
    const Vec2 e = s.b - s.a;
    const double t = std::clamp((position - s.a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    if ((s.a + t * e - position).norm() < 1e-6) {
      throw InvalidPosition("UE position lies on wall " + std::to_string(i));
    }
  }
  if (!(position.x() > lo.x() && position.x() < hi.x() && position.y() > lo.y() &&
        position.y() < hi.y())) {
    throw InvalidPosition("UE position is outside the scene bounding box");
  }
}

Snapshot make_snapshot(std::string id, const Scene& scene, const UeState& ue,
                       std::span<const TruePath> paths, std::vector<PathMeasurement> measurements) {
  Snapshot snap;
  snap.id = std::move(id);
  snap.bs = scene.bs;
  snap.paths = std::move(measurements);
  SnapshotTruth truth;
  truth.ue = ue;
  for (const TruePath& p : paths) {
    truth.labels.push_back(label_of(p.kind));
    if (p.kind == PathKind::kSingleBounce) {
      truth.incidence.emplace_back(p.incidence_points.front());
    } else {
      truth.incidence.emplace_back(std::nullopt);
    }
  }
  snap.truth = std::move(truth);
  return snap;
}

std::size_t relabel_consistent_paths(Snapshot& snap, std::span<const TruePath> paths,
                                     double t_eps) {
  if (!snap.truth) throw MissingTruth("relabelling needs ground truth");
  const UeState& ue = snap.truth->ue;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (snap.truth->labels[i] != PathLabel::kMulti) continue;
    const PathMeasurement m(paths[i].params.toa, paths[i].params.aod, paths[i].params.aoa, 1.0);
    if (path_cost(m, ue.position, ue.clock_bias, ue.orientation, snap.bs) > t_eps) continue;
    const double g = gamma_unchecked(ue, m, snap.bs);
    if (!(g >= 0.0 && g <= 1.0)) continue;
    const auto [u, v] = unit_vectors(m.aod, m.aoa, snap.bs.orientation, ue.orientation);
    snap.truth->labels[i] = PathLabel::kSingle;
    snap.truth->incidence[i] = snap.bs.position + g * kSpeedOfLight * (m.toa - ue.clock_bias) * u;
    ++changed;
  }
  return changed;
}

std::vector<Snapshot> generate_dataset(const Scene& scene, std::span<const UePlacement> placements,
                                       const SimConfig& config, std::uint64_t seed) {
  validate_scene(scene);
  std::vector<Snapshot> out;
  out.reserve(placements.size());
  for (std::size_t i = 0; i < placements.size(); ++i) {
    const UePlacement& place = placements[i];
    try {
      validate_placement(scene, place.position);
    } catch (const InvalidPosition& e) {
      throw InvalidPosition("placement " + std::to_string(i) + ": " + e.what());
    }
    Rng rng(mix_seed(seed, i));
    const double alpha = place.orientation ? *place.orientation : rng.uniform(-kPi, kPi);
    const double bias = rng.uniform(-config.bias_range, config.bias_range);
    const UeState ue(place.position, alpha, bias);

    std::vector<TruePath> paths = trace_paths(scene, ue, config.max_bounces);
    if (config.max_paths > 0 && paths.size() > config.max_paths) paths.resize(config.max_paths);
    if (paths.empty()) {
      throw InvalidPosition("placement " + std::to_string(i) + ": no propagation path");
    }
    synthesize_gains(paths, config.path_loss, config.per_bounce_extra_db, rng);
    auto meas = corrupt(paths, config.noise, rng);

    std::ostringstream id;
    id << "ue" << std::setw(4) << std::setfill('0') << i;
    out.push_back(make_snapshot(id.str(), scene, ue, paths, std::move(meas)));
    if (config.relabel_consistent) relabel_consistent_paths(out.back(), paths, config.relabel_t_eps);
  }
  return out;
}

}  // namespace rslam
