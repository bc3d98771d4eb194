#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rslam/detector.hpp"
#include "rslam/geometry.hpp"
#include "rslam/rng.hpp"
#include "rslam/types.hpp"

namespace rslam {

struct Wall {
  Segment segment;
  double reflection_loss_db = 0.0;
};

/// Specular wall-segment environment with one BS.
struct Scene {
  std::vector<Wall> walls;
  Pose bs;
};

/// Throws ValidationError naming the first zero-length wall or negative loss.
void validate_scene(const Scene& scene);

enum class PathKind { kLoS, kSingleBounce, kDoubleBounce, kTripleBounce };

PathLabel label_of(PathKind kind);

struct TruePath {
  PathKind kind = PathKind::kLoS;
  std::vector<Vec2> incidence_points;
  std::vector<std::size_t> walls;   // wall index per incidence point
  double length = 0.0;              // m
  double reflection_loss_db = 0.0;  // sum over the walls hit
  ChannelParams params;             // noiseless
  double gain = 1.0;                // linear
};

/// Image-method tracer up to `max_bounces` (<= 3) reflections, sorted by delay.
std::vector<TruePath> trace_paths(const Scene& scene, const UeState& ue, int max_bounces);

/// gain_db = f(length) - wall losses - per_bounce_extra_db * bounces + N(0, sigma_db).
/// Reflections always lower the gain relative to the LoS model mean.
void synthesize_gains(std::vector<TruePath>& paths, const PathLossModel& model,
                      double per_bounce_extra_db, Rng& rng);

/// Adds independent Gaussian noise to (toa, aod, aoa); angles are re-wrapped.
std::vector<PathMeasurement> corrupt(std::span<const TruePath> paths, const NoiseModel& noise,
                                     Rng& rng);

struct SimConfig {
  int max_bounces = 2;
  std::size_t max_paths = 0;  // keep the earliest N paths; 0 keeps all
  NoiseModel noise;
  PathLossModel path_loss;
  double per_bounce_extra_db = 6.0;
  double bias_range = 100e-9;  // bias ~ U(-range, range) [s]
  // Label multi-bounce paths that fit the single-bounce model exactly at the
  // truth (cost <= relabel_t_eps, gamma in [0, 1]) as single bounces.
  bool relabel_consistent = false;
  double relabel_t_eps = 0.1;  // m^2
};

/// UE placement; the heading is drawn uniformly when absent.
struct UePlacement {
  Vec2 position = Vec2::Zero();
  std::optional<double> orientation;
};

/// Throws InvalidPosition for placements on a wall, at the BS or outside the
/// scene bounding box.
void validate_placement(const Scene& scene, const Vec2& position);

/// One labelled snapshot per placement. Each snapshot draws from its own
/// stream seeded by mix_seed(seed, index), so the output does not depend on
/// the generation order.
std::vector<Snapshot> generate_dataset(const Scene& scene, std::span<const UePlacement> placements,
                                       const SimConfig& config, std::uint64_t seed);

/// Relabels in place; returns the number of paths changed.
std::size_t relabel_consistent_paths(Snapshot& snap, std::span<const TruePath> paths,
                                     double t_eps);

Snapshot make_snapshot(std::string id, const Scene& scene, const UeState& ue,
                       std::span<const TruePath> paths, std::vector<PathMeasurement> measurements);

}  // namespace rslam
