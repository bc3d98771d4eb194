#pragma once

#include <optional>

#include "rslam/types.hpp"

namespace rslam {

/// Counterclockwise rotation by `alpha`.
Mat2 rotation(double alpha);

struct RayDirections {
  Vec2 u;  // departure direction at the BS, global frame
  Vec2 v;  // direction from the UE towards the last interaction point, global frame
};

RayDirections unit_vectors(double aod, double aoa, double alpha_bs, double alpha_ue);

/// Noiseless (toa, aod, aoa) of a path.
struct ChannelParams {
  double toa = 0.0;
  double aod = 0.0;
  double aoa = 0.0;
};

/// Forward model for the LoS path (no landmark) or a single-bounce path via
/// `landmark`. Throws DegenerateGeometry if any leg has zero length.
ChannelParams measurement_model(const UeState& ue, const Pose& bs,
                                const std::optional<Vec2>& landmark = std::nullopt);

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Reflection of `p` across the infinite line through `wall`.
Vec2 mirror_point(const Vec2& p, const Segment& wall);

inline constexpr double kDefaultNearParallel = 0.1;

/// Fraction of the propagation distance on the BS-side leg, recovered from the
/// single-bounce relation at state `ue`. Throws NearParallel when
/// ||u + v||^2 < t_nu and DegenerateGeometry when c (toa - bias) <= 0.
double gamma_of(const UeState& ue, const PathMeasurement& path, const Pose& bs,
                double t_nu = kDefaultNearParallel);

/// Same quantity without any guard. NaN when u + v == 0.
double gamma_unchecked(const UeState& ue, const PathMeasurement& path, const Pose& bs);

}  // namespace rslam
