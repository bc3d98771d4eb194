#include "rslam/geometry.hpp"

#include <cmath>
#include <limits>

#include "rslam/errors.hpp"

namespace rslam {

Mat2 rotation(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

RayDirections unit_vectors(double aod, double aoa, double alpha_bs, double alpha_ue) {
  return {rotation(alpha_bs) * Vec2(std::cos(aod), std::sin(aod)),
          rotation(alpha_ue) * Vec2(std::cos(aoa), std::sin(aoa))};
}

ChannelParams measurement_model(const UeState& ue, const Pose& bs,
                                const std::optional<Vec2>& landmark) {
  Vec2 delta_bs;  // p_BS - p_i (or p_BS - p_UE for LoS)
  Vec2 delta_ue;  // p_i - p_UE (or p_BS - p_UE for LoS)
  double length = 0.0;
  if (landmark) {
    delta_bs = bs.position - *landmark;
    delta_ue = *landmark - ue.position;
    if (delta_bs.norm() == 0.0 || delta_ue.norm() == 0.0) {
      throw DegenerateGeometry("landmark coincides with the BS or the UE");
    }
    length = delta_bs.norm() + delta_ue.norm();
  } else {
    delta_bs = bs.position - ue.position;
    delta_ue = delta_bs;
    if (delta_bs.norm() == 0.0) throw DegenerateGeometry("UE coincides with the BS");
    length = delta_bs.norm();
  }
  ChannelParams out;
  out.toa = length / kSpeedOfLight + ue.clock_bias;
  out.aod = wrap_angle(std::atan2(-delta_bs.y(), -delta_bs.x()) - bs.orientation);
  out.aoa = wrap_angle(std::atan2(delta_ue.y(), delta_ue.x()) - ue.orientation);
  return out;
}

Vec2 mirror_point(const Vec2& p, const Segment& wall) {
  const Vec2 dir = wall.b - wall.a;
  const double len2 = dir.squaredNorm();
  if (len2 == 0.0) throw DegenerateGeometry("wall endpoints coincide");
  const Vec2 rel = p - wall.a;
  const Vec2 foot = wall.a + dir * (rel.dot(dir) / len2);
  return 2.0 * foot - p;
}

namespace {

struct GammaParts {
  double distance;    // c (toa - bias)
  Vec2 nu;            // u + v
  Vec2 offset;        // H x - mu
};

GammaParts gamma_parts(const UeState& ue, const PathMeasurement& path, const Pose& bs) {
  const auto [u, v] = unit_vectors(path.aod, path.aoa, bs.orientation, ue.orientation);
  const double distance = kSpeedOfLight * (path.toa - ue.clock_bias);
  // H x - mu = p - c b v - p_BS + c tau v = p - p_BS + d v
  const Vec2 offset = ue.position - bs.position + distance * v;
  return {distance, u + v, offset};
}

}  // namespace

double gamma_unchecked(const UeState& ue, const PathMeasurement& path, const Pose& bs) {
  const GammaParts g = gamma_parts(ue, path, bs);
  const double nu2 = g.nu.squaredNorm();
  if (nu2 == 0.0 || g.distance == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return g.nu.dot(g.offset) / (g.distance * nu2);
}

double gamma_of(const UeState& ue, const PathMeasurement& path, const Pose& bs, double t_nu) {
  const GammaParts g = gamma_parts(ue, path, bs);
  if (!(g.distance > 0.0)) throw DegenerateGeometry("non-positive propagation distance");
  const double nu2 = g.nu.squaredNorm();
  if (nu2 < t_nu || nu2 == 0.0) throw NearParallel("departure and arrival directions are near-opposite");
  return g.nu.dot(g.offset) / (g.distance * nu2);
}

}  // namespace rslam
