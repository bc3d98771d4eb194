#include "rslam/types.hpp"

#include <algorithm>
#include <cmath>

namespace rslam {

double wrap_angle(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

const char* to_string(Hypothesis h) { return h == Hypothesis::kLoS ? "H0" : "H1"; }

const char* to_string(PathLabel label) {
  switch (label) {
    case PathLabel::kLoS:
      return "los";
    case PathLabel::kSingle:
      return "single";
    case PathLabel::kMulti:
      return "multi";
  }
  return "multi";
}

bool SnapshotTruth::has_los() const {
  return std::find(labels.begin(), labels.end(), PathLabel::kLoS) != labels.end();
}

}  // namespace rslam
