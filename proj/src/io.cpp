#include "rslam/io.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "rslam/errors.hpp"

namespace rslam::io {

using nlohmann::json;

namespace {

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError("expected a 2-element numeric array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string("missing or non-numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

json pose_json(const Pose& p) { return {{"pos", vec_json(p.position)}, {"ori", p.orientation}}; }

Pose pose_from(const json& j) {
  if (!j.is_object()) throw ValidationError("pose must be an object");
  return Pose(vec_from(j.at("pos")), number(j, "ori"));
}

PathLabel label_from(const std::string& s) {
  if (s == "los") return PathLabel::kLoS;
  if (s == "single") return PathLabel::kSingle;
  if (s == "multi") return PathLabel::kMulti;
  throw ValidationError("unknown path label '" + s + "'");
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

json snapshot_to_json(const Snapshot& s) {
  json paths = json::array();
  for (const PathMeasurement& p : s.paths) {
    paths.push_back(
        {{"toa_ns", p.toa * 1e9}, {"aod_rad", p.aod}, {"aoa_rad", p.aoa}, {"gain", p.gain}});
  }
  json j = {{"id", s.id}, {"bs", pose_json(s.bs)}, {"paths", paths}, {"truth", nullptr}};
  if (s.truth) {
    const SnapshotTruth& t = *s.truth;
    json labels = json::array();
    for (PathLabel l : t.labels) labels.push_back(to_string(l));
    json incidence = json::array();
    for (const auto& p : t.incidence) incidence.push_back(p ? vec_json(*p) : json(nullptr));
    j["truth"] = {{"ue",
                   {{"pos", vec_json(t.ue.position)},
                    {"ori", t.ue.orientation},
                    {"bias_ns", t.ue.clock_bias * 1e9}}},
                  {"labels", labels},
                  {"incidence", incidence}};
  }
  return j;
}

Snapshot snapshot_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("snapshot must be a JSON object");
  Snapshot s;
  if (!j.contains("id") || !j.at("id").is_string()) throw ValidationError("missing string 'id'");
  s.id = j.at("id").get<std::string>();
  s.bs = pose_from(j.at("bs"));
  const json& paths = j.at("paths");
  if (!paths.is_array() || paths.empty()) throw ValidationError("'paths' must be a non-empty array");
  for (const json& p : paths) {
    const double gain = number(p, "gain");
    if (!(gain > 0.0)) throw ValidationError("path gain must be positive");
    s.paths.emplace_back(number(p, "toa_ns") / 1e9, number(p, "aod_rad"), number(p, "aoa_rad"),
                         gain);
  }
  if (j.contains("truth") && !j.at("truth").is_null()) {
    const json& t = j.at("truth");
    SnapshotTruth truth;
    const json& ue = t.at("ue");
    truth.ue = UeState(vec_from(ue.at("pos")), number(ue, "ori"), number(ue, "bias_ns") / 1e9);
    for (const json& l : t.at("labels")) truth.labels.push_back(label_from(l.get<std::string>()));
    for (const json& p : t.at("incidence")) {
      truth.incidence.push_back(p.is_null() ? std::nullopt : std::optional<Vec2>(vec_from(p)));
    }
    if (truth.labels.size() != s.paths.size() || truth.incidence.size() != s.paths.size()) {
      throw ValidationError("truth labels do not align with paths");
    }
    s.truth = std::move(truth);
  }
  return s;
}

void write_dataset(std::ostream& os, std::span<const Snapshot> snapshots) {
  for (const Snapshot& s : snapshots) os << snapshot_to_json(s).dump() << '\n';
}

std::vector<Snapshot> read_dataset(std::istream& is, const std::string& source) {
  std::vector<Snapshot> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(snapshot_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Scene read_scene(std::istream& is, const std::string& source) {
  Scene scene;
  try {
    const json j = json::parse(is);
    scene.bs = pose_from(j.at("bs"));
    const json& walls = j.at("walls");
    if (!walls.is_array()) throw ValidationError("'walls' must be an array");
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const json& w = walls[i];
      if (!w.is_array() || w.size() != 3 || !w[2].is_number()) {
        throw ValidationError("wall " + std::to_string(i) + " must be [[x1,y1],[x2,y2],loss_db]");
      }
      scene.walls.push_back({{vec_from(w[0]), vec_from(w[1])}, w[2].get<double>()});
    }
    validate_scene(scene);
  } catch (const std::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return scene;
}

json scene_to_json(const Scene& scene) {
  json walls = json::array();
  for (const Wall& w : scene.walls) {
    walls.push_back({vec_json(w.segment.a), vec_json(w.segment.b), w.reflection_loss_db});
  }
  return {{"bs", pose_json(scene.bs)}, {"walls", walls}};
}

std::vector<UePlacement> read_placements(std::istream& is, const std::string& source) {
  std::vector<UePlacement> out;
  try {
    const json j = json::parse(is);
    if (!j.is_array()) throw ValidationError("placements must be an array");
    for (std::size_t i = 0; i < j.size(); ++i) {
      const json& p = j[i];
      if (!p.is_array() || (p.size() != 2 && p.size() != 3)) {
        throw ValidationError("placement " + std::to_string(i) + " must be [x,y] or [x,y,ori]");
      }
      UePlacement place;
      place.position = {p[0].get<double>(), p[1].get<double>()};
      if (p.size() == 3) place.orientation = p[2].get<double>();
      out.push_back(place);
    }
  } catch (const std::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return out;
}

json solution_to_json(const SolveRecord& r) {
  json j = {{"id", r.id}};
  if (!r.solution) {
    j["status"] = "failed";
    j["error"] = r.error;
    return j;
  }
  const SlamSolution& s = *r.solution;
  j["status"] = "ok";
  j["hypothesis"] = to_string(s.hypothesis);
  j["ue"] = {{"pos", vec_json(s.ue.position)},
             {"ori", s.ue.orientation},
             {"bias_ns", s.ue.clock_bias * 1e9}};
  j["cost"] = s.cost;
  j["inliers"] = s.inliers;
  j["outliers"] = s.outliers;
  j["los_path"] = s.los_path ? json(*s.los_path) : json(nullptr);
  json landmarks = json::array();
  for (const LandmarkEstimate& lm : s.landmarks) {
    landmarks.push_back({{"path", lm.source_path},
                         {"pos", vec_json(lm.position)},
                         {"cov",
                          {{lm.covariance(0, 0), lm.covariance(0, 1)},
                           {lm.covariance(1, 0), lm.covariance(1, 1)}}},
                         {"converged", lm.converged},
                         {"iterations", lm.iterations}});
  }
  j["landmarks"] = landmarks;
  if (r.detection) {
    const DetectionResult& d = *r.detection;
    j["detection"] = {{"decided", to_string(d.decided)},
                      {"statistic", std::isfinite(d.statistic) ? json(d.statistic) : json(nullptr)},
                      {"threshold", d.threshold},
                      {"candidate", d.candidate}};
  }
  return j;
}

void write_metrics_csv(std::ostream& os, std::span<const ErrorRecord> records, std::size_t failed,
                       bool with_timing) {
  os << "id,pos_err_m,heading_err_deg,bias_err_ns,decided,truth";
  if (with_timing) os << ",time_ms";
  os << '\n';
  for (const ErrorRecord& r : records) {
    os << r.id << ',' << csv_number(r.position_error) << ',' << csv_number(rad2deg(r.heading_error))
       << ',' << csv_number(r.bias_error * 1e9) << ',' << to_string(r.decided) << ','
       << (r.truth ? to_string(*r.truth) : "");
    if (with_timing) os << ',' << csv_number(r.solve_time * 1e3);
    os << '\n';
  }
  if (!records.empty()) {
    const Rmse e = rmse(records);
    os << "RMSE," << csv_number(e.position) << ',' << csv_number(rad2deg(e.heading)) << ','
       << csv_number(e.bias * 1e9) << ",,";
    if (with_timing) {
      std::vector<double> t;
      for (const ErrorRecord& r : records) t.push_back(r.solve_time);
      std::nth_element(t.begin(), t.begin() + static_cast<long>(t.size() / 2), t.end());
      os << ',' << csv_number(t[t.size() / 2] * 1e3);
    }
    os << '\n';
  }
  os << "FAILED," << failed << ",,,,";
  if (with_timing) os << ',';
  os << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "p,rmse,rmse_excluding,trials\n";
  for (std::size_t i = 0; i < sweep.p_los_detect.size(); ++i) {
    os << csv_number(sweep.p_los_detect[i]) << ',' << csv_number(sweep.rmse_curve[i]) << ','
       << csv_number(sweep.rmse_curve_excluding[i]) << ',' << sweep.trials << '\n';
  }
}

std::vector<double> parse_grid(const std::string& spec) {
  auto to_double = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + s + "' in grid '" + spec + "'");
    }
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw ValidationError("grid '" + spec + "' must be start:step:stop");
    const double lo = to_double(parts[0]);
    const double step = to_double(parts[1]);
    const double hi = to_double(parts[2]);
    if (!(step > 0.0) || hi < lo) throw ValidationError("grid '" + spec + "' is empty");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(to_double(part));
  }
  for (double p : out) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("grid values must lie in [0, 1]");
  }
  if (out.empty()) throw ValidationError("empty grid");
  return out;
}

}  // namespace rslam::io
