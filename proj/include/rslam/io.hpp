#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rslam/detector.hpp"
#include "rslam/eval.hpp"
#include "rslam/robust.hpp"
#include "rslam/sim.hpp"
#include "rslam/types.hpp"

namespace rslam::io {

// Dataset: JSON Lines, one snapshot per line. Delays are written in
// nanoseconds and held in seconds in memory.
nlohmann::json snapshot_to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const nlohmann::json& j);

void write_dataset(std::ostream& os, std::span<const Snapshot> snapshots);
/// Throws ValidationError with "<source>:<line>:" context.
std::vector<Snapshot> read_dataset(std::istream& is, const std::string& source);

// Scene: {"bs": {"pos": [x, y], "ori": rad}, "walls": [[[x1, y1], [x2, y2], loss_db], ...]}
Scene read_scene(std::istream& is, const std::string& source);
nlohmann::json scene_to_json(const Scene& scene);

// Placements: [[x, y], [x, y, ori_rad], ...]
std::vector<UePlacement> read_placements(std::istream& is, const std::string& source);

struct SolveRecord {
  std::string id;
  std::optional<SlamSolution> solution;
  std::optional<DetectionResult> detection;
  std::string error;  // set when the solve failed
  double solve_time = 0.0;
};

nlohmann::json solution_to_json(const SolveRecord& record);

/// Per-snapshot error table with RMSE and failure-count footer rows.
void write_metrics_csv(std::ostream& os, std::span<const ErrorRecord> records, std::size_t failed,
                       bool with_timing);

void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

/// "start:step:stop" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace rslam::io
