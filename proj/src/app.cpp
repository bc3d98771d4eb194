#include "rslam/app.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "rslam/detector.hpp"
#include "rslam/errors.hpp"
#include "rslam/eval.hpp"
#include "rslam/io.hpp"
#include "rslam/parallel.hpp"
#include "rslam/robust.hpp"
#include "rslam/sim.hpp"

namespace rslam {

namespace {

struct RunConfig {
  double t_eps = 0.1;
  double t_nu = 0.1;
  double t_los = kDefaultLosThreshold;
  double t_outlier = 3.0;
  std::size_t grid_size = 361;
  double sigma_toa_ns = 1.0;
  double sigma_aod_deg = 1.0;
  double sigma_aoa_deg = 1.0;
  double l0_db = 13.0;
  double zeta = 1.7;
  double sigma_db = 1.8;
  int max_bounces = 2;
  std::size_t max_paths = 0;
  double per_bounce_extra_db = 6.0;
  double bias_range_ns = 100.0;
  bool relabel_consistent = false;
  std::uint64_t seed = 1;
  unsigned workers = 0;

  std::string out;
  std::string scene;
  std::string positions;
  std::string dataset;
  std::string mode = "robust_mixed";
  std::string metrics;
  bool timing = false;
  bool strip_outliers = false;
  std::string p_grid = "0:0.1:1";
  std::size_t trials = 1000;
  std::vector<std::string> exclude;

  NoiseModel noise() const {
    NoiseModel n;
    n.sigma_toa = sigma_toa_ns * 1e-9;
    n.sigma_aod = deg2rad(sigma_aod_deg);
    n.sigma_aoa = deg2rad(sigma_aoa_deg);
    return n;
  }
  PathLossModel path_loss() const { return {l0_db, zeta, sigma_db}; }
  RobustConfig robust() const {
    RobustConfig c;
    c.t_eps = t_eps;
    c.t_nu = t_nu;
    c.grid_size = grid_size;
    c.noise = noise();
    return c;
  }
  SimConfig sim() const {
    SimConfig c;
    c.max_bounces = max_bounces;
    c.max_paths = max_paths;
    c.noise = noise();
    c.path_loss = path_loss();
    c.per_bounce_extra_db = per_bounce_extra_db;
    c.bias_range = bias_range_ns * 1e-9;
    c.relabel_consistent = relabel_consistent;
    c.relabel_t_eps = t_eps;
    return c;
  }
  unsigned worker_count() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

void validate(const RunConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string(name) + " must be positive");
  };
  positive(c.t_eps, "t_eps");
  positive(c.t_nu, "t_nu");
  positive(c.t_los, "t_los");
  positive(c.t_outlier, "t_outlier");
  if (c.grid_size < 1) throw ValidationError("grid_size must be at least 1");
  if (c.sigma_toa_ns < 0 || c.sigma_aod_deg < 0 || c.sigma_aoa_deg < 0 || c.sigma_db < 0) {
    throw ValidationError("noise sigmas must be non-negative");
  }
  if (c.max_bounces < 0 || c.max_bounces > 3) throw ValidationError("max_bounces must be in [0, 3]");
  if (c.bias_range_ns < 0) throw ValidationError("bias_range_ns must be non-negative");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

int cmd_simulate(const RunConfig& c) {
  std::ifstream scene_in = open_in(c.scene);
  const Scene scene = io::read_scene(scene_in, c.scene);
  std::ifstream pos_in = open_in(c.positions);
  const std::vector<UePlacement> placements = io::read_placements(pos_in, c.positions);
  std::vector<Snapshot> data;
  try {
    data = generate_dataset(scene, placements, c.sim(), c.seed);
  } catch (const InvalidPosition& e) {
    throw ValidationError(c.positions + ": " + e.what());
  }
  std::ofstream out = open_out(c.out);
  io::write_dataset(out, data);
  std::cout << "wrote " << data.size() << " snapshots to " << c.out << '\n';
  return kExitOk;
}

std::vector<Snapshot> load_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Snapshot> data = io::read_dataset(in, path);
  if (data.empty()) throw ValidationError(path + ": dataset is empty");
  return data;
}

io::SolveRecord solve_one(const Snapshot& input, const RunConfig& c, const RobustConfig& rc) {
  io::SolveRecord rec;
  rec.id = input.id;
  try {
    const Snapshot snap =
        c.strip_outliers ? strip_outliers_by_truth(input, rc.noise, c.t_outlier, rc.gauss_newton)
                         : input;
    const auto start = std::chrono::steady_clock::now();
    if (c.mode == "robust_mixed") {
      MixedResult r = mixed_solve(snap, rc, c.path_loss(), c.t_los);
      rec.solution = std::move(r.solution);
      rec.detection = r.detection;
    } else if (c.mode == "robust_h0") {
      rec.solution = robust_solve(snap, Hypothesis::kLoS, rc);
    } else if (c.mode == "robust_h1") {
      rec.solution = robust_solve(snap, Hypothesis::kNLoS, rc);
    } else {
      rec.solution = benchmark_solve(snap, rc);
    }
    rec.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  } catch (const std::exception& e) {
    rec.solution.reset();
    rec.detection.reset();
    rec.error = e.what();
  }
  return rec;
}

int cmd_solve(const RunConfig& c) {
  const std::vector<Snapshot> data = load_dataset(c.dataset);
  const RobustConfig rc = c.robust();
  if (c.strip_outliers) {
    for (const Snapshot& s : data) {
      if (!s.truth) throw ValidationError(s.id + ": strip_outliers needs ground truth");
    }
  }

  std::vector<io::SolveRecord> records(data.size());
  parallel_for(data.size(), c.worker_count(),
               [&](std::size_t i) { records[i] = solve_one(data[i], c, rc); });

  std::ofstream out = open_out(c.out);
  std::size_t failed = 0;
  for (const io::SolveRecord& r : records) {
    if (!r.solution) ++failed;
    out << io::solution_to_json(r).dump() << '\n';
  }
  std::cout << "solved " << (data.size() - failed) << "/" << data.size() << " snapshots, wrote "
            << c.out << '\n';

  const bool any_truth =
      std::any_of(data.begin(), data.end(), [](const Snapshot& s) { return s.truth.has_value(); });
  if (!any_truth) {
    std::cerr << "notice: dataset has no ground truth, metrics skipped\n";
  } else {
    std::vector<ErrorRecord> errors;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const io::SolveRecord& r = records[i];
      if (!r.solution || !data[i].truth) continue;
      const Hypothesis decided = r.detection ? r.detection->decided : r.solution->hypothesis;
      const SnapshotTruth& t = *data[i].truth;
      errors.push_back(make_error_record(r.id, t.ue, r.solution->ue, decided,
                                         t.has_los() ? Hypothesis::kLoS : Hypothesis::kNLoS,
                                         r.solve_time));
    }
    const std::string metrics_path =
        c.metrics.empty()
            ? std::filesystem::path(c.out).replace_extension(".metrics.csv").string()
            : c.metrics;
    std::ofstream m = open_out(metrics_path);
    io::write_metrics_csv(m, errors, failed, c.timing);
    std::cout << "wrote " << metrics_path << '\n';
  }
  return failed == data.size() ? kExitSolverFailure : kExitOk;
}

int cmd_sweep(const RunConfig& c) {
  const std::vector<Snapshot> data = load_dataset(c.dataset);
  const std::vector<double> grid = io::parse_grid(c.p_grid);
  if (c.trials < 1) throw ValidationError("trials must be at least 1");
  SweepResult sweep;
  try {
    sweep = los_sensitivity_sweep(data, c.robust(), grid, c.trials, c.seed, c.exclude,
                                  c.worker_count());
  } catch (const MissingTruth& e) {
    throw ValidationError(c.dataset + ": " + e.what());
  }
  std::ofstream out = open_out(c.out);
  io::write_sweep_csv(out, sweep);
  std::cout << "wrote " << grid.size() << " sweep points to " << c.out;
  if (sweep.dropped > 0) std::cout << " (" << sweep.dropped << " snapshots without a solve)";
  std::cout << '\n';
  return sweep.dropped == data.size() ? kExitSolverFailure : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  RunConfig c;
  CLI::App app{"Single-snapshot radio SLAM: simulate, solve and sweep"};
  app.name(args.empty() ? "rslam" : args.front());
  app.require_subcommand(1);
  app.set_config("--config", "", "Key = value config file; flags override it")
      ->envname("RSLAM_CONFIG");

  app.add_option("--t_eps", c.t_eps, "Inlier threshold [m^2]")->capture_default_str();
  app.add_option("--t_nu", c.t_nu, "Near-parallel threshold")->capture_default_str();
  app.add_option("--t_los", c.t_los, "LoS test threshold [nats]")->capture_default_str();
  app.add_option("--t_outlier", c.t_outlier, "Ground-truth outlier threshold")->capture_default_str();
  app.add_option("--grid_size", c.grid_size, "Heading grid size under NLoS")->capture_default_str();
  app.add_option("--sigma_toa_ns", c.sigma_toa_ns)->capture_default_str();
  app.add_option("--sigma_aod_deg", c.sigma_aod_deg)->capture_default_str();
  app.add_option("--sigma_aoa_deg", c.sigma_aoa_deg)->capture_default_str();
  app.add_option("--l0_db", c.l0_db)->capture_default_str();
  app.add_option("--zeta", c.zeta)->capture_default_str();
  app.add_option("--sigma_db", c.sigma_db)->capture_default_str();
  app.add_option("--max_bounces", c.max_bounces)->capture_default_str();
  app.add_option("--max_paths", c.max_paths, "Keep the earliest N paths (0 = all)")
      ->capture_default_str();
  app.add_option("--per_bounce_extra_db", c.per_bounce_extra_db)->capture_default_str();
  app.add_option("--bias_range_ns", c.bias_range_ns)->capture_default_str();
  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--workers", c.workers, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", c.out, "Output file");

  CLI::App* sim = app.add_subcommand("simulate", "Trace a scene into a JSON Lines dataset");
  sim->fallthrough();
  sim->add_option("--scene", c.scene)->required();
  sim->add_option("--positions", c.positions)->required();
  sim->add_flag("--relabel_consistent", c.relabel_consistent,
                "Label multi-bounce paths that fit a single bounce at the truth as single");

  CLI::App* solve = app.add_subcommand("solve", "Solve every snapshot of a dataset");
  solve->fallthrough();
  solve->add_option("--dataset", c.dataset)->required();
  solve->add_option("--mode", c.mode)
      ->check(CLI::IsMember({"robust_mixed", "robust_h0", "robust_h1", "benchmark"}))
      ->capture_default_str();
  solve->add_option("--metrics", c.metrics, "Metrics CSV (default: <out>.metrics.csv)");
  solve->add_flag("--timing", c.timing, "Add solve times to the metrics");
  solve->add_flag("--strip_outliers", c.strip_outliers,
                  "Drop paths flagged by the ground-truth residual test first");

  CLI::App* sweep = app.add_subcommand("sweep", "LoS detection sensitivity sweep");
  sweep->fallthrough();
  sweep->add_option("--dataset", c.dataset)->required();
  sweep->add_option("--p_grid", c.p_grid, "start:step:stop or a comma list")->capture_default_str();
  sweep->add_option("--trials", c.trials)->capture_default_str();
  sweep->add_option("--exclude", c.exclude, "Snapshot ids left out of the second curve");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    validate(c);
    if (c.out.empty()) throw ValidationError("--out is required");
    if (sim->parsed()) return cmd_simulate(c);
    if (solve->parsed()) return cmd_solve(c);
    return cmd_sweep(c);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolverFailure;
  }
}

}  // namespace rslam
