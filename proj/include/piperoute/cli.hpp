#pragma once

// Subcommand implementations behind the piperoute executable: route
// (train + export everything), eval, export-machine and compare.

#include <piperoute/env.hpp>
#include <piperoute/errors.hpp>
#include <piperoute/io.hpp>
#include <piperoute/machine.hpp>
#include <piperoute/metrics.hpp>
#include <piperoute/ppo.hpp>
#include <piperoute/scene.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace piperoute {

inline nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error("'" + path + "': " + e.what());
  }
}

struct RunConfig {
  std::string scene_path;
  std::string route;  // empty: first route in the scene
  std::string machine_path;  // empty: built-in defaults
  nlohmann::json rl_overrides = nlohmann::json::object();
  nlohmann::json reward_overrides = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct RunArtifacts {
  bool done = false;
  LayoutReport report;
  std::filesystem::path path_csv, profile_csv, trajectory_csv, training_log_csv, layout_report_json,
      checkpoint_json, trace_csv;
  std::string trajectory_note;  // why trajectory.csv is missing, if it is
  TrainResult training;
};

/// Resolved configuration of a route run, echoed into every artifact.
struct ResolvedRun {
  Scene scene;
  MachineConfig machine;
  RLConfig rl;
  RewardWeights weights;
  nlohmann::json echo;
};

inline ResolvedRun resolve_run(const RunConfig& rc) {
  ResolvedRun r;
  r.scene = load_scene_file(rc.scene_path, rc.route);
  if (!rc.machine_path.empty()) r.machine = machine_config_from_json(read_json_file(rc.machine_path));
  r.rl = rl_config_from_json(rc.rl_overrides);
  r.weights = reward_weights_from_json(rc.reward_overrides);
  r.echo = {{"scene", rc.scene_path}, {"scene_name", r.scene.name},    {"route", r.scene.route},
            {"seed", rc.seed},        {"machine", to_json(r.machine)}, {"rl", to_json(r.rl)},
            {"reward", to_json(r.weights)}};
  return r;
}

inline Provenance provenance_lines(const std::string& command, const nlohmann::json& echo) {
  return {"piperoute " + command, "seed=" + echo.value("seed", nlohmann::json(0)).dump(), "config=" + echo.dump()};
}

inline nlohmann::json provenance_json(const std::string& command, const nlohmann::json& echo) {
  return {{"command", command}, {"config", echo}};
}

/// Profile samples along a finished path: the designed profile every
/// `ds`, then zero curvature/torsion over the straight extension.
inline std::vector<ProfileSample> path_profile_samples(const GeoProfile& profile, const Polyline& path,
                                                       double ds = 1.0) {
  std::vector<ProfileSample> out = sample_profile(profile, ds);
  for (const auto& p : path.points) {
    if (p.extension && p.s > out.back().s + 1e-12) out.push_back({p.s, 0.0, 0.0});
  }
  return out;
}

inline std::string trace_to_csv(const std::vector<StepRecord>& trace, const Provenance& prov = {}) {
  std::ostringstream os;
  write_provenance(os, prov);
  os << "step,stage_before,stage_after,delta_s_mm,kappa_per_mm,tau_per_mm,theta_rad,r_dist,r_angle,r_len,r_obs,"
        "r_manuf,objective,stage_reward,reward,l_align,obs_fraction,manuf_fraction\n";
  for (const auto& r : trace) {
    os << r.step << ',' << static_cast<int>(r.stage_before) << ',' << static_cast<int>(r.stage_after);
    for (double v : {r.action.delta_s, r.action.kappa, r.action.tau, r.action.theta, r.objective.dist,
                     r.objective.angle, r.objective.len, r.objective.obs, r.objective.manuf, r.objective.total,
                     r.stage_reward, r.reward, r.l_align, r.indicators.obs_fraction, r.indicators.manuf_fraction}) {
      os << ',' << format_double(v);
    }
    os << '\n';
  }
  return os.str();
}

/// Die trajectory for a profile; infeasible samples are reported by arc length.
inline std::string machine_trajectory(const std::vector<ProfileSample>& samples, const MachineConfig& cfg,
                                      const Provenance& prov = {}) {
  const auto bs = bend_samples(samples);
  std::vector<DiePose> poses;
  try {
    poses = die_pose_sequence(bs, cfg);
  } catch (const infeasible_geometry& e) {
    const double s = samples[e.index()].s;
    throw infeasible_geometry("infeasible die pose at s = " + format_double(s) + " mm (kappa " +
                                  format_double(samples[e.index()].kappa) + ", tau " +
                                  format_double(samples[e.index()].tau) + "): k*A0 exceeds R0",
                              e.index());
  }
  return export_trajectory(poses, cfg, prov);
}

/**
 * Trains on the scene, keeps the best episode and writes path.csv,
 * profile.csv, trajectory.csv, training_log.csv, layout_report.json,
 * checkpoint.json and best_episode_trace.csv into rc.out_dir.
 * `done` is true iff some episode reached the Done stage.
 */
inline RunArtifacts cmd_route(const RunConfig& rc, std::ostream* progress = nullptr) {
  const ResolvedRun run = resolve_run(rc);
  namespace fs = std::filesystem;
  const fs::path out(rc.out_dir);
  fs::create_directories(out);
  const Provenance prov = provenance_lines("route", run.echo);

  RunArtifacts art;
  art.training_log_csv = out / "training_log.csv";
  TrainProgress cb;
  if (progress) {
    cb = [&](const TrainLogRow& r) {
      *progress << "update " << r.update_idx << " step " << r.global_step << " mean_return "
                << format_double(r.mean_return) << " best " << format_double(r.best_return) << " done "
                << format_double(r.frac_done) << '\n';
    };
  }
  try {
    art.training = train(run.scene, run.machine, run.rl, run.weights, rc.seed, cb);
  } catch (const numeric_fault&) {
    write_text_file(art.training_log_csv.string(), train_log_to_csv({}, prov));
    throw;
  }
  write_text_file(art.training_log_csv.string(), train_log_to_csv(art.training.log, prov));

  const BestEpisode& best = art.training.best;
  art.done = best.found && best.done;

  art.checkpoint_json = out / "checkpoint.json";
  nlohmann::json ckpt = checkpoint_to_json(art.training.best_params, run.echo);
  ckpt["best_global_step"] = best.global_step;
  ckpt["best_return"] = best.found ? nlohmann::json(best.ret) : nlohmann::json(nullptr);
  ckpt["best_done"] = art.done;
  write_text_file(art.checkpoint_json.string(), ckpt.dump(2) + "\n");

  if (!best.found) return art;

  art.path_csv = out / "path.csv";
  write_text_file(art.path_csv.string(), polyline_to_csv(best.path, prov));

  const auto samples = path_profile_samples(best.profile, best.path, run.machine.sample_ds);
  art.profile_csv = out / "profile.csv";
  write_text_file(art.profile_csv.string(), profile_to_csv(samples, prov));

  try {
    const std::string traj = machine_trajectory(samples, run.machine, prov);
    art.trajectory_csv = out / "trajectory.csv";
    write_text_file(art.trajectory_csv.string(), traj);
  } catch (const infeasible_geometry& e) {
    art.trajectory_note = e.what();
    fs::remove(out / "trajectory.csv");
  }

  art.report = layout_report(best.path, run.scene, run.machine.R_min, run.scene.target, run.rl.s_max);
  art.layout_report_json = out / "layout_report.json";
  nlohmann::json rep = to_json(art.report);
  rep["done"] = art.done;
  rep["return"] = best.ret;
  if (!art.trajectory_note.empty()) rep["trajectory_error"] = art.trajectory_note;
  rep["provenance"] = provenance_json("route", run.echo);
  write_text_file(art.layout_report_json.string(), rep.dump(2) + "\n");

  art.trace_csv = out / "best_episode_trace.csv";
  write_text_file(art.trace_csv.string(), trace_to_csv(best.trace, prov));
  return art;
}

struct EvalConfig {
  std::string polyline_path;
  std::string scene_path;
  std::string route;
  std::string machine_path;
  double s_max = 20.0;
  std::string out_path;  // optional report file
};

inline LayoutReport cmd_eval(const EvalConfig& ec) {
  const Polyline line = polyline_from_csv(read_text_file(ec.polyline_path));
  const Scene scene = load_scene_file(ec.scene_path, ec.route);
  MachineConfig machine;
  if (!ec.machine_path.empty()) machine = machine_config_from_json(read_json_file(ec.machine_path));
  const LayoutReport rep = layout_report(line, scene, machine.R_min, scene.target, ec.s_max);
  if (!ec.out_path.empty()) {
    nlohmann::json j = to_json(rep);
    j["provenance"] = provenance_json(
        "eval", {{"polyline", ec.polyline_path}, {"scene", ec.scene_path}, {"route", scene.route},
                 {"machine", to_json(machine)}, {"s_max", ec.s_max}});
    write_text_file(ec.out_path, j.dump(2) + "\n");
  }
  return rep;
}

/// Reads a profile CSV (s_mm, kappa_per_mm, tau_per_mm) or a polyline CSV and
/// returns the die trajectory CSV.
inline std::string cmd_export_machine(const std::string& input_path, const std::string& machine_path) {
  MachineConfig machine;
  if (!machine_path.empty()) machine = machine_config_from_json(read_json_file(machine_path));
  const std::string text = read_text_file(input_path);
  std::vector<ProfileSample> samples;
  if (parse_csv(text).column("x_mm") >= 0) {
    for (const auto& p : polyline_from_csv(text).points) samples.push_back({p.s, p.kappa, p.tau});
  } else {
    samples = profile_from_csv(text);
  }
  const nlohmann::json echo = {{"input", input_path}, {"machine", to_json(machine)}};
  return machine_trajectory(samples, machine, provenance_lines("export-machine", echo));
}

/// 3D points from a polyline CSV or any CSV with x_mm, y_mm, z_mm columns.
inline Trajectory read_trajectory_points(const std::string& path) {
  const CsvTable t = parse_csv(read_text_file(path));
  const auto cx = t.require("x_mm");
  const auto cy = t.require("y_mm");
  const auto cz = t.require("z_mm");
  Trajectory pts;
  for (const auto& r : t.rows) pts.emplace_back(r[cx], r[cy], r[cz]);
  if (pts.empty()) throw parse_error("'" + path + "' has no points");
  return pts;
}

/// Both trajectories are resampled every `spacing` mm before comparison.
inline SimilarityReport cmd_compare(const std::string& a_path, const std::string& b_path,
                                    double eps = kDefaultSimilarityEps, double spacing = 1.0) {
  const Trajectory a = resample_uniform(read_trajectory_points(a_path), spacing);
  const Trajectory b = resample_uniform(read_trajectory_points(b_path), spacing);
  return compare_trajectories(a, b, eps);
}

}  // namespace piperoute
