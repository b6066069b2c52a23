#pragma once

// Free-bending kinematics: maps curvature/torsion samples to bending-die
// poses (X/Y translation, A/B rotation) and timestamps for a six-axis
// free-bending machine.

#include <piperoute/errors.hpp>
#include <piperoute/io.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace piperoute {

inline constexpr double kDefaultKappaEps = 1e-6;

struct MachineConfig {
  double A0 = 40.0;   // bending die to guider centre distance, mm (machine specific)
  double k = 1.5;     // springback correction factor
  double v_z = 1.5;   // pusher feed, mm/s
  double R_min = 100.0;
  double kappa_eps = kDefaultKappaEps;
  double sample_ds = 1.0;  // path sampling for die_pose_sequence, mm

  void validate() const {
    if (!(A0 > 0.0 && k > 0.0 && v_z > 0.0 && R_min > 0.0 && kappa_eps > 0.0 && sample_ds > 0.0)) {
      throw domain_error("MachineConfig: A0, k, v_z, R_min, kappa_eps and sample_ds must be positive");
    }
  }
};

inline nlohmann::json to_json(const MachineConfig& c) {
  return {{"schema_version", 1}, {"A0_mm", c.A0},       {"k", c.k},
          {"vz_mm_s", c.v_z},    {"R_min_mm", c.R_min}, {"kappa_eps_per_mm", c.kappa_eps},
          {"sample_ds_mm", c.sample_ds}};
}

inline MachineConfig machine_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw parse_error("machine config: expected an object");
  if (j.value("schema_version", 0) != 1) throw parse_error("machine config: unsupported schema_version");
  MachineConfig c;
  try {
    c.A0 = j.at("A0_mm").get<double>();
    c.k = j.value("k", c.k);
    c.v_z = j.value("vz_mm_s", c.v_z);
    c.R_min = j.value("R_min_mm", c.R_min);
    c.kappa_eps = j.value("kappa_eps_per_mm", c.kappa_eps);
    c.sample_ds = j.value("sample_ds_mm", c.sample_ds);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("machine config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Base radius R0 and lead P0 of the local spiral microelement.
struct HelixParams {
  double R0 = std::numeric_limits<double>::infinity();
  double P0 = 0.0;

  bool straight() const { return !std::isfinite(R0); }
};

struct DiePose {
  double Px = 0.0;
  double Py = 0.0;
  double phiA = 0.0;
  double phiB = 0.0;
  double t = 0.0;
};

/// R0 = kappa/(kappa^2+tau^2), P0 = 2 pi tau/(kappa^2+tau^2); kappa below
/// kappa_eps is a straight sample (infinite R0).
inline HelixParams helix_params(double kappa, double tau, double kappa_eps = kDefaultKappaEps) {
  if (kappa < kappa_eps) return {};
  const double w2 = kappa * kappa + tau * tau;
  return {kappa / w2, 2.0 * std::numbers::pi * tau / w2};
}

inline bool check_manufacturable(double kappa, double tau, double R_min,
                                 double kappa_eps = kDefaultKappaEps) {
  if (kappa < kappa_eps) return true;
  const double R0 = kappa / (kappa * kappa + tau * tau);
  return R0 >= R_min * (1.0 - 1e-12);
}

struct DieDeflection {
  double alphaA = 0.0;
  double Uy = 0.0;
};

/// alpha_A = asin(k A0 / R0), U_y = R0 (1 - cos alpha_A).
inline DieDeflection die_deflection(const HelixParams& h, const MachineConfig& cfg) {
  if (h.straight()) return {};
  const double ratio = cfg.k * cfg.A0 / h.R0;
  if (!(ratio <= 1.0)) {
    throw infeasible_geometry("die_deflection: k*A0/R0 = " + format_double(ratio) +
                                  " > 1 (R0 = " + format_double(h.R0) + " mm)",
                              0);
  }
  const double a = std::asin(ratio);
  return {a, h.R0 * (1.0 - std::cos(a))};
}

/// Rotation of the die about Z accumulated over an arc of length d.
inline double die_rotation_increment(const HelixParams& h, double d) {
  if (h.straight() || d == 0.0) return 0.0;
  const double circ = 2.0 * std::numbers::pi * h.R0;
  return 2.0 * std::numbers::pi * d * h.P0 / (circ * circ + h.P0 * h.P0);
}

inline DiePose die_pose(const DieDeflection& dd, double alpha_z, double t) {
  const double c = std::cos(alpha_z);
  const double s = std::sin(alpha_z);
  return {dd.Uy * s, dd.Uy * c, -dd.alphaA * c, dd.alphaA * s, t};
}

/// (spacing to previous sample, kappa, tau); the first spacing is 0.
struct BendSample {
  double d = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
};

inline std::vector<DiePose> die_pose_sequence(std::span<const BendSample> samples, const MachineConfig& cfg) {
  std::vector<DiePose> poses;
  if (samples.empty()) return poses;
  if (samples.front().d != 0.0) throw domain_error("die_pose_sequence: first spacing must be 0");
  poses.reserve(samples.size());

  double alpha_z = 0.0;
  double travelled = 0.0;
  double lead_in = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const BendSample& smp = samples[i];
    if (!(smp.d >= 0.0)) throw domain_error("die_pose_sequence: negative spacing at sample " + std::to_string(i));
    const HelixParams h = helix_params(smp.kappa, smp.tau, cfg.kappa_eps);
    DieDeflection dd;
    try {
      dd = die_deflection(h, cfg);
    } catch (const infeasible_geometry& e) {
      throw infeasible_geometry("sample " + std::to_string(i) + ": " + e.what(), i);
    }
    if (i == 0) lead_in = h.straight() ? 0.0 : h.R0 * dd.alphaA / cfg.v_z;
    alpha_z += die_rotation_increment(h, smp.d);
    travelled += smp.d;
    poses.push_back(die_pose(dd, alpha_z, lead_in + travelled / cfg.v_z));
  }
  return poses;
}

/// Closed-form three-stage bending of one cylindrical spiral (R0, P0, l0).
struct SpiralStages {
  DiePose stage1_end;
  DiePose stage2_end;
  double t1 = 0.0;
  double t2 = 0.0;
};

inline SpiralStages spiral_stage_poses(double R0, double P0, double l0, const MachineConfig& cfg) {
  if (!(R0 > 0.0)) throw domain_error("spiral_stage_poses: R0 must be positive");
  const double ratio = cfg.k * cfg.A0 / R0;
  if (!(ratio <= 1.0)) throw infeasible_geometry("spiral_stage_poses: k*A0/R0 > 1", 0);
  const double alphaA = std::asin(ratio);
  const double Uy = R0 - R0 * std::cos(alphaA);
  const double two_pi = 2.0 * std::numbers::pi;
  const double alpha_z = two_pi * l0 * P0 / ((two_pi * R0) * (two_pi * R0) + P0 * P0);

  SpiralStages out;
  out.t1 = R0 * alphaA / cfg.v_z;
  out.t2 = l0 / cfg.v_z;
  out.stage1_end = {0.0, Uy, -alphaA, 0.0, out.t1};
  out.stage2_end = {Uy * std::sin(alpha_z), Uy * std::cos(alpha_z), -alphaA * std::cos(alpha_z),
                    alphaA * std::sin(alpha_z), out.t1 + out.t2};
  return out;
}

/// Turns a uniformly sampled profile into die-pose inputs (d_1 = 0).
inline std::vector<BendSample> bend_samples(std::span<const ProfileSample> profile) {
  std::vector<BendSample> out;
  out.reserve(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double d = i == 0 ? 0.0 : profile[i].s - profile[i - 1].s;
    out.push_back({d, profile[i].kappa, profile[i].tau});
  }
  return out;
}

inline constexpr const char* kTrajectoryHeader =
    "t_s,Px_mm,Py_mm,phiA_rad,phiB_rad,z_mm,vPx_mm_s,vPy_mm_s,vphiA_rad_s,vphiB_rad_s,vz_mm_s";

/// Axis trajectory CSV; velocities by central differences (one-sided at the ends).
inline std::string export_trajectory(std::span<const DiePose> poses, const MachineConfig& cfg,
                                     const Provenance& prov = {}) {
  if (poses.empty()) throw domain_error("export_trajectory: empty pose list");
  std::ostringstream os;
  write_provenance(os, prov);
  os << kTrajectoryHeader << '\n';
  const std::size_t n = poses.size();
  auto rate = [&](std::size_t i, auto field) {
    if (n < 2) return 0.0;
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? i : i + 1;
    const double dt = poses[b].t - poses[a].t;
    return dt > 0.0 ? (field(poses[b]) - field(poses[a])) / dt : 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const DiePose& p = poses[i];
    os << format_double(p.t) << ',' << format_double(p.Px) << ',' << format_double(p.Py) << ','
       << format_double(p.phiA) << ',' << format_double(p.phiB) << ',' << format_double(cfg.v_z * p.t) << ','
       << format_double(rate(i, [](const DiePose& q) { return q.Px; })) << ','
       << format_double(rate(i, [](const DiePose& q) { return q.Py; })) << ','
       << format_double(rate(i, [](const DiePose& q) { return q.phiA; })) << ','
       << format_double(rate(i, [](const DiePose& q) { return q.phiB; })) << ','
       << format_double(n < 2 ? 0.0 : cfg.v_z) << '\n';
  }
  return os.str();
}

inline std::vector<DiePose> parse_trajectory(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const auto ct = t.require("t_s");
  const auto cx = t.require("Px_mm");
  const auto cy = t.require("Py_mm");
  const auto ca = t.require("phiA_rad");
  const auto cb = t.require("phiB_rad");
  std::vector<DiePose> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back({r[cx], r[cy], r[ca], r[cb], r[ct]});
  return out;
}

}  // namespace piperoute
