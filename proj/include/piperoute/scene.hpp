#pragma once

// Routing environment: analytic obstacles inside an axis-aligned workspace,
// start/target ports, and centerline clearance / ray queries against
// obstacles inflated by the pipe radius.

#include <piperoute/errors.hpp>
#include <piperoute/frenet.hpp>
#include <piperoute/io.hpp>
#include <piperoute/machine.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace piperoute {

struct Port {
  Vec3 position{Vec3::Zero()};
  Vec3 direction{Vec3::UnitX()};
};

struct Sphere {
  Vec3 center;
  double radius;
};

struct Box {
  Vec3 lo;
  Vec3 hi;
};

struct Capsule {
  Vec3 p0;
  Vec3 p1;
  double radius;
};

using Obstacle = std::variant<Sphere, Box, Capsule>;

struct Workspace {
  Vec3 lo{Vec3::Constant(-500.0)};
  Vec3 hi{Vec3::Constant(500.0)};

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

struct Scene {
  std::string name;
  std::string route;
  std::vector<Obstacle> obstacles;
  Port start;
  Port target;
  Workspace workspace;
  double pipe_diameter = 25.0;

  double pipe_radius() const { return 0.5 * pipe_diameter; }
};

// --- signed distances ------------------------------------------------------

inline double box_signed_distance(const Vec3& lo, const Vec3& hi, const Vec3& p) {
  const Vec3 c = 0.5 * (lo + hi);
  const Vec3 h = 0.5 * (hi - lo);
  const Vec3 q = (p - c).cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

inline double signed_distance(const Obstacle& ob, const Vec3& p) {
  return std::visit(
      [&](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return (p - o.center).norm() - o.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          return box_signed_distance(o.lo, o.hi, p);
        } else {
          const Vec3 ab = o.p1 - o.p0;
          const double len2 = ab.squaredNorm();
          const double u = len2 > 0.0 ? std::clamp((p - o.p0).dot(ab) / len2, 0.0, 1.0) : 0.0;
          return (p - (o.p0 + u * ab)).norm() - o.radius;
        }
      },
      ob);
}

/// Signed clearance of a pipe centred at p: distance to the nearest obstacle
/// surface or workspace face, minus the pipe radius. Negative means collision
/// (or outside the workspace).
inline double min_clearance(const Vec3& p, const Scene& scene) {
  double d = -box_signed_distance(scene.workspace.lo, scene.workspace.hi, p);
  for (const auto& ob : scene.obstacles) d = std::min(d, signed_distance(ob, p));
  return d - scene.pipe_radius();
}

/// Distance along a unit ray to the first point of zero clearance, capped at
/// max_range. min_clearance is an exact distance bound in free space, so
/// sphere tracing never steps past a surface.
inline double ray_probe(const Vec3& p, const Vec3& dir, const Scene& scene, double max_range) {
  constexpr double hit_tol = 1e-9;
  constexpr int max_iter = 512;
  double t = 0.0;
  for (int i = 0; i < max_iter; ++i) {
    const double c = min_clearance(p + t * dir, scene);
    if (c <= hit_tol) return std::min(t, max_range);
    t += c;
    if (t >= max_range) return max_range;
  }
  return std::min(t, max_range);
}

struct SegmentIndicators {
  double obs_fraction = 0.0;
  double manuf_fraction = 0.0;
};

/// Linear interpolation of a polyline at arc length s (clamped to its span).
inline PathSample interpolate(const Polyline& line, double s) {
  const auto& pts = line.points;
  if (s <= pts.front().s) return pts.front();
  if (s >= pts.back().s) return pts.back();
  auto it = std::upper_bound(pts.begin(), pts.end(), s, [](double v, const PathSample& q) { return v < q.s; });
  const PathSample& b = *it;
  const PathSample& a = *(it - 1);
  const double u = (s - a.s) / (b.s - a.s);
  PathSample out = a;
  out.s = s;
  out.r = a.r + u * (b.r - a.r);
  out.kappa = a.kappa + u * (b.kappa - a.kappa);
  out.tau = a.tau + u * (b.tau - a.tau);
  return out;
}

/// Collision and manufacturability violation fractions over n points spread
/// evenly (ends included) along a segment polyline.
inline SegmentIndicators segment_indicators(const Polyline& seg, const Scene& scene, double R_min, int n = 20) {
  if (n < 2) throw domain_error("segment_indicators: need at least 2 samples");
  if (seg.empty()) throw domain_error("segment_indicators: empty segment");
  const double s0 = seg.front().s;
  const double s1 = seg.back().s;
  int obs = 0;
  int manuf = 0;
  for (int i = 0; i < n; ++i) {
    const double s = s0 + (s1 - s0) * static_cast<double>(i) / static_cast<double>(n - 1);
    const PathSample p = interpolate(seg, s);
    if (min_clearance(p.r, scene) < 0.0) ++obs;
    if (!check_manufacturable(p.kappa, p.tau, R_min)) ++manuf;
  }
  return {static_cast<double>(obs) / n, static_cast<double>(manuf) / n};
}

// --- scene document ---------------------------------------------------------

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw scene_error(std::string(what) + ": expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw scene_error(std::string(what) + ": non-numeric component");
    v[i] = j[i].get<double>();
  }
  if (!v.allFinite()) throw scene_error(std::string(what) + ": non-finite component");
  return v;
}

inline double json_positive(const nlohmann::json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key) || !obj.at(key).is_number()) throw scene_error(ctx + ": missing number '" + key + "'");
  const double v = obj.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw scene_error(ctx + ": '" + key + "' must be positive");
  return v;
}

inline Port json_port(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_object()) throw scene_error(ctx + ": expected an object");
  Port p;
  p.position = json_vec3(j.value("position", nlohmann::json()), (ctx + ".position").c_str());
  Vec3 d = json_vec3(j.value("direction", nlohmann::json()), (ctx + ".direction").c_str());
  const double n = d.norm();
  if (!(n >= 1e-3)) throw scene_error(ctx + ".direction: zero-length direction");
  p.direction = d / n;
  return p;
}

}  // namespace detail

inline constexpr int kSceneSchemaVersion = 1;

/**
 * Builds a Scene from a parsed scene document, selecting one route (port
 * pair) by name; an empty name selects the first route.
 *
 * {
 *   "schema_version": 1, "name": "...",
 *   "workspace": {"min": [x,y,z], "max": [x,y,z]},
 *   "pipe_diameter": 25,
 *   "routes": [{"name": "...", "start": {"position": [...], "direction": [...]},
 *               "target": {...}}],
 *   "obstacles": [{"type": "sphere", "center": [...], "radius": r},
 *                 {"type": "box", "min": [...], "max": [...]},
 *                 {"type": "capsule", "p0": [...], "p1": [...], "radius": r}]
 * }
 */
inline Scene load_scene(const nlohmann::json& doc, const std::string& route = {}) {
  using detail::json_positive;
  using detail::json_vec3;
  if (!doc.is_object()) throw scene_error("scene: document must be an object");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != kSceneSchemaVersion) {
    throw scene_error("scene: schema_version must be " + std::to_string(kSceneSchemaVersion));
  }
  Scene sc;
  sc.name = doc.value("name", std::string("scene"));

  if (!doc.contains("workspace")) throw scene_error("scene: missing workspace");
  sc.workspace.lo = json_vec3(doc["workspace"].value("min", nlohmann::json()), "workspace.min");
  sc.workspace.hi = json_vec3(doc["workspace"].value("max", nlohmann::json()), "workspace.max");
  if (!(sc.workspace.lo.array() < sc.workspace.hi.array()).all()) {
    throw scene_error("scene: workspace.min must be below workspace.max");
  }
  sc.pipe_diameter = json_positive(doc, "pipe_diameter", "scene");

  if (!doc.contains("routes") || !doc["routes"].is_array() || doc["routes"].empty()) {
    throw scene_error("scene: 'routes' must be a non-empty list");
  }
  const nlohmann::json* chosen = nullptr;
  for (const auto& r : doc["routes"]) {
    if (!r.is_object()) throw scene_error("scene: route entries must be objects");
    if (route.empty() || r.value("name", std::string()) == route) {
      chosen = &r;
      break;
    }
  }
  if (!chosen) throw scene_error("scene: no route named '" + route + "'");
  sc.route = chosen->value("name", std::string("route"));
  sc.start = detail::json_port(chosen->value("start", nlohmann::json()), "start");
  sc.target = detail::json_port(chosen->value("target", nlohmann::json()), "target");
  if (!sc.workspace.contains(sc.start.position)) throw scene_error("scene: start port outside workspace");
  if (!sc.workspace.contains(sc.target.position)) throw scene_error("scene: target port outside workspace");

  if (doc.contains("obstacles")) {
    if (!doc["obstacles"].is_array()) throw scene_error("scene: 'obstacles' must be a list");
    std::size_t idx = 0;
    for (const auto& o : doc["obstacles"]) {
      const std::string ctx = "obstacle " + std::to_string(idx++);
      const std::string type = o.value("type", std::string());
      if (type == "sphere") {
        sc.obstacles.emplace_back(Sphere{json_vec3(o.value("center", nlohmann::json()), ctx.c_str()),
                                         json_positive(o, "radius", ctx)});
      } else if (type == "box") {
        Box b{json_vec3(o.value("min", nlohmann::json()), ctx.c_str()),
              json_vec3(o.value("max", nlohmann::json()), ctx.c_str())};
        if (!(b.lo.array() < b.hi.array()).all()) throw scene_error(ctx + ": box min must be below max");
        sc.obstacles.emplace_back(b);
      } else if (type == "capsule") {
        sc.obstacles.emplace_back(Capsule{json_vec3(o.value("p0", nlohmann::json()), ctx.c_str()),
                                          json_vec3(o.value("p1", nlohmann::json()), ctx.c_str()),
                                          json_positive(o, "radius", ctx)});
      } else {
        throw scene_error(ctx + ": unknown type '" + type + "'");
      }
    }
  }
  return sc;
}

inline Scene load_scene_file(const std::string& path, const std::string& route = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw scene_error("scene '" + path + "': " + e.what());
  }
  return load_scene(doc, route);
}

}  // namespace piperoute
