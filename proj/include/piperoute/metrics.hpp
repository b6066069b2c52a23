#pragma once

// Layout quality (path length, collision-free indicator, manufacturability
// violation rate, alignment loss) and trajectory similarity measures.

#include <piperoute/errors.hpp>
#include <piperoute/frenet.hpp>
#include <piperoute/machine.hpp>
#include <piperoute/reward.hpp>
#include <piperoute/scene.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace piperoute {

struct LayoutReport {
  double pl = 0.0;
  bool cfi = true;
  double mvr = 0.0;
  double l_align = 0.0;
};

inline nlohmann::json to_json(const LayoutReport& r) {
  return {{"pl_mm", r.pl}, {"cfi", r.cfi}, {"mvr", r.mvr}, {"l_align", r.l_align}};
}

inline LayoutReport layout_report_from_json(const nlohmann::json& j) {
  try {
    return {j.at("pl_mm").get<double>(), j.at("cfi").get<bool>(), j.at("mvr").get<double>(),
            j.at("l_align").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("layout report: ") + e.what());
  }
}

/// Arc-length positions every `ds` from the first to the last sample, last included.
inline std::vector<double> sample_positions(double s0, double s1, double ds = 1.0) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((s1 - s0) / ds + 1e-9));
  out.reserve(n + 2);
  for (std::size_t k = 0; k <= n; ++k) out.push_back(s0 + static_cast<double>(k) * ds);
  if (s1 - out.back() > 1e-9) out.push_back(s1);
  return out;
}

/**
 * PL is the summed chord length. CFI and MVR use the polyline interpolated
 * every 1 mm. l_align is taken at the end of the designed curve: straight
 * extension samples appended at completion are skipped, since their tangent
 * is the target tangent by construction.
 */
inline LayoutReport layout_report(const Polyline& line, const Scene& scene, double R_min, const Port& target,
                                  double s_max) {
  if (line.empty()) throw domain_error("layout_report: empty polyline");
  LayoutReport rep;
  rep.pl = line.chord_length();
  const auto ss = sample_positions(line.front().s, line.back().s);
  int bad = 0;
  for (double s : ss) {
    const PathSample p = interpolate(line, s);
    if (min_clearance(p.r, scene) < 0.0) rep.cfi = false;
    if (!check_manufacturable(p.kappa, p.tau, R_min)) ++bad;
  }
  rep.mvr = static_cast<double>(bad) / static_cast<double>(ss.size());
  auto it = std::find_if(line.points.rbegin(), line.points.rend(), [](const PathSample& p) { return !p.extension; });
  const PathSample& end = it != line.points.rend() ? *it : line.back();
  rep.l_align = alignment_loss(end.state(), target, s_max).l_align;
  return rep;
}

// --- trajectory similarity ----------------------------------------------------

using Trajectory = std::vector<Vec3>;

inline constexpr double kDefaultSimilarityEps = 25.0;

namespace detail {
inline void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b, const char* what) {
  if (a.empty() || b.empty()) throw domain_error(std::string(what) + ": empty trajectory");
}
}  // namespace detail

/// Longest common subsequence under a distance tolerance, divided by min(|a|, |b|).
inline double lcss(std::span<const Vec3> a, std::span<const Vec3> b, double eps = kDefaultSimilarityEps) {
  detail::require_nonempty(a, b, "lcss");
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = (a[i - 1] - b[j - 1]).norm() <= eps ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::min(n, m));
}

inline double discrete_frechet(std::span<const Vec3> a, std::span<const Vec3> b) {
  detail::require_nonempty(a, b, "discrete_frechet");
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> c(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return c[i * m + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = (a[i] - b[j]).norm();
      if (i == 0 && j == 0) {
        at(i, j) = d;
      } else if (i == 0) {
        at(i, j) = std::max(at(i, j - 1), d);
      } else if (j == 0) {
        at(i, j) = std::max(at(i - 1, j), d);
      } else {
        at(i, j) = std::max(std::min({at(i - 1, j), at(i - 1, j - 1), at(i, j - 1)}), d);
      }
    }
  }
  return at(n - 1, m - 1);
}

/// Unbanded dynamic time warping; the raw cumulative Euclidean cost.
inline double dtw(std::span<const Vec3> a, std::span<const Vec3> b) {
  detail::require_nonempty(a, b, "dtw");
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = (a[i - 1] - b[j - 1]).norm() + std::min({prev[j], prev[j - 1], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Edit distance on real sequences (EDR): points within eps match for free,
/// every substitution, insertion or deletion costs 1.
inline int edit_distance(std::span<const Vec3> a, std::span<const Vec3> b, double eps = kDefaultSimilarityEps) {
  detail::require_nonempty(a, b, "edit_distance");
  const std::size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = (a[i - 1] - b[j - 1]).norm() <= eps ? 0 : 1;
      cur[j] = std::min({prev[j - 1] + sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Points at uniform arc-length spacing along the piecewise-linear curve
/// through `pts`, both ends included.
inline Trajectory resample_uniform(std::span<const Vec3> pts, double ds = 1.0) {
  if (pts.empty()) throw domain_error("resample_uniform: empty trajectory");
  if (!(ds > 0.0)) throw domain_error("resample_uniform: spacing must be positive");
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  Trajectory out;
  std::size_t seg = 0;
  for (double s : sample_positions(0.0, cum.back(), ds)) {
    while (seg + 2 < pts.size() && cum[seg + 1] < s) ++seg;
    if (pts.size() == 1) {
      out.push_back(pts[0]);
      continue;
    }
    const double len = cum[seg + 1] - cum[seg];
    const double u = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(pts[seg] + u * (pts[seg + 1] - pts[seg]));
  }
  return out;
}

struct SimilarityReport {
  double lcss_ratio = 0.0;
  double frechet_mm = 0.0;
  double dtw_mm = 0.0;
  int edit_distance = 0;
};

inline SimilarityReport compare_trajectories(std::span<const Vec3> a, std::span<const Vec3> b,
                                             double eps = kDefaultSimilarityEps) {
  return {lcss(a, b, eps), discrete_frechet(a, b), dtw(a, b), edit_distance(a, b, eps)};
}

inline nlohmann::json to_json(const SimilarityReport& r) {
  return {{"lcss_ratio", r.lcss_ratio},
          {"frechet_mm", r.frechet_mm},
          {"dtw_mm", r.dtw_mm},
          {"edit_distance", r.edit_distance}};
}

}  // namespace piperoute
