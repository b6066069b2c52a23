#pragma once

// Frenet-Serret path reconstruction: RK4 integration of the TNB frame and
// position from curvature/torsion functions, plus the constant-(kappa, tau)
// closed form used as an oracle.

#include <piperoute/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace piperoute {

using Vec3 = Eigen::Vector3d;

/// Moving orthonormal triad. B is kept equal to T x N.
struct Frame {
  Vec3 T{Vec3::UnitX()};
  Vec3 N{Vec3::UnitY()};
  Vec3 B{Vec3::UnitZ()};
};

/// Point on the pipe axis. Units: mm, 1/mm.
struct PathState {
  Vec3 r{Vec3::Zero()};
  Frame frame{};
  double s = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
};

struct PathSample {
  double s = 0.0;
  Vec3 r{Vec3::Zero()};
  Frame frame{};
  double kappa = 0.0;
  double tau = 0.0;
  // Straight lead-out appended by finalize_path, not produced by the profile.
  bool extension = false;

  PathState state() const { return {r, frame, s, kappa, tau}; }
};

inline PathSample make_sample(const PathState& st, bool extension = false) {
  return {st.s, st.r, st.frame, st.kappa, st.tau, extension};
}

struct Polyline {
  std::vector<PathSample> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  const PathSample& front() const { return points.front(); }
  const PathSample& back() const { return points.back(); }

  /// Appends `other`, dropping its first sample when it duplicates our last one.
  void extend(const Polyline& other) {
    auto first = other.points.begin();
    if (!points.empty() && first != other.points.end() &&
        std::abs(first->s - points.back().s) < 1e-12) {
      ++first;
    }
    points.insert(points.end(), first, other.points.end());
  }

  double chord_length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
      total += (points[i].r - points[i - 1].r).norm();
    }
    return total;
  }
};

/// Largest RK4 step used by integrate_segment.
inline constexpr double kMaxIntegrationStep = 0.5;

inline double frame_orthonormality_error(const Frame& f) {
  double err = 0.0;
  err = std::max(err, std::abs(f.T.norm() - 1.0));
  err = std::max(err, std::abs(f.N.norm() - 1.0));
  err = std::max(err, std::abs(f.B.norm() - 1.0));
  err = std::max(err, std::abs(f.T.dot(f.N)));
  err = std::max(err, std::abs(f.T.dot(f.B)));
  err = std::max(err, std::abs(f.N.dot(f.B)));
  err = std::max(err, (f.T.cross(f.N) - f.B).cwiseAbs().maxCoeff());
  return err;
}

/// Gram-Schmidt on (T, N), then B := T x N.
inline Frame reorthonormalize(const Frame& f) {
  const double tn = f.T.norm();
  if (!(tn > 1e-9)) throw frame_error("reorthonormalize: tangent has zero length");
  Frame out;
  out.T = f.T / tn;
  Vec3 n = f.N - f.N.dot(out.T) * out.T;
  const double nn = n.norm();
  if (!(nn > 1e-6)) throw frame_error("reorthonormalize: normal is (nearly) parallel to tangent");
  out.N = n / nn;
  out.B = out.T.cross(out.N);
  return out;
}

/// Rotates N and B about T by theta (right-handed).
inline Frame rotate_frame_about_tangent(const Frame& f, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Frame out;
  out.T = f.T;
  out.N = c * f.N + s * f.B;
  out.B = -s * f.N + c * f.B;
  return out;
}

/// Port frame: N from the coordinate axis least aligned with T.
inline Frame initial_frame(const Vec3& tangent) {
  const Vec3 t = tangent.normalized();
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(t[i]) < std::abs(t[axis])) axis = i;
  }
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  Frame f;
  f.T = t;
  f.N = e;
  return reorthonormalize(f);
}

namespace detail {

struct FrenetVars {
  Vec3 T, N, B, r;
};

inline FrenetVars frenet_rhs(const FrenetVars& y, double kappa, double tau) {
  return {kappa * y.N, -kappa * y.T + tau * y.B, -tau * y.N, y.T};
}

inline FrenetVars axpy(const FrenetVars& y, double h, const FrenetVars& k) {
  return {y.T + h * k.T, y.N + h * k.N, y.B + h * k.B, y.r + h * k.r};
}

template <class Fn>
double checked_eval(Fn& fn, double s, const char* name) {
  const double v = fn(s);
  if (!std::isfinite(v)) {
    throw integration_error(std::string("frenet integration: non-finite ") + name + " at s=" +
                            std::to_string(s));
  }
  return v;
}

}  // namespace detail

/// One classical RK4 step of the coupled 12-dimensional Frenet-Serret system,
/// without re-orthonormalization.
template <class KappaFn, class TauFn>
PathState rk4_advance(const PathState& st, KappaFn&& kappa_fn, TauFn&& tau_fn, double ds) {
  if (!(ds > 0.0)) throw domain_error("frenet_step: ds must be positive");
  using detail::axpy;
  using detail::checked_eval;
  using detail::frenet_rhs;

  const double s0 = st.s;
  const double sm = s0 + 0.5 * ds;
  const double s1 = s0 + ds;
  const double k0 = checked_eval(kappa_fn, s0, "curvature");
  const double t0 = checked_eval(tau_fn, s0, "torsion");
  const double km = checked_eval(kappa_fn, sm, "curvature");
  const double tm = checked_eval(tau_fn, sm, "torsion");
  const double k1 = checked_eval(kappa_fn, s1, "curvature");
  const double t1 = checked_eval(tau_fn, s1, "torsion");

  const detail::FrenetVars y{st.frame.T, st.frame.N, st.frame.B, st.r};
  const auto a = frenet_rhs(y, k0, t0);
  const auto b = frenet_rhs(axpy(y, 0.5 * ds, a), km, tm);
  const auto c = frenet_rhs(axpy(y, 0.5 * ds, b), km, tm);
  const auto d = frenet_rhs(axpy(y, ds, c), k1, t1);

  const double w = ds / 6.0;
  PathState out;
  out.frame.T = y.T + w * (a.T + 2.0 * b.T + 2.0 * c.T + d.T);
  out.frame.N = y.N + w * (a.N + 2.0 * b.N + 2.0 * c.N + d.N);
  out.frame.B = y.B + w * (a.B + 2.0 * b.B + 2.0 * c.B + d.B);
  out.r = y.r + w * (a.r + 2.0 * b.r + 2.0 * c.r + d.r);
  out.s = s1;
  out.kappa = k1;
  out.tau = t1;
  return out;
}

/// RK4 step followed by frame re-orthonormalization.
template <class KappaFn, class TauFn>
PathState frenet_step(const PathState& st, KappaFn&& kappa_fn, TauFn&& tau_fn, double ds) {
  PathState out = rk4_advance(st, kappa_fn, tau_fn, ds);
  out.frame = reorthonormalize(out.frame);
  return out;
}

/// Integrates from st.s to s_end, emitting samples every sample_ds (plus a
/// final partial sample). The RK4 step is min(sample_ds, 0.5 mm).
template <class KappaFn, class TauFn>
std::pair<Polyline, PathState> integrate_segment(const PathState& st, KappaFn&& kappa_fn,
                                                 TauFn&& tau_fn, double s_end, double sample_ds) {
  if (!(sample_ds > 0.0)) throw domain_error("integrate_segment: sample_ds must be positive");
  if (!(s_end > st.s)) throw domain_error("integrate_segment: s_end must exceed the start arc length");

  const double max_step = std::min(sample_ds, kMaxIntegrationStep);
  const double s0 = st.s;
  const double span = s_end - s0;
  auto full = static_cast<std::size_t>(std::floor(span / sample_ds + 1e-9));
  const bool partial = span - static_cast<double>(full) * sample_ds > 1e-9;
  if (!partial && full == 0) full = 1;

  Polyline line;
  line.points.reserve(full + 2);
  PathState cur = st;
  cur.kappa = detail::checked_eval(kappa_fn, s0, "curvature");
  cur.tau = detail::checked_eval(tau_fn, s0, "torsion");
  line.points.push_back(make_sample(cur));

  const std::size_t n_samples = full + (partial ? 1 : 0);
  for (std::size_t k = 1; k <= n_samples; ++k) {
    const double target = (k == n_samples) ? s_end : s0 + static_cast<double>(k) * sample_ds;
    const double len = target - cur.s;
    const auto sub = static_cast<std::size_t>(std::ceil(len / max_step - 1e-9));
    const double h = len / static_cast<double>(std::max<std::size_t>(sub, 1));
    for (std::size_t j = 0; j < std::max<std::size_t>(sub, 1); ++j) {
      cur = frenet_step(cur, kappa_fn, tau_fn, h);
    }
    cur.s = target;
    line.points.push_back(make_sample(cur));
  }
  return {std::move(line), cur};
}

/// Exact state at arc length s along the constant-(kappa, tau) helix that
/// starts at `initial`. The frame rotates rigidly about the Darboux axis
/// (tau*T0 + kappa*B0)/omega at rate omega = sqrt(kappa^2 + tau^2).
inline PathState analytic_helix(double kappa, double tau, double s, const PathState& initial) {
  if (!(kappa > 0.0)) throw domain_error("analytic_helix: kappa must be positive");
  const double omega = std::hypot(kappa, tau);
  const Frame& f0 = initial.frame;
  const Vec3 axis = (tau * f0.T + kappa * f0.B) / omega;
  const double angle = omega * s;
  const double c = std::cos(angle);
  const double sn = std::sin(angle);

  auto rotate = [&](const Vec3& v) {
    const Vec3 par = v.dot(axis) * axis;
    return Vec3(par + c * (v - par) + sn * axis.cross(v));
  };

  PathState out;
  const Vec3 t_par = f0.T.dot(axis) * axis;
  out.r = initial.r + s * t_par + (sn / omega) * (f0.T - t_par) +
          ((1.0 - c) / omega) * axis.cross(f0.T);
  out.frame.T = rotate(f0.T);
  out.frame.N = rotate(f0.N);
  out.frame.B = rotate(f0.B);
  out.s = initial.s + s;
  out.kappa = kappa;
  out.tau = tau;
  return out;
}

/// Base radius and axial advance per radian of the constant-(kappa, tau) helix.
struct HelixGeometry {
  double radius;
  double axial_rate;
};

inline HelixGeometry helix_geometry(double kappa, double tau) {
  const double w2 = kappa * kappa + tau * tau;
  return {kappa / w2, tau / w2};
}

}  // namespace piperoute
