#pragma once

// Piecewise cubic Hermite curvature/torsion profiles with zero knot
// derivatives, and the manufacturable (kappa, tau) ranges for a minimum
// bending radius.

#include <piperoute/errors.hpp>
#include <piperoute/frenet.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

namespace piperoute {

/// H(s) = c1 (s-s0)^3 + c2 (s-s0)^2 + c3 (s-s0) + c4
struct Cubic {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;

  double value(double ds) const { return ((c1 * ds + c2) * ds + c3) * ds + c4; }
  double derivative(double ds) const { return (3.0 * c1 * ds + 2.0 * c2) * ds + c3; }
};

inline Cubic hermite_coeffs(double s0, double s1, double v0, double v1, double d0, double d1) {
  if (!(s1 > s0)) throw domain_error("hermite_coeffs: interval must have s1 > s0");
  const double h = s1 - s0;
  const double slope = (v1 - v0) / h;
  Cubic c;
  c.c4 = v0;
  c.c3 = d0;
  c.c2 = (3.0 * slope - 2.0 * d0 - d1) / h;
  c.c1 = (d0 + d1 - 2.0 * slope) / (h * h);
  return c;
}

struct Knot {
  double s = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  // Knot derivatives are pinned to zero.
  static constexpr double dkappa = 0.0;
  static constexpr double dtau = 0.0;
};

struct ProfileValue {
  double kappa = 0.0;
  double tau = 0.0;
};

/// Limits used to validate appended knots.
struct KnotLimits {
  double s_max = 20.0;
  double R_min = 100.0;
};

/**
 * Curvature and torsion as C1 piecewise cubics over [knots.front().s, knots.back().s].
 *
 * A default-constructed profile holds the single implicit knot (0, 0, 0): the
 * pipe leaves its port straight. Appending never touches existing segments.
 */
class GeoProfile {
 public:
  GeoProfile() : knots_{Knot{}} {}

  static GeoProfile from_knots(std::vector<Knot> knots) {
    if (knots.empty()) throw domain_error("GeoProfile: need at least one knot");
    GeoProfile p;
    p.knots_.clear();
    p.knots_.push_back(knots.front());
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].s > knots[i - 1].s)) {
        throw domain_error("GeoProfile: knot arc lengths must be strictly increasing");
      }
      p.push(knots[i]);
    }
    return p;
  }

  /// In-place append with the same validation as append_knot.
  void extend(double delta_s, double kappa, double tau, const KnotLimits& lim = {}) {
    constexpr double tol = 1e-12;
    if (!(delta_s > 0.0) || delta_s > lim.s_max + tol) {
      throw domain_error("append_knot: delta_s must lie in (0, s_max], got " + std::to_string(delta_s));
    }
    const double kmax = 1.0 / lim.R_min;
    const double tmax = 0.5 / lim.R_min;
    if (!(kappa >= -tol && kappa <= kmax + tol && std::abs(tau) <= tmax + tol)) {
      throw rejected_action("append_knot: (kappa, tau) = (" + std::to_string(kappa) + ", " +
                            std::to_string(tau) + ") outside the relaxed admissible box");
    }
    push(Knot{knots_.back().s + delta_s, kappa, tau});
  }

  const std::vector<Knot>& knots() const { return knots_; }
  const std::vector<Cubic>& kappa_segments() const { return kappa_segs_; }
  const std::vector<Cubic>& tau_segments() const { return tau_segs_; }
  double s_begin() const { return knots_.front().s; }
  double s_end() const { return knots_.back().s; }
  const Knot& last() const { return knots_.back(); }

  ProfileValue eval(double s) const {
    constexpr double slack = 1e-9;
    if (!(s >= s_begin() - slack && s <= s_end() + slack)) {
      throw domain_error("eval_profile: s=" + std::to_string(s) + " outside [" +
                         std::to_string(s_begin()) + ", " + std::to_string(s_end()) + "]");
    }
    const std::size_t i = segment_index(s);
    if (i == knots_.size() - 1 || s == knots_[i].s) return {knots_[i].kappa, knots_[i].tau};
    const double ds = s - knots_[i].s;
    return {kappa_segs_[i].value(ds), tau_segs_[i].value(ds)};
  }

  /// d/ds of (kappa, tau). At an interior knot, `from_left` selects the segment.
  ProfileValue derivative(double s, bool from_left = false) const {
    std::size_t i = segment_index(s);
    if (from_left && i > 0 && s == knots_[i].s) --i;
    if (i >= kappa_segs_.size()) i = kappa_segs_.empty() ? 0 : kappa_segs_.size() - 1;
    if (kappa_segs_.empty()) return {0.0, 0.0};
    const double ds = s - knots_[i].s;
    return {kappa_segs_[i].derivative(ds), tau_segs_[i].derivative(ds)};
  }

  double kappa(double s) const { return eval(s).kappa; }
  double tau(double s) const { return eval(s).tau; }

 private:
  void push(const Knot& k) {
    const Knot& prev = knots_.back();
    kappa_segs_.push_back(hermite_coeffs(prev.s, k.s, prev.kappa, k.kappa, Knot::dkappa, Knot::dkappa));
    tau_segs_.push_back(hermite_coeffs(prev.s, k.s, prev.tau, k.tau, Knot::dtau, Knot::dtau));
    knots_.push_back(k);
  }

  // Index of the last knot with knot.s <= s (clamped into range).
  std::size_t segment_index(double s) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double v, const Knot& k) { return v < k.s; });
    if (it == knots_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(knots_.begin(), it) - 1);
  }

  std::vector<Knot> knots_;
  std::vector<Cubic> kappa_segs_;
  std::vector<Cubic> tau_segs_;
};

inline GeoProfile append_knot(GeoProfile profile, double delta_s, double kappa, double tau,
                              const KnotLimits& lim = {}) {
  profile.extend(delta_s, kappa, tau, lim);
  return profile;
}

inline ProfileValue eval_profile(const GeoProfile& profile, double s) { return profile.eval(s); }

/// Integrates along a profile; the interval must lie inside the profile's domain.
inline std::pair<Polyline, PathState> integrate_segment(const PathState& st, const GeoProfile& profile,
                                                        double s_end, double sample_ds) {
  constexpr double slack = 1e-9;
  if (st.s < profile.s_begin() - slack || s_end > profile.s_end() + slack) {
    throw domain_error("integrate_segment: [" + std::to_string(st.s) + ", " + std::to_string(s_end) +
                       "] not covered by the profile");
  }
  return integrate_segment(
      st, [&](double s) { return profile.kappa(std::min(s, profile.s_end())); },
      [&](double s) { return profile.tau(std::min(s, profile.s_end())); }, s_end, sample_ds);
}

/**
 * Manufacturable knot ranges for a minimum bending radius R_min.
 *
 * The exact set {kappa / (kappa^2 + tau^2) >= R_min} is the disk of radius
 * 1/(2 R_min) centred at (1/(2 R_min), 0) in the (kappa, tau) plane; the
 * relaxed set is its bounding box.
 */
struct AdmissibleBounds {
  double R_min = 100.0;
  double tau_lo = -0.005;
  double tau_hi = 0.005;
  double kappa_relaxed_hi = 0.01;

  double kappa_lo(double tau) const { return (1.0 - root(tau)) / (2.0 * R_min); }
  double kappa_hi(double tau) const { return (1.0 + root(tau)) / (2.0 * R_min); }

  bool in_relaxed(double kappa, double tau) const {
    return kappa >= 0.0 && kappa <= kappa_relaxed_hi && tau >= tau_lo && tau <= tau_hi;
  }

 private:
  double root(double tau) const {
    const double disc = 1.0 - 4.0 * R_min * R_min * tau * tau;
    if (disc < -1e-9) {
      throw domain_error("admissible_bounds: |tau| exceeds 1/(2 R_min)");
    }
    return std::sqrt(std::max(disc, 0.0));
  }
};

inline AdmissibleBounds admissible_bounds(double R_min) {
  if (!(R_min > 0.0)) throw domain_error("admissible_bounds: R_min must be positive");
  AdmissibleBounds b;
  b.R_min = R_min;
  b.tau_hi = 1.0 / (2.0 * R_min);
  b.tau_lo = -b.tau_hi;
  b.kappa_relaxed_hi = 1.0 / R_min;
  return b;
}

}  // namespace piperoute
