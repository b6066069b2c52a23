#pragma once

// Episode stage machine (startup -> navigation -> alignment -> shooting ->
// done) and the reward terms: objective-driven reward, alignment loss and
// stage bonuses.

#include <piperoute/errors.hpp>
#include <piperoute/frenet.hpp>
#include <piperoute/profile.hpp>
#include <piperoute/scene.hpp>

#include <cmath>
#include <numbers>
#include <string_view>

namespace piperoute {

enum class Stage { Startup = 0, Navigation = 1, Alignment = 2, Shooting = 3, Done = 4, Failed = 5 };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Startup: return "startup";
    case Stage::Navigation: return "navigation";
    case Stage::Alignment: return "alignment";
    case Stage::Shooting: return "shooting";
    case Stage::Done: return "done";
    case Stage::Failed: return "failed";
  }
  return "?";
}

inline bool is_terminal(Stage s) { return s == Stage::Done || s == Stage::Failed; }

struct RewardWeights {
  double w1 = 0.0875;  // distance progress, per mm
  double w2 = 0.005;   // tangent-angle progress, per rad
  double w3 = 2.5;     // segment length
  double w4 = 1.0;     // collision fraction
  double w5 = 1.0;     // manufacturability violation fraction
  double r_bonus = 10.0;
  double w_align = 20.0;
  double w_shoot = 50.0;
  double eps_align = 200.0;  // mm
  double eps_shoot = 0.1;
  double eps_final = 0.05;
  bool len_normalized = true;
};

struct EpisodeState {
  PathState path;
  GeoProfile profile;
  Stage stage = Stage::Startup;
  int step = 0;
  Polyline polyline;
  bool bonus_alignment = false;
  bool bonus_shooting = false;
  double prev_l_align = 0.0;
};

inline double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

struct AlignmentLoss {
  double l_align = 0.0;
  double l_angle = 0.0;
  double l_dist = 0.0;
};

/// Mean of the normalized tangent deviation and the normalized distance of
/// the endpoint from the target line.
inline AlignmentLoss alignment_loss(const PathState& st, const Port& target, double s_max) {
  AlignmentLoss l;
  l.l_angle = angle_between(st.frame.T, target.direction) / std::numbers::pi;
  l.l_dist = (st.r - target.position).cross(target.direction).norm() / (s_max * target.direction.norm());
  l.l_align = 0.5 * (l.l_angle + l.l_dist);
  return l;
}

struct RewardTerms {
  double dist = 0.0;
  double angle = 0.0;
  double len = 0.0;
  double obs = 0.0;
  double manuf = 0.0;
  double total = 0.0;
};

inline RewardTerms objective_reward(const PathState& prev, const PathState& next, const SegmentIndicators& ind,
                                    const Port& target, const RewardWeights& w, double s_max) {
  RewardTerms t;
  t.dist = (prev.r - target.position).norm() - (next.r - target.position).norm();
  t.angle = angle_between(prev.frame.T, target.direction) - angle_between(next.frame.T, target.direction);
  const double ds = next.s - prev.s;
  t.len = w.len_normalized ? -ds / s_max : -ds;
  t.obs = -ind.obs_fraction;
  t.manuf = -ind.manuf_fraction;
  t.total = w.w1 * t.dist + w.w2 * t.angle + w.w3 * t.len + w.w4 * t.obs + w.w5 * t.manuf;
  return t;
}

/// True when the endpoint lies behind (or at) the target along the target tangent.
inline bool before_target(const PathState& st, const Port& target) {
  return (target.position - st.r).dot(target.direction) >= 0.0;
}

/// Stage after the action that brought the episode to `ep` (ep.step counts
/// actions taken). At most one transition per call.
inline Stage stage_transition(const EpisodeState& ep, const Port& target, const RewardWeights& w,
                              double s_max, int max_steps = 64) {
  Stage next = ep.stage;
  switch (ep.stage) {
    case Stage::Startup:
      if (ep.step >= 1) next = Stage::Navigation;
      break;
    case Stage::Navigation:
      if ((ep.path.r - target.position).norm() < w.eps_align) next = Stage::Alignment;
      break;
    case Stage::Alignment:
      if (alignment_loss(ep.path, target, s_max).l_align < w.eps_shoot) next = Stage::Shooting;
      break;
    case Stage::Shooting:
      if (alignment_loss(ep.path, target, s_max).l_align < w.eps_final && before_target(ep.path, target)) {
        next = Stage::Done;
      }
      break;
    case Stage::Done:
    case Stage::Failed:
      return ep.stage;
  }
  if (next != Stage::Done && ep.step >= max_steps) next = Stage::Failed;
  return next;
}

struct StageBonus {
  double reward = 0.0;
  bool grants_bonus = false;  // the one-time entry bonus is part of `reward`
};

/// Bonus for a step taken in Alignment or Shooting: one-time r_bonus on the
/// first such step plus the weighted reduction of l_align.
inline StageBonus stage_bonus(const EpisodeState& ep, double l_prev, double l_next, const RewardWeights& w) {
  StageBonus b;
  if (ep.stage == Stage::Alignment) {
    b.grants_bonus = !ep.bonus_alignment;
    b.reward = w.w_align * (l_prev - l_next);
  } else if (ep.stage == Stage::Shooting) {
    b.grants_bonus = !ep.bonus_shooting;
    b.reward = w.w_shoot * (l_prev - l_next);
  } else {
    return b;
  }
  if (b.grants_bonus) b.reward += w.r_bonus;
  return b;
}

/// Completes a finished route: straight extension along T_tar to the closest
/// approach of r_tar, then the terminus is snapped onto r_tar.
inline Polyline finalize_path(const EpisodeState& ep, const Port& target, double sample_ds = 1.0) {
  if (ep.stage != Stage::Done) throw state_error("finalize_path: episode is not Done");
  Polyline out = ep.polyline;
  if (out.empty()) out.points.push_back(make_sample(ep.path));
  const PathSample end = out.back();
  const Vec3 dir = target.direction.normalized();
  const double along = (target.position - end.r).dot(dir);
  if (along <= 1e-12) {
    out.points.back().r = target.position;
    return out;
  }
  Frame f = end.frame;
  f.T = dir;
  f = reorthonormalize(f);
  const auto n = static_cast<std::size_t>(std::ceil(along / sample_ds - 1e-9));
  for (std::size_t k = 1; k <= n; ++k) {
    const double u = k == n ? along : static_cast<double>(k) * sample_ds;
    PathSample p;
    p.s = end.s + u;
    p.r = end.r + u * dir;
    p.frame = f;
    p.extension = true;
    out.points.push_back(p);
  }
  out.points.back().r = target.position;
  return out;
}

}  // namespace piperoute
