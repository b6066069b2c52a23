#pragma once

// The routing episode as an RL environment: observation assembly and the
// per-action transition (knot append, IVP reconstruction, reward, stage).

#include <piperoute/frenet.hpp>
#include <piperoute/profile.hpp>
#include <piperoute/reward.hpp>
#include <piperoute/scene.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace piperoute {

inline constexpr int kNumProbes = 14;
inline constexpr int kObservationSize = 31;

using Observation = std::array<double, kObservationSize>;

/// Probe directions in the local frame: +-T, +-N, +-B, then the eight (+-T+-N+-B)/sqrt(3).
inline std::array<Vec3, kNumProbes> probe_directions(const Frame& f) {
  std::array<Vec3, kNumProbes> d;
  d[0] = f.T;
  d[1] = -f.T;
  d[2] = f.N;
  d[3] = -f.N;
  d[4] = f.B;
  d[5] = -f.B;
  const double inv = 1.0 / std::sqrt(3.0);
  int k = 6;
  for (int a : {1, -1}) {
    for (int b : {1, -1}) {
      for (int c : {1, -1}) d[k++] = inv * (a * f.T + b * f.N + c * f.B);
    }
  }
  return d;
}

/**
 * 31-entry observation:
 *   [0,3)   position, workspace-normalized to [-1, 1]
 *   [3,17)  ray probe distances / workspace diagonal
 *   17, 18  current knot kappa / (1/R_min), tau / (1/(2 R_min))
 *   [19,22) T, [22,25) N
 *   [25,28) T_tar - T
 *   [28,31) r_tar - r, workspace-normalized to [-2, 2]
 */
inline Observation observation(const EpisodeState& ep, const Scene& scene, double R_min = 100.0) {
  Observation o{};
  const Vec3 c = scene.workspace.center();
  const Vec3 half = 0.5 * scene.workspace.extent();
  const Vec3& r = ep.path.r;
  for (int i = 0; i < 3; ++i) o[i] = std::clamp((r[i] - c[i]) / half[i], -1.0, 1.0);

  const double range = scene.workspace.diagonal();
  const auto dirs = probe_directions(ep.path.frame);
  for (int k = 0; k < kNumProbes; ++k) o[3 + k] = ray_probe(r, dirs[k], scene, range) / range;

  o[17] = std::clamp(ep.path.kappa * R_min, -1.0, 1.0);
  o[18] = std::clamp(ep.path.tau * 2.0 * R_min, -1.0, 1.0);
  const Vec3 dT = scene.target.direction - ep.path.frame.T;
  const Vec3 dr = scene.target.position - r;
  for (int i = 0; i < 3; ++i) {
    o[19 + i] = ep.path.frame.T[i];
    o[22 + i] = ep.path.frame.N[i];
    o[25 + i] = dT[i];
    o[28 + i] = std::clamp(dr[i] / half[i], -2.0, 2.0);
  }
  return o;
}

struct EnvConfig {
  double s_max = 20.0;
  double R_min = 100.0;
  double sample_ds = 1.0;
  int max_steps = 64;
  int indicator_samples = 20;
};

/// Knot decision: arc length to the next knot, its curvature and torsion,
/// and the frame roll (used at the first step only).
struct Action {
  double delta_s = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  double theta = 0.0;
};

struct StepRecord {
  int step = 0;
  Stage stage_before = Stage::Startup;
  Stage stage_after = Stage::Startup;
  Action action;
  RewardTerms objective;
  double stage_reward = 0.0;
  double reward = 0.0;
  double l_align = 0.0;
  SegmentIndicators indicators;
};

class RoutingEnv {
 public:
  RoutingEnv(const Scene& scene, EnvConfig cfg = {}, RewardWeights weights = {})
      : scene_(&scene), cfg_(cfg), weights_(weights) {
    reset();
  }

  void reset() {
    ep_ = EpisodeState{};
    ep_.path.r = scene_->start.position;
    ep_.path.frame = initial_frame(scene_->start.direction);
    ep_.polyline.points.push_back(make_sample(ep_.path));
    ep_.prev_l_align = alignment_loss(ep_.path, scene_->target, cfg_.s_max).l_align;
  }

  Observation observe() const { return observation(ep_, *scene_, cfg_.R_min); }

  StepRecord step(const Action& a) {
    if (is_terminal(ep_.stage)) throw state_error("RoutingEnv::step on a finished episode");
    StepRecord rec;
    rec.step = ep_.step;
    rec.stage_before = ep_.stage;
    rec.action = a;

    if (ep_.step == 0 && a.theta != 0.0) {
      ep_.path.frame = rotate_frame_about_tangent(ep_.path.frame, a.theta);
      ep_.polyline.points.back().frame = ep_.path.frame;
    }
    const PathState prev = ep_.path;
    const double l_prev = ep_.prev_l_align;

    ep_.profile.extend(a.delta_s, a.kappa, a.tau, KnotLimits{cfg_.s_max, cfg_.R_min});
    auto [seg, next] = integrate_segment(prev, ep_.profile, ep_.profile.s_end(), cfg_.sample_ds);
    rec.indicators = segment_indicators(seg, *scene_, cfg_.R_min, cfg_.indicator_samples);
    rec.objective = objective_reward(prev, next, rec.indicators, scene_->target, weights_, cfg_.s_max);

    const double l_next = alignment_loss(next, scene_->target, cfg_.s_max).l_align;
    const StageBonus bonus = stage_bonus(ep_, l_prev, l_next, weights_);
    if (bonus.grants_bonus) {
      (ep_.stage == Stage::Alignment ? ep_.bonus_alignment : ep_.bonus_shooting) = true;
    }

    ep_.path = next;
    ep_.polyline.extend(seg);
    ep_.step += 1;
    ep_.prev_l_align = l_next;
    ep_.stage = stage_transition(ep_, scene_->target, weights_, cfg_.s_max, cfg_.max_steps);

    rec.stage_after = ep_.stage;
    rec.stage_reward = bonus.reward;
    rec.reward = rec.objective.total + bonus.reward;
    rec.l_align = l_next;
    return rec;
  }

  const EpisodeState& state() const { return ep_; }
  const Scene& scene() const { return *scene_; }
  const EnvConfig& config() const { return cfg_; }
  const RewardWeights& weights() const { return weights_; }

 private:
  const Scene* scene_;
  EnvConfig cfg_;
  RewardWeights weights_;
  EpisodeState ep_;
};

}  // namespace piperoute
