#pragma once

// PPO for knot selection: Gaussian policy + value network, GAE, clipped
// surrogate with a uniformly perturbed mean during updates, and the
// rollout/update training loop.

#include <piperoute/env.hpp>
#include <piperoute/errors.hpp>
#include <piperoute/machine.hpp>
#include <piperoute/nn.hpp>
#include <piperoute/reward.hpp>
#include <piperoute/scene.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace piperoute {

using Rng = std::mt19937_64;

inline constexpr int kActionSize = 4;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct RLConfig {
  long long total_steps = 4'000'000;
  int max_episode_steps = 64;
  int minibatch = 64;
  double lr = 3e-4;
  double gamma = 0.95;
  double clip = 0.15;
  double noise_alpha = 0.01;
  double s_max = 20.0;
  int rollout_len = 2048;
  double gae_lambda = 0.95;
  int update_epochs = 10;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double grad_clip = 0.5;
  double init_log_std = 0.0;
  std::vector<int> hidden{128, 128};
  int workers = 1;

  void validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw domain_error("RLConfig: clip must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw domain_error("RLConfig: gamma must lie in (0, 1]");
    if (!(noise_alpha >= 0.0)) throw domain_error("RLConfig: noise_alpha must be >= 0");
    if (total_steps <= 0 || rollout_len <= 0 || minibatch <= 0 || update_epochs <= 0 || max_episode_steps <= 0) {
      throw domain_error("RLConfig: step counts must be positive");
    }
    if (workers < 1 || workers > rollout_len) throw domain_error("RLConfig: workers must lie in [1, rollout_len]");
    if (!(s_max > 0.0) || !(lr > 0.0)) throw domain_error("RLConfig: s_max and lr must be positive");
  }
};

inline nlohmann::json to_json(const RLConfig& c) {
  return {{"total_steps", c.total_steps}, {"max_episode_steps", c.max_episode_steps},
          {"minibatch", c.minibatch},     {"lr", c.lr},
          {"gamma", c.gamma},             {"clip", c.clip},
          {"noise_alpha", c.noise_alpha}, {"s_max", c.s_max},
          {"rollout_len", c.rollout_len}, {"gae_lambda", c.gae_lambda},
          {"update_epochs", c.update_epochs}, {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef}, {"grad_clip", c.grad_clip},
          {"init_log_std", c.init_log_std}, {"hidden", c.hidden},
          {"workers", c.workers}};
}

/// Applies the keys present in `j` on top of `base`.
inline RLConfig rl_config_from_json(const nlohmann::json& j, RLConfig base = {}) {
  if (!j.is_object()) throw parse_error("RL config: expected an object");
  try {
    base.total_steps = j.value("total_steps", base.total_steps);
    base.max_episode_steps = j.value("max_episode_steps", base.max_episode_steps);
    base.minibatch = j.value("minibatch", base.minibatch);
    base.lr = j.value("lr", base.lr);
    base.gamma = j.value("gamma", base.gamma);
    base.clip = j.value("clip", base.clip);
    base.noise_alpha = j.value("noise_alpha", base.noise_alpha);
    base.s_max = j.value("s_max", base.s_max);
    base.rollout_len = j.value("rollout_len", base.rollout_len);
    base.gae_lambda = j.value("gae_lambda", base.gae_lambda);
    base.update_epochs = j.value("update_epochs", base.update_epochs);
    base.value_coef = j.value("value_coef", base.value_coef);
    base.entropy_coef = j.value("entropy_coef", base.entropy_coef);
    base.grad_clip = j.value("grad_clip", base.grad_clip);
    base.init_log_std = j.value("init_log_std", base.init_log_std);
    base.hidden = j.value("hidden", base.hidden);
    base.workers = j.value("workers", base.workers);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("RL config: ") + e.what());
  }
  base.validate();
  return base;
}

inline nlohmann::json to_json(const RewardWeights& w) {
  return {{"w1", w.w1},           {"w2", w.w2},           {"w3", w.w3},
          {"w4", w.w4},           {"w5", w.w5},           {"r_bonus", w.r_bonus},
          {"w_align", w.w_align}, {"w_shoot", w.w_shoot}, {"eps_align", w.eps_align},
          {"eps_shoot", w.eps_shoot}, {"eps_final", w.eps_final}, {"len_normalized", w.len_normalized}};
}

inline RewardWeights reward_weights_from_json(const nlohmann::json& j, RewardWeights w = {}) {
  if (!j.is_object()) throw parse_error("reward weights: expected an object");
  try {
    w.w1 = j.value("w1", w.w1);
    w.w2 = j.value("w2", w.w2);
    w.w3 = j.value("w3", w.w3);
    w.w4 = j.value("w4", w.w4);
    w.w5 = j.value("w5", w.w5);
    w.r_bonus = j.value("r_bonus", w.r_bonus);
    w.w_align = j.value("w_align", w.w_align);
    w.w_shoot = j.value("w_shoot", w.w_shoot);
    w.eps_align = j.value("eps_align", w.eps_align);
    w.eps_shoot = j.value("eps_shoot", w.eps_shoot);
    w.eps_final = j.value("eps_final", w.eps_final);
    w.len_normalized = j.value("len_normalized", w.len_normalized);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("reward weights: ") + e.what());
  }
  if (!(w.eps_final < w.eps_shoot)) throw domain_error("reward weights: eps_final must be below eps_shoot");
  return w;
}

// --- policy -------------------------------------------------------------------

/// Actor (mean head) and critic share one flat parameter vector:
/// [actor | critic | log_std].
struct PolicyParams {
  nn::Mlp actor;
  nn::Mlp critic;
  Eigen::VectorXd flat;

  int obs_dim() const { return actor.in_dim(); }
  int act_dim() const { return actor.out_dim(); }
  std::size_t critic_offset() const { return actor.num_params(); }
  std::size_t log_std_offset() const { return actor.num_params() + critic.num_params(); }
  const double* actor_data() const { return flat.data(); }
  const double* critic_data() const { return flat.data() + critic_offset(); }
  Eigen::VectorXd log_std() const {
    return flat.segment(static_cast<Eigen::Index>(log_std_offset()), act_dim());
  }

  void clamp_log_std() {
    auto ls = flat.segment(static_cast<Eigen::Index>(log_std_offset()), act_dim());
    ls = ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  }
};

inline PolicyParams make_policy(int obs_dim, const std::vector<int>& hidden, int act_dim, Rng& rng,
                                double init_log_std = 0.0) {
  std::vector<int> a{obs_dim};
  a.insert(a.end(), hidden.begin(), hidden.end());
  std::vector<int> c = a;
  a.push_back(act_dim);
  c.push_back(1);
  PolicyParams p{nn::Mlp(a), nn::Mlp(c), {}};
  p.flat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.log_std_offset()) + act_dim);
  const double g = std::sqrt(2.0);
  p.actor.init(p.flat.data(), rng, g, 0.01);
  p.critic.init(p.flat.data() + p.critic_offset(), rng, g, 1.0);
  p.flat.tail(act_dim).setConstant(init_log_std);
  p.clamp_log_std();
  return p;
}

struct PolicyOutput {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;
  double value = 0.0;
};

inline PolicyOutput policy_forward(const PolicyParams& params, std::span<const double> obs) {
  if (static_cast<int>(obs.size()) != params.obs_dim()) throw domain_error("policy_forward: observation size mismatch");
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  if (!x.allFinite()) throw numeric_fault("policy_forward: non-finite observation");
  PolicyOutput out;
  out.mu = params.actor.forward(params.actor_data(), x).col(0);
  out.value = params.critic.forward(params.critic_data(), x)(0, 0);
  out.log_sigma = params.log_std();
  if (!out.mu.allFinite() || !std::isfinite(out.value)) {
    throw numeric_fault("policy_forward: non-finite network output");
  }
  return out;
}

inline double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double z = (x[d] - mu[d]) / std::exp(log_sigma[d]);
    lp += -0.5 * z * z - log_sigma[d] - half_log_2pi;
  }
  return lp;
}

struct SampledAction {
  Eigen::VectorXd raw;
  double log_prob = 0.0;
};

inline SampledAction sample_action(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction a;
  a.raw.resize(mu.size());
  for (Eigen::Index d = 0; d < mu.size(); ++d) a.raw[d] = mu[d] + std::exp(log_sigma[d]) * normal(rng);
  a.log_prob = gaussian_log_prob(a.raw, mu, log_sigma);
  return a;
}

struct ActionBounds {
  double delta_s_lo = 1.0;
  double delta_s_hi = 20.0;
  double kappa_lo = 0.0;
  double kappa_hi = 0.01;
  double tau_lo = -0.005;
  double tau_hi = 0.005;
  double theta_lo = -std::numbers::pi;
  double theta_hi = std::numbers::pi;
};

inline ActionBounds action_bounds(double s_max, double R_min, double min_delta_s = 1.0) {
  ActionBounds b;
  b.delta_s_lo = min_delta_s;
  b.delta_s_hi = s_max;
  b.kappa_hi = 1.0 / R_min;
  b.tau_hi = 0.5 / R_min;
  b.tau_lo = -b.tau_hi;
  return b;
}

/// Clip each raw component to [-1, 1], then map affinely onto its interval.
/// The frame roll is only honoured at step 0.
inline Action scale_action(const Eigen::VectorXd& raw, const ActionBounds& b, int step) {
  auto map = [](double x, double lo, double hi) {
    const double u = std::clamp(x, -1.0, 1.0);
    return lo + 0.5 * (u + 1.0) * (hi - lo);
  };
  Action a;
  a.delta_s = map(raw[0], b.delta_s_lo, b.delta_s_hi);
  a.kappa = map(raw[1], b.kappa_lo, b.kappa_hi);
  a.tau = map(raw[2], b.tau_lo, b.tau_hi);
  a.theta = step == 0 ? map(raw[3], b.theta_lo, b.theta_hi) : 0.0;
  return a;
}

// --- advantage estimation ---------------------------------------------------------

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// dones[t] != 0 marks that the episode ended after step t.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const std::uint8_t> dones, double bootstrap_value, double gamma,
                             double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw domain_error("compute_gae: empty trajectory");
  if (values.size() != n || dones.size() != n) throw domain_error("compute_gae: length mismatch");
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double last = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
    last = delta + gamma * lambda * nonterminal * last;
    g.advantages[t] = last;
    g.returns[t] = last + values[t];
  }
  return g;
}

// --- PPO update ----------------------------------------------------------------

struct RolloutBatch {
  Eigen::MatrixXd obs;  // obs_dim x n
  Eigen::MatrixXd raw;  // act_dim x n
  Eigen::VectorXd old_log_prob;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  Eigen::Index size() const { return obs.cols(); }
};

struct LossAndGrad {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd grad;
};

/// min(r A, clip(r, 1-eps, 1+eps) A) for one sample.
inline double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

/// Loss and gradient on a minibatch. `noise` (act_dim x m) perturbs the
/// re-evaluated mean before the new log-probabilities are taken.
inline LossAndGrad ppo_loss_and_grad(const PolicyParams& p, const RolloutBatch& mb, const Eigen::MatrixXd& noise,
                                     const RLConfig& cfg) {
  const Eigen::Index m = mb.size();
  const int A = p.act_dim();
  const double inv_m = 1.0 / static_cast<double>(m);
  nn::Mlp::Cache actor_cache;
  nn::Mlp::Cache critic_cache;
  const Eigen::MatrixXd mu = p.actor.forward(p.actor_data(), mb.obs, &actor_cache) + noise;
  const Eigen::MatrixXd v = p.critic.forward(p.critic_data(), mb.obs, &critic_cache);
  const Eigen::VectorXd ls = p.log_std();
  const Eigen::VectorXd inv_var = (-2.0 * ls).array().exp();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  LossAndGrad out;
  out.grad = Eigen::VectorXd::Zero(p.flat.size());
  Eigen::MatrixXd d_mu(A, m);
  Eigen::VectorXd d_ls = Eigen::VectorXd::Zero(A);
  const Eigen::MatrixXd diff = mb.raw - mu;
  int clipped = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    double logp = 0.0;
    for (int d = 0; d < A; ++d) logp += -0.5 * diff(d, j) * diff(d, j) * inv_var[d] - ls[d] - half_log_2pi;
    const double ratio = std::exp(logp - mb.old_log_prob[j]);
    const double adv = mb.advantages[j];
    const double s1 = ratio * adv;
    const double s2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    out.policy_loss -= std::min(s1, s2) * inv_m;
    if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;
    const double g = s1 <= s2 ? -adv * ratio * inv_m : 0.0;  // dL / dlogp_j
    for (int d = 0; d < A; ++d) {
      d_mu(d, j) = g * diff(d, j) * inv_var[d];
      d_ls[d] += g * (diff(d, j) * diff(d, j) * inv_var[d] - 1.0);
    }
  }
  out.entropy = ls.sum() + A * (0.5 + half_log_2pi);
  d_ls.array() -= cfg.entropy_coef;

  const Eigen::MatrixXd verr = v - mb.returns.transpose();
  out.value_loss = cfg.value_coef * verr.squaredNorm() * inv_m;
  const Eigen::MatrixXd d_v = (2.0 * cfg.value_coef * inv_m) * verr;

  p.actor.backward(p.actor_data(), actor_cache, d_mu, out.grad.data());
  p.critic.backward(p.critic_data(), critic_cache, d_v, out.grad.data() + p.critic_offset());
  out.grad.segment(static_cast<Eigen::Index>(p.log_std_offset()), A) += d_ls;

  out.total = out.policy_loss + out.value_loss - cfg.entropy_coef * out.entropy;
  out.clip_fraction = static_cast<double>(clipped) * inv_m;
  return out;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
};

/// Noise generator for the perturbed mean: (rows, cols, rng) -> matrix.
using MeanNoise = std::function<Eigen::MatrixXd(int, Eigen::Index, Rng&)>;

inline MeanNoise uniform_mean_noise(double alpha) {
  return [alpha](int rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(rows, cols);
    if (alpha > 0.0) {
      std::uniform_real_distribution<double> u(-alpha, alpha);
      for (Eigen::Index j = 0; j < cols; ++j) {
        for (int d = 0; d < rows; ++d) z(d, j) = u(rng);
      }
    }
    return z;
  };
}

inline UpdateStats ppo_update(PolicyParams& params, nn::Adam& adam, RolloutBatch batch, const RLConfig& cfg, Rng& rng,
                              const MeanNoise& noise) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw domain_error("ppo_update: empty batch");
  if (n > 1) {
    const double mean = batch.advantages.mean();
    const double sd = std::sqrt((batch.advantages.array() - mean).square().sum() / static_cast<double>(n - 1));
    batch.advantages = (batch.advantages.array() - mean) / (sd + 1e-8);
  }
  adam.lr = cfg.lr;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  UpdateStats stats;
  int count = 0;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += cfg.minibatch) {
      const Eigen::Index m = std::min<Eigen::Index>(cfg.minibatch, n - start);
      RolloutBatch mb;
      mb.obs.resize(batch.obs.rows(), m);
      mb.raw.resize(batch.raw.rows(), m);
      mb.old_log_prob.resize(m);
      mb.advantages.resize(m);
      mb.returns.resize(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
        mb.obs.col(j) = batch.obs.col(src);
        mb.raw.col(j) = batch.raw.col(src);
        mb.old_log_prob[j] = batch.old_log_prob[src];
        mb.advantages[j] = batch.advantages[src];
        mb.returns[j] = batch.returns[src];
      }
      const Eigen::MatrixXd z = noise(params.act_dim(), m, rng);
      LossAndGrad lg = ppo_loss_and_grad(params, mb, z, cfg);
      if (!std::isfinite(lg.total) || !lg.grad.allFinite()) {
        throw numeric_fault("ppo_update: non-finite loss (policy " + std::to_string(lg.policy_loss) + ", value " +
                            std::to_string(lg.value_loss) + ") at epoch " + std::to_string(epoch));
      }
      const double gnorm = lg.grad.norm();
      if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) lg.grad *= cfg.grad_clip / (gnorm + 1e-6);
      adam.step(params.flat, lg.grad);
      params.clamp_log_std();
      stats.policy_loss += lg.policy_loss;
      stats.value_loss += lg.value_loss;
      stats.clip_fraction += lg.clip_fraction;
      ++count;
    }
  }
  stats.policy_loss /= count;
  stats.value_loss /= count;
  stats.clip_fraction /= count;
  return stats;
}

inline UpdateStats ppo_update(PolicyParams& params, nn::Adam& adam, RolloutBatch batch, const RLConfig& cfg, Rng& rng) {
  return ppo_update(params, adam, std::move(batch), cfg, rng, uniform_mean_noise(cfg.noise_alpha));
}

// --- training loop --------------------------------------------------------------

struct TrainLogRow {
  int update_idx = 0;
  long long global_step = 0;
  double mean_return = std::numeric_limits<double>::quiet_NaN();
  double best_return = std::numeric_limits<double>::quiet_NaN();
  double frac_done = 0.0;
  double frac_alignment_reached = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

struct BestEpisode {
  bool found = false;
  bool done = false;
  double ret = -std::numeric_limits<double>::infinity();
  long long global_step = 0;
  Polyline path;  // finalized when done
  GeoProfile profile;
  std::vector<StepRecord> trace;
  Eigen::VectorXd params;

  /// Done episodes rank first, then higher return.
  bool beaten_by(bool other_done, double other_ret) const {
    if (!found) return true;
    if (other_done != done) return other_done;
    return other_ret > ret;
  }
};

struct TrainResult {
  PolicyParams final_params;
  PolicyParams best_params;
  BestEpisode best;
  std::vector<TrainLogRow> log;
  long long episodes = 0;
};

namespace detail {

struct RolloutWorker {
  RoutingEnv env;
  Rng rng;
  double ep_return = 0.0;
  std::vector<StepRecord> trace;

  // per-rollout buffers
  Eigen::MatrixXd obs, raw;
  std::vector<double> logp, values, rewards;
  std::vector<std::uint8_t> dones;
  double bootstrap = 0.0;
  std::vector<std::pair<double, bool>> finished;  // (return, reached alignment)
  int finished_done = 0;
  BestEpisode best;

  RolloutWorker(const Scene& scene, const EnvConfig& ec, const RewardWeights& w, Rng r)
      : env(scene, ec, w), rng(std::move(r)) {}

  void run(const PolicyParams& params, const ActionBounds& bounds, int steps, long long step_base) {
    obs.resize(params.obs_dim(), steps);
    raw.resize(params.act_dim(), steps);
    logp.assign(steps, 0.0);
    values.assign(steps, 0.0);
    rewards.assign(steps, 0.0);
    dones.assign(steps, 0);
    finished.clear();
    finished_done = 0;
    best = BestEpisode{};
    for (int t = 0; t < steps; ++t) {
      const Observation o = env.observe();
      const PolicyOutput out = policy_forward(params, o);
      const SampledAction sa = sample_action(out.mu, out.log_sigma, rng);
      obs.col(t) = Eigen::Map<const Eigen::VectorXd>(o.data(), kObservationSize);
      raw.col(t) = sa.raw;
      logp[t] = sa.log_prob;
      values[t] = out.value;

      const Action a = scale_action(sa.raw, bounds, env.state().step);
      StepRecord rec = env.step(a);
      rewards[t] = rec.reward;
      ep_return += rec.reward;
      trace.push_back(rec);
      if (is_terminal(env.state().stage)) {
        dones[t] = 1;
        const auto& ep = env.state();
        const bool done = ep.stage == Stage::Done;
        const bool aligned = ep.bonus_alignment || ep.stage == Stage::Done ||
                             std::any_of(trace.begin(), trace.end(), [](const StepRecord& r) {
                               return static_cast<int>(r.stage_after) >= static_cast<int>(Stage::Alignment) &&
                                      r.stage_after != Stage::Failed;
                             });
        finished.emplace_back(ep_return, aligned);
        if (done) ++finished_done;
        if (best.beaten_by(done, ep_return)) {
          best.found = true;
          best.done = done;
          best.ret = ep_return;
          best.global_step = step_base + t + 1;
          best.path = done ? finalize_path(ep, env.scene().target, env.config().sample_ds) : ep.polyline;
          best.profile = ep.profile;
          best.trace = trace;
        }
        env.reset();
        ep_return = 0.0;
        trace.clear();
      }
    }
    bootstrap = policy_forward(params, env.observe()).value;
  }
};

inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace detail

using TrainProgress = std::function<void(const TrainLogRow&)>;

/**
 * Rollout/update cycles until cfg.total_steps environment steps have been
 * taken. Tracks the best episode (Done first, then highest return) together
 * with the parameters that produced it.
 *
 * Each worker owns its environment and random stream; with a fixed seed and
 * worker count the run is deterministic.
 */
inline TrainResult train(const Scene& scene, const MachineConfig& machine, const RLConfig& cfg,
                         const RewardWeights& weights, std::uint64_t seed, const TrainProgress& progress = {}) {
  cfg.validate();
  machine.validate();
  EnvConfig ec;
  ec.s_max = cfg.s_max;
  ec.R_min = machine.R_min;
  ec.max_steps = cfg.max_episode_steps;
  const ActionBounds bounds = action_bounds(cfg.s_max, machine.R_min);

  Rng init_rng = detail::stream_rng(seed, 0);
  Rng update_rng = detail::stream_rng(seed, 1);
  TrainResult result;
  result.final_params = make_policy(kObservationSize, cfg.hidden, kActionSize, init_rng, cfg.init_log_std);
  PolicyParams& params = result.final_params;
  nn::Adam adam;
  adam.lr = cfg.lr;

  std::vector<detail::RolloutWorker> workers;
  workers.reserve(static_cast<std::size_t>(cfg.workers));
  for (int w = 0; w < cfg.workers; ++w) workers.emplace_back(scene, ec, weights, detail::stream_rng(seed, 2 + w));

  const MeanNoise noise = uniform_mean_noise(cfg.noise_alpha);
  long long global_step = 0;
  int update_idx = 0;
  while (global_step < cfg.total_steps) {
    const int rollout = static_cast<int>(std::min<long long>(cfg.rollout_len, cfg.total_steps - global_step));
    const int nw = std::min(cfg.workers, rollout);
    std::vector<int> steps(static_cast<std::size_t>(nw), rollout / nw);
    for (int w = 0; w < rollout % nw; ++w) ++steps[static_cast<std::size_t>(w)];

    if (nw == 1) {
      workers[0].run(params, bounds, steps[0], global_step);
    } else {
      std::vector<std::thread> threads;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));
      for (int w = 0; w < nw; ++w) {
        threads.emplace_back([&, w] {
          try {
            workers[static_cast<std::size_t>(w)].run(params, bounds, steps[static_cast<std::size_t>(w)], global_step);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    RolloutBatch batch;
    batch.obs.resize(kObservationSize, rollout);
    batch.raw.resize(kActionSize, rollout);
    batch.old_log_prob.resize(rollout);
    batch.advantages.resize(rollout);
    batch.returns.resize(rollout);
    Eigen::Index col = 0;
    double ret_sum = 0.0;
    int n_finished = 0;
    int n_done = 0;
    int n_aligned = 0;
    for (int w = 0; w < nw; ++w) {
      auto& wk = workers[static_cast<std::size_t>(w)];
      const int n = steps[static_cast<std::size_t>(w)];
      const GaeResult g = compute_gae(wk.rewards, wk.values, wk.dones, wk.bootstrap, cfg.gamma, cfg.gae_lambda);
      batch.obs.middleCols(col, n) = wk.obs;
      batch.raw.middleCols(col, n) = wk.raw;
      for (int t = 0; t < n; ++t) {
        batch.old_log_prob[col + t] = wk.logp[static_cast<std::size_t>(t)];
        batch.advantages[col + t] = g.advantages[static_cast<std::size_t>(t)];
        batch.returns[col + t] = g.returns[static_cast<std::size_t>(t)];
      }
      col += n;
      for (const auto& [r, aligned] : wk.finished) {
        ret_sum += r;
        ++n_finished;
        n_aligned += aligned ? 1 : 0;
      }
      n_done += wk.finished_done;
      if (wk.best.found && result.best.beaten_by(wk.best.done, wk.best.ret)) {
        result.best = std::move(wk.best);
        result.best.params = params.flat;
      }
    }
    result.episodes += n_finished;
    global_step += rollout;

    const UpdateStats st = ppo_update(params, adam, std::move(batch), cfg, update_rng, noise);

    TrainLogRow row;
    row.update_idx = update_idx++;
    row.global_step = global_step;
    if (n_finished > 0) {
      row.mean_return = ret_sum / n_finished;
      row.frac_done = static_cast<double>(n_done) / n_finished;
      row.frac_alignment_reached = static_cast<double>(n_aligned) / n_finished;
    }
    if (result.best.found) row.best_return = result.best.ret;
    row.policy_loss = st.policy_loss;
    row.value_loss = st.value_loss;
    result.log.push_back(row);
    if (progress) progress(row);
  }

  result.best_params = result.final_params;
  if (result.best.found) result.best_params.flat = result.best.params;
  return result;
}

inline constexpr const char* kTrainLogHeader =
    "update_idx,global_step,mean_return,best_return,frac_done,frac_alignment_reached,policy_loss,value_loss";

inline std::string train_log_to_csv(const std::vector<TrainLogRow>& rows, const Provenance& prov = {}) {
  std::ostringstream os;
  write_provenance(os, prov);
  os << kTrainLogHeader << '\n';
  for (const auto& r : rows) {
    os << r.update_idx << ',' << r.global_step << ',' << format_double(r.mean_return) << ','
       << format_double(r.best_return) << ',' << format_double(r.frac_done) << ','
       << format_double(r.frac_alignment_reached) << ',' << format_double(r.policy_loss) << ','
       << format_double(r.value_loss) << '\n';
  }
  return os.str();
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const PolicyParams& p, const nlohmann::json& config_echo) {
  std::vector<double> flat(p.flat.data(), p.flat.data() + p.flat.size());
  return {{"checkpoint_version", kCheckpointVersion},
          {"actor_sizes", p.actor.sizes()},
          {"critic_sizes", p.critic.sizes()},
          {"params", flat},
          {"config", config_echo}};
}

inline PolicyParams checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("checkpoint_version", 0) != kCheckpointVersion) throw parse_error("checkpoint: unsupported version");
  PolicyParams p{nn::Mlp(j.at("actor_sizes").get<std::vector<int>>()),
                 nn::Mlp(j.at("critic_sizes").get<std::vector<int>>()), {}};
  const auto flat = j.at("params").get<std::vector<double>>();
  if (flat.size() != p.log_std_offset() + static_cast<std::size_t>(p.act_dim())) {
    throw parse_error("checkpoint: parameter count does not match the layer sizes");
  }
  p.flat = Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  return p;
}

}  // namespace piperoute
