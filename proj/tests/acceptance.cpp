// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <piperoute/cli.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace piperoute;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

PathState random_start(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  PathState st;
  st.r = Vec3(100 * n(rng), 100 * n(rng), 100 * n(rng));
  st.frame = rotate_frame_about_tangent(initial_frame(Vec3(n(rng), n(rng), n(rng)).normalized()), n(rng));
  return st;
}

// 1. RK4 vs closed-form helix
Outcome frenet_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uk(1e-4, 0.01), ut(-0.005, 0.005);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double k = uk(rng), t = ut(rng);
    const PathState st = random_start(rng);
    const auto end = integrate_segment(st, [k](double) { return k; }, [t](double) { return t; }, 500.0, 0.1).second;
    worst = std::max(worst, (end.r - analytic_helix(k, t, 500.0, st).r).norm());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0, "max endpoint error " + fmt(worst) + " mm, " + fmt(secs) + " s"};
}

// 2. full circle closure
Outcome circle_closure() {
  std::mt19937_64 rng(102);
  const PathState st = random_start(rng);
  const auto end = integrate_segment(st, [](double) { return 0.01; }, [](double) { return 0.0; },
                                     200.0 * std::numbers::pi, 0.1)
                       .second;
  const double dp = (end.r - st.r).norm();
  const double df = std::max({(end.frame.T - st.frame.T).norm(), (end.frame.N - st.frame.N).norm(),
                              (end.frame.B - st.frame.B).norm()});
  return {dp < 1e-3 && df < 1e-6, "position " + fmt(dp) + " mm, frame " + fmt(df)};
}

// 3. Hermite endpoint conditions and C1 continuity
Outcome hermite_contract() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-1.0, 1.0), len(1.0, 20.0), ks(0.0, 0.01), ts(-0.005, 0.005);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double s0 = 500.0 * u(rng), h = len(rng);
    const double v0 = 0.01 * u(rng), v1 = 0.01 * u(rng), d0 = 1e-3 * u(rng), d1 = 1e-3 * u(rng);
    const Cubic c = hermite_coeffs(s0, s0 + h, v0, v1, d0, d1);
    worst = std::max({worst, std::abs(c.value(0) - v0), std::abs(c.value(h) - v1), std::abs(c.derivative(0) - d0),
                      std::abs(c.derivative(h) - d1)});
  }
  GeoProfile p;
  for (int i = 0; i < 10000; ++i) p.extend(len(rng), ks(rng), ts(rng));
  double c1 = 0.0;
  for (std::size_t i = 1; i + 1 < p.knots().size(); ++i) {
    const double h = p.knots()[i].s - p.knots()[i - 1].s;
    for (const auto* segs : {&p.kappa_segments(), &p.tau_segments()}) {
      c1 = std::max({c1, std::abs((*segs)[i - 1].value(h) - (*segs)[i].value(0)),
                     std::abs((*segs)[i - 1].derivative(h) - (*segs)[i].derivative(0))});
    }
  }
  return {worst <= 1e-12 && c1 <= 1e-12, "endpoint error " + fmt(worst) + ", knot jump " + fmt(c1)};
}

// 4. admissible-set soundness
Outcome admissible_soundness() {
  const AdmissibleBounds b = admissible_bounds(100.0);
  int violations = 0;
  double min_r0 = std::numeric_limits<double>::infinity();
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const double t = b.tau_lo + (b.tau_hi - b.tau_lo) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double k = b.kappa_lo(t) + (b.kappa_hi(t) - b.kappa_lo(t)) * j / (n - 1);
      if (!check_manufacturable(k, t, 100.0)) ++violations;
      if (k >= kDefaultKappaEps) min_r0 = std::min(min_r0, k / (k * k + t * t));
    }
  }
  const double r0 = helix_params(0.01, 0.005).R0;
  const bool flagged = !check_manufacturable(0.01, 0.005, 100.0);
  return {violations == 0 && flagged && std::abs(r0 - 80.0) < 1e-9,
          std::to_string(violations) + " violations, min R0 " + fmt(min_r0) + " mm; (0.01, 0.005) R0 " + fmt(r0) +
              (flagged ? " flagged" : " NOT flagged")};
}

// 5. kinematics closed forms and pose invariants
Outcome kinematics_oracle() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> uk(1e-3, 0.01), ut(-0.005, 0.005), ul(20.0, 400.0);
  MachineConfig cfg;
  double err = 0.0, inv = 0.0;
  int done = 0;
  while (done < 20) {
    const double k = uk(rng), t = ut(rng);
    const HelixParams h = helix_params(k, t);
    if (cfg.k * cfg.A0 > h.R0) continue;
    const int n = static_cast<int>(ul(rng));
    std::vector<BendSample> s;
    for (int i = 0; i <= n; ++i) s.push_back({i == 0 ? 0.0 : 1.0, k, t});
    const auto poses = die_pose_sequence(s, cfg);
    const SpiralStages ref = spiral_stage_poses(h.R0, h.P0, n, cfg);
    const DiePose& e = poses.back();
    const DiePose& r = ref.stage2_end;
    err = std::max({err, std::abs(e.Px - r.Px), std::abs(e.Py - r.Py), std::abs(e.phiA - r.phiA),
                    std::abs(e.phiB - r.phiB), std::abs(e.t - r.t), std::abs(poses.front().t - ref.t1),
                    std::abs(poses.front().Py - ref.stage1_end.Py), std::abs(poses.front().phiA - ref.stage1_end.phiA)});
    const DieDeflection dd = die_deflection(h, cfg);
    for (const auto& p : poses) {
      inv = std::max({inv, std::abs(std::hypot(p.Px, p.Py) - dd.Uy), std::abs(std::hypot(p.phiA, p.phiB) - dd.alphaA)});
    }
    ++done;
  }
  return {err <= 1e-9 && inv <= 1e-12, "closed-form error " + fmt(err) + ", invariant error " + fmt(inv)};
}

// 6. similarity metrics vs exhaustive recursion
namespace brute {
int lcss(const Trajectory& a, const Trajectory& b, double eps, std::size_t i, std::size_t j) {
  if (i == a.size() || j == b.size()) return 0;
  int best = std::max(lcss(a, b, eps, i + 1, j), lcss(a, b, eps, i, j + 1));
  if ((a[i] - b[j]).norm() <= eps) best = std::max(best, 1 + lcss(a, b, eps, i + 1, j + 1));
  return best;
}
int edr(const Trajectory& a, const Trajectory& b, double eps, std::size_t i, std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const int sub = (a[i] - b[j]).norm() <= eps ? 0 : 1;
  return std::min({sub + edr(a, b, eps, i + 1, j + 1), 1 + edr(a, b, eps, i + 1, j), 1 + edr(a, b, eps, i, j + 1)});
}
void paths(const Trajectory& a, const Trajectory& b, std::size_t i, std::size_t j, double sum, double mx, double& bs,
           double& bm) {
  const double d = (a[i] - b[j]).norm();
  sum += d;
  mx = std::max(mx, d);
  if (i + 1 == a.size() && j + 1 == b.size()) {
    bs = std::min(bs, sum);
    bm = std::min(bm, mx);
    return;
  }
  if (i + 1 < a.size()) paths(a, b, i + 1, j, sum, mx, bs, bm);
  if (j + 1 < b.size()) paths(a, b, i, j + 1, sum, mx, bs, bm);
  if (i + 1 < a.size() && j + 1 < b.size()) paths(a, b, i + 1, j + 1, sum, mx, bs, bm);
}
}  // namespace brute

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(106);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  std::uniform_int_distribution<int> grid(0, 5);
  int mismatches = 0;
  for (int k = 0; k < 500; ++k) {
    Trajectory a, b;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) a.emplace_back(10.0 * grid(rng), 10.0 * grid(rng), 5.0 * grid(rng));
    for (std::size_t i = 0, n = len(rng); i < n; ++i) b.emplace_back(10.0 * grid(rng), 10.0 * grid(rng), 5.0 * grid(rng));
    const double eps = 25.0;
    double bs = std::numeric_limits<double>::infinity(), bm = bs;
    brute::paths(a, b, 0, 0, 0.0, 0.0, bs, bm);
    const double ratio = static_cast<double>(brute::lcss(a, b, eps, 0, 0)) / static_cast<double>(std::min(a.size(), b.size()));
    if (lcss(a, b, eps) != ratio) ++mismatches;
    if (edit_distance(a, b, eps) != brute::edr(a, b, eps, 0, 0)) ++mismatches;
    if (discrete_frechet(a, b) != bm) ++mismatches;
    // the DP and the enumeration add the same costs in different orders
    if (std::abs(dtw(a, b) - bs) > 1e-12 * (1.0 + bs)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0, std::to_string(mismatches) + " mismatches on 500 pairs, " + fmt(secs) + " s"};
}

// 7. PPO numerics
Outcome ppo_numerics() {
  Rng rng(107);
  PolicyParams p = make_policy(6, {8, 8}, kActionSize, rng, -0.5);
  const int m = 16;
  std::normal_distribution<double> n(0.0, 1.0);
  RolloutBatch mb;
  mb.obs = Eigen::MatrixXd::NullaryExpr(6, m, [&] { return n(rng); });
  mb.raw = Eigen::MatrixXd::NullaryExpr(kActionSize, m, [&] { return n(rng); });
  mb.advantages = Eigen::VectorXd::NullaryExpr(m, [&] { return n(rng); });
  mb.returns = Eigen::VectorXd::NullaryExpr(m, [&] { return n(rng); });
  const Eigen::MatrixXd noise = uniform_mean_noise(0.01)(kActionSize, m, rng);
  const Eigen::MatrixXd mu = p.actor.forward(p.actor_data(), mb.obs) + noise;
  mb.old_log_prob.resize(m);
  std::uniform_real_distribution<double> shift(-0.08, 0.08);
  for (int j = 0; j < m; ++j) {
    const double s = j % 5 == 0 ? (j % 10 == 0 ? 0.6 : -0.6) : shift(rng);
    mb.old_log_prob[j] = gaussian_log_prob(mb.raw.col(j), mu.col(j), p.log_std()) + s;
  }
  RLConfig cfg;
  const LossAndGrad lg = ppo_loss_and_grad(p, mb, noise, cfg);
  double worst = 0.0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < p.flat.size(); ++i) {
    PolicyParams q = p;
    q.flat[i] += h;
    const double up = ppo_loss_and_grad(q, mb, noise, cfg).total;
    q.flat[i] -= 2 * h;
    const double dn = ppo_loss_and_grad(q, mb, noise, cfg).total;
    const double fd = (up - dn) / (2 * h);
    worst = std::max(worst, std::abs(fd - lg.grad[i]) / std::max(std::abs(fd) + std::abs(lg.grad[i]), 1e-6));
  }
  const bool hand = clipped_surrogate(1.3, 2.0, 0.15) == 2.3 && clipped_surrogate(0.7, -1.0, 0.15) == -0.85;

  cfg.noise_alpha = 0.0;
  cfg.minibatch = 4;
  cfg.update_epochs = 3;
  PolicyParams a = p, b = p;
  nn::Adam adam_a, adam_b;
  Rng ra(9), rb(9);
  ppo_update(a, adam_a, mb, cfg, ra);
  ppo_update(b, adam_b, mb, cfg, rb,
             [](int rows, Eigen::Index cols, Rng&) { return Eigen::MatrixXd::Zero(rows, cols).eval(); });
  const bool same = std::memcmp(a.flat.data(), b.flat.data(), sizeof(double) * static_cast<std::size_t>(a.flat.size())) == 0;
  return {worst < 1e-4 && hand && same, "max relative gradient error " + fmt(worst) +
                                            (hand ? ", surrogate hand cases exact" : ", surrogate hand cases WRONG") +
                                            (same ? ", alpha=0 update bit-identical" : ", alpha=0 update DIFFERS")};
}

// 8. training smoke benchmark
Outcome training_benchmark() {
  const std::string scene_path = std::string(PIPEROUTE_DATA_DIR) + "/desk_engine.json";
  const Scene scene = load_scene_file(scene_path, "fuel-line");
  const MachineConfig machine = machine_config_from_json(read_json_file(std::string(PIPEROUTE_DATA_DIR) + "/machine.json"));
  RLConfig cfg;
  cfg.total_steps = 200000;
  int ok = 0;
  std::ostringstream detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult res = train(scene, machine, cfg, RewardWeights{}, seed);
    const double secs = seconds_since(t0);
    bool good = false;
    std::string what = "no Done episode";
    if (res.best.done) {
      const LayoutReport r = layout_report(res.best.path, scene, machine.R_min, scene.target, cfg.s_max);
      good = r.cfi && r.mvr == 0.0 && r.l_align < 0.05;
      what = std::string("Done, CFI ") + (r.cfi ? "true" : "false") + ", MVR " + fmt(r.mvr) + ", l_align " +
             fmt(r.l_align) + ", PL " + fmt(r.pl);
    }
    good = good && secs < 1800.0;
    ok += good ? 1 : 0;
    detail << " [seed " << seed << ": " << what << ", " << fmt(secs) << " s]";
    std::cout << "  criterion 8 seed " << seed << ":" << (good ? " ok " : " no ") << what << ", " << fmt(secs) << " s"
              << std::endl;
  }
  return {ok >= 2, std::to_string(ok) + "/3 seeds" + detail.str()};
}

// 9. stage machine traces
Outcome stage_machine() {
  const Port target{Vec3(500, 0, 0), Vec3::UnitX()};
  const RewardWeights w;
  auto state = [](Stage st, const Vec3& r) {
    EpisodeState ep;
    ep.stage = st;
    ep.step = 3;
    ep.path.r = r;
    return ep;
  };
  bool ok = true;
  ok &= stage_transition(state(Stage::Navigation, Vec3(300, 0, 0)), target, w, 20.0) == Stage::Navigation;
  ok &= stage_transition(state(Stage::Navigation, Vec3(std::nextafter(300.0, 400.0), 0, 0)), target, w, 20.0) ==
        Stage::Alignment;
  ok &= stage_transition(state(Stage::Alignment, Vec3(400, 4, 0)), target, w, 20.0) == Stage::Alignment;
  ok &= stage_transition(state(Stage::Alignment, Vec3(400, std::nextafter(4.0, 0.0), 0)), target, w, 20.0) ==
        Stage::Shooting;

  // scripted episode: straight approach, a kink in alignment, then a correction
  Scene sc;
  sc.workspace = {Vec3(-100, -300, -300), Vec3(800, 300, 300)};
  sc.target = target;
  RoutingEnv env(sc);
  std::vector<Action> script(15, Action{20.0, 0.0, 0.0, 0.0});
  script.push_back({20.0, 0.004, 0.0, 0.0});
  script.push_back({20.0, 0.0, 0.0, 0.0});
  script.push_back({20.0, 0.001, 0.0, 0.0});
  for (int i = 0; i < 20; ++i) script.push_back({5.0, 0.0, 0.0, 0.0});
  double bonus_once = 0.0, align_sum = 0.0;
  double l_enter = 0.0, l_exit = 0.0;
  bool entered = false;
  int entries = 0;
  double prev_l = env.state().prev_l_align;
  for (const Action& a : script) {
    if (is_terminal(env.state().stage)) break;
    const bool grant = env.state().stage == Stage::Alignment && !env.state().bonus_alignment;
    const bool grant_s = env.state().stage == Stage::Shooting && !env.state().bonus_shooting;
    const Stage before = env.state().stage;
    const StepRecord r = env.step(a);
    if (grant || grant_s) {
      ++entries;
      bonus_once += w.r_bonus;
    }
    if (before == Stage::Alignment) {
      if (!entered) l_enter = prev_l;
      entered = true;
      align_sum += r.stage_reward - (grant ? w.r_bonus : 0.0);
      l_exit = r.l_align;
    }
    prev_l = r.l_align;
  }
  const double telescoping = std::abs(align_sum - w.w_align * (l_enter - l_exit));
  ok &= entered && bonus_once <= 20.0 && entries <= 2 && telescoping <= 1e-12;
  return {ok, "threshold checks and scripted trace: bonuses " + fmt(bonus_once) + ", telescoping error " +
                  fmt(telescoping) + ", final stage " + std::string(stage_name(env.state().stage))};
}

// 10. determinism of cmd_route
Outcome route_determinism() {
  const fs::path root = fs::temp_directory_path() / "piperoute_acceptance_det";
  fs::remove_all(root);
  RunConfig rc;
  rc.scene_path = std::string(PIPEROUTE_DATA_DIR) + "/desk_engine.json";
  rc.seed = 2024;
  rc.rl_overrides = {{"total_steps", 4096}, {"workers", 1}};
  std::string files[2][2];
  for (int run = 0; run < 2; ++run) {
    rc.out_dir = (root / std::to_string(run)).string();
    cmd_route(rc);
    files[run][0] = read_text_file((root / std::to_string(run) / "path.csv").string());
    files[run][1] = read_text_file((root / std::to_string(run) / "training_log.csv").string());
  }
  const bool same = files[0][0] == files[1][0] && files[0][1] == files[1][1];
  return {same && !files[0][0].empty(), same ? "path.csv and training_log.csv identical" : "outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"Frenet oracle equivalence", frenet_oracle},
      {"circle closure", circle_closure},
      {"Hermite contract", hermite_contract},
      {"admissible-set soundness", admissible_soundness},
      {"kinematics oracle", kinematics_oracle},
      {"metric oracle equivalence", metric_oracles},
      {"PPO numerics", ppo_numerics},
      {"training smoke benchmark", training_benchmark},
      {"stage machine", stage_machine},
      {"determinism", route_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
