#include <piperoute/frenet.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace piperoute;

namespace {

auto constant(double v) {
  return [v](double) { return v; };
}

PathState start_state() {
  PathState st;
  st.r = Vec3(1.0, -2.0, 3.0);
  st.frame = initial_frame(Vec3(1.0, 1.0, 0.5).normalized());
  return st;
}

}  // namespace

TEST(Frenet, StraightLineWhenCurvatureAndTorsionVanish) {
  const PathState st = start_state();
  auto [line, end] = integrate_segment(st, constant(0.0), constant(0.0), 100.0, 1.0);
  EXPECT_NEAR((end.r - (st.r + 100.0 * st.frame.T)).norm(), 0.0, 1e-12);
  EXPECT_EQ(line.size(), 101u);
  EXPECT_NEAR(line.chord_length(), 100.0, 1e-10);
}

TEST(Frenet, ZeroCurvaturePureTorsionRotatesNormalOnly) {
  const PathState st = start_state();
  auto [line, end] = integrate_segment(st, constant(0.0), constant(0.01), 50.0, 1.0);
  EXPECT_NEAR((end.frame.T - st.frame.T).norm(), 0.0, 1e-12);
  EXPECT_NEAR((end.r - (st.r + 50.0 * st.frame.T)).norm(), 0.0, 1e-10);
  EXPECT_NEAR(end.frame.N.dot(st.frame.N), std::cos(0.5), 1e-9);
}

TEST(Frenet, PlanarCircleOfRadiusOneOverKappa) {
  PathState st;
  auto [line, end] = integrate_segment(st, constant(0.01), constant(0.0), 50.0 * std::numbers::pi, 0.5);
  // quarter turn of a 100 mm radius circle in the T-N plane
  EXPECT_NEAR(end.r.x(), 100.0, 1e-6);
  EXPECT_NEAR(end.r.y(), 100.0, 1e-6);
  EXPECT_NEAR(end.r.z(), 0.0, 1e-12);
  for (const auto& p : line.points) EXPECT_NEAR((p.r - Vec3(0, 100, 0)).norm(), 100.0, 1e-6);
}

TEST(Frenet, CircleClosesAfterFullTurn) {
  PathState st = start_state();
  auto [line, end] = integrate_segment(st, constant(0.01), constant(0.0), 200.0 * std::numbers::pi, 0.1);
  EXPECT_LT((end.r - st.r).norm(), 1e-3);
  EXPECT_LT((end.frame.T - st.frame.T).norm(), 1e-6);
  EXPECT_LT((end.frame.N - st.frame.N).norm(), 1e-6);
  EXPECT_LT((end.frame.B - st.frame.B).norm(), 1e-6);
}

TEST(Frenet, HelixMatchesClosedForm) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uk(1e-4, 0.01), ut(-0.005, 0.005);
  for (int i = 0; i < 10; ++i) {
    const double k = uk(rng), t = ut(rng);
    const PathState st = start_state();
    auto [line, end] = integrate_segment(st, constant(k), constant(t), 500.0, 0.1);
    const PathState ref = analytic_helix(k, t, 500.0, st);
    EXPECT_LT((end.r - ref.r).norm(), 1e-4) << k << " " << t;
    EXPECT_LT((end.frame.T - ref.frame.T).norm(), 1e-8);
  }
}

TEST(Frenet, AnalyticHelixRadiusAndPitch) {
  const double k = 0.004, t = 0.003;
  const auto g = helix_geometry(k, t);
  EXPECT_NEAR(g.radius, 160.0, 1e-9);
  PathState st;
  // After one full turn of the Darboux rotation the point advances 2 pi axial_rate along the axis.
  const double period = 2.0 * std::numbers::pi / std::hypot(k, t);
  const PathState end = analytic_helix(k, t, period, st);
  const Vec3 axis = (t * st.frame.T + k * st.frame.B).normalized();
  EXPECT_NEAR((end.r - st.r).dot(axis), 2.0 * std::numbers::pi * g.axial_rate, 1e-9);
  EXPECT_NEAR((end.r - st.r).cross(axis).norm(), 0.0, 1e-9);
  EXPECT_NEAR((end.frame.T - st.frame.T).norm(), 0.0, 1e-12);
}

TEST(Frenet, FrameStaysOrthonormal) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  PathState st = start_state();
  for (int i = 0; i < 2000; ++i) {
    const double k = std::abs(u(rng)), t = 0.5 * u(rng);
    st = frenet_step(st, constant(k), constant(t), 0.5);
    ASSERT_LT(frame_orthonormality_error(st.frame), 1e-12);
    ASSERT_NEAR(st.frame.T.cross(st.frame.N).dot(st.frame.B), 1.0, 1e-12);
  }
}

TEST(Frenet, SamplesAtRequestedSpacingWithPartialTail) {
  PathState st;
  st.s = 10.0;
  auto [line, end] = integrate_segment(st, constant(0.002), constant(0.001), 13.5, 1.0);
  ASSERT_EQ(line.size(), 5u);
  EXPECT_DOUBLE_EQ(line.points[1].s, 11.0);
  EXPECT_DOUBLE_EQ(line.back().s, 13.5);
  EXPECT_DOUBLE_EQ(end.s, 13.5);
}

TEST(Frenet, Errors) {
  PathState st;
  EXPECT_THROW(integrate_segment(st, constant(0.0), constant(0.0), 0.0, 1.0), domain_error);
  EXPECT_THROW(integrate_segment(st, constant(0.0), constant(0.0), 10.0, 0.0), domain_error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(integrate_segment(st, constant(nan), constant(0.0), 10.0, 1.0), integration_error);
  EXPECT_THROW(integrate_segment(st, constant(0.0), constant(INFINITY), 10.0, 1.0), integration_error);
  Frame bad;
  bad.N = bad.T;
  EXPECT_THROW(reorthonormalize(bad), frame_error);
  EXPECT_THROW(analytic_helix(0.0, 0.01, 1.0, st), domain_error);
}

TEST(Frenet, InitialFrameIsRightHanded) {
  for (const Vec3& t : {Vec3(1, 0, 0), Vec3(0, 0, -1), Vec3(0.3, -0.4, 0.866).normalized()}) {
    const Frame f = initial_frame(t);
    EXPECT_NEAR((f.T - t).norm(), 0.0, 1e-15);
    EXPECT_LT(frame_orthonormality_error(f), 1e-14);
    EXPECT_NEAR((f.T.cross(f.N) - f.B).norm(), 0.0, 1e-14);
  }
}

TEST(Frenet, RollAboutTangent) {
  const Frame f = initial_frame(Vec3::UnitX());
  const Frame g = rotate_frame_about_tangent(f, std::numbers::pi / 2);
  EXPECT_NEAR((g.N - f.B).norm(), 0.0, 1e-15);
  EXPECT_NEAR((g.B + f.N).norm(), 0.0, 1e-15);
  EXPECT_EQ(g.T, f.T);
}
