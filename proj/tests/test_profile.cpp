#include <piperoute/io.hpp>
#include <piperoute/machine.hpp>
#include <piperoute/profile.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace piperoute;

TEST(Hermite, EndpointConditions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0), len(0.5, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double s0 = 100.0 * u(rng), s1 = s0 + len(rng);
    const double v0 = u(rng), v1 = u(rng), d0 = u(rng), d1 = u(rng);
    const Cubic c = hermite_coeffs(s0, s1, v0, v1, d0, d1);
    const double h = s1 - s0;
    EXPECT_NEAR(c.value(0.0), v0, 1e-12);
    EXPECT_NEAR(c.value(h), v1, 1e-12);
    EXPECT_NEAR(c.derivative(0.0), d0, 1e-12);
    EXPECT_NEAR(c.derivative(h), d1, 1e-12);
  }
}

TEST(Hermite, ZeroSlopeExample) {
  const Cubic c = hermite_coeffs(0.0, 10.0, 0.0, 0.01, 0.0, 0.0);
  EXPECT_NEAR(c.value(5.0), 0.005, 1e-15);
  EXPECT_NEAR(c.derivative(0.0), 0.0, 1e-15);
  EXPECT_THROW(hermite_coeffs(1.0, 1.0, 0, 0, 0, 0), domain_error);
}

TEST(Profile, ImplicitFirstKnotAndAppend) {
  GeoProfile p;
  EXPECT_EQ(p.knots().size(), 1u);
  p.extend(10.0, 0.01, 0.0);
  p.extend(5.0, 0.002, -0.003);
  EXPECT_DOUBLE_EQ(p.s_end(), 15.0);
  EXPECT_DOUBLE_EQ(p.kappa(10.0), 0.01);
  EXPECT_DOUBLE_EQ(p.tau(15.0), -0.003);
  EXPECT_NEAR(p.kappa(5.0), 0.005, 1e-15);
  // C1 with zero derivative at knots
  for (double s : {0.0, 10.0, 15.0}) {
    EXPECT_NEAR(p.derivative(s).kappa, 0.0, 1e-12);
    EXPECT_NEAR(p.derivative(s, true).kappa, 0.0, 1e-12);
  }
}

TEST(Profile, AppendDoesNotModifyEarlierSegments) {
  GeoProfile p;
  p.extend(8.0, 0.004, 0.001);
  const double mid = p.kappa(4.0);
  p.extend(12.0, 0.009, -0.004);
  EXPECT_EQ(p.kappa(4.0), mid);
  const GeoProfile q = append_knot(p, 3.0, 0.0, 0.0);
  EXPECT_EQ(p.knots().size(), 3u);
  EXPECT_EQ(q.knots().size(), 4u);
}

TEST(Profile, Rejections) {
  GeoProfile p;
  EXPECT_THROW(p.extend(0.0, 0.0, 0.0), domain_error);
  EXPECT_THROW(p.extend(20.5, 0.0, 0.0), domain_error);
  EXPECT_THROW(p.extend(5.0, 0.011, 0.0), rejected_action);
  EXPECT_THROW(p.extend(5.0, -0.001, 0.0), rejected_action);
  EXPECT_THROW(p.extend(5.0, 0.005, 0.0051), rejected_action);
  EXPECT_NO_THROW(p.extend(20.0, 0.01, 0.005));
  EXPECT_THROW(p.eval(-1.0), domain_error);
  EXPECT_THROW(p.eval(20.1), domain_error);
  EXPECT_THROW(GeoProfile::from_knots({{0, 0, 0}, {0, 0.001, 0}}), domain_error);
}

TEST(Profile, RandomC1Continuity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ds(1.0, 20.0), k(0.0, 0.01), t(-0.005, 0.005);
  GeoProfile p;
  for (int i = 0; i < 200; ++i) p.extend(ds(rng), k(rng), t(rng));
  for (std::size_t i = 1; i + 1 < p.knots().size(); ++i) {
    const double s = p.knots()[i].s;
    const auto& left = p.kappa_segments()[i - 1];
    const auto& right = p.kappa_segments()[i];
    const double h = s - p.knots()[i - 1].s;
    EXPECT_NEAR(left.value(h), right.value(0.0), 1e-12);
    EXPECT_NEAR(left.derivative(h), right.derivative(0.0), 1e-12);
  }
}

TEST(Admissible, ExactDiskIsManufacturable) {
  const AdmissibleBounds b = admissible_bounds(100.0);
  EXPECT_DOUBLE_EQ(b.tau_hi, 0.005);
  EXPECT_DOUBLE_EQ(b.kappa_relaxed_hi, 0.01);
  EXPECT_NEAR(b.kappa_lo(0.0), 0.0, 1e-18);
  EXPECT_NEAR(b.kappa_hi(0.0), 0.01, 1e-18);
  EXPECT_NEAR(b.kappa_lo(0.005), 0.005, 1e-15);
  EXPECT_FALSE(check_manufacturable(0.01, 0.005, 100.0));
  EXPECT_NEAR(helix_params(0.01, 0.005).R0, 80.0, 1e-12);
  EXPECT_THROW(b.kappa_lo(0.006), domain_error);
}

TEST(Admissible, ConvexityKeepsHermitePathsInside) {
  // knots inside the disk, zero-slope Hermite moves (kappa, tau) along the chord between them
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const AdmissibleBounds b = admissible_bounds(100.0);
  GeoProfile p;
  p.extend(5.0, 0.005, 0.0);
  for (int i = 0; i < 50; ++i) {
    const double t = b.tau_lo + (b.tau_hi - b.tau_lo) * u(rng);
    const double k = b.kappa_lo(t) + (b.kappa_hi(t) - b.kappa_lo(t)) * u(rng);
    p.extend(1.0 + 19.0 * u(rng), k, t);
  }
  for (double s = 5.0; s <= p.s_end(); s += 0.25) {
    const auto v = p.eval(s);
    EXPECT_TRUE(check_manufacturable(v.kappa, v.tau, 100.0)) << s;
  }
}

TEST(ProfileIo, CsvRoundTrip) {
  GeoProfile p;
  p.extend(7.3, 0.003, 0.001);
  const auto samples = sample_profile(p, 1.0);
  ASSERT_EQ(samples.size(), 9u);
  EXPECT_DOUBLE_EQ(samples.back().s, 7.3);
  const auto back = profile_from_csv(profile_to_csv(samples, {"seed=1"}));
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].s, samples[i].s);
    EXPECT_EQ(back[i].kappa, samples[i].kappa);
    EXPECT_EQ(back[i].tau, samples[i].tau);
  }
  EXPECT_THROW(profile_from_csv("s_mm,kappa_per_mm\n1,2\n"), std::exception);
}
