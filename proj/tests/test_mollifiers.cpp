#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbm/mollifiers.hpp"
#include "suite.hpp"

using namespace bbm;

TEST(Normalization, BuiltInFamiliesIntegrateToClaimedConstant) {
  for (double N : {1.0, 2.0, 4.0}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const auto ind = MollifierFamily::indicator(N, p, {0.4, 0.1});
      EXPECT_NEAR(normalization_integral(ind, 0.1, 1.0), 1.0 / N, 1e-14);
      EXPECT_NEAR(normalization_integral(ind, 0.4, 0.2), std::pow(0.5, N) / N, 1e-14);
      const auto gag = MollifierFamily::gagliardo(N, p, {0.5, 0.9});
      EXPECT_NEAR(normalization_integral(gag, 0.9, 1.0), 1.0 / p, 1e-14);
      EXPECT_DOUBLE_EQ(gag.claimed_C0(), 1.0 / p);
      const auto gs = MollifierFamily::gaussian_shell(N, p, {0.4, 0.05});
      EXPECT_NEAR(gs.kernel(0.05).mass(0.0, INFINITY), 1.0 / N, 1e-12);
      EXPECT_NEAR(normalization_integral(gs, 0.05, 1.0), 1.0 / N, 1e-12);
    }
  }
}

TEST(Normalization, UserTableMassMatchesQuadrature) {
  // g(s) = 1 on [0, 1), linear to 0 on [1, 2]: int_0^2 s g(s) ds = 1/2 + 2/3.
  RadialTable t{{1.0, 2.0}, {1.0, 0.0}};
  const auto f = MollifierFamily::user_radial(2.0, 2.0, {1.0, 4.0}, t, 0.5);
  const double expected = 0.5 + 2.0 / 3.0;
  EXPECT_NEAR(f.kernel(1.0).mass(0.0, INFINITY), expected, 1e-14);
  // rho~_n(r) = n^N g(n r) keeps the mass.
  EXPECT_NEAR(f.kernel(4.0).mass(0.0, INFINITY), expected, 1e-14);
  EXPECT_DOUBLE_EQ(f.kernel(4.0).support(), 0.5);
}

TEST(Scaling, ScaledFamilyCarriesItsConstant) {
  const auto f = MollifierFamily::indicator(2.0, 2.0, {0.2}).scaled(3.0);
  EXPECT_DOUBLE_EQ(f.claimed_C0(), 1.5);
  EXPECT_DOUBLE_EQ(normalization_integral(f, 0.2, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(f.with_claimed_C0(0.25).claimed_C0(), 0.25);
  EXPECT_THROW(f.scaled(0.0), InputError);
}

TEST(Grid, MustApproachTheLimit) {
  EXPECT_THROW(MollifierFamily::indicator(2.0, 2.0, {0.1, 0.2}), InputError);
  EXPECT_THROW(MollifierFamily::gagliardo(2.0, 2.0, {0.9, 0.5}), InputError);
  EXPECT_THROW(MollifierFamily::gagliardo(2.0, 2.0, {0.5, 1.0}), InputError);
  EXPECT_THROW(MollifierFamily::indicator(2.0, 2.0, {}), InputError);
  EXPECT_THROW(MollifierFamily::indicator(2.0, 1.0, {0.1}), InputError);
}

TEST(KernelValue, RejectsNonPositiveRadius) {
  const auto f = MollifierFamily::gagliardo(1.0, 2.0, {0.5});
  EXPECT_THROW(kernel_value(f, 0.5, 0.0), InputError);
  EXPECT_THROW(kernel_value(f, 0.5, -1.0), InputError);
  EXPECT_NEAR(kernel_value(f, 0.5, 0.25), 0.5 * std::pow(0.25, 0.0), 1e-15);
}

TEST(Importance, QuantileInvertsCdf) {
  const std::vector<MollifierFamily> families = {
      MollifierFamily::indicator(3.0, 2.0, {0.3}),
      MollifierFamily::gagliardo(2.0, 1.5, {0.7}),
      MollifierFamily::gaussian_shell(2.0, 2.0, {0.3}),
      MollifierFamily::user_radial(1.0, 2.0, {2.0}, RadialTable{{0.5, 1.0, 3.0}, {2.0, 1.0, 0.0}},
                                   1.0)};
  for (const auto& f : families) {
    const Kernel k = f.kernel(f.param_grid().front());
    for (double u : {1e-6, 0.01, 0.25, 0.5, 0.75, 0.99}) {
      const double r = k.importance_quantile(u, 0.4);
      EXPECT_NEAR(k.importance_cdf(r, 0.4), u, 1e-9 * std::max(1.0, u)) << to_string(f.kind());
    }
  }
}

TEST(Tails, GagliardoEnergyWeightedTail) {
  // (1 - s) * 2 * int_1^inf r^{(1-s)p - 1 - p} dr at s = 0.99, p = 2 equals 1/99.
  const auto f = MollifierFamily::gagliardo(1.0, 2.0, {0.99});
  const TailEstimate t = tail_mass(f, 0.99, Space::euclidean(1), Point::Zero(1), 1.0, 20000, 3);
  EXPECT_TRUE(t.energy_weighted);
  EXPECT_FALSE(t.warning.empty());
  EXPECT_NEAR(t.value, 0.010101010101010102, 4.0 * t.std_error + 1e-9);
}

TEST(Tails, CompactKernelHasNoTail) {
  const auto f = MollifierFamily::indicator(2.0, 2.0, {0.5});
  EXPECT_EQ(tail_mass(f, 0.5, Space::euclidean(2), Point::Zero(2), 1.0).value, 0.0);
}

TEST(Tails, GaussianTailMatchesIncompleteGamma) {
  // N = 2: N V int_1^inf r rho~ dr = pi * exp(-1/eps^2) for the shell of width eps.
  const auto f = MollifierFamily::gaussian_shell(2.0, 2.0, {0.8});
  const TailEstimate t = tail_mass(f, 0.8, Space::euclidean(2), Point::Zero(2), 1.0, 40000, 5);
  EXPECT_NEAR(t.value, std::numbers::pi * std::exp(-1.0 / 0.64), 4.0 * t.std_error + 1e-12);
}

TEST(L1, EuclideanBoundIsVolumeTimesConstant) {
  const auto f = MollifierFamily::indicator(2.0, 2.0, {0.4, 0.1});
  const L1Bound b = sup_L1_bound(f, Space::euclidean(2), {Point::Zero(2)});
  EXPECT_NEAR(b.value, std::numbers::pi, 1e-12);
  EXPECT_FALSE(b.truncated);
  const auto g = MollifierFamily::gagliardo(2.0, 2.0, {0.5});
  EXPECT_TRUE(std::isinf(sup_L1_bound(g, Space::euclidean(2), {Point::Zero(2)}).value));
  EXPECT_TRUE(std::isfinite(sup_L1_bound(g, Space::euclidean(2), {Point::Zero(2)}, 1000, 1, 1.0).value));
}

TEST(L1, WeightedBoundTracksDensity) {
  const auto f = MollifierFamily::indicator(2.0, 2.0, {0.2, 0.05});
  const L1Bound b = sup_L1_bound(f, suite::sine_weighted_plane(), {Eigen::Vector2d(1.0, 0.0)});
  // For small balls the mass is close to pi * theta(1, 0).
  EXPECT_NEAR(b.value / std::numbers::pi, 2.0 + std::sin(1.0), 0.01);
}

TEST(Validation, BuiltInFamiliesPass) {
  for (const Space& space : suite::backends()) {
    for (const auto& f : suite::families_for(space, 2.0)) {
      const ValidationReport r = validate_assumptions(f, space);
      EXPECT_TRUE(r.monotone) << space.description();
      EXPECT_TRUE(r.normalization) << space.description() << " " << to_string(f.kind());
      EXPECT_TRUE(r.tail) << space.description() << " " << to_string(f.kind());
    }
  }
}

TEST(Validation, DetectsIncreasingKernel) {
  const auto f = MollifierFamily::user_radial(1.0, 2.0, {1.0, 2.0},
                                              RadialTable{{0.5, 1.0, 2.0}, {1.0, 2.0, 0.0}}, 1.0);
  const ValidationReport r = validate_assumptions(f, Space::euclidean(1));
  EXPECT_FALSE(r.monotone);
  EXPECT_FALSE(r.passed());
}

TEST(Validation, DetectsWrongConstantAndDimension) {
  const auto f = MollifierFamily::indicator(2.0, 2.0, {0.2}).with_claimed_C0(1.0);
  const ValidationReport r = validate_assumptions(f, Space::euclidean(2));
  EXPECT_FALSE(r.normalization);
  EXPECT_TRUE(r.rescale_flag);
  EXPECT_THROW(validate_assumptions(f, Space::euclidean(3)), InputError);
}
