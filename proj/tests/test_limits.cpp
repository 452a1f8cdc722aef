#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbm/limits.hpp"
#include "suite.hpp"

using namespace bbm;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<double> kEps = {0.1, 0.05, 0.025, 0.0125};

}  // namespace

TEST(Minkowski, ClosedFormCones) {
  for (int n = 1; n <= 3; ++n) {
    // ((1 + eps)^n - 1) / eps is exactly linear in eps only for n <= 2.
    const ExtrapolatedValue m = minkowski_content(ConeDescriptor::of(Space::euclidean(n)), 1.0, kEps);
    EXPECT_NEAR(m.value, n, n <= 2 ? 1e-9 : m.uncertainty) << n;
    EXPECT_NEAR(m.value, n, 1e-3 * n) << n;
  }
  EXPECT_NEAR(minkowski_content(ConeDescriptor::of(Space::lq_normed(2, INFINITY)), 1.0, kEps).value,
              2.0, 1e-9);
  EXPECT_NEAR(minkowski_content(ConeDescriptor::of(Space::euclidean(2), false), 1.0, kEps).value,
              2.0 * kPi, 1e-9);
  // Perimeter of the radius-2 disc.
  EXPECT_NEAR(minkowski_content(ConeDescriptor::of(Space::euclidean(2), false), 2.0, kEps).value,
              4.0 * kPi, 1e-9);
}

TEST(Minkowski, HeisenbergByMonteCarlo) {
  const ExtrapolatedValue m =
      minkowski_content(ConeDescriptor::of(Space::heisenberg()), 1.0, kEps, 1000000, 5);
  EXPECT_GT(m.uncertainty, 0.0);
  EXPECT_NEAR(m.value, 4.0, std::max(3.0 * m.uncertainty, 0.02));
}

TEST(Minkowski, WeightedConeIsFlat) {
  const ConeDescriptor c = ConeDescriptor::of(suite::sine_weighted_plane());
  EXPECT_EQ(c.space().kind(), SpaceKind::Euclidean);
  EXPECT_NEAR(minkowski_content(c, 1.0, kEps).value, 2.0, 1e-9);
}

TEST(Minkowski, ScheduleIsChecked) {
  const ConeDescriptor c = ConeDescriptor::of(Space::euclidean(2));
  EXPECT_THROW(minkowski_content(c, 1.0, {0.1, 0.05}), InputError);
  EXPECT_THROW(minkowski_content(c, 1.0, {0.1, 0.2, 0.05}), InputError);
}

TEST(SphereIntegral, ConstantAndMoments) {
  const ConeDescriptor plane = ConeDescriptor::of(Space::euclidean(2));
  const SphereIntegral one = sphere_integral(plane, [](const PointRef&) { return 1.0; }, 2.0);
  EXPECT_NEAR(one.mean, 1.0, 1e-12);
  EXPECT_NEAR(one.integral, 2.0, 1e-12);
  const SphereIntegral cos2 = sphere_integral(plane, [](const PointRef& v) { return v(0); }, 2.0);
  EXPECT_NEAR(cos2.mean, 0.5, 4.0 * cos2.std_error);
  const SphereIntegral abs1 = sphere_integral(plane, [](const PointRef& v) { return v(0); }, 1.0);
  EXPECT_NEAR(abs1.mean, 2.0 / kPi, 4.0 * abs1.std_error);
  const ConeDescriptor space3 = ConeDescriptor::of(Space::euclidean(3));
  // Richardson leaves an O(eps^2) shell bias.
  EXPECT_NEAR(sphere_integral(space3, [](const PointRef&) { return 1.0; }, 2.0).integral, 3.0,
              1e-6);
}

TEST(KConstant, ClosedFormOracles) {
  struct Case {
    double p;
    int N;
    double value;
  };
  const Case cases[] = {{1.5, 2, 1.74803836952808}, {1.5, 3, 1.6755160819145567},
                        {2.0, 2, kPi / 2.0},        {2.0, 3, 1.3962634015954634},
                        {3.0, 2, 4.0 / 3.0},        {3.0, 3, 1.0471975511965979},
                        {1.5, 1, 2.0},              {3.0, 1, 2.0}};
  for (const Case& c : cases) {
    EXPECT_NEAR(k_constant_closed_form(c.p, c.N), c.value, 1e-13) << c.p << " " << c.N;
    const Estimate mc = k_constant_euclidean(c.p, c.N, 200000, 3);
    EXPECT_NEAR(mc.value, c.value, 4.0 * mc.std_error + 1e-12) << c.p << " " << c.N;
  }
}

TEST(KConstant, DirectionInvariance) {
  const Estimate e1 = k_constant_euclidean(2.0, 3, 200000, 3);
  const Estimate diag = k_constant_euclidean(2.0, 3, 200000, 3, Eigen::Vector3d(1.0, 1.0, 1.0));
  EXPECT_NEAR(e1.value, diag.value, 3.0 * std::hypot(e1.std_error, diag.std_error));
  EXPECT_THROW(k_constant_euclidean(2.0, 3, 1000, 3, Eigen::Vector2d(1.0, 0.0)), InputError);
}

TEST(Theta, References) {
  EXPECT_NEAR(theta_reference(Space::euclidean(2), Point::Zero(2)), kPi, 1e-15);
  EXPECT_DOUBLE_EQ(theta_reference(Space::lq_normed(2, INFINITY), Point::Zero(2)), 4.0);
  EXPECT_NEAR(theta_reference(Space::heisenberg(), Point::Zero(3)), kPi * kPi / 8.0, 1e-15);
  const Point x = Eigen::Vector2d(1.0, 0.0);
  EXPECT_NEAR(theta_reference(suite::sine_weighted_plane(), x), kPi, 1e-15);
  EXPECT_NEAR(theta_reference(suite::sine_weighted_plane(MeasurePairing::Symmetric), x),
              kPi * (2.0 + std::sin(1.0)), 1e-14);
}

TEST(SphereMean, HomogeneousAndBelowDualNorm) {
  Rng rng(6);
  for (const Space& space : {Space::euclidean(2), Space::lq_normed(2, INFINITY),
                             Space::lq_normed(2, 1.0), Space::lq_normed(3, 3.0),
                             Space::heisenberg()}) {
    const SphereMean mean(space, 2.0, 100000);
    const int m = space.kind() == SpaceKind::HeisenbergKoranyi ? 2 : space.topological_dim();
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd g(m);
      for (int i = 0; i < m; ++i) g(i) = rng.uniform(-1.0, 1.0);
      const double v = mean(g);
      EXPECT_NEAR(mean(2.0 * g), 4.0 * v, 1e-12 * v) << space.description();
      const double dual = space.dual_norm(space.kind() == SpaceKind::HeisenbergKoranyi
                                              ? Eigen::VectorXd(Eigen::Vector3d(g(0), g(1), 0.0))
                                              : g);
      EXPECT_LE(v, dual * dual * 1.01) << space.description();
    }
  }
}

TEST(SphereMean, SquareSphereOracle) {
  // Normalized mean of |g . v|^2 over the l^inf unit circle: (16/3) / (N V) = 2/3 for |g|_2 = 1.
  const SphereMean mean(Space::lq_normed(2, INFINITY), 2.0);
  EXPECT_NEAR(mean(Eigen::Vector2d(1.0, 0.0)), 2.0 / 3.0, 3e-3);
  EXPECT_NEAR(mean(Eigen::Vector2d(0.6, 0.8)), 2.0 / 3.0, 3e-3);
  // p = 3 with g = (0.6, 0.8): 5.6019989775564145 / 8.
  const SphereMean cube(Space::lq_normed(2, INFINITY), 3.0);
  EXPECT_NEAR(cube(Eigen::Vector2d(0.6, 0.8)), 5.6019989775564145 / 8.0, 5e-3);
}

TEST(Limit, EuclideanIsKTimesGradientNorm) {
  const TestFunction bump = TestFunction::radial_bump(Point::Zero(2), 1.0);
  const LimitValue v = limit_seminorm(Space::euclidean(2), bump, 2.0);
  EXPECT_NEAR(v.value, (kPi / 2.0) * 4.1887902047863905, 3.0 * v.uncertainty + 1e-3);
  const LimitValue h = limit_seminorm(Space::euclidean(1), TestFunction::hat1d(), 3.0);
  EXPECT_NEAR(h.value, 2.0 * 2.0, std::max(3.0 * h.uncertainty, 1e-5));
}

TEST(Limit, ConstantFunctionVanishes) {
  const TestFunction zero = TestFunction::radial_bump(Point::Zero(2), 1.0).scaled(0.0);
  EXPECT_EQ(limit_seminorm(Space::lq_normed(2, 1.0), zero, 2.0).value, 0.0);
}

TEST(Limit, MaxNormLinearCutoff) {
  const TestFunction lc = TestFunction::linear_cutoff(Point::Zero(2), 1.0, Eigen::Vector2d(1.0, 0.5));
  const LimitValue v = limit_seminorm(Space::lq_normed(2, INFINITY), lc, 2.0);
  EXPECT_NEAR(v.value, 11.107774025192481, 0.01 * 11.107774025192481);
}

TEST(Limit, HomogeneousInAmplitude) {
  const Space h = Space::heisenberg();
  LimitBudgets b;
  b.grid_resolution = 24;
  b.shell_samples = 50000;
  const TestFunction f = TestFunction::heisenberg_poly(1.0);
  const double base = limit_seminorm(h, f, 2.0, b).value;
  EXPECT_NEAR(limit_seminorm(h, f.scaled(2.0), 2.0, b).value, 4.0 * base, 1e-12 * base);
}

TEST(BallForm, IdentityOnNormedPlanes) {
  for (const Space& space : {Space::euclidean(2), Space::lq_normed(2, INFINITY),
                             Space::lq_normed(2, 1.0)}) {
    for (double p : {1.5, 2.0, 3.0}) {
      const BallFormReport r = gagliardo_ball_form(
          p, TestFunction::linear_cutoff(Point::Zero(2), 1.0, Eigen::Vector2d(1.0, 0.5)), space, 12);
      EXPECT_LT(r.relative_gap, 1e-6) << space.description() << " p = " << p;
    }
  }
  EXPECT_THROW(gagliardo_ball_form(2.0, TestFunction::heisenberg_poly(1.0), Space::heisenberg()),
               UnsupportedOperation);
}

TEST(BallForm, HatValue) {
  const BallFormReport r = gagliardo_ball_form(2.0, TestFunction::hat1d(), Space::euclidean(1));
  EXPECT_NEAR(r.ball_side, 2.0, 1e-10);
  EXPECT_NEAR(r.sphere_side, 2.0, 1e-10);
}

TEST(Predicted, FamilyConstantEntersAsNTimesC0) {
  const Space plane = Space::euclidean(2);
  const TestFunction bump = TestFunction::radial_bump(Point::Zero(2), 1.0);
  const auto ind = MollifierFamily::indicator(2.0, 2.0, {0.1});
  EXPECT_NEAR(predicted_limit(plane, bump, ind, 2.0).value, limit_seminorm(plane, bump, 2.0).value,
              1e-12);
  const auto gag = MollifierFamily::gagliardo(1.0, 2.0, {0.9});
  EXPECT_NEAR(predicted_limit(Space::euclidean(1), TestFunction::hat1d(), gag, 2.0).value, 2.0, 1e-6);
  EXPECT_THROW(predicted_limit(plane, bump, ind, 3.0), InputError);
}
