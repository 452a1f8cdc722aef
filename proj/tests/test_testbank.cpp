#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbm/testbank.hpp"
#include "suite.hpp"

using namespace bbm;

TEST(Cutoff, IsC1Smoothstep) {
  EXPECT_EQ(cutoff(0.3), 1.0);
  EXPECT_EQ(cutoff(1.2), 0.0);
  EXPECT_DOUBLE_EQ(cutoff(0.75), 0.5);
  EXPECT_DOUBLE_EQ(cutoff_derivative(0.75), -3.0);
  EXPECT_EQ(cutoff_derivative(0.5), 0.0);
  EXPECT_EQ(cutoff_derivative(1.0), 0.0);
}

TEST(Gradient, FiniteDifferencesConvergeAtSecondOrder) {
  const std::vector<double> h = {1e-2, 5e-3, 2.5e-3};
  for (const Space& space : suite::backends()) {
    Rng rng(8);
    for (const TestFunction& f : suite::functions_for(space)) {
      for (int k = 0; k < 20; ++k) {
        Point x(space.topological_dim());
        for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-0.6, 0.6);
        if (x.size() == 3) x(2) *= 0.3;
        const FiniteDifferenceReport r = finite_difference_check(f, space, x, h);
        EXPECT_LT(r.worst, 5e-3) << f.description();
        // Errors shrink by ~4 per halving wherever they are above round-off.
        if (r.errors[0] > 1e-9) EXPECT_LT(r.errors[2], 0.3 * r.errors[0]) << f.description();
      }
    }
  }
}

TEST(Gradient, HatIsOneSided) {
  const TestFunction f = TestFunction::hat1d();
  EXPECT_EQ(f.gradient(Point::Constant(1, 0.0))(0), -1.0);
  EXPECT_EQ(f.gradient(Point::Constant(1, -0.5))(0), 1.0);
  EXPECT_EQ(f.gradient(Point::Constant(1, 1.0))(0), 0.0);
  EXPECT_EQ(f.kinks_1d().size(), 3u);
}

TEST(GradNorm, ClosedFormOracles) {
  const Space e2 = Space::euclidean(2);
  const TestFunction bump = TestFunction::radial_bump(Point::Zero(2), 1.0);
  EXPECT_NEAR(exact_grad_norm_p(bump, e2, 2.0), 4.1887902047863905, 1e-11);
  EXPECT_NEAR(exact_grad_norm_p(bump, e2, 3.0), 5.570546973638005, 1e-9);
  const TestFunction lc = TestFunction::linear_cutoff(Point::Zero(2), 1.0, Eigen::Vector2d(1.0, 0.5));
  EXPECT_NEAR(exact_grad_norm_p(lc, e2, 2.0), 4.1654152594471805, 1e-8);
  for (double p : {1.5, 2.0, 3.0}) {
    EXPECT_NEAR(exact_grad_norm_p(TestFunction::hat1d(0.3), Space::euclidean(1), p), 2.0, 1e-12);
  }
}

TEST(GradNorm, WeightedMeasure) {
  const TestFunction bump = TestFunction::radial_bump(Eigen::Vector2d(0.5, 0.0), 1.0);
  EXPECT_NEAR(exact_grad_norm_p(bump, suite::sine_weighted_plane(), 2.0), 10.191149127821115, 1e-8);
}

TEST(GradNorm, HomogeneousInAmplitudeAndTranslationInvariant) {
  const Space h = Space::heisenberg();
  const TestFunction f = TestFunction::heisenberg_poly(1.0);
  const double base = exact_grad_norm_p(f, h, 2.0);
  EXPECT_GT(base, 0.0);
  EXPECT_NEAR(exact_grad_norm_p(f.scaled(2.0), h, 2.0), 4.0 * base, 1e-8 * base);
  const TestFunction moved = TestFunction::heisenberg_poly(1.0, Eigen::Vector3d(0.4, -0.3, 0.2));
  EXPECT_NEAR(exact_grad_norm_p(moved, h, 2.0), base, 1e-7 * base);
  // f_R = R f_1(D_{1/R} .): horizontal gradients keep their size, volume scales like R^4.
  EXPECT_NEAR(exact_grad_norm_p(TestFunction::heisenberg_poly(0.5), h, 2.0), base / 16.0,
              1e-7 * base);
}

TEST(GradNorm, MidpointSumAgrees) {
  // Plain midpoint sum of |grad|^p over the support box of the Heisenberg polynomial.
  const Space h = Space::heisenberg();
  const TestFunction f = TestFunction::heisenberg_poly(1.0);
  const Box b = f.support_box();
  const int n = 80;
  const Eigen::VectorXd step = (b.hi - b.lo) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Eigen::Vector3d x = b.lo.array() + step.array() * Eigen::Array3d(i + 0.5, j + 0.5, k + 0.5);
        sum += f.gradient(x).squaredNorm();
      }
  EXPECT_NEAR(sum * step.prod(), exact_grad_norm_p(f, h, 2.0), 2e-3);
}

TEST(Lipschitz, BoundsSampledQuotients) {
  for (const Space& space : suite::backends()) {
    Rng rng(17);
    for (const TestFunction& f : suite::functions_for(space)) {
      const double L = f.lipschitz_constant(space);
      const Box b = f.support_box();
      double best = 0.0;
      for (int k = 0; k < 20000; ++k) {
        Point x(f.dim()), y(f.dim());
        for (int i = 0; i < f.dim(); ++i) {
          x(i) = rng.uniform(b.lo(i), b.hi(i));
          y(i) = x(i) + rng.uniform(-0.05, 0.05);
        }
        const double d = distance(space, x, y);
        if (d > 0.0) best = std::max(best, std::abs(f.evaluate(x) - f.evaluate(y)) / d);
      }
      EXPECT_LE(best, L * (1.0 + 1e-9)) << space.description() << " " << f.description();
      EXPECT_GT(best, 0.7 * L) << space.description() << " " << f.description();
    }
  }
}

TEST(Lipschitz, ClosedForms) {
  EXPECT_DOUBLE_EQ(TestFunction::hat1d().lipschitz_constant(Space::euclidean(1)), 1.0);
  const TestFunction bump = TestFunction::radial_bump(Point::Zero(2), 1.0);
  EXPECT_NEAR(bump.lipschitz_constant(Space::euclidean(2)), 8.0 / (3.0 * std::sqrt(3.0)), 1e-15);
  // |g|_1 <= sqrt(2) |g|_2 with equality on the diagonal.
  EXPECT_NEAR(bump.lipschitz_constant(Space::lq_normed(2, INFINITY)),
              std::sqrt(2.0) * 8.0 / (3.0 * std::sqrt(3.0)), 1e-12);
}

TEST(Compatibility, DimensionAndBackendAreChecked) {
  EXPECT_THROW(check_compatible(Space::euclidean(2), TestFunction::hat1d()), InputError);
  EXPECT_THROW(check_compatible(Space::euclidean(3), TestFunction::heisenberg_poly(1.0)), InputError);
  EXPECT_NO_THROW(check_compatible(Space::heisenberg(), TestFunction::heisenberg_poly(1.0)));
  EXPECT_THROW(TestFunction::hat1d().evaluate(Point::Zero(2)), InputError);
}

TEST(Support, FunctionVanishesOutsideBox) {
  Rng rng(4);
  for (const Space& space : suite::backends()) {
    for (const TestFunction& f : suite::functions_for(space)) {
      const Box b = f.support_box();
      for (int k = 0; k < 2000; ++k) {
        Point x(f.dim());
        for (int i = 0; i < f.dim(); ++i) x(i) = rng.uniform(b.lo(i) - 1.0, b.hi(i) + 1.0);
        if (!b.contains(x)) EXPECT_EQ(f.evaluate(x), 0.0) << f.description();
        EXPECT_LE(std::abs(f.evaluate(x)), f.sup_norm() + 1e-12);
      }
    }
  }
}
