#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bbm/energy.hpp"
#include "suite.hpp"

using namespace bbm;

namespace {

// (1 - s) int int |f(x) - f(y)|^2 / |x - y|^{1 + 2s} for the unit hat, from two independent
// closed-form routes in tests/oracles/compute_oracles.py.
struct HatOracle {
  double s;
  double value;
};
constexpr HatOracle kHatOracles[] = {
    {0.5, 2.7725887222397812}, {0.6, 2.397211790812516},  {0.7, 2.1619796137928658},
    {0.9, 1.9706056597290856}, {0.95, 1.9739001328308492}, {0.99, 1.992798170197313},
    {0.999, 1.9992327102214624}};

}  // namespace

TEST(EnergyGrid, GagliardoHatOracles) {
  const Space line = Space::euclidean(1);
  const TestFunction hat = TestFunction::hat1d();
  std::vector<double> grid;
  for (const auto& o : kHatOracles) grid.push_back(o.s);
  const auto family = MollifierFamily::gagliardo(1.0, 2.0, grid);
  GridOptions opts;
  opts.resolution = 512;
  opts.rel_tol = 1e-9;
  for (const auto& o : kHatOracles) {
    const EnergyEstimate e = energy_grid(line, hat, family, o.s, 2.0, opts);
    EXPECT_NEAR(e.value, o.value, 1e-4 * o.value) << "s = " << o.s;
    EXPECT_EQ(e.method, EnergyMethod::Grid);
  }
}

TEST(EnergyMc, GagliardoHatWithinFourSigma) {
  const auto family = MollifierFamily::gagliardo(1.0, 2.0, {0.5, 0.9, 0.99});
  for (const auto& o : kHatOracles) {
    if (o.s != 0.5 && o.s != 0.9 && o.s != 0.99) continue;
    const EnergyEstimate e =
        energy_mc(Space::euclidean(1), TestFunction::hat1d(), family, o.s, 2.0, 200000, 7);
    EXPECT_GT(e.std_error, 0.0);
    EXPECT_LT(e.std_error, 0.02 * o.value);
    EXPECT_NEAR(e.value, o.value, 4.0 * e.std_error) << "s = " << o.s;
  }
}

TEST(EnergyMc, AgreesWithGridOnPlanarBackends) {
  for (const Space& space : {Space::euclidean(2), Space::lq_normed(2, INFINITY),
                             suite::sine_weighted_plane(),
                             suite::sine_weighted_plane(MeasurePairing::Symmetric)}) {
    const TestFunction f = TestFunction::radial_bump(Eigen::Vector2d(0.3, -0.2), 0.7);
    const auto family = MollifierFamily::indicator(2.0, 2.0, {0.2});
    GridOptions g;
    g.resolution = 64;
    g.angles = 32;
    g.rel_tol = 1e-6;
    g.richardson = false;
    const EnergyEstimate grid = energy_grid(space, f, family, 0.2, 2.0, g);
    const EnergyEstimate mc = energy_mc(space, f, family, 0.2, 2.0, 200000, 3);
    EXPECT_NEAR(mc.value, grid.value, 4.0 * mc.std_error + 1e-3 * grid.value)
        << space.description();
  }
}

TEST(EnergyMc, ExactHomogeneity) {
  const Space space = Space::lq_normed(2, 1.0);
  const TestFunction f = TestFunction::linear_cutoff(Point::Zero(2), 1.0, Eigen::Vector2d(1.0, 0.5));
  const auto family = MollifierFamily::indicator(2.0, 2.0, {0.2});
  const EnergyEstimate base = energy_mc(space, f, family, 0.2, 2.0, 20000, 1);
  const EnergyEstimate doubled_f = energy_mc(space, f.scaled(2.0), family, 0.2, 2.0, 20000, 1);
  const EnergyEstimate doubled_k = energy_mc(space, f, family.scaled(2.0), 0.2, 2.0, 20000, 1);
  EXPECT_DOUBLE_EQ(doubled_f.value, 4.0 * base.value);
  EXPECT_DOUBLE_EQ(doubled_k.value, 2.0 * base.value);
}

TEST(EnergyMc, DeterministicAcrossThreadCounts) {
  const Space space = Space::heisenberg();
  const TestFunction f = TestFunction::heisenberg_poly(1.0);
  const auto family = MollifierFamily::indicator(4.0, 2.0, {0.2});
  McOptions one;
  one.threads = 1;
  McOptions four;
  four.threads = 4;
  const EnergyEstimate a = energy_mc(space, f, family, 0.2, 2.0, 40000, 9, one);
  const EnergyEstimate b = energy_mc(space, f, family, 0.2, 2.0, 40000, 9, four);
  const EnergyEstimate c = energy_mc(space, f, family, 0.2, 2.0, 40000, 9);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.value, c.value);
  const EnergyEstimate d = energy_mc(space, f, family, 0.2, 2.0, 40000, 10);
  EXPECT_NE(a.value, d.value);
}

TEST(EnergyMc, ZeroFunctionHasZeroEnergy) {
  const TestFunction f = TestFunction::radial_bump(Point::Zero(2), 1.0).scaled(0.0);
  const auto family = MollifierFamily::gagliardo(2.0, 2.0, {0.9});
  const EnergyEstimate e = energy_mc(Space::euclidean(2), f, family, 0.9, 2.0, 20000, 2);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(EnergyMc, RejectsBadInput) {
  const auto family = MollifierFamily::indicator(1.0, 2.0, {0.1});
  EXPECT_THROW(energy_mc(Space::euclidean(1), TestFunction::hat1d(), family, 0.1, 2.0, 100, 1),
               InputError);
  EXPECT_THROW(energy_mc(Space::euclidean(2), TestFunction::hat1d(), family, 0.1, 2.0, 20000, 1),
               InputError);
  EXPECT_THROW(energy_grid(Space::heisenberg(), TestFunction::heisenberg_poly(1.0),
                           MollifierFamily::indicator(4.0, 2.0, {0.1}), 0.1, 2.0),
               UnsupportedOperation);
}

TEST(LipDelta, RadialBumpAtCentre) {
  // |f(0) - f(y)| / |y| = 2r - r^3 on the bump, largest at r = delta.
  const TestFunction f = TestFunction::radial_bump(Point::Zero(2), 1.0);
  EXPECT_NEAR(lip_delta(Space::euclidean(2), f, Point::Zero(2), 0.1), 0.199, 1e-6);
  const std::vector<double> prof =
      lip_delta_profile(Space::euclidean(2), f, Point::Zero(2), {0.05, 0.1, 0.2});
  EXPECT_LE(prof[0], prof[1]);
  EXPECT_LE(prof[1], prof[2]);
  EXPECT_LE(prof[2], f.lipschitz_constant(Space::euclidean(2)) + 1e-12);
}

TEST(UpperBound, HoldsOnSample) {
  const Space space = Space::euclidean(2);
  const TestFunction f = TestFunction::radial_bump(Point::Zero(2), 1.0);
  for (const auto& family : suite::families_for(space, 2.0)) {
    const UpperBoundReport r =
        upper_bound_check(space, f, family, family.param_grid().back(), 2.0, 0.5, 3);
    EXPECT_TRUE(r.holds) << to_string(family.kind());
    EXPECT_GT(r.margin, 0.0);
  }
}
