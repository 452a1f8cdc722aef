#ifndef BBM_LIMITS_HPP
#define BBM_LIMITS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "bbm/core.hpp"
#include "bbm/mollifiers.hpp"
#include "bbm/spaces.hpp"
#include "bbm/testbank.hpp"

namespace bbm {

/// Tangent cone of a backend. Homogeneous backends are their own cone; the weighted backend's
/// cone is flat Euclidean space. With `normalized` the cone measure is chart volume divided by
/// the volume of the unit ball, so that m_C(B_1) = 1.
class ConeDescriptor {
 public:
  static ConeDescriptor of(const Space& space, bool normalized = true);

  const Space& space() const { return cone_; }
  double dim_N() const { return cone_.scaling_dim(); }
  bool normalized() const { return normalized_; }
  double gauge(const PointRef& v) const { return cone_.gauge(v); }
  /// Multiplier from chart volume to the cone measure.
  double measure_scale() const { return normalized_ ? 1.0 / cone_.unit_ball_volume() : 1.0; }
  /// m_C(B_1).
  double unit_ball_measure() const { return cone_.unit_ball_volume() * measure_scale(); }

 private:
  ConeDescriptor(Space cone, bool normalized) : cone_(std::move(cone)), normalized_(normalized) {}
  Space cone_;
  bool normalized_;
};

struct ExtrapolatedValue {
  double value = 0.0;
  double uncertainty = 0.0;
  std::vector<double> abscissae;
  std::vector<double> samples;
  std::vector<double> sample_errors;
};

/// Outer Minkowski content of the sphere S_R: (m(B_{R+eps}) - m(B_R)) / eps per eps, linearly
/// extrapolated to eps = 0. Closed-form volumes on Euclidean and l^q cones, Monte-Carlo with
/// common random numbers across eps otherwise.
ExtrapolatedValue minkowski_content(const ConeDescriptor& cone, double R,
                                    const std::vector<double>& eps_schedule,
                                    std::size_t budget = 4000000, std::uint64_t seed = 23);

struct SphereIntegral {
  /// Normalized mean over S_1 of |g|^p against m_C^+.
  double mean = 0.0;
  /// Un-normalized integral m_C^+(S_1) * mean.
  double integral = 0.0;
  double std_error = 0.0;
  /// |mean(eps) - mean(eps/2)|, the first-order shell bias.
  double bias_gap = 0.0;
};

/// Shell samples D_r v with v from the cone measure of S_1 and r in [1, 1 + eps] with density
/// proportional to r^{N-1}, which is exactly the cone measure restricted to the shell. Radii are
/// stored through their uniform variates so the same samples serve any shell width.
struct ShellSamples {
  std::vector<Point> directions;
  std::vector<double> uniforms;
  /// radius(i, eps) and radius(i, eps / 2), precomputed.
  std::vector<double> wide_radii;
  std::vector<double> narrow_radii;
  double eps = 0.0;
  double dim_N = 0.0;

  double radius(std::size_t i, double width) const {
    return std::pow(1.0 + uniforms[i] * std::expm1(dim_N * std::log1p(width)), 1.0 / dim_N);
  }
};

ShellSamples make_shell_samples(const ConeDescriptor& cone, double eps, std::size_t budget,
                                std::uint64_t seed);

/// (1/eps) int_{B_{1+eps} \ B_1} |g|^p dm_C evaluated at eps and eps/2 on shared samples; the
/// reported mean is the Richardson combination 2 m(eps/2) - m(eps), which removes the O(eps)
/// bias, and the uncertainty includes the bias gap.
SphereIntegral sphere_integral(const ConeDescriptor& cone,
                               const std::function<double(const PointRef&)>& g, double p,
                               double eps = 1e-3, std::size_t budget = 400000,
                               std::uint64_t seed = 29);

/// Normalized sphere mean g -> mean_{S_1} |u(v)|^p of the tangent pairing with gradient data g,
/// built once from shared shell samples. Isotropic cones (Euclidean, weighted, Heisenberg) use
/// |g|^p times the mean for e_1; anisotropic planes interpolate a table over gradient directions;
/// other cones evaluate the samples directly. Exactly p-homogeneous in g in every mode.
class SphereMean {
 public:
  SphereMean(const Space& space, double p, std::size_t budget = 400000, double eps = 1e-3,
             std::uint64_t seed = 41, int direction_table = 128);

  double operator()(const Eigen::VectorXd& gradient_data) const;
  /// Largest relative uncertainty (stderr and bias gap) over the tabulated directions.
  double relative_uncertainty() const { return rel_uncertainty_; }

 private:
  enum class Mode { Isotropic, DirectionTable, Direct };
  SphereIntegral evaluate(const Eigen::VectorXd& g) const;

  Space space_;
  double p_;
  ShellSamples shell_;
  /// Pairing coordinates of the samples (horizontal layer on Heisenberg), one column each.
  Eigen::MatrixXd coords_;
  Mode mode_;
  double e1_mean_ = 0.0;
  std::vector<double> table_;
  double rel_uncertainty_ = 0.0;
};

/// K_{p,N} = omega_N * mean over S^{N-1} of |w . v|^p for a unit direction w (e_1 by default).
Estimate k_constant_euclidean(double p, int N, std::size_t budget = 400000,
                              std::uint64_t seed = 31, const Eigen::VectorXd& w = {});

/// Closed form omega_N Gamma((p+1)/2) Gamma(N/2) / (sqrt(pi) Gamma((N+p)/2)).
double k_constant_closed_form(double p, double N);

/// theta(x) of the limit functional (density of the inner measure against the normalized cone).
double theta_reference(const Space& space, const PointRef& x);

struct LimitValue {
  double value = 0.0;
  double uncertainty = 0.0;
  /// Contribution of each outer quadrature node, in node order.
  std::vector<double> breakdown;
};

struct LimitBudgets {
  /// Midpoint cells per axis of the outer grid; 0 picks 4096 / 256 / 64 for 1 / 2 / 3 axes.
  int grid_resolution = 0;
  std::size_t shell_samples = 400000;
  double shell_eps = 1e-3;
  /// Direction table size for anisotropic 2D cones.
  int direction_table = 128;
};

/// int theta(x) mean_{S_1} |u_{0,x}(v)|^p dm_C^+(v) dm(x) with u_{0,x}(v) the tangent pairing of
/// the gradient at x. The sphere mean uses one shared set of shell samples; on isotropic cones
/// it is |g|^p times the mean for e_1, on anisotropic 2D cones it is tabulated over directions.
LimitValue limit_seminorm(const Space& space, const TestFunction& f, double p,
                          const LimitBudgets& budgets = {}, std::uint64_t seed = 37);

struct BallFormReport {
  /// int dx int_{B_1} |grad f . v|^p dv.
  double ball_form = 0.0;
  /// int dx int_{S_1} |grad f . v|^p dm^+(v).
  double sphere_form = 0.0;
  /// ((p + N) / p) * ball_form and (1 / p) * sphere_form.
  double ball_side = 0.0;
  double sphere_side = 0.0;
  double relative_gap = 0.0;
};

/// Evaluates both sides of ((p+N)/p) int_{B_1} = (1/p) int_{S_1} on Euclidean and normed
/// backends of dimension 1 or 2: the ball by nested Cartesian quadrature, the sphere by its
/// boundary parametrization, both deterministic.
BallFormReport gagliardo_ball_form(double p, const TestFunction& f, const Space& space,
                                   int grid_resolution = 24);

/// N * C0 * limit_seminorm, the predicted limit of the family's energies.
LimitValue predicted_limit(const Space& space, const TestFunction& f,
                           const MollifierFamily& family, double p, const LimitBudgets& budgets = {},
                           std::uint64_t seed = 37);

}  // namespace bbm

#endif  // BBM_LIMITS_HPP
