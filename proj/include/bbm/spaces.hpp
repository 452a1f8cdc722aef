#ifndef BBM_SPACES_HPP
#define BBM_SPACES_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bbm/core.hpp"

namespace bbm {

enum class SpaceKind { Euclidean, AnisotropicNormed, WeightedEuclidean, HeisenbergKoranyi };

std::string to_string(SpaceKind kind);

/// How the two integration variables of a double integral are weighted on a weighted space:
/// Symmetric is dm(x) dm(y); Asymmetric is dm(x) dVol(y).
enum class MeasurePairing { Symmetric, Asymmetric };

using ScalarField = std::function<double(const PointRef&)>;
using NormFunction = std::function<double(const PointRef&)>;

/// Continuous, strictly positive density of the reference measure with respect to chart volume.
struct WeightSpec {
  ScalarField theta;
  double theta_min = 0.0;
  /// Upper bound used by the rejection sampler; checked on every evaluated point.
  double theta_max = std::numeric_limits<double>::infinity();
  std::string description;
};

// ---------------------------------------------------------------------------------------------
// Closed-form geometry, templated on the scalar so it composes with Eigen expressions.

namespace heisenberg {

/// Korányi gauge ((a^2 + b^2)^2 + 16 t^2)^{1/4}.
template <typename Derived>
typename Derived::Scalar gauge(const Eigen::MatrixBase<Derived>& v) {
  using std::sqrt;
  const auto rho2 = v(0) * v(0) + v(1) * v(1);
  return sqrt(sqrt(rho2 * rho2 + 16 * v(2) * v(2)));
}

/// Group law (a,b,t)·(a',b',t') = (a+a', b+b', t+t' + (ab' - ba')/2).
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, 3, 1> multiply(const Eigen::MatrixBase<DerivedA>& x,
                                                        const Eigen::MatrixBase<DerivedB>& y) {
  using Scalar = typename DerivedA::Scalar;
  return Eigen::Matrix<Scalar, 3, 1>(x(0) + y(0), x(1) + y(1),
                                     x(2) + y(2) + Scalar(0.5) * (x(0) * y(1) - x(1) * y(0)));
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 1> inverse(const Eigen::MatrixBase<Derived>& x) {
  return -x.template head<3>();
}

/// Carnot dilation (a,b,t) -> (ra, rb, r^2 t).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 1> dilate(typename Derived::Scalar r,
                                                     const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  return Eigen::Matrix<Scalar, 3, 1>(r * v(0), r * v(1), r * r * v(2));
}

/// Lebesgue volume of the unit gauge ball, pi^2 / 8.
inline constexpr double kUnitBallVolume = std::numbers::pi * std::numbers::pi / 8.0;

}  // namespace heisenberg

namespace normed {

/// l^q norm for q in [1, inf]; q = inf is the max norm.
template <typename Derived>
typename Derived::Scalar lq_norm(const Eigen::MatrixBase<Derived>& v, double q) {
  if (std::isinf(q)) return v.template lpNorm<Eigen::Infinity>();
  if (q == 1.0) return v.template lpNorm<1>();
  if (q == 2.0) return v.norm();
  using std::pow;
  return pow(v.array().abs().pow(q).sum(), 1.0 / q);
}

/// Lebesgue volume of the l^q unit ball in dimension n.
double lq_unit_ball_volume(int n, double q);

}  // namespace normed

// ---------------------------------------------------------------------------------------------

/// A metric measure space backend together with the closed-form data of its tangent cone.
///
/// Every backend here is a chart R^k with a translation-type group operation (vector addition,
/// or the Heisenberg product) under which both the metric and the chart volume are invariant;
/// the metric is d(x, y) = gauge(y^{-1} x). The weighted backend multiplies chart volume by a
/// density and is the only inhomogeneous one.
class Space {
 public:
  static Space euclidean(int dim);
  static Space lq_normed(int dim, double q);
  /// User-supplied norm. It is probed at construction for positive 1-homogeneity and the
  /// triangle inequality on 10^3 random pairs; failures raise InputError.
  static Space normed(int dim, NormFunction norm, std::string description = "user norm",
                      std::uint64_t probe_seed = 1);
  static Space weighted(int dim, WeightSpec weight,
                        MeasurePairing pairing = MeasurePairing::Asymmetric);
  static Space heisenberg();

  SpaceKind kind() const { return kind_; }
  int topological_dim() const { return dim_; }
  double homogeneous_dim() const { return homogeneous_dim_; }
  /// Exponent by which the cone dilation scales chart volume. Equals homogeneous_dim unless the
  /// declared dimension was overridden.
  double scaling_dim() const { return scaling_dim_; }
  bool is_homogeneous() const { return kind_ != SpaceKind::WeightedEuclidean; }
  MeasurePairing pairing() const { return pairing_; }
  std::optional<double> lq_exponent() const { return q_; }
  const WeightSpec* weight() const { return weight_ ? weight_.get() : nullptr; }
  std::string description() const;

  /// Gauge of the tangent cone: d(0, v).
  double gauge(const PointRef& v) const;
  /// Group operation x·z (vector addition except on Heisenberg).
  Point compose(const PointRef& x, const PointRef& z) const;
  Point inverse(const PointRef& z) const;
  /// Cone dilation without the homogeneity check performed by the free function `dilate`.
  Point cone_dilate(double r, const PointRef& v) const;
  /// sup over gauge(v) = 1 of g·v, restricted to the horizontal layer on Heisenberg.
  double dual_norm(const PointRef& g) const;
  /// Box [-h, h] (chart coordinates) containing the unit cone ball.
  const Eigen::VectorXd& unit_ball_half_extent() const { return half_extent_; }
  /// Chart-volume of the unit cone ball. Closed form except for user norms (cached MC).
  double unit_ball_volume() const { return unit_ball_volume_; }

  /// Point validity: correct length and finite coordinates; throws InputError otherwise.
  void check_point(const PointRef& x, const char* what = "point") const;

  /// Replace the declared homogeneous dimension (negative-control experiments only).
  void override_homogeneous_dim(double n) { homogeneous_dim_ = n; }

  /// Density of the outer (x) and inner (y) integration measures of a double integral.
  double outer_density(const PointRef& x) const;
  double inner_density(const PointRef& y) const;

 private:
  Space(SpaceKind kind, int dim)
      : kind_(kind), dim_(dim), homogeneous_dim_(dim), scaling_dim_(dim) {}

  SpaceKind kind_;
  int dim_;
  double homogeneous_dim_;
  double scaling_dim_;
  MeasurePairing pairing_ = MeasurePairing::Symmetric;
  std::optional<double> q_;
  NormFunction user_norm_;
  std::string norm_description_;
  std::shared_ptr<const WeightSpec> weight_;
  Eigen::VectorXd half_extent_;
  double unit_ball_volume_ = 0.0;
};

double distance(const Space& space, const PointRef& x, const PointRef& y);

/// d(reference measure)/d(chart Lebesgue) at x.
double measure_density(const Space& space, const PointRef& x);

/// Cone dilation D_r. Throws UnsupportedOperation on the weighted backend.
Point dilate(const Space& space, double r, const PointRef& v);

/// Point distributed according to the reference measure restricted to B_radius(center).
Point sample_ball(const Space& space, const PointRef& center, double radius, Rng& rng);
Point sample_ball(const Space& space, const PointRef& center, double radius, std::uint64_t seed);

/// Point of the unit cone sphere distributed by the cone measure: uniform in the unit ball,
/// then dilated back to gauge 1.
Point sample_unit_sphere(const Space& space, Rng& rng);

/// Reference-measure mass of B_radius(center); exact on Euclidean and l^q backends.
Estimate ball_volume(const Space& space, const PointRef& center, double radius,
                     std::size_t budget, std::uint64_t seed);

struct DensityEstimate {
  double value = 0.0;
  double uncertainty = 0.0;
  std::optional<double> analytic;
  std::vector<double> radii;
  std::vector<double> ratios;
  std::vector<double> ratio_errors;
};

/// Limit of m(B_delta(x)) / delta^N by least squares in delta over a decreasing schedule.
DensityEstimate density_theta(const Space& space, const PointRef& x,
                              const std::vector<double>& delta_schedule,
                              std::size_t budget_per_radius = 200000, std::uint64_t seed = 7);

/// Gradient data of a blow-up limit: the full gradient on Euclidean-type backends, the
/// horizontal pair (Xf, Yf) on Heisenberg.
struct TangentPairing {
  Point base_point;
  Eigen::VectorXd gradient_data;
};

/// Generalized linear function v -> u_{0,x}(v).
double tangent_pairing(const Space& space, const TangentPairing& pairing, const PointRef& v);

}  // namespace bbm

#endif  // BBM_SPACES_HPP
