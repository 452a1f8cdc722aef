#ifndef BBM_TESTBANK_HPP
#define BBM_TESTBANK_HPP

#include <memory>
#include <string>
#include <vector>

#include "bbm/core.hpp"
#include "bbm/spaces.hpp"

namespace bbm {

enum class FunctionKind { Hat1D, RadialBump, LinearCutoff, HeisenbergPoly };

std::string to_string(FunctionKind kind);
FunctionKind function_kind_from_string(const std::string& name);

/// C^1 cutoff: 1 on [0, 1/2], 0 on [1, inf), cubic smoothstep in between (|chi'| <= 3).
double cutoff(double s);
double cutoff_derivative(double s);

/// Box [lo, hi] in chart coordinates.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double volume() const { return (hi - lo).prod(); }
  bool contains(const PointRef& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

/// Compactly supported Lipschitz function with closed-form gradient data.
///
///   Hat1D          amplitude * max(0, 1 - |x - anchor|)
///   RadialBump     amplitude * (1 - |x - anchor|^2 / R^2)^2 on the Euclidean ball B_R(anchor)
///   LinearCutoff   amplitude * (w . x) * chi(|x - anchor| / R)
///   HeisenbergPoly amplitude * z_a * chi(gauge(z) / R),  z = anchor^{-1} x
class TestFunction {
 public:
  static TestFunction hat1d(double anchor = 0.0);
  static TestFunction radial_bump(Point anchor, double radius);
  static TestFunction linear_cutoff(Point anchor, double radius, Eigen::VectorXd w);
  static TestFunction heisenberg_poly(double radius, Point anchor = Point::Zero(3));

  FunctionKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(anchor_.size()); }
  const Point& anchor() const { return anchor_; }
  double radius() const { return radius_; }
  double amplitude() const { return amplitude_; }
  double gradient_scale() const { return gradient_scale_; }
  const Eigen::VectorXd& direction() const { return w_; }
  std::string description() const;

  /// c * f.
  TestFunction scaled(double c) const;
  /// Same values, declared gradient multiplied by c (negative controls only).
  TestFunction with_gradient_scale(double c) const;

  double evaluate(const PointRef& x) const;
  /// Euclidean gradient, or the horizontal pair (Xf, Yf) on Heisenberg. One-sided at kinks.
  Eigen::VectorXd gradient(const PointRef& x) const;

  /// Chart box containing the support.
  Box support_box() const;
  /// sup of d(anchor, x) over the support, in the metric of `space`.
  double support_radius(const Space& space) const;
  /// Global Lipschitz constant in the metric of `space`: closed form for Hat1D and RadialBump,
  /// numerical maximization of the dual-norm gradient (or of difference quotients on
  /// Heisenberg, whose gauge metric is not geodesic) otherwise.
  double lipschitz_constant(const Space& space) const;
  /// sup |f|.
  double sup_norm() const;

  /// Points where the function is not C^2 on a set of positive codimension (kinks of Hat1D).
  std::vector<double> kinks_1d() const;

 private:
  TestFunction(FunctionKind kind, Point anchor, double radius);

  FunctionKind kind_;
  Point anchor_;
  double radius_;
  double amplitude_ = 1.0;
  double gradient_scale_ = 1.0;
  Eigen::VectorXd w_;
  std::shared_ptr<double> heisenberg_lip_;
};

void check_compatible(const Space& space, const TestFunction& f);

double evaluate(const TestFunction& f, const PointRef& x);
TangentPairing gradient(const TestFunction& f, const PointRef& x);

/// int |grad f|^p dm (horizontal norm on Heisenberg) by closed form or nested adaptive
/// quadrature at relative tolerance 1e-9.
double exact_grad_norm_p(const TestFunction& f, const Space& space, double p);

struct FiniteDifferenceReport {
  std::vector<double> steps;
  std::vector<double> errors;
  double worst = 0.0;
};

/// Central differences along the chart axes (along X and Y by right multiplication with
/// exp(hX), exp(hY) on Heisenberg), compared with `gradient`.
FiniteDifferenceReport finite_difference_check(const TestFunction& f, const Space& space,
                                               const PointRef& x,
                                               const std::vector<double>& h_schedule);

}  // namespace bbm

#endif  // BBM_TESTBANK_HPP
