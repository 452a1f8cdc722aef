#ifndef BBM_QUADRATURE_HPP
#define BBM_QUADRATURE_HPP

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bbm::quad {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  int intervals = 0;
  bool converged = false;
};

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int max_intervals = 4000;
};

/// Globally adaptive Gauss–Kronrod (7/15) integration on a finite interval [a, b].
/// Interval with the largest error estimate is bisected until the total error estimate
/// drops below max(abs_tol, rel_tol * |value|). Endpoints are never evaluated.
QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                         const QuadOptions& opts = {});

/// Same rule on [a, +inf) via the substitution x = a + t / (1 - t).
QuadResult gauss_kronrod_to_infinity(const std::function<double(double)>& f, double a,
                                     const QuadOptions& opts = {});

/// Like gauss_kronrod but throws NumericalError when the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opts = {}, const std::string& what = "integral");

double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             const QuadOptions& opts = {}, const std::string& what = "integral");

/// Gauss–Legendre nodes and weights on [-1, 1] from the Golub–Welsch eigenproblem.
struct Rule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
Rule gauss_legendre(int n);

}  // namespace bbm::quad

#endif  // BBM_QUADRATURE_HPP
