#include "bbm/stats.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "bbm/core.hpp"

namespace bbm {

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
  const double d = o.mean_ - mean_;
  const double n = na + nb;
  mean_ += d * nb / n;
  m2_ += o.m2_ + d * d * na * nb / n;
  n_ += o.n_;
}

double RunningStats::std_error() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

namespace {

bool all_positive(const std::vector<double>& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; });
}

}  // namespace

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InputError("linear fit needs at least two (x, y) pairs");
  const bool weighted = sigma.size() == n && all_positive(sigma);
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w(i) = weighted ? 1.0 / sigma[i] : 1.0;
    a(i, 0) = w(i);
    a(i, 1) = w(i) * x[i];
    b(i) = w(i) * y[i];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  const Eigen::Matrix2d cov = (a.transpose() * a).inverse();
  LinearFit fit;
  fit.intercept = coef(0);
  fit.slope = coef(1);
  fit.chi2 = (a * coef - b).squaredNorm();
  fit.dof = static_cast<int>(n) - 2;
  double scale = 1.0;
  if (!weighted) scale = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
  fit.intercept_error = std::sqrt(std::max(0.0, cov(0, 0) * scale));
  return fit;
}

double quadratic_intercept(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) throw InputError("quadratic fit needs at least three points");
  const bool weighted = sigma.size() == n && all_positive(sigma);
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / sigma[i] : 1.0;
    a.row(i) << w, w * x[i], w * x[i] * x[i];
    b(i) = w * y[i];
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace bbm
