#ifndef BBM_STATS_HPP
#define BBM_STATS_HPP

#include <cstddef>
#include <vector>

namespace bbm {

/// Welford accumulator. `merge` is exact in the same sense as sequential pushes up to rounding.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& o);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_error = 0.0;
  /// Sum of squared (weighted) residuals and the degrees of freedom behind it.
  double chi2 = 0.0;
  int dof = 0;
};

/// Least squares y = a + b x. Weights are 1/sigma^2 when every sigma is positive; otherwise
/// ordinary least squares with the intercept error taken from the residual scatter.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma);

/// Intercept of y = a + b x + c x^2 by (weighted) least squares; needs three or more points.
double quadratic_intercept(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& sigma);

}  // namespace bbm

#endif  // BBM_STATS_HPP
