#ifndef BBM_MOLLIFIERS_HPP
#define BBM_MOLLIFIERS_HPP

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "bbm/core.hpp"
#include "bbm/spaces.hpp"

namespace bbm {

enum class KernelKind { Indicator, Gagliardo, GaussianShell, UserRadial };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Breakpoint table g(s) for a user kernel. Between breakpoints g is a power law in s (straight
/// line in log-log) when both ends are positive and linear otherwise; g is constant below the
/// first breakpoint and zero from the last breakpoint on.
struct RadialTable {
  std::vector<double> radius;
  std::vector<double> value;
};

/// The radial profile rho~_n of one family member, with the closed-form masses used by the
/// energy estimators.
class Kernel {
 public:
  double value(double r) const;
  /// int_a^b r^{N-1} rho~(r) dr; b may be +inf (returns +inf for the Gagliardo kernel).
  double mass(double a, double b) const;
  /// Psi(a) = int_a^inf r^{N-1-p} rho~(r) dr, the energy weight of pairs at distance >= a.
  double energy_tail(double a) const;
  /// Radius beyond which rho~ vanishes; +inf for unbounded support.
  double support() const;
  /// Length scale on which the kernel varies (epsilon, table end, or 1).
  double scale_length() const;
  bool integrable() const { return kind_ != KernelKind::Gagliardo; }

  /// Radial importance law with density proportional to r^{N-1} rho~(r) w(r) on (0, inf).
  /// w = 1 for integrable kernels; for the Gagliardo kernel w(r) = min(1, (rc / r)^p), which
  /// makes the law proper while keeping r^{-p} |u(x) - u(y)|^p / w(r) bounded.
  double importance_weight(double r, double rc) const;
  double importance_total(double rc) const;
  double importance_quantile(double u, double rc) const;
  double importance_cdf(double r, double rc) const;

  KernelKind kind() const { return kind_; }
  double dim_N() const { return N_; }
  double exponent_p() const { return p_; }
  double parameter() const { return param_; }

 private:
  friend class MollifierFamily;
  Kernel(KernelKind kind, double N, double p, double param, double scale,
         std::shared_ptr<const RadialTable> table);

  double table_value(double s) const;
  double table_moment(double e, double lo, double hi) const;
  double gaussian_quantile(double u) const;

  KernelKind kind_;
  double N_, p_, param_, scale_;
  std::shared_ptr<const RadialTable> table_;
  std::vector<double> table_cum_;
  double gauss_amp_ = 0.0;
  std::vector<double> gauss_x_;
};

class MollifierFamily {
 public:
  static MollifierFamily indicator(double N, double p, std::vector<double> eps_grid);
  static MollifierFamily gagliardo(double N, double p, std::vector<double> s_grid);
  static MollifierFamily gaussian_shell(double N, double p, std::vector<double> eps_grid);
  /// rho~_n(r) = n^N g(n r) for the tabulated g; n increases toward the limit.
  static MollifierFamily user_radial(double N, double p, std::vector<double> n_grid,
                                     RadialTable table, double claimed_C0);

  KernelKind kind() const { return kind_; }
  double dim_N() const { return N_; }
  double exponent_p() const { return p_; }
  const std::vector<double>& param_grid() const { return grid_; }
  double claimed_C0() const { return claimed_C0_; }
  double scale() const { return scale_; }

  /// Copy with rho~ multiplied by c > 0 (the claimed constant scales along).
  MollifierFamily scaled(double c) const;
  /// Copy with a different claimed constant (negative controls).
  MollifierFamily with_claimed_C0(double c0) const;

  Kernel kernel(double n) const;
  /// Distance of a parameter to the limit: epsilon, 1 - s, or 1 / n.
  double distance_to_limit(double n) const;

 private:
  MollifierFamily(KernelKind kind, double N, double p, std::vector<double> grid, double c0);

  KernelKind kind_;
  double N_, p_;
  std::vector<double> grid_;
  double claimed_C0_;
  double scale_ = 1.0;
  std::shared_ptr<const RadialTable> table_;
};

double kernel_value(const MollifierFamily& family, double n, double r);

/// int_0^delta r^{N-1} rho~_n(r) dr in closed form.
double normalization_integral(const MollifierFamily& family, double n, double delta);

struct TailEstimate {
  double value = 0.0;
  double std_error = 0.0;
  /// Analytic bound on the part beyond the truncation radius (included in `value` when the
  /// reference measure is unweighted, reported separately otherwise).
  double remainder_bound = 0.0;
  /// True when the kernel tail itself diverges and `value` is the energy-weighted tail
  /// int rho(x, y) / d(x, y)^p over the complement.
  bool energy_weighted = false;
  std::string warning;
};

/// int over the complement of B_delta(x) of rho_n(x, y) dm(y), by Monte-Carlo on [delta, R_max]
/// with R_max = 10^3 delta plus the analytic remainder.
TailEstimate tail_mass(const MollifierFamily& family, double n, const Space& space,
                       const PointRef& x, double delta, std::size_t budget = 20000,
                       std::uint64_t seed = 3);

struct L1Bound {
  double value = 0.0;
  double std_error = 0.0;
  double worst_parameter = 0.0;
  bool truncated = false;
};

/// c_1 = max over probe points and parameters of int rho_n(x, y) dm(y). Kernels with
/// non-integrable tails are truncated to B_truncation (infinite result without truncation).
L1Bound sup_L1_bound(const MollifierFamily& family, const Space& space,
                     const std::vector<Point>& probe_points, std::size_t budget = 20000,
                     std::uint64_t seed = 5,
                     double truncation = std::numeric_limits<double>::infinity());

struct ValidationTolerances {
  double delta = 1.0;
  double robustness_delta = 0.5;
  double normalization_rel = 0.02;
  /// Largest admissible tail relative to N * V * C0.
  double tail_rel = 0.05;
  std::size_t budget = 20000;
  std::uint64_t seed = 17;
};

struct ValidationReport {
  bool uniform_bound = false;
  bool monotone = false;
  bool normalization = false;
  bool tail = false;
  bool robustness_marginal = false;
  /// claimed C0 differs from 1/N, so the predicted limit carries the factor N * C0.
  bool rescale_flag = false;
  double c1 = 0.0;
  double normalization_value = 0.0;
  double robustness_value = 0.0;
  double tail_value = 0.0;
  std::vector<std::string> messages;

  bool passed() const { return uniform_bound && monotone && normalization && tail; }
};

ValidationReport validate_assumptions(const MollifierFamily& family, const Space& space,
                                      const ValidationTolerances& tol = {});

}  // namespace bbm

#endif  // BBM_MOLLIFIERS_HPP
