#include "bbm/mollifiers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/SpecialFunctions>

#include "bbm/quadrature.hpp"
#include "bbm/stats.hpp"

namespace bbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return Eigen::igamma(Eigen::Array<double, 1, 1>(a), Eigen::Array<double, 1, 1>(x))(0);
}

double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return Eigen::igammac(Eigen::Array<double, 1, 1>(a), Eigen::Array<double, 1, 1>(x))(0);
}

// int_lo^hi s^{k-1} ds, hi possibly infinite.
double pow_integral(double k, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (std::isinf(hi)) return k < 0.0 ? -std::pow(lo, k) / k : kInf;
  if (k == 0.0) return lo > 0.0 ? std::log(hi / lo) : kInf;
  if (lo == 0.0) return k > 0.0 ? std::pow(hi, k) / k : kInf;
  return (std::pow(hi, k) - std::pow(lo, k)) / k;
}

// Solves P(a, x) = u for x with a safeguarded Newton iteration inside [lo, hi].
double inverse_gamma_p(double a, double u, double lo, double hi) {
  const bool upper = u > 0.5;
  auto residual = [&](double x) { return upper ? (1.0 - u) - gamma_q(a, x) : gamma_p(a, x) - u; };
  if (std::isinf(hi)) {
    hi = std::max(1.0, 2.0 * lo);
    while (residual(hi) < 0.0) hi *= 2.0;
  }
  const double lg = std::lgamma(a);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = residual(x);
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    const double pdf = std::exp((a - 1.0) * std::log(x) - x - lg);
    double next = x - f / pdf;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

void require_grid(const std::vector<double>& grid, bool increasing, double lo, double hi,
                  const char* what) {
  if (grid.empty()) throw InputError(std::string(what) + ": parameter grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > lo && grid[i] < hi)) {
      std::ostringstream os;
      os << what << ": parameter " << grid[i] << " outside (" << lo << ", " << hi << ")";
      throw InputError(os.str());
    }
    if (i > 0 && (increasing ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))) {
      throw InputError(std::string(what) + ": parameter grid must move strictly toward the limit");
    }
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Indicator: return "indicator";
    case KernelKind::Gagliardo: return "gagliardo";
    case KernelKind::GaussianShell: return "gaussian_shell";
    case KernelKind::UserRadial: return "user_radial";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "indicator") return KernelKind::Indicator;
  if (name == "gagliardo") return KernelKind::Gagliardo;
  if (name == "gaussian_shell" || name == "gaussian") return KernelKind::GaussianShell;
  if (name == "user_radial" || name == "user") return KernelKind::UserRadial;
  throw InputError("unknown kernel kind '" + name + "'");
}

// ---------------------------------------------------------------------------------------------

Kernel::Kernel(KernelKind kind, double N, double p, double param, double scale,
               std::shared_ptr<const RadialTable> table)
    : kind_(kind), N_(N), p_(p), param_(param), scale_(scale), table_(std::move(table)) {
  if (kind_ == KernelKind::GaussianShell) {
    gauss_amp_ = 2.0 / (N_ * std::pow(param_, N_) * std::tgamma(0.5 * N_));
    // Quantile knots of P(N/2, .) seed the per-sample Newton solves.
    const int knots = 256;
    gauss_x_.assign(knots + 1, 0.0);
    gauss_x_[knots] = kInf;
    for (int k = 1; k < knots; ++k) {
      gauss_x_[k] = inverse_gamma_p(0.5 * N_, static_cast<double>(k) / knots, gauss_x_[k - 1], kInf);
    }
  }
  if (kind_ == KernelKind::UserRadial) {
    const auto& s = table_->radius;
    table_cum_.assign(s.size() + 1, 0.0);
    table_cum_[1] = table_moment(N_, 0.0, s[0]);
    for (std::size_t i = 1; i < s.size(); ++i) {
      table_cum_[i + 1] = table_cum_[i] + table_moment(N_, s[i - 1], s[i]);
    }
  }
}

double Kernel::table_value(double s) const {
  const auto& rs = table_->radius;
  const auto& vs = table_->value;
  if (s < rs.front()) return vs.front();
  if (s >= rs.back()) return 0.0;
  const std::size_t i = std::upper_bound(rs.begin(), rs.end(), s) - rs.begin() - 1;
  const double v0 = vs[i], v1 = vs[i + 1];
  if (v0 > 0.0 && v1 > 0.0) {
    const double gamma = std::log(v1 / v0) / std::log(rs[i + 1] / rs[i]);
    return v0 * std::pow(s / rs[i], gamma);
  }
  return v0 + (v1 - v0) * (s - rs[i]) / (rs[i + 1] - rs[i]);
}

// int_lo^hi s^{e-1} g(s) ds for the tabulated g.
double Kernel::table_moment(double e, double lo, double hi) const {
  const auto& rs = table_->radius;
  const auto& vs = table_->value;
  hi = std::min(hi, rs.back());
  if (!(hi > lo)) return 0.0;
  double total = 0.0;
  if (lo < rs.front()) total += vs.front() * pow_integral(e, lo, std::min(hi, rs.front()));
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    const double a = std::max(lo, rs[i]), b = std::min(hi, rs[i + 1]);
    if (!(b > a)) continue;
    const double v0 = vs[i], v1 = vs[i + 1];
    if (v0 > 0.0 && v1 > 0.0) {
      const double gamma = std::log(v1 / v0) / std::log(rs[i + 1] / rs[i]);
      total += v0 * std::pow(rs[i], -gamma) * pow_integral(e + gamma, a, b);
    } else {
      const double c = (v1 - v0) / (rs[i + 1] - rs[i]);
      total += (v0 - c * rs[i]) * pow_integral(e, a, b) + c * pow_integral(e + 1.0, a, b);
    }
  }
  return total;
}

double Kernel::value(double r) const {
  switch (kind_) {
    case KernelKind::Indicator: return r < param_ ? scale_ * std::pow(param_, -N_) : 0.0;
    case KernelKind::Gagliardo:
      return scale_ * (1.0 - param_) * std::pow(r, (1.0 - param_) * p_ - N_);
    case KernelKind::GaussianShell:
      return scale_ * gauss_amp_ * std::exp(-(r * r) / (param_ * param_));
    case KernelKind::UserRadial: return scale_ * std::pow(param_, N_) * table_value(param_ * r);
  }
  return 0.0;
}

double Kernel::mass(double a, double b) const {
  if (!(b > a)) return 0.0;
  switch (kind_) {
    case KernelKind::Indicator:
      return scale_ * std::pow(param_, -N_) * pow_integral(N_, a, std::min(b, param_));
    case KernelKind::Gagliardo:
      return scale_ * (1.0 - param_) * pow_integral((1.0 - param_) * p_, a, b);
    case KernelKind::GaussianShell: {
      const double xa = a * a / (param_ * param_);
      const double xb = std::isinf(b) ? kInf : b * b / (param_ * param_);
      const double h = 0.5 * N_;
      const double frac = xa > h ? gamma_q(h, xa) - gamma_q(h, xb) : gamma_p(h, xb) - gamma_p(h, xa);
      return scale_ * frac / N_;
    }
    case KernelKind::UserRadial: return scale_ * table_moment(N_, param_ * a, param_ * b);
  }
  return 0.0;
}

double Kernel::energy_tail(double a) const {
  switch (kind_) {
    case KernelKind::Indicator:
      if (a >= param_) return 0.0;
      return scale_ * std::pow(param_, -N_) * pow_integral(N_ - p_, a, param_);
    case KernelKind::Gagliardo: {
      const double alpha = (1.0 - param_) * p_;
      return scale_ * (1.0 - param_) * std::pow(a, alpha - p_) / (p_ - alpha);
    }
    case KernelKind::GaussianShell: {
      if (a <= 0.0 && N_ <= p_) return kInf;
      // In units of epsilon the integrand is s^{N-1-p} e^{-s^2}.
      const double sa = a / param_;
      auto f = [&](double s) { return std::pow(s, N_ - 1.0 - p_) * std::exp(-s * s); };
      quad::QuadOptions opts;
      opts.rel_tol = 1e-11;
      const double upper = std::max(sa, 0.0) + 40.0;
      const double v = quad::integrate(f, sa, upper, opts, "gaussian energy tail");
      return scale_ * gauss_amp_ * std::pow(param_, N_ - p_) * v;
    }
    case KernelKind::UserRadial:
      return scale_ * std::pow(param_, p_) * table_moment(N_ - p_, param_ * a, kInf);
  }
  return 0.0;
}

double Kernel::support() const {
  switch (kind_) {
    case KernelKind::Indicator: return param_;
    case KernelKind::UserRadial: return table_->radius.back() / param_;
    default: return kInf;
  }
}

double Kernel::scale_length() const {
  switch (kind_) {
    case KernelKind::Indicator:
    case KernelKind::GaussianShell: return param_;
    case KernelKind::UserRadial: return table_->radius.back() / param_;
    default: return 1.0;
  }
}

double Kernel::importance_weight(double r, double rc) const {
  if (kind_ != KernelKind::Gagliardo || r <= rc) return 1.0;
  return std::pow(rc / r, p_);
}

double Kernel::importance_total(double rc) const {
  if (kind_ != KernelKind::Gagliardo) return mass(0.0, kInf);
  const double alpha = (1.0 - param_) * p_;
  return scale_ * (1.0 - param_) * std::pow(rc, alpha) * (1.0 / alpha + 1.0 / (p_ - alpha));
}

double Kernel::importance_cdf(double r, double rc) const {
  if (kind_ != KernelKind::Gagliardo) return std::min(1.0, mass(0.0, r) / importance_total(rc));
  const double alpha = (1.0 - param_) * p_;
  const double inner = 1.0 / alpha, outer = 1.0 / (p_ - alpha);
  if (r <= rc) return inner * std::pow(r / rc, alpha) / (inner + outer);
  return (inner + outer * (1.0 - std::pow(r / rc, alpha - p_))) / (inner + outer);
}

double Kernel::gaussian_quantile(double u) const {
  const int knots = static_cast<int>(gauss_x_.size()) - 1;
  const int k = std::clamp(static_cast<int>(u * knots), 0, knots - 1);
  return inverse_gamma_p(0.5 * N_, u, gauss_x_[k], gauss_x_[k + 1]);
}

double Kernel::importance_quantile(double u, double rc) const {
  switch (kind_) {
    case KernelKind::Indicator: return param_ * std::pow(u, 1.0 / N_);
    case KernelKind::GaussianShell: return param_ * std::sqrt(gaussian_quantile(u));
    case KernelKind::Gagliardo: {
      const double alpha = (1.0 - param_) * p_;
      const double inner = 1.0 / alpha, outer = 1.0 / (p_ - alpha);
      const double t = u * (inner + outer);
      if (t < inner) return rc * std::pow(t / inner, 1.0 / alpha);
      const double v = (t - inner) / outer;
      return rc * std::pow(1.0 - v, -1.0 / (p_ - alpha));
    }
    case KernelKind::UserRadial: {
      // Cumulative masses sit at the boundaries 0, s_0, ..., s_last; bisect inside one piece.
      const auto& rs = table_->radius;
      const double target = u * table_cum_.back();
      std::size_t j =
          std::upper_bound(table_cum_.begin(), table_cum_.end(), target) - table_cum_.begin();
      j = std::clamp<std::size_t>(j, 1, table_cum_.size() - 1) - 1;
      auto boundary = [&](std::size_t i) { return i == 0 ? 0.0 : rs[i - 1]; };
      const double seg_lo = boundary(j);
      double lo = seg_lo, hi = boundary(j + 1);
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (table_cum_[j] + table_moment(N_, seg_lo, mid) < target) lo = mid; else hi = mid;
      }
      return 0.5 * (lo + hi) / param_;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------------------------

MollifierFamily::MollifierFamily(KernelKind kind, double N, double p, std::vector<double> grid,
                                 double c0)
    : kind_(kind), N_(N), p_(p), grid_(std::move(grid)), claimed_C0_(c0) {
  if (!(N_ > 0.0)) throw InputError("mollifier dimension N must be positive");
  if (!(p_ > 1.0)) throw InputError("exponent p must exceed 1");
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw InputError("claimed C0 must be positive");
}

MollifierFamily MollifierFamily::indicator(double N, double p, std::vector<double> eps_grid) {
  require_grid(eps_grid, false, 0.0, kInf, "indicator family");
  return MollifierFamily(KernelKind::Indicator, N, p, std::move(eps_grid), 1.0 / N);
}

MollifierFamily MollifierFamily::gagliardo(double N, double p, std::vector<double> s_grid) {
  require_grid(s_grid, true, 0.0, 1.0, "gagliardo family");
  return MollifierFamily(KernelKind::Gagliardo, N, p, std::move(s_grid), 1.0 / p);
}

MollifierFamily MollifierFamily::gaussian_shell(double N, double p, std::vector<double> eps_grid) {
  require_grid(eps_grid, false, 0.0, kInf, "gaussian shell family");
  return MollifierFamily(KernelKind::GaussianShell, N, p, std::move(eps_grid), 1.0 / N);
}

MollifierFamily MollifierFamily::user_radial(double N, double p, std::vector<double> n_grid,
                                             RadialTable table, double claimed_C0) {
  require_grid(n_grid, true, 0.0, kInf, "user radial family");
  if (table.radius.empty() || table.radius.size() != table.value.size()) {
    throw InputError("user radial table needs matching, non-empty radius and value lists");
  }
  for (std::size_t i = 0; i < table.radius.size(); ++i) {
    if (!(table.radius[i] > 0.0) || (i > 0 && !(table.radius[i] > table.radius[i - 1]))) {
      throw InputError("user radial breakpoints must be positive and strictly increasing");
    }
    if (!(table.value[i] >= 0.0) || !std::isfinite(table.value[i])) {
      throw InputError("user radial values must be finite and non-negative");
    }
  }
  MollifierFamily f(KernelKind::UserRadial, N, p, std::move(n_grid), claimed_C0);
  f.table_ = std::make_shared<const RadialTable>(std::move(table));
  return f;
}

MollifierFamily MollifierFamily::scaled(double c) const {
  if (!(c > 0.0)) throw InputError("kernel scale factor must be positive");
  MollifierFamily f = *this;
  f.scale_ *= c;
  f.claimed_C0_ *= c;
  return f;
}

MollifierFamily MollifierFamily::with_claimed_C0(double c0) const {
  if (!(c0 > 0.0)) throw InputError("claimed C0 must be positive");
  MollifierFamily f = *this;
  f.claimed_C0_ = c0;
  return f;
}

Kernel MollifierFamily::kernel(double n) const { return Kernel(kind_, N_, p_, n, scale_, table_); }

double MollifierFamily::distance_to_limit(double n) const {
  switch (kind_) {
    case KernelKind::Gagliardo: return 1.0 - n;
    case KernelKind::UserRadial: return 1.0 / n;
    default: return n;
  }
}

// ---------------------------------------------------------------------------------------------

double kernel_value(const MollifierFamily& family, double n, double r) {
  if (!(r > 0.0)) throw InputError("kernel_value: radius must be positive");
  return family.kernel(n).value(r);
}

double normalization_integral(const MollifierFamily& family, double n, double delta) {
  if (!(delta > 0.0)) throw InputError("normalization_integral: delta must be positive");
  return family.kernel(n).mass(0.0, delta);
}

TailEstimate tail_mass(const MollifierFamily& family, double n, const Space& space,
                       const PointRef& x, double delta, std::size_t budget, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InputError("tail_mass: delta must be positive");
  if (budget < 100) throw InputError("tail_mass: budget too small");
  space.check_point(x, "x");
  const Kernel k = family.kernel(n);
  TailEstimate out;
  out.energy_weighted = !k.integrable();
  const double p = family.exponent_p();
  const double N = space.scaling_dim();
  const double polar = N * space.unit_ball_volume();
  const double r_max = 1e3 * delta;
  const bool weighted = space.weight() != nullptr;

  if (k.support() <= delta) return out;

  const double log_span = std::log(r_max / delta);
  Rng rng(seed, 0x7A11);
  RunningStats stats;
  for (std::size_t i = 0; i < budget; ++i) {
    const double r = delta * std::exp(log_span * rng.uniform());
    const Point y = space.compose(x, space.cone_dilate(r, sample_unit_sphere(space, rng)));
    double v = polar * std::pow(r, N) * k.value(r) * log_span * measure_density(space, y);
    if (out.energy_weighted) v *= std::pow(r, -p);
    stats.push(v);
  }
  out.value = stats.mean();
  out.std_error = stats.std_error();

  const double beyond = out.energy_weighted ? k.energy_tail(r_max) : k.mass(r_max, kInf);
  out.remainder_bound = polar * beyond * (weighted ? space.weight()->theta_max : 1.0);
  if (!weighted) out.value += out.remainder_bound;
  if (out.energy_weighted) {
    out.warning = "kernel tail is not integrable; reporting the energy-weighted tail";
  }
  return out;
}

L1Bound sup_L1_bound(const MollifierFamily& family, const Space& space,
                     const std::vector<Point>& probe_points, std::size_t budget, std::uint64_t seed,
                     double truncation) {
  if (probe_points.empty()) throw InputError("sup_L1_bound needs at least one probe point");
  L1Bound out;
  out.value = -1.0;
  const double N = space.scaling_dim();
  const double polar = N * space.unit_ball_volume();
  const bool weighted = space.weight() != nullptr;
  const int strata = 16;
  for (std::size_t j = 0; j < family.param_grid().size(); ++j) {
    const double n = family.param_grid()[j];
    const Kernel k = family.kernel(n);
    const bool truncate = !k.integrable() || std::isfinite(truncation);
    if (!k.integrable() && !std::isfinite(truncation)) {
      out.value = kInf;
      out.worst_parameter = n;
      return out;
    }
    out.truncated = out.truncated || truncate;
    const double cut = truncate ? truncation : kInf;
    const double rc = std::isfinite(cut) ? cut : 1.0;
    const double total = k.mass(0.0, cut);
    const double frac = total / k.importance_total(rc);
    for (std::size_t i = 0; i < probe_points.size(); ++i) {
      space.check_point(probe_points[i], "probe point");
      Estimate e{polar * total, 0.0, 0};
      if (weighted) {
        Rng rng(seed + 7919 * j, i);
        std::vector<RunningStats> per(strata);
        const std::size_t each = std::max<std::size_t>(budget / strata, 2);
        for (int s = 0; s < strata; ++s) {
          for (std::size_t t = 0; t < each; ++t) {
            const double u = (s + rng.uniform_open()) / strata;
            const double r = k.importance_quantile(u * frac, rc);
            const Point y = space.compose(probe_points[i],
                                          space.cone_dilate(r, sample_unit_sphere(space, rng)));
            per[s].push(polar * total * measure_density(space, y));
          }
        }
        double mean = 0.0, var = 0.0;
        for (const auto& st : per) {
          mean += st.mean() / strata;
          var += st.variance() / static_cast<double>(st.count()) / (strata * strata);
        }
        e = {mean, std::sqrt(var), each * strata};
      }
      if (e.value > out.value) {
        out.value = e.value;
        out.std_error = e.std_error;
        out.worst_parameter = n;
      }
    }
  }
  return out;
}

ValidationReport validate_assumptions(const MollifierFamily& family, const Space& space,
                                      const ValidationTolerances& tol) {
  if (std::abs(family.dim_N() - space.homogeneous_dim()) > 1e-12 * space.homogeneous_dim()) {
    std::ostringstream os;
    os << "mollifier dimension " << family.dim_N() << " does not match the space's homogeneous "
       << "dimension " << space.homogeneous_dim();
    throw InputError(os.str());
  }
  ValidationReport rep;
  const double N = space.homogeneous_dim();
  const double c0 = family.claimed_C0();

  // (2') non-negative and non-increasing on a log grid of 10^3 radii per parameter.
  rep.monotone = true;
  for (double n : family.param_grid()) {
    const Kernel k = family.kernel(n);
    const double lo = 1e-6 * k.scale_length(), hi = 1e3 * k.scale_length();
    double prev = kInf;
    for (int i = 0; i < 1000 && rep.monotone; ++i) {
      const double r = lo * std::pow(hi / lo, i / 999.0);
      const double v = k.value(r);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        rep.monotone = false;
        rep.messages.push_back("kernel negative or non-finite at r = " + std::to_string(r));
      } else if (v > prev * (1.0 + 1e-12)) {
        rep.monotone = false;
        std::ostringstream os;
        os << "kernel increases at r = " << r << " for parameter " << n;
        rep.messages.push_back(os.str());
      }
      prev = v;
    }
  }

  // (1') uniform L^1 bound; kernels with non-integrable tails are checked inside B_delta.
  const int dim = space.topological_dim();
  std::vector<Point> probes = {Point::Zero(dim), Point::Constant(dim, 0.3)};
  const bool integrable = family.kernel(family.param_grid().back()).integrable();
  const L1Bound c1 = sup_L1_bound(family, space, probes, tol.budget, tol.seed,
                                  integrable ? kInf : tol.delta);
  rep.c1 = c1.value;
  rep.uniform_bound = std::isfinite(c1.value);
  if (!integrable) {
    rep.messages.push_back("kernel tail is not integrable: L^1 bound taken on B_delta, tail "
                           "controlled through the energy-weighted tail");
  }

  // (3') normalization and vanishing tail at the parameter closest to the limit.
  const double n_last = family.param_grid().back();
  rep.normalization_value = normalization_integral(family, n_last, tol.delta);
  rep.normalization = std::abs(rep.normalization_value - c0) <= tol.normalization_rel * c0;
  if (!rep.normalization) {
    std::ostringstream os;
    os << "normalization integral " << rep.normalization_value << " differs from claimed C0 " << c0;
    rep.messages.push_back(os.str());
  }
  rep.robustness_value = normalization_integral(family, n_last, tol.robustness_delta);
  rep.robustness_marginal = std::abs(rep.robustness_value - c0) > tol.normalization_rel * c0;
  if (rep.robustness_marginal) {
    std::ostringstream os;
    os << "delta-robustness probe: normalization at delta = " << tol.robustness_delta << " is "
       << rep.robustness_value;
    rep.messages.push_back(os.str());
  }
  const TailEstimate tail = tail_mass(family, n_last, space, probes.front(), tol.delta,
                                      tol.budget, tol.seed + 1);
  rep.tail_value = tail.value + (space.weight() ? tail.remainder_bound : 0.0);
  const double tail_scale = N * space.unit_ball_volume() * c0 * measure_density(space, probes.front());
  rep.tail = rep.tail_value <= tol.tail_rel * tail_scale;
  if (!rep.tail) {
    std::ostringstream os;
    os << "tail mass " << rep.tail_value << " exceeds " << tol.tail_rel * tail_scale;
    rep.messages.push_back(os.str());
  }
  if (!tail.warning.empty()) rep.messages.push_back(tail.warning);

  rep.rescale_flag = std::abs(N * c0 - 1.0) > 1e-12;
  if (rep.rescale_flag) {
    std::ostringstream os;
    os << "claimed C0 = " << c0 << " differs from 1/N; the predicted limit is scaled by N*C0 = "
       << N * c0;
    rep.messages.push_back(os.str());
  }
  return rep;
}

}  // namespace bbm
