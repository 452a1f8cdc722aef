#include "bbm/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bbm/quadrature.hpp"
#include "bbm/stats.hpp"

namespace bbm {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd unit_vector(int dim, int axis) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e(axis) = 1.0;
  return e;
}

// Radius of the unit ball along the ray through direction e: 1 / gauge(e).
double radial_extent(const Space& cone, const Eigen::VectorXd& e) { return 1.0 / cone.gauge(e); }

bool has_closed_form_volume(const Space& cone) {
  return cone.kind() == SpaceKind::Euclidean ||
         (cone.kind() == SpaceKind::AnisotropicNormed && cone.lq_exponent().has_value());
}

}  // namespace

// ---------------------------------------------------------------------------------------------

ConeDescriptor ConeDescriptor::of(const Space& space, bool normalized) {
  if (space.kind() == SpaceKind::WeightedEuclidean) {
    return ConeDescriptor(Space::euclidean(space.topological_dim()), normalized);
  }
  return ConeDescriptor(space, normalized);
}

ExtrapolatedValue minkowski_content(const ConeDescriptor& cone, double R,
                                    const std::vector<double>& eps_schedule, std::size_t budget,
                                    std::uint64_t seed) {
  if (!(R > 0.0)) throw InputError("minkowski_content: R must be positive");
  if (eps_schedule.size() < 3) throw InputError("minkowski_content: need at least 3 eps values");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0) || (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))) {
      throw InputError("minkowski_content: eps schedule must be positive and decreasing");
    }
  }
  const Space& C = cone.space();
  const double N = cone.dim_N();
  const double scale = cone.measure_scale();
  ExtrapolatedValue out;
  out.abscissae = eps_schedule;

  if (has_closed_form_volume(C)) {
    const double V = C.unit_ball_volume() * scale;
    for (double e : eps_schedule) {
      out.samples.push_back(V * (std::pow(R + e, N) - std::pow(R, N)) / e);
      out.sample_errors.push_back(0.0);
    }
  } else {
    // One box sample set shared by every eps (common random numbers).
    const double outer = R + eps_schedule.front();
    const Eigen::VectorXd half = C.cone_dilate(outer, C.unit_ball_half_extent());
    const double box = (2.0 * half).prod();
    std::vector<std::size_t> hits(eps_schedule.size(), 0);
    Rng rng(seed);
    Point z(C.topological_dim());
    for (std::size_t i = 0; i < budget; ++i) {
      for (int k = 0; k < z.size(); ++k) z(k) = rng.uniform(-half(k), half(k));
      const double g = C.gauge(z);
      if (g < R) continue;
      for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
        if (g < R + eps_schedule[j]) ++hits[j];
      }
    }
    const double n = static_cast<double>(budget);
    for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
      const double frac = static_cast<double>(hits[j]) / n;
      const double e = eps_schedule[j];
      out.samples.push_back(box * scale * frac / e);
      out.sample_errors.push_back(box * scale * std::sqrt(frac * (1.0 - frac) / n) / e);
    }
  }

  const LinearFit fit = weighted_linear_fit(out.abscissae, out.samples, out.sample_errors);
  const double quad = quadratic_intercept(out.abscissae, out.samples, out.sample_errors);
  out.value = fit.intercept;
  out.uncertainty = std::hypot(fit.intercept_error, quad - fit.intercept);
  return out;
}

// ---------------------------------------------------------------------------------------------

ShellSamples make_shell_samples(const ConeDescriptor& cone, double eps, std::size_t budget,
                                std::uint64_t seed) {
  if (!(eps > 0.0)) throw InputError("shell width must be positive");
  if (budget < 2) throw InputError("shell budget must be at least 2");
  ShellSamples shell;
  shell.eps = eps;
  shell.dim_N = cone.dim_N();
  shell.directions.reserve(budget);
  shell.uniforms.reserve(budget);
  Rng rng(seed);
  for (std::size_t i = 0; i < budget; ++i) {
    shell.directions.push_back(sample_unit_sphere(cone.space(), rng));
    shell.uniforms.push_back(rng.uniform());
  }
  for (std::size_t i = 0; i < budget; ++i) {
    shell.wide_radii.push_back(shell.radius(i, eps));
    shell.narrow_radii.push_back(shell.radius(i, 0.5 * eps));
  }
  return shell;
}

namespace {

// Per-sample Richardson terms for the shell means at widths eps and eps/2, evaluated through
// h(r, i) = integrand at D_r v_i.
template <typename Integrand>
SphereIntegral shell_means(const ShellSamples& shell, Integrand&& h) {
  const double e1 = shell.eps, e2 = 0.5 * shell.eps, N = shell.dim_N;
  const double f1 = std::expm1(N * std::log1p(e1)) / (e1 * N);
  const double f2 = std::expm1(N * std::log1p(e2)) / (e2 * N);
  RunningStats wide, narrow, combined;
  for (std::size_t i = 0; i < shell.directions.size(); ++i) {
    const double a = f1 * h(shell.wide_radii[i], i);
    const double b = f2 * h(shell.narrow_radii[i], i);
    wide.push(a);
    narrow.push(b);
    combined.push(2.0 * b - a);
  }
  SphereIntegral out;
  out.mean = combined.mean();
  out.std_error = combined.std_error();
  out.bias_gap = std::abs(wide.mean() - narrow.mean());
  return out;
}

}  // namespace

SphereIntegral sphere_integral(const ConeDescriptor& cone,
                               const std::function<double(const PointRef&)>& g, double p,
                               double eps, std::size_t budget, std::uint64_t seed) {
  const ShellSamples shell = make_shell_samples(cone, eps, budget, seed);
  const Space& C = cone.space();
  SphereIntegral out = shell_means(shell, [&](double r, std::size_t i) {
    return abs_pow(g(C.cone_dilate(r, shell.directions[i])), p);
  });
  out.integral = cone.dim_N() * cone.unit_ball_measure() * out.mean;
  return out;
}

// ---------------------------------------------------------------------------------------------

SphereMean::SphereMean(const Space& space, double p, std::size_t budget, double eps,
                       std::uint64_t seed, int direction_table)
    : space_(space), p_(p) {
  if (!(p > 0.0)) throw InputError("SphereMean: p must be positive");
  const ConeDescriptor cone = ConeDescriptor::of(space, true);
  shell_ = make_shell_samples(cone, eps, budget, seed);
  const int gdim = space.kind() == SpaceKind::HeisenbergKoranyi ? 2 : space.topological_dim();
  coords_.resize(gdim, static_cast<Eigen::Index>(budget));
  for (std::size_t i = 0; i < budget; ++i) {
    coords_.col(static_cast<Eigen::Index>(i)) = shell_.directions[i].head(gdim);
  }
  const bool round = space.kind() == SpaceKind::Euclidean ||
                     space.kind() == SpaceKind::WeightedEuclidean ||
                     space.kind() == SpaceKind::HeisenbergKoranyi ||
                     (space.lq_exponent() && *space.lq_exponent() == 2.0);
  if (round || gdim == 1) {
    mode_ = Mode::Isotropic;
    const SphereIntegral s = evaluate(unit_vector(gdim, 0));
    e1_mean_ = s.mean;
    rel_uncertainty_ = std::hypot(s.std_error, s.bias_gap) / s.mean;
    if (gdim == 1) {
      // 1D cones need not be symmetric; keep both signs apart.
      mode_ = Mode::DirectionTable;
      const SphereIntegral s2 = evaluate(-unit_vector(1, 0));
      table_ = {s.mean, s2.mean};
      rel_uncertainty_ =
          std::max(rel_uncertainty_, std::hypot(s2.std_error, s2.bias_gap) / s2.mean);
    }
  } else if (gdim == 2) {
    if (direction_table < 8) throw InputError("SphereMean: direction table needs >= 8 entries");
    mode_ = Mode::DirectionTable;
    table_.resize(direction_table);
    for (int k = 0; k < direction_table; ++k) {
      const double phi = kPi * k / direction_table;
      const SphereIntegral s = evaluate(Eigen::Vector2d(std::cos(phi), std::sin(phi)));
      table_[k] = s.mean;
      rel_uncertainty_ = std::max(rel_uncertainty_, std::hypot(s.std_error, s.bias_gap) / s.mean);
    }
  } else {
    mode_ = Mode::Direct;
    const SphereIntegral s = evaluate(unit_vector(gdim, 0));
    rel_uncertainty_ = std::hypot(s.std_error, s.bias_gap) / s.mean;
  }
}

SphereIntegral SphereMean::evaluate(const Eigen::VectorXd& g) const {
  // Pairings are linear in v and 1-homogeneous under the cone dilation, so D_r v pairs to
  // r * <g, v>; one matrix product gives every sample's pairing.
  const Eigen::VectorXd pair = coords_.transpose() * g;
  return shell_means(shell_, [&](double r, std::size_t i) { return abs_pow(r * pair(i), p_); });
}

double SphereMean::operator()(const Eigen::VectorXd& g) const {
  const double norm = g.norm();
  if (norm == 0.0) return 0.0;
  switch (mode_) {
    case Mode::Isotropic:
      return abs_pow(norm, p_) * e1_mean_;
    case Mode::DirectionTable: {
      if (g.size() == 1) return abs_pow(norm, p_) * table_[g(0) > 0.0 ? 0 : 1];
      // Periodic Catmull-Rom interpolation over directions in [0, pi).
      double phi = std::atan2(g(1), g(0));
      if (phi < 0.0) phi += kPi;
      const int K = static_cast<int>(table_.size());
      const double t = phi / kPi * K;
      const int k = static_cast<int>(std::floor(t));
      const double u = t - k;
      auto at = [&](int j) { return table_[((j % K) + K) % K]; };
      const double y0 = at(k - 1), y1 = at(k), y2 = at(k + 1), y3 = at(k + 2);
      const double m = y1 + 0.5 * u *
                                (y2 - y0 +
                                 u * (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3 +
                                      u * (3.0 * (y1 - y2) + y3 - y0)));
      return abs_pow(norm, p_) * m;
    }
    case Mode::Direct:
      return abs_pow(norm, p_) * evaluate(g / norm).mean;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------------------------

double k_constant_closed_form(double p, double N) {
  return unit_ball_volume_euclidean(N) * std::exp(std::lgamma((p + 1.0) / 2.0) +
                                                  std::lgamma(N / 2.0) -
                                                  std::lgamma((N + p) / 2.0)) /
         std::sqrt(kPi);
}

Estimate k_constant_euclidean(double p, int N, std::size_t budget, std::uint64_t seed,
                              const Eigen::VectorXd& w) {
  if (!(p > 1.0)) throw InputError("k_constant_euclidean: p must exceed 1");
  if (N < 1) throw InputError("k_constant_euclidean: N must be positive");
  Eigen::VectorXd dir = w.size() == 0 ? unit_vector(N, 0) : w;
  if (dir.size() != N || !(dir.norm() > 0.0)) {
    throw InputError("k_constant_euclidean: direction must be a nonzero vector of length N");
  }
  dir.normalize();
  const ConeDescriptor cone = ConeDescriptor::of(Space::euclidean(N), true);
  const SphereIntegral s =
      sphere_integral(cone, [&](const PointRef& v) { return dir.dot(v); }, p, 1e-3, budget, seed);
  const double omega = unit_ball_volume_euclidean(N);
  return Estimate{omega * s.mean, omega * std::hypot(s.std_error, s.bias_gap), budget};
}

double theta_reference(const Space& space, const PointRef& x) {
  switch (space.kind()) {
    case SpaceKind::WeightedEuclidean: {
      const double omega = unit_ball_volume_euclidean(space.topological_dim());
      // The asymmetric pairing keeps the weight only in the outer measure.
      return space.pairing() == MeasurePairing::Asymmetric ? omega
                                                           : omega * measure_density(space, x);
    }
    default:
      return space.unit_ball_volume();
  }
}

// ---------------------------------------------------------------------------------------------

namespace {

int default_resolution(int dim) { return dim == 1 ? 4096 : dim == 2 ? 256 : 64; }

// Midpoint rule over the support box with `res` cells per axis; calls visit(x, cell_volume).
template <typename Visit>
void midpoint_grid(const Box& box, int res, Visit&& visit) {
  const int dim = static_cast<int>(box.lo.size());
  const Eigen::VectorXd h = (box.hi - box.lo) / res;
  const double cell = h.prod();
  std::vector<int> idx(dim, 0);
  Point x(dim);
  while (true) {
    for (int k = 0; k < dim; ++k) x(k) = box.lo(k) + (idx[k] + 0.5) * h(k);
    visit(x, cell);
    int k = 0;
    while (k < dim && ++idx[k] == res) idx[k++] = 0;
    if (k == dim) break;
  }
}

}  // namespace

LimitValue limit_seminorm(const Space& space, const TestFunction& f, double p,
                          const LimitBudgets& budgets, std::uint64_t seed) {
  check_compatible(space, f);
  if (!(p >= 1.0)) throw InputError("limit_seminorm: p must be at least 1");
  const int res = budgets.grid_resolution > 0 ? budgets.grid_resolution
                                              : default_resolution(space.topological_dim());
  if (res < 4) throw InputError("limit_seminorm: grid resolution must be at least 4");
  const SphereMean mean(space, p, budgets.shell_samples, budgets.shell_eps, seed,
                        budgets.direction_table);
  const Box box = f.support_box();

  auto integrate_grid = [&](int cells, std::vector<double>* breakdown) {
    double total = 0.0;
    midpoint_grid(box, cells, [&](const Point& x, double cell) {
      const double c = cell * measure_density(space, x) * theta_reference(space, x) *
                       mean(gradient(f, x).gradient_data);
      if (breakdown) breakdown->push_back(c);
      total += c;
    });
    return total;
  };

  LimitValue out;
  out.value = integrate_grid(res, &out.breakdown);
  const double coarse = integrate_grid(res / 2, nullptr);
  out.uncertainty =
      std::hypot(mean.relative_uncertainty() * out.value, std::abs(out.value - coarse) / 3.0);
  return out;
}

LimitValue predicted_limit(const Space& space, const TestFunction& f,
                           const MollifierFamily& family, double p, const LimitBudgets& budgets,
                           std::uint64_t seed) {
  if (family.exponent_p() != p) throw InputError("predicted_limit: family built for another p");
  LimitValue lim = limit_seminorm(space, f, p, budgets, seed);
  const double factor = family.dim_N() * family.claimed_C0();
  lim.value *= factor;
  lim.uncertainty *= factor;
  for (double& c : lim.breakdown) c *= factor;
  return lim;
}

// ---------------------------------------------------------------------------------------------

namespace {

constexpr quad::QuadOptions kFormTolerance{1e-10, 1e-18, 4000};

double integrate_pieces(const std::function<double(double)>& h, std::vector<double> cuts,
                        double a, double b) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(a, cuts[i]), hi = std::min(b, cuts[i + 1]);
    if (hi > lo) total += quad::integrate(h, lo, hi, kFormTolerance, "ball form");
  }
  return total;
}

// Section {t : gauge(v0 e_0 + t e_1) < 1} of a convex planar unit ball, or an empty pair.
std::pair<double, double> section(const Space& cone, double v0) {
  if (auto q = cone.lq_exponent()) {
    const double a = std::abs(v0);
    if (a >= 1.0) return {0.0, 0.0};
    const double t = std::isinf(*q) ? 1.0 : std::pow(1.0 - std::pow(a, *q), 1.0 / *q);
    return {-t, t};
  }
  if (cone.kind() == SpaceKind::Euclidean) {
    const double a = std::abs(v0);
    if (a >= 1.0) return {0.0, 0.0};
    const double t = std::sqrt(1.0 - a * a);
    return {-t, t};
  }
  // General convex gauge: golden-section minimum along the line, then bisection to each side.
  const double H = 2.0 * cone.unit_ball_half_extent()(1);
  auto g = [&](double t) { return cone.gauge(Eigen::Vector2d(v0, t)); };
  double lo = -H, hi = H;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * H; ++it) {
    const double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
    (g(m1) < g(m2) ? hi : lo) = (g(m1) < g(m2) ? m2 : m1);
  }
  const double tmin = 0.5 * (lo + hi);
  if (g(tmin) >= 1.0) return {0.0, 0.0};
  auto edge = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      (g(mid) < 1.0 ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  return {edge(tmin, -H), edge(tmin, H)};
}

double ball_integral(const Space& cone, const Eigen::VectorXd& g, double p) {
  if (g.size() == 1) {
    const double b = radial_extent(cone, unit_vector(1, 0));
    const double a = radial_extent(cone, -unit_vector(1, 0));
    return integrate_pieces([&](double v) { return abs_pow(g(0) * v, p); }, {0.0}, -a, b);
  }
  const double H0 = 2.0 * cone.unit_ball_half_extent()(0);
  auto row = [&](double v0) {
    const auto [lo, hi] = section(cone, v0);
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts;
    if (g(1) != 0.0) cuts.push_back(-g(0) * v0 / g(1));
    return integrate_pieces([&](double v1) { return abs_pow(g(0) * v0 + g(1) * v1, p); }, cuts, lo,
                            hi);
  };
  // Sections of l^1 and l^inf balls change formula at v0 = 0 and |v0| = 1.
  return integrate_pieces(row, {-1.0, 0.0, 1.0}, -H0, H0);
}

double sphere_form_integral(const Space& cone, const Eigen::VectorXd& g, double p) {
  if (g.size() == 1) {
    // m^+ on S_1 = {b, -a} puts mass |v| on each point.
    const double b = radial_extent(cone, unit_vector(1, 0));
    const double a = radial_extent(cone, -unit_vector(1, 0));
    return abs_pow(g(0) * b, p) * b + abs_pow(g(0) * a, p) * a;
  }
  // Boundary parametrization v = rho(phi) e_phi with m^+(dv) = rho(phi)^2 dphi.
  auto h = [&](double phi) {
    const Eigen::Vector2d e(std::cos(phi), std::sin(phi));
    const double rho = radial_extent(cone, e);
    return abs_pow(g.dot(e), p) * std::pow(rho, p + 2.0);
  };
  std::vector<double> cuts;
  for (int k = 1; k < 8; ++k) cuts.push_back(k * kPi / 4.0);
  double zero = std::atan2(-g(0), g(1));
  if (zero < 0.0) zero += kPi;
  cuts.push_back(zero);
  cuts.push_back(zero + kPi);
  return integrate_pieces(h, cuts, 0.0, 2.0 * kPi);
}

}  // namespace

BallFormReport gagliardo_ball_form(double p, const TestFunction& f, const Space& space,
                                   int grid_resolution) {
  if (space.kind() != SpaceKind::Euclidean && space.kind() != SpaceKind::AnisotropicNormed) {
    throw UnsupportedOperation("ball form needs a Euclidean or normed backend");
  }
  if (space.topological_dim() > 2) throw UnsupportedOperation("ball form needs dimension 1 or 2");
  if (!(p >= 1.0)) throw InputError("ball form: p must be at least 1");
  if (grid_resolution < 2) throw InputError("ball form: grid resolution must be at least 2");
  check_compatible(space, f);
  const double N = space.topological_dim();
  BallFormReport out;
  midpoint_grid(f.support_box(), grid_resolution, [&](const Point& x, double cell) {
    const Eigen::VectorXd g = f.gradient(x);
    if (g.norm() == 0.0) return;
    out.ball_form += cell * ball_integral(space, g, p);
    out.sphere_form += cell * sphere_form_integral(space, g, p);
  });
  out.ball_side = (p + N) / p * out.ball_form;
  out.sphere_side = out.sphere_form / p;
  const double scale = std::max(std::abs(out.ball_side), std::abs(out.sphere_side));
  out.relative_gap = scale > 0.0 ? std::abs(out.ball_side - out.sphere_side) / scale : 0.0;
  return out;
}

}  // namespace bbm
