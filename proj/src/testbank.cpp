#include "bbm/testbank.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bbm/quadrature.hpp"

namespace bbm {

namespace {

constexpr double kPi = std::numbers::pi;

// max of |v|_2 / |v| over directions: the Euclidean-to-backend distortion of the unit sphere.
double euclidean_to_gauge_distortion(const Space& space, bool dual) {
  const int n = space.topological_dim();
  switch (space.kind()) {
    case SpaceKind::Euclidean:
    case SpaceKind::WeightedEuclidean:
    case SpaceKind::HeisenbergKoranyi: return 1.0;
    case SpaceKind::AnisotropicNormed: break;
  }
  if (auto q = space.lq_exponent()) {
    // Want max over |e|_2 = 1 of |e|_r with r = q* (dual) or 1/|e|_q = max |e|_2/|e|_q.
    double r = *q;
    if (dual) r = std::isinf(*q) ? 1.0 : (*q == 1.0 ? std::numeric_limits<double>::infinity() : *q / (*q - 1.0));
    if (dual) return r < 2.0 ? std::pow(n, 1.0 / r - 0.5) : 1.0;
    return r > 2.0 ? (std::isinf(r) ? std::sqrt(n) : std::pow(n, 0.5 - 1.0 / r)) : 1.0;
  }
  // User norm: sup |v|_2 / |v|, sampled and refined. The dual version sup |e|_* over Euclidean
  // unit e equals the same quantity.
  Rng rng(99, 0x5EED);
  double best = 0.0;
  Eigen::VectorXd best_v;
  for (int k = 0; k < 20000; ++k) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
    if (v.norm() < 1e-3) continue;
    const double r = v.norm() / space.gauge(v);
    if (r > best) best = r, best_v = v;
  }
  for (double step = 0.1; step > 1e-10; step *= 0.5) {
    for (int k = 0; k < 4 * n; ++k) {
      Eigen::VectorXd v = best_v;
      v(k % n) += (k / n) % 2 ? step : -step;
      const double r = v.norm() / space.gauge(v);
      if (r > best) best = r, best_v = v;
    }
  }
  return best * (1.0 + 1e-6);
}

double hat_profile(double x, double a) { return std::max(0.0, 1.0 - std::abs(x - a)); }

}  // namespace

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Hat1D: return "hat1d";
    case FunctionKind::RadialBump: return "radial_bump";
    case FunctionKind::LinearCutoff: return "linear_cutoff";
    case FunctionKind::HeisenbergPoly: return "heisenberg_poly";
  }
  return "unknown";
}

FunctionKind function_kind_from_string(const std::string& name) {
  if (name == "hat1d" || name == "hat") return FunctionKind::Hat1D;
  if (name == "radial_bump") return FunctionKind::RadialBump;
  if (name == "linear_cutoff") return FunctionKind::LinearCutoff;
  if (name == "heisenberg_poly") return FunctionKind::HeisenbergPoly;
  throw InputError("unknown test function kind '" + name + "'");
}

double cutoff(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double t = 2.0 * (s - 0.5);
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

double cutoff_derivative(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double t = 2.0 * (s - 0.5);
  return -12.0 * t * (1.0 - t);
}

TestFunction::TestFunction(FunctionKind kind, Point anchor, double radius)
    : kind_(kind), anchor_(std::move(anchor)), radius_(radius) {
  if (!(radius_ > 0.0)) throw InputError("test function support radius must be positive");
  if (!anchor_.allFinite()) throw InputError("test function anchor must be finite");
}

TestFunction TestFunction::hat1d(double anchor) {
  return TestFunction(FunctionKind::Hat1D, Point::Constant(1, anchor), 1.0);
}

TestFunction TestFunction::radial_bump(Point anchor, double radius) {
  return TestFunction(FunctionKind::RadialBump, std::move(anchor), radius);
}

TestFunction TestFunction::linear_cutoff(Point anchor, double radius, Eigen::VectorXd w) {
  if (w.size() != anchor.size()) throw InputError("linear_cutoff: w and anchor differ in length");
  TestFunction f(FunctionKind::LinearCutoff, std::move(anchor), radius);
  f.w_ = std::move(w);
  return f;
}

TestFunction TestFunction::heisenberg_poly(double radius, Point anchor) {
  if (anchor.size() != 3) throw InputError("heisenberg_poly: anchor must have three coordinates");
  TestFunction f(FunctionKind::HeisenbergPoly, std::move(anchor), radius);
  f.heisenberg_lip_ = std::make_shared<double>(-1.0);
  return f;
}

std::string TestFunction::description() const {
  std::ostringstream os;
  os << to_string(kind_) << "(anchor=" << anchor_.transpose() << ", R=" << radius_;
  if (kind_ == FunctionKind::LinearCutoff) os << ", w=" << w_.transpose();
  if (amplitude_ != 1.0) os << ", amplitude=" << amplitude_;
  if (gradient_scale_ != 1.0) os << ", gradient_scale=" << gradient_scale_;
  os << ")";
  return os.str();
}

TestFunction TestFunction::scaled(double c) const {
  TestFunction f = *this;
  f.amplitude_ *= c;
  if (f.heisenberg_lip_ && *heisenberg_lip_ >= 0.0) {
    f.heisenberg_lip_ = std::make_shared<double>(*heisenberg_lip_ * std::abs(c));
  }
  return f;
}

TestFunction TestFunction::with_gradient_scale(double c) const {
  TestFunction f = *this;
  f.gradient_scale_ = c;
  return f;
}

double TestFunction::evaluate(const PointRef& x) const {
  if (x.size() != anchor_.size()) throw InputError("test function: point has the wrong dimension");
  switch (kind_) {
    case FunctionKind::Hat1D: return amplitude_ * hat_profile(x(0), anchor_(0));
    case FunctionKind::RadialBump: {
      const double s = (x - anchor_).squaredNorm() / (radius_ * radius_);
      if (s >= 1.0) return 0.0;
      return amplitude_ * (1.0 - s) * (1.0 - s);
    }
    case FunctionKind::LinearCutoff:
      return amplitude_ * w_.dot(x) * cutoff((x - anchor_).norm() / radius_);
    case FunctionKind::HeisenbergPoly: {
      const Eigen::Vector3d z = heisenberg::multiply(heisenberg::inverse(anchor_), x);
      return amplitude_ * z(0) * cutoff(heisenberg::gauge(z) / radius_);
    }
  }
  return 0.0;
}

Eigen::VectorXd TestFunction::gradient(const PointRef& x) const {
  if (x.size() != anchor_.size()) throw InputError("test function: point has the wrong dimension");
  const double c = amplitude_ * gradient_scale_;
  switch (kind_) {
    case FunctionKind::Hat1D: {
      const double d = x(0) - anchor_(0);
      Eigen::VectorXd g(1);
      // One-sided convention: the right derivative at the apex and at the support ends.
      if (d < -1.0 || d >= 1.0) g(0) = 0.0;
      else g(0) = d < 0.0 ? 1.0 : -1.0;
      return c * g;
    }
    case FunctionKind::RadialBump: {
      const Eigen::VectorXd d = x - anchor_;
      const double r2 = radius_ * radius_;
      const double s = d.squaredNorm() / r2;
      if (s >= 1.0) return Eigen::VectorXd::Zero(x.size());
      return c * (-4.0 * (1.0 - s) / r2) * d;
    }
    case FunctionKind::LinearCutoff: {
      const Eigen::VectorXd d = x - anchor_;
      const double r = d.norm();
      Eigen::VectorXd g = w_ * cutoff(r / radius_);
      if (r > 0.0) g += w_.dot(x) * cutoff_derivative(r / radius_) / radius_ * d / r;
      return c * g;
    }
    case FunctionKind::HeisenbergPoly: {
      const Eigen::Vector3d z = heisenberg::multiply(heisenberg::inverse(anchor_), x);
      const double a = z(0), b = z(1), t = z(2);
      const double rho2 = a * a + b * b;
      const double G = heisenberg::gauge(z);
      Eigen::VectorXd g(2);
      g << cutoff(G / radius_), 0.0;
      const double dchi = cutoff_derivative(G / radius_);
      if (dchi != 0.0) {
        const double g3 = G * G * G;
        const double XG = (rho2 * a - 4.0 * b * t) / g3;
        const double YG = (rho2 * b + 4.0 * a * t) / g3;
        g(0) += a * dchi * XG / radius_;
        g(1) += a * dchi * YG / radius_;
      }
      return c * g;
    }
  }
  return {};
}

Box TestFunction::support_box() const {
  Box b;
  switch (kind_) {
    case FunctionKind::Hat1D:
    case FunctionKind::RadialBump:
    case FunctionKind::LinearCutoff:
      b.lo = anchor_.array() - radius_;
      b.hi = anchor_.array() + radius_;
      break;
    case FunctionKind::HeisenbergPoly: {
      const double R = radius_;
      const double dt = 0.25 * R * R + 0.5 * (std::abs(anchor_(0)) + std::abs(anchor_(1))) * R;
      b.lo = anchor_ - Eigen::Vector3d(R, R, dt);
      b.hi = anchor_ + Eigen::Vector3d(R, R, dt);
      break;
    }
  }
  return b;
}

double TestFunction::support_radius(const Space& space) const {
  if (kind_ == FunctionKind::HeisenbergPoly || kind_ == FunctionKind::Hat1D) return radius_;
  return radius_ * euclidean_to_gauge_distortion(space, false);
}

double TestFunction::sup_norm() const {
  const double a = std::abs(amplitude_);
  switch (kind_) {
    case FunctionKind::Hat1D:
    case FunctionKind::RadialBump: return a;
    case FunctionKind::LinearCutoff:
      return a * (std::abs(w_.dot(anchor_)) + w_.norm() * radius_);
    case FunctionKind::HeisenbergPoly: return a * radius_;
  }
  return 0.0;
}

std::vector<double> TestFunction::kinks_1d() const {
  if (kind_ == FunctionKind::Hat1D) return {anchor_(0) - 1.0, anchor_(0), anchor_(0) + 1.0};
  if (anchor_.size() == 1) {
    const double a = anchor_(0), R = radius_;
    return {a - R, a - 0.5 * R, a + 0.5 * R, a + R};
  }
  return {};
}

double TestFunction::lipschitz_constant(const Space& space) const {
  const double amp = std::abs(amplitude_);
  switch (kind_) {
    case FunctionKind::Hat1D: return amp;
    case FunctionKind::RadialBump:
      // max of |4 r (1 - r^2/R^2)| / R^2 is at r = R / sqrt(3).
      return amp * 8.0 / (3.0 * std::sqrt(3.0) * radius_) * euclidean_to_gauge_distortion(space, true);
    case FunctionKind::LinearCutoff: {
      if (w_.isZero(0.0) || amp == 0.0) return 0.0;
      const bool user_norm =
          space.kind() == SpaceKind::AnisotropicNormed && !space.lq_exponent().has_value();
      auto slope = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd g = with_gradient_scale(1.0).gradient(x);
        return user_norm ? g.norm() : space.dual_norm(g);
      };
      const Box box = support_box();
      const int n = dim();
      const int m = n == 1 ? 4001 : 201;
      double best = 0.0;
      Eigen::VectorXd best_x = anchor_;
      Eigen::VectorXd x(n);
      const int total = n == 1 ? m : m * m;
      for (int k = 0; k < total; ++k) {
        int rem = k;
        for (int i = 0; i < n; ++i) {
          x(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * (rem % m) / (m - 1.0);
          rem /= m;
        }
        if (const double s = slope(x); s > best) best = s, best_x = x;
      }
      for (double step = (box.hi(0) - box.lo(0)) / m; step > 1e-12; step *= 0.5) {
        bool improved = true;
        while (improved) {
          improved = false;
          for (int k = 0; k < 2 * n; ++k) {
            Eigen::VectorXd y = best_x;
            y(k % n) += k < n ? step : -step;
            if (const double s = slope(y); s > best) best = s, best_x = y, improved = true;
          }
        }
      }
      const double distortion = user_norm ? euclidean_to_gauge_distortion(space, true) : 1.0;
      return best * distortion * (1.0 + 1e-6);
    }
    case FunctionKind::HeisenbergPoly: {
      if (*heisenberg_lip_ >= 0.0) return *heisenberg_lip_;
      // Maximize difference quotients: random pairs across scales, then local refinement.
      const TestFunction unit = scaled(1.0 / (amplitude_ == 0.0 ? 1.0 : amplitude_));
      const Box box = support_box();
      Rng rng(2024, 0x11F);
      auto quotient = [&](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
        const double d = heisenberg::gauge(heisenberg::multiply(heisenberg::inverse(y), x));
        return d > 0.0 ? std::abs(unit.evaluate(x) - unit.evaluate(y)) / d : 0.0;
      };
      double best = 0.0;
      Eigen::Vector3d bx = anchor_, by = anchor_;
      for (int k = 0; k < 200000; ++k) {
        Eigen::Vector3d x;
        for (int i = 0; i < 3; ++i) x(i) = rng.uniform(box.lo(i), box.hi(i));
        const double scale = radius_ * std::pow(10.0, rng.uniform(-3.0, 0.3));
        Eigen::Vector3d v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.25, 0.25));
        const double g = heisenberg::gauge(v);
        if (g < 1e-3) continue;
        const Eigen::Vector3d y = heisenberg::multiply(x, heisenberg::dilate(scale / g, v));
        if (const double q = quotient(x, y); q > best) best = q, bx = x, by = y;
      }
      for (double step = 0.05 * radius_; step > 1e-9 * radius_; step *= 0.7) {
        for (int k = 0; k < 200; ++k) {
          Eigen::Vector3d x = bx, y = by;
          for (int i = 0; i < 3; ++i) {
            x(i) += step * rng.uniform(-1.0, 1.0);
            y(i) += step * rng.uniform(-1.0, 1.0);
          }
          if (const double q = quotient(x, y); q > best) best = q, bx = x, by = y;
        }
      }
      *heisenberg_lip_ = amp * best * 1.02;
      return *heisenberg_lip_;
    }
  }
  return 0.0;
}

void check_compatible(const Space& space, const TestFunction& f) {
  if (f.dim() != space.topological_dim()) {
    std::ostringstream os;
    os << "test function " << f.description() << " has dimension " << f.dim()
       << " but the space " << space.description() << " has dimension " << space.topological_dim();
    throw InputError(os.str());
  }
  const bool heis_space = space.kind() == SpaceKind::HeisenbergKoranyi;
  const bool heis_fn = f.kind() == FunctionKind::HeisenbergPoly;
  if (heis_space != heis_fn) {
    throw InputError("HeisenbergPoly functions pair exactly with the Heisenberg backend");
  }
}

double evaluate(const TestFunction& f, const PointRef& x) { return f.evaluate(x); }

TangentPairing gradient(const TestFunction& f, const PointRef& x) {
  return {Point(x), f.gradient(x)};
}

double exact_grad_norm_p(const TestFunction& f, const Space& space, double p) {
  if (!(p > 1.0)) throw InputError("exact_grad_norm_p: p must exceed 1");
  check_compatible(space, f);
  const double c = std::abs(f.amplitude() * f.gradient_scale());
  const bool weighted = space.weight() != nullptr;
  const int n = f.dim();
  quad::QuadOptions inner_opts, outer_opts;
  inner_opts.rel_tol = 1e-11;
  outer_opts.rel_tol = 1e-10;
  if (c == 0.0) return 0.0;

  if (f.kind() == FunctionKind::Hat1D) {
    if (!weighted) return 2.0 * abs_pow(c, p);
    const double a = f.anchor()(0);
    auto integrand = [&](double x) { return measure_density(space, Point::Constant(1, x)); };
    return abs_pow(c, p) * (quad::integrate(integrand, a - 1.0, a, outer_opts) +
                            quad::integrate(integrand, a, a + 1.0, outer_opts));
  }

  if (f.kind() == FunctionKind::RadialBump && !weighted) {
    const double R = f.radius();
    auto profile = [&](double r) {
      const double m = c * 4.0 * r * (R * R - r * r) / (R * R * R * R);
      return std::pow(r, n - 1) * abs_pow(m, p);
    };
    return n * unit_ball_volume_euclidean(n) * quad::integrate(profile, 0.0, R, outer_opts);
  }

  if (f.kind() == FunctionKind::HeisenbergPoly) {
    const double R = f.radius();
    auto at = [&](double rho, double phi, double t) {
      const Eigen::Vector3d z(rho * std::cos(phi), rho * std::sin(phi), t);
      return std::pow(f.gradient(heisenberg::multiply(f.anchor(), z)).norm(), p);
    };
    auto over_t = [&](double rho, double phi) {
      const double h = 0.25 * std::sqrt(std::max(0.0, std::pow(R, 4) - std::pow(rho, 4)));
      if (h == 0.0) return 0.0;
      return quad::integrate([&](double t) { return at(rho, phi, t); }, -h, h, inner_opts);
    };
    auto over_rho = [&](double phi) {
      return quad::integrate([&](double rho) { return rho * over_t(rho, phi); }, 0.0, R, inner_opts);
    };
    return quad::integrate(over_rho, 0.0, 2.0 * kPi, outer_opts);
  }

  // LinearCutoff on any 1D/2D backend, RadialBump on the weighted backend: polar quadrature
  // around the anchor with the cutoff's kink radius as a breakpoint.
  const double R = f.radius();
  auto density = [&](const Eigen::VectorXd& x) { return measure_density(space, x); };
  if (n == 1) {
    const double a = f.anchor()(0);
    double total = 0.0;
    const std::vector<double> cuts = {a - R, a - 0.5 * R, a, a + 0.5 * R, a + R};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      total += quad::integrate(
          [&](double x) {
            const Point pt = Point::Constant(1, x);
            return abs_pow(f.gradient(pt)(0), p) * density(pt);
          },
          cuts[i], cuts[i + 1], outer_opts);
    }
    return total;
  }
  if (n == 2) {
    auto radial = [&](double phi) {
      const Eigen::Vector2d e(std::cos(phi), std::sin(phi));
      auto g = [&](double r) {
        const Point pt = f.anchor() + r * e;
        return r * std::pow(f.gradient(pt).norm(), p) * density(pt);
      };
      const double kink = f.kind() == FunctionKind::LinearCutoff ? 0.5 * R : R / std::sqrt(3.0);
      return quad::integrate(g, 0.0, kink, inner_opts) + quad::integrate(g, kink, R, inner_opts);
    };
    return quad::integrate(radial, 0.0, 2.0 * kPi, outer_opts);
  }
  throw UnsupportedOperation("exact_grad_norm_p: no quadrature for this function in dimension " +
                             std::to_string(n));
}

FiniteDifferenceReport finite_difference_check(const TestFunction& f, const Space& space,
                                               const PointRef& x,
                                               const std::vector<double>& h_schedule) {
  check_compatible(space, f);
  space.check_point(x, "x");
  if (h_schedule.empty()) throw InputError("finite_difference_check: empty step schedule");
  FiniteDifferenceReport rep;
  const Eigen::VectorXd g = f.with_gradient_scale(1.0).gradient(x);
  const bool heis = space.kind() == SpaceKind::HeisenbergKoranyi;
  const int m = heis ? 2 : f.dim();
  for (double h : h_schedule) {
    if (!(h > 0.0)) throw InputError("finite_difference_check: steps must be positive");
    Eigen::VectorXd fd(m);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd step = Eigen::VectorXd::Zero(f.dim());
      step(i) = h;
      const Point xp = heis ? Point(heisenberg::multiply(x, step)) : Point(x + step);
      const Point xm = heis ? Point(heisenberg::multiply(x, -step)) : Point(x - step);
      fd(i) = (f.evaluate(xp) - f.evaluate(xm)) / (2.0 * h);
    }
    const double err = (fd - g).norm() / std::max(g.norm(), 1.0);
    rep.steps.push_back(h);
    rep.errors.push_back(err);
    rep.worst = std::max(rep.worst, err);
  }
  return rep;
}

}  // namespace bbm
