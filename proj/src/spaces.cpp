#include "bbm/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bbm/stats.hpp"

namespace bbm {

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Euclidean: return "euclidean";
    case SpaceKind::AnisotropicNormed: return "anisotropic";
    case SpaceKind::WeightedEuclidean: return "weighted";
    case SpaceKind::HeisenbergKoranyi: return "heisenberg";
  }
  return "unknown";
}

namespace normed {

double lq_unit_ball_volume(int n, double q) {
  if (std::isinf(q)) return std::pow(2.0, n);
  return std::pow(2.0 * std::tgamma(1.0 + 1.0 / q), n) / std::tgamma(1.0 + n / q);
}

}  // namespace normed

namespace {

Eigen::VectorXd gaussian_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    // Box–Muller on our own uniform stream keeps results independent of <random> internals.
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform();
    v(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return v;
}

// sup_{v != 0} g·v / norm(v) by random directions followed by a shrinking local search.
double probe_dual_norm(const NormFunction& norm, const Eigen::VectorXd& g, std::uint64_t seed) {
  const int n = static_cast<int>(g.size());
  if (g.isZero(0.0)) return 0.0;
  Rng rng(seed, 0xD0A1);
  auto ratio = [&](const Eigen::VectorXd& v) { return g.dot(v) / norm(v); };
  Eigen::VectorXd best = g;
  double best_val = ratio(best);
  for (int i = 0; i < n; ++i) {
    for (double s : {1.0, -1.0}) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(i) = s;
      if (const double r = ratio(e); r > best_val) best_val = r, best = e;
    }
  }
  for (int k = 0; k < 4000; ++k) {
    Eigen::VectorXd v = gaussian_vector(rng, n);
    if (const double r = ratio(v); r > best_val) best_val = r, best = v;
  }
  best /= best.norm();
  for (double step = 0.25; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int i = 0; i < n; ++i) {
        for (double s : {step, -step}) {
          Eigen::VectorXd v = best;
          v(i) += s;
          if (v.isZero(0.0)) continue;
          if (const double r = ratio(v); r > best_val) {
            best_val = r;
            best = v / v.norm();
            improved = true;
          }
        }
      }
    }
  }
  return best_val;
}

void probe_norm_axioms(const NormFunction& norm, int dim, std::uint64_t seed) {
  Rng rng(seed, 0xA810);
  for (int k = 0; k < 1000; ++k) {
    const Eigen::VectorXd u = gaussian_vector(rng, dim);
    const Eigen::VectorXd v = gaussian_vector(rng, dim);
    const double nu = norm(u), nv = norm(v);
    if (!(nu > 0.0) || !(nv > 0.0) || !std::isfinite(nu) || !std::isfinite(nv)) {
      throw InputError("user norm is not positive and finite on a nonzero vector");
    }
    const double r = std::exp(rng.uniform(-3.0, 3.0));
    if (std::abs(norm(r * u) - r * nu) > 1e-10 * r * nu) {
      throw InputError("user norm fails positive 1-homogeneity probe");
    }
    if (std::abs(norm(-u) - nu) > 1e-12 * nu) {
      throw InputError("user norm is not symmetric, so it does not induce a metric");
    }
    if (norm(u + v) > nu + nv + 1e-12 * (nu + nv)) {
      throw InputError("user norm fails triangle-inequality probe");
    }
  }
}

}  // namespace

Space Space::euclidean(int dim) {
  if (dim < 1) throw InputError("euclidean space needs dimension >= 1");
  Space s(SpaceKind::Euclidean, dim);
  s.q_ = 2.0;
  s.half_extent_ = Eigen::VectorXd::Ones(dim);
  s.unit_ball_volume_ = unit_ball_volume_euclidean(dim);
  return s;
}

Space Space::lq_normed(int dim, double q) {
  if (dim < 1) throw InputError("normed space needs dimension >= 1");
  if (!(q >= 1.0)) throw InputError("l^q exponent must lie in [1, inf]");
  Space s(SpaceKind::AnisotropicNormed, dim);
  s.q_ = q;
  s.half_extent_ = Eigen::VectorXd::Ones(dim);
  s.unit_ball_volume_ = normed::lq_unit_ball_volume(dim, q);
  std::ostringstream os;
  os << "l^" << (std::isinf(q) ? std::string("inf") : std::to_string(q));
  s.norm_description_ = os.str();
  return s;
}

Space Space::normed(int dim, NormFunction norm, std::string description, std::uint64_t probe_seed) {
  if (dim < 1) throw InputError("normed space needs dimension >= 1");
  if (!norm) throw InputError("user norm evaluator is empty");
  probe_norm_axioms(norm, dim, probe_seed);
  Space s(SpaceKind::AnisotropicNormed, dim);
  s.user_norm_ = std::move(norm);
  s.norm_description_ = std::move(description);
  s.half_extent_.resize(dim);
  for (int i = 0; i < dim; ++i) {
    // sup of |v_i| over the unit ball is the dual norm of e_i; pad for the probe's resolution.
    s.half_extent_(i) = 1.02 * probe_dual_norm(s.user_norm_, Eigen::VectorXd::Unit(dim, i), probe_seed + i);
  }
  // Unit-ball volume by seeded Monte-Carlo over the bounding box.
  Rng rng(probe_seed, 0xB0A1);
  const std::size_t samples = 2'000'000;
  std::size_t hits = 0;
  Eigen::VectorXd v(dim);
  for (std::size_t k = 0; k < samples; ++k) {
    for (int i = 0; i < dim; ++i) v(i) = rng.uniform(-s.half_extent_(i), s.half_extent_(i));
    if (s.user_norm_(v) < 1.0) ++hits;
  }
  s.unit_ball_volume_ = s.half_extent_.prod() * std::pow(2.0, dim) * static_cast<double>(hits) /
                        static_cast<double>(samples);
  return s;
}

Space Space::weighted(int dim, WeightSpec weight, MeasurePairing pairing) {
  if (dim < 1) throw InputError("weighted space needs dimension >= 1");
  if (!weight.theta) throw InputError("weight density evaluator is empty");
  if (!(weight.theta_min > 0.0)) throw InputError("weight needs a strictly positive lower bound");
  if (!(weight.theta_max >= weight.theta_min)) throw InputError("weight upper bound below lower bound");
  Space s(SpaceKind::WeightedEuclidean, dim);
  s.q_ = 2.0;
  s.pairing_ = pairing;
  s.weight_ = std::make_shared<const WeightSpec>(std::move(weight));
  s.half_extent_ = Eigen::VectorXd::Ones(dim);
  s.unit_ball_volume_ = unit_ball_volume_euclidean(dim);
  return s;
}

Space Space::heisenberg() {
  Space s(SpaceKind::HeisenbergKoranyi, 3);
  s.homogeneous_dim_ = 4.0;
  s.scaling_dim_ = 4.0;
  s.half_extent_ = Eigen::Vector3d(1.0, 1.0, 0.25);
  s.unit_ball_volume_ = heisenberg::kUnitBallVolume;
  return s;
}

std::string Space::description() const {
  std::ostringstream os;
  os << to_string(kind_) << "(dim=" << dim_ << ", N=" << homogeneous_dim_;
  if (kind_ == SpaceKind::AnisotropicNormed) os << ", norm=" << norm_description_;
  if (weight_) {
    os << ", weight=" << weight_->description << ", pairing="
       << (pairing_ == MeasurePairing::Asymmetric ? "asymmetric" : "symmetric");
  }
  os << ")";
  return os.str();
}

void Space::check_point(const PointRef& x, const char* what) const {
  if (x.size() != dim_) {
    std::ostringstream os;
    os << what << " has " << x.size() << " coordinates but the " << to_string(kind_)
       << " backend has dimension " << dim_;
    throw InputError(os.str());
  }
  if (!x.allFinite()) throw InputError(std::string(what) + " has non-finite coordinates");
}

double Space::gauge(const PointRef& v) const {
  switch (kind_) {
    case SpaceKind::HeisenbergKoranyi: return heisenberg::gauge(v);
    case SpaceKind::AnisotropicNormed:
      if (user_norm_) return user_norm_(v);
      return normed::lq_norm(v, *q_);
    default: return v.norm();
  }
}

Point Space::compose(const PointRef& x, const PointRef& z) const {
  if (kind_ == SpaceKind::HeisenbergKoranyi) return heisenberg::multiply(x, z);
  return x + z;
}

Point Space::inverse(const PointRef& z) const { return -z; }

Point Space::cone_dilate(double r, const PointRef& v) const {
  if (kind_ == SpaceKind::HeisenbergKoranyi) return heisenberg::dilate(r, v);
  return r * v;
}

double Space::dual_norm(const PointRef& g) const {
  switch (kind_) {
    case SpaceKind::HeisenbergKoranyi: return g.head<2>().norm();
    case SpaceKind::AnisotropicNormed: {
      if (user_norm_) return probe_dual_norm(user_norm_, g, 11);
      const double q = *q_;
      if (std::isinf(q)) return g.lpNorm<1>();
      if (q == 1.0) return g.lpNorm<Eigen::Infinity>();
      return normed::lq_norm(g, q / (q - 1.0));
    }
    default: return g.norm();
  }
}

double Space::outer_density(const PointRef& x) const { return measure_density(*this, x); }

double Space::inner_density(const PointRef& y) const {
  if (kind_ == SpaceKind::WeightedEuclidean && pairing_ == MeasurePairing::Asymmetric) return 1.0;
  return measure_density(*this, y);
}

double distance(const Space& space, const PointRef& x, const PointRef& y) {
  space.check_point(x, "x");
  space.check_point(y, "y");
  if (space.kind() == SpaceKind::HeisenbergKoranyi) {
    return heisenberg::gauge(heisenberg::multiply(heisenberg::inverse(y), x));
  }
  return space.gauge(x - y);
}

double measure_density(const Space& space, const PointRef& x) {
  const WeightSpec* w = space.weight();
  if (!w) return 1.0;
  const double theta = w->theta(x);
  if (!(theta >= w->theta_min) || theta > w->theta_max) {
    std::ostringstream os;
    os << "weight density " << theta << " violates its declared bounds [" << w->theta_min << ", "
       << w->theta_max << "]";
    throw InputError(os.str());
  }
  return theta;
}

Point dilate(const Space& space, double r, const PointRef& v) {
  if (!space.is_homogeneous()) {
    throw UnsupportedOperation("dilation is not defined on the weighted backend");
  }
  if (!(r > 0.0)) throw InputError("dilation factor must be positive");
  space.check_point(v, "v");
  return space.cone_dilate(r, v);
}

Point sample_ball(const Space& space, const PointRef& center, double radius, Rng& rng) {
  if (!(radius > 0.0)) throw InputError("sample_ball radius must be positive");
  space.check_point(center, "center");
  const int n = space.topological_dim();
  const Eigen::VectorXd box = space.cone_dilate(radius, space.unit_ball_half_extent()).cwiseAbs();
  const WeightSpec* w = space.weight();
  Eigen::VectorXd z(n);
  while (true) {
    for (int i = 0; i < n; ++i) z(i) = rng.uniform(-box(i), box(i));
    if (!(space.gauge(z) < radius)) continue;
    Point y = space.compose(center, z);
    if (w && rng.uniform() * w->theta_max >= measure_density(space, y)) continue;
    return y;
  }
}

Point sample_ball(const Space& space, const PointRef& center, double radius, std::uint64_t seed) {
  Rng rng(seed);
  return sample_ball(space, center, radius, rng);
}

Point sample_unit_sphere(const Space& space, Rng& rng) {
  const int n = space.topological_dim();
  const Eigen::VectorXd& box = space.unit_ball_half_extent();
  Eigen::VectorXd z(n);
  while (true) {
    for (int i = 0; i < n; ++i) z(i) = rng.uniform(-box(i), box(i));
    const double g = space.gauge(z);
    if (g < 1.0 && g > 1e-6) return space.cone_dilate(1.0 / g, z);
  }
}

Estimate ball_volume(const Space& space, const PointRef& center, double radius, std::size_t budget,
                     std::uint64_t seed) {
  if (!(radius > 0.0)) throw InputError("ball_volume radius must be positive");
  if (budget < 1000) throw InputError("ball_volume budget must be at least 10^3 samples");
  space.check_point(center, "center");
  const double n = space.scaling_dim();
  const bool closed_form = space.kind() == SpaceKind::Euclidean ||
                           (space.kind() == SpaceKind::AnisotropicNormed && space.lq_exponent());
  if (closed_form) {
    return {space.unit_ball_volume() * std::pow(radius, n), 0.0, 0};
  }
  const int dim = space.topological_dim();
  const Eigen::VectorXd box = space.cone_dilate(radius, space.unit_ball_half_extent()).cwiseAbs();
  const double box_volume = (2.0 * box).prod();
  Rng rng(seed, 0xBA11);
  RunningStats stats;
  Eigen::VectorXd z(dim);
  for (std::size_t k = 0; k < budget; ++k) {
    for (int i = 0; i < dim; ++i) z(i) = rng.uniform(-box(i), box(i));
    double v = 0.0;
    if (space.gauge(z) < radius) v = measure_density(space, space.compose(center, z));
    stats.push(v);
  }
  return {box_volume * stats.mean(), box_volume * stats.std_error(), budget};
}

DensityEstimate density_theta(const Space& space, const PointRef& x,
                              const std::vector<double>& delta_schedule,
                              std::size_t budget_per_radius, std::uint64_t seed) {
  if (delta_schedule.size() < 4) throw InputError("density_theta needs at least four radii");
  for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
    if (!(delta_schedule[i] > 0.0)) throw InputError("density_theta radii must be positive");
    if (i > 0 && !(delta_schedule[i] < delta_schedule[i - 1])) {
      throw InputError("density_theta schedule must be strictly decreasing");
    }
  }
  if (delta_schedule.front() / delta_schedule.back() < 100.0 * (1.0 - 1e-12)) {
    throw InputError("density_theta schedule must span at least two decades");
  }
  space.check_point(x, "x");
  DensityEstimate out;
  const double n = space.homogeneous_dim();
  std::vector<double> sigma;
  for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
    const double d = delta_schedule[i];
    const Estimate m = ball_volume(space, x, d, budget_per_radius, seed + 977 * i);
    const double scale = std::pow(d, n);
    out.radii.push_back(d);
    out.ratios.push_back(m.value / scale);
    out.ratio_errors.push_back(m.std_error / scale);
  }
  const LinearFit fit = weighted_linear_fit(out.radii, out.ratios, out.ratio_errors);
  out.value = fit.intercept;
  out.uncertainty = fit.intercept_error;
  switch (space.kind()) {
    case SpaceKind::Euclidean:
    case SpaceKind::HeisenbergKoranyi: out.analytic = space.unit_ball_volume(); break;
    case SpaceKind::AnisotropicNormed:
      if (space.lq_exponent()) out.analytic = space.unit_ball_volume();
      break;
    case SpaceKind::WeightedEuclidean:
      out.analytic = space.unit_ball_volume() * measure_density(space, x);
      break;
  }
  return out;
}

double tangent_pairing(const Space& space, const TangentPairing& pairing, const PointRef& v) {
  if (space.kind() == SpaceKind::HeisenbergKoranyi) {
    if (pairing.gradient_data.size() != 2) {
      throw InputError("Heisenberg pairing needs the horizontal pair (Xf, Yf)");
    }
    return pairing.gradient_data(0) * v(0) + pairing.gradient_data(1) * v(1);
  }
  if (pairing.gradient_data.size() != v.size()) {
    throw InputError("gradient and cone vector have different lengths");
  }
  return pairing.gradient_data.dot(v);
}

}  // namespace bbm
