#include "bbm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "bbm/quadrature.hpp"
#include "bbm/stats.hpp"

namespace bbm {

namespace {

// Quantiles of strongly concentrated kernels underflow to 0; below the linearization radius the
// integrand depends on r only through y = x + r w, so clamping them is exact.
constexpr double kRadiusFloor = 1e-300;

void check_energy_inputs(const Space& space, const TestFunction& f, const MollifierFamily& family,
                         double p) {
  check_compatible(space, f);
  if (!(p > 1.0)) throw InputError("energy: p must exceed 1");
  if (family.exponent_p() != p) {
    std::ostringstream os;
    os << "energy: family exponent " << family.exponent_p() << " differs from p = " << p;
    throw InputError(os.str());
  }
  if (std::abs(family.dim_N() - space.homogeneous_dim()) > 1e-12 * space.homogeneous_dim()) {
    std::ostringstream os;
    os << "energy: family dimension " << family.dim_N() << " differs from the space's "
       << space.homogeneous_dim();
    throw InputError(os.str());
  }
}

// Integrand of the folded double integral in polar coordinates around x, divided by the radial
// importance density. Shared by the Monte-Carlo and grid estimators.
class PairIntegrand {
 public:
  PairIntegrand(const Space& space, const TestFunction& f, const Kernel& kernel, double p)
      : space_(space),
        f_(f),
        exact_(f.with_gradient_scale(1.0)),
        kernel_(kernel),
        box_(f.support_box()),
        rc_(f.support_radius(space)),
        p_(p),
        r_lin_(1e-7 * f.radius()),
        weighted_(space.weight() != nullptr),
        heisenberg_(space.kind() == SpaceKind::HeisenbergKoranyi) {}

  struct Base {
    Point x;
    double fx;
    Eigen::VectorXd grad;
    double d_out;
    double d_in;
  };

  Base base(const Point& x) const {
    Base b{x, f_.evaluate(x), exact_.gradient(x), 1.0, 1.0};
    if (weighted_) {
      b.d_out = space_.outer_density(x);
      b.d_in = space_.inner_density(x);
    }
    return b;
  }

  double operator()(const Base& b, double r, const Point& w) const {
    // Stack storage for the chart point (dimension <= 3 on every backend).
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1> y;
    if (heisenberg_) {
      y = space_.compose(b.x, space_.cone_dilate(r, w));
    } else {
      y = b.x + r * w;
    }
    double q;
    if (r < r_lin_) {
      q = abs_pow(tangent_pairing(space_, {b.x, b.grad}, w), p_);
    } else {
      q = abs_pow((b.fx - f_.evaluate(y)) / r, p_);
    }
    if (q == 0.0) return 0.0;
    const bool outside = !box_.contains(y);
    double weight;
    if (weighted_) {
      weight = b.d_out * space_.inner_density(y);
      if (outside) weight += b.d_in * space_.outer_density(y);
    } else {
      weight = outside ? 2.0 : 1.0;
    }
    return q * weight / kernel_.importance_weight(r, rc_);
  }

  const Box& box() const { return box_; }
  double rc() const { return rc_; }

 private:
  const Space& space_;
  const TestFunction& f_;
  TestFunction exact_;
  const Kernel& kernel_;
  Box box_;
  double rc_;
  double p_;
  double r_lin_;
  bool weighted_;
  bool heisenberg_;
};

Point uniform_in_box(const Box& b, Rng& rng) {
  Point x(b.lo.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(b.lo(i), b.hi(i));
  return x;
}

int worker_count(int requested, int shards) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, shards);
}

// Distance along x + r w at which the ray leaves the box (Euclidean-type charts).
double exit_radius(const Box& b, const Point& x, const Point& w) {
  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (w(i) > 0.0) r = std::min(r, (b.hi(i) - x(i)) / w(i));
    if (w(i) < 0.0) r = std::min(r, (b.lo(i) - x(i)) / w(i));
  }
  return std::max(r, 0.0);
}

}  // namespace

std::string to_string(EnergyMethod method) {
  return method == EnergyMethod::Grid ? "grid" : "monte_carlo";
}

EnergyEstimate energy_mc(const Space& space, const TestFunction& f, const MollifierFamily& family,
                         double n, double p, std::size_t budget, std::uint64_t seed,
                         const McOptions& opts) {
  check_energy_inputs(space, f, family, p);
  if (budget < 10000) throw InputError("energy_mc: budget must be at least 10^4 pairs");
  if (opts.shards < 1 || opts.strata < 1) throw InputError("energy_mc: need >= 1 shard and stratum");

  const Kernel kernel = family.kernel(n);
  const PairIntegrand integrand(space, f, kernel, p);
  const double rc = integrand.rc();
  const double total = kernel.importance_total(rc);
  const double scale =
      integrand.box().volume() * space.scaling_dim() * space.unit_ball_volume() * total;

  const int shards = opts.shards;
  const int strata = opts.strata;
  const std::size_t rounds = (budget + static_cast<std::size_t>(shards) * strata - 1) /
                             (static_cast<std::size_t>(shards) * strata);
  std::vector<std::vector<RunningStats>> per_shard(shards, std::vector<RunningStats>(strata));

  auto run_shard = [&](int s) {
    Rng rng(seed, static_cast<std::uint64_t>(s));
    auto& stats = per_shard[s];
    for (std::size_t round = 0; round < rounds; ++round) {
      for (int k = 0; k < strata; ++k) {
        const auto b = integrand.base(uniform_in_box(integrand.box(), rng));
        const double r = std::max(
            kernel.importance_quantile((k + rng.uniform_open()) / strata, rc), kRadiusFloor);
        const Point w = sample_unit_sphere(space, rng);
        stats[k].push(integrand(b, r, w));
      }
    }
  };

  const int workers = worker_count(opts.threads, shards);
  if (workers == 1) {
    for (int s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (int s = t; s < shards; s += workers) run_shard(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<RunningStats> merged(strata);
  for (int s = 0; s < shards; ++s) {
    for (int k = 0; k < strata; ++k) merged[k].merge(per_shard[s][k]);
  }
  double mean = 0.0, var = 0.0;
  for (const auto& st : merged) {
    mean += st.mean();
    var += st.variance() / static_cast<double>(st.count());
  }
  EnergyEstimate e;
  e.method = EnergyMethod::MonteCarlo;
  e.value = scale * (mean / strata);
  e.std_error = scale * (std::sqrt(var) / strata);
  e.samples = rounds * static_cast<std::size_t>(shards) * strata;
  return e;
}

EnergyEstimate energy_grid(const Space& space, const TestFunction& f,
                           const MollifierFamily& family, double n, double p,
                           const GridOptions& opts) {
  check_energy_inputs(space, f, family, p);
  const int dim = space.topological_dim();
  if (dim > 2) throw UnsupportedOperation("energy_grid covers topological dimension <= 2 only");
  if (space.kind() == SpaceKind::HeisenbergKoranyi) {
    throw UnsupportedOperation("energy_grid does not cover the Heisenberg backend");
  }
  if (opts.resolution < 64) throw InputError("energy_grid: resolution must be >= 64 cells per axis");
  if (dim == 2 && (opts.angles < 8 || opts.angles % 8 != 0)) {
    throw InputError("energy_grid: angles must be a positive multiple of 8");
  }

  const Kernel kernel = family.kernel(n);
  const PairIntegrand integrand(space, f, kernel, p);
  const double rc = integrand.rc();
  const double total = kernel.importance_total(rc);
  const Box& box = integrand.box();
  const std::vector<double> kinks = dim == 1 ? f.kinks_1d() : std::vector<double>{};

  // Directions w with gauge 1 and the weights of the polar formula
  //   int F(y) dy = sum_dir weight * int_0^inf r^{N-1} F(x + r w) dr.
  std::vector<Point> dirs;
  std::vector<double> dir_weight;
  if (dim == 1) {
    for (double s : {1.0, -1.0}) {
      const Point e = Point::Constant(1, s);
      const double g = space.gauge(e);
      dirs.push_back(e / g);
      dir_weight.push_back(1.0 / g);
    }
  } else {
    // Gauss-Legendre per octant: the corners of l^1 and l^inf balls sit on octant edges.
    const int per_octant = opts.angles / 8;
    const quad::Rule rule = quad::gauss_legendre(per_octant);
    const double half = std::numbers::pi / 8.0;
    for (int oct = 0; oct < 8; ++oct) {
      const double mid = (2 * oct + 1) * half;
      for (int j = 0; j < per_octant; ++j) {
        const double phi = mid + half * rule.nodes(j);
        const Point e = Eigen::Vector2d(std::cos(phi), std::sin(phi));
        const double rho = 1.0 / space.gauge(e);
        dirs.push_back(rho * e);
        dir_weight.push_back(rho * rho * half * rule.weights(j));
      }
    }
  }

  quad::QuadOptions qopts;
  qopts.rel_tol = opts.rel_tol;
  qopts.abs_tol = 1e-15;
  qopts.max_intervals = 20000;

  auto node_inner = [&](const Point& x) {
    const auto b = integrand.base(x);
    double sum = 0.0;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const Point& w = dirs[d];
      std::vector<double> cuts = {0.0, 1.0};
      const double re = exit_radius(box, x, w);
      if (re > 0.0 && std::isfinite(re)) cuts.push_back(kernel.importance_cdf(re, rc));
      for (double k : kinks) {
        const double rk = (k - x(0)) / w(0);
        if (rk > 0.0) cuts.push_back(kernel.importance_cdf(rk, rc));
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      double ray = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        auto g = [&](double t) {
          return integrand(b, std::max(kernel.importance_quantile(t, rc), kRadiusFloor), w);
        };
        ray += quad::integrate(g, cuts[i], cuts[i + 1], qopts, "energy_grid radial integral");
      }
      sum += dir_weight[d] * ray;
    }
    return total * sum;
  };

  auto evaluate_at = [&](int res) {
    const Eigen::VectorXd h = (box.hi - box.lo) / res;
    const double cell = h.prod();
    double acc = 0.0;
    const long nodes = dim == 1 ? res : static_cast<long>(res) * res;
    for (long k = 0; k < nodes; ++k) {
      Point x(dim);
      x(0) = box.lo(0) + (k % res + 0.5) * h(0);
      if (dim == 2) x(1) = box.lo(1) + (k / res + 0.5) * h(1);
      acc += node_inner(x);
    }
    return acc * cell;
  };

  EnergyEstimate e;
  e.method = EnergyMethod::Grid;
  e.value = evaluate_at(opts.resolution);
  e.samples = dim == 1 ? opts.resolution
                       : static_cast<std::size_t>(opts.resolution) * opts.resolution;
  if (opts.richardson) {
    const double coarse = evaluate_at(opts.resolution / 2);
    e.grid_uncertainty = std::abs(e.value - coarse) / 3.0;
  }
  return e;
}

double lip_delta(const Space& space, const TestFunction& f, const PointRef& x, double delta,
                 std::size_t budget, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InputError("lip_delta: delta must be positive");
  check_compatible(space, f);
  space.check_point(x, "x");
  const Point x0 = x;
  const double fx = f.evaluate(x0);
  const double reach = delta * (1.0 - 1e-9);
  auto quotient = [&](const Point& y) {
    const double d = distance(space, x0, y);
    if (!(d > 0.0) || !(d < delta)) return -1.0;
    return std::abs(fx - f.evaluate(y)) / d;
  };

  Rng rng(seed, 0x11B);
  double best = 0.0;
  Point best_y = x0;
  auto consider = [&](const Point& y) {
    if (const double q = quotient(y); q > best) best = q, best_y = y;
  };

  // Rays along gradient-aligned and coordinate directions, on a geometric radius ladder.
  const int m = space.kind() == SpaceKind::HeisenbergKoranyi ? 2 : space.topological_dim();
  std::vector<Point> rays;
  const Eigen::VectorXd g = f.with_gradient_scale(1.0).gradient(x0);
  auto lift = [&](const Eigen::VectorXd& h) {
    Point v = Point::Zero(space.topological_dim());
    v.head(m) = h;
    return v;
  };
  if (g.norm() > 0.0) {
    rays.push_back(lift(g));
    rays.push_back(lift(-g));
  }
  for (int i = 0; i < space.topological_dim(); ++i) {
    for (double s : {1.0, -1.0}) rays.push_back(Point::Unit(space.topological_dim(), i) * s);
  }
  for (const Point& v : rays) {
    const Point w = space.cone_dilate(1.0 / space.gauge(v), v);
    for (int j = 0; j < 48; ++j) {
      consider(space.compose(x0, space.cone_dilate(reach * std::pow(0.7, j), w)));
    }
  }
  for (std::size_t k = 0; k < budget; ++k) consider(sample_ball(space, x0, reach, rng));

  // Local refinement of the best candidate inside the ball.
  for (double step = 0.1 * delta; step > 1e-9 * delta; step *= 0.6) {
    for (int k = 0; k < 8 * space.topological_dim(); ++k) {
      Point y = best_y;
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += step * rng.uniform(-1.0, 1.0);
      consider(y);
    }
  }
  return best;
}

std::vector<double> lip_delta_profile(const Space& space, const TestFunction& f,
                                      const PointRef& x, const std::vector<double>& deltas,
                                      std::size_t budget, std::uint64_t seed) {
  std::vector<double> out;
  double running = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (i > 0 && !(deltas[i] > deltas[i - 1])) {
      throw InputError("lip_delta_profile: radii must be strictly increasing");
    }
    running = std::max(running, lip_delta(space, f, x, deltas[i], budget, seed + i));
    out.push_back(running);
  }
  return out;
}

UpperBoundReport upper_bound_check(const Space& space, const TestFunction& f,
                                   const MollifierFamily& family, double n, double p,
                                   double delta, std::uint64_t seed,
                                   const UpperBoundOptions& opts) {
  check_energy_inputs(space, f, family, p);
  if (!(delta > 0.0)) throw InputError("upper_bound_check: delta must be positive");
  UpperBoundReport rep;

  const EnergyEstimate e = energy_mc(space, f, family, n, p, opts.energy_budget, seed);
  rep.lhs = e.value;
  rep.lhs_std_error = e.std_error;

  const Box s = f.support_box();
  const bool weighted = space.weight() != nullptr;
  auto d_out = [&](const Point& x) { return weighted ? space.outer_density(x) : 1.0; };
  auto d_in = [&](const Point& x) { return weighted ? space.inner_density(x) : 1.0; };
  const double theta_max = weighted ? space.weight()->theta_max : 1.0;
  const bool asym = weighted && space.pairing() == MeasurePairing::Asymmetric;
  const double sup_in = weighted && !asym ? theta_max : 1.0;
  const double sup_out = theta_max;

  // ||u||_p^p against the outer and inner measures.
  Rng rng(seed, 0xB0B);
  RunningStats u_out, u_in;
  for (std::size_t k = 0; k < opts.norm_samples; ++k) {
    const Point x = uniform_in_box(s, rng);
    const double v = abs_pow(f.evaluate(x), p) * s.volume();
    u_out.push(v * d_out(x));
    u_in.push(v * d_in(x));
  }

  // ||Lip_delta u||_p^p over the delta-neighbourhood of the support box.
  Box grown = s;
  if (space.kind() == SpaceKind::HeisenbergKoranyi) {
    const double ma = std::max(std::abs(s.lo(0)), std::abs(s.hi(0)));
    const double mb = std::max(std::abs(s.lo(1)), std::abs(s.hi(1)));
    const Eigen::Vector3d pad(delta, delta, 0.25 * delta * delta + 0.5 * (ma + mb) * delta);
    grown.lo -= pad;
    grown.hi += pad;
  } else {
    grown.lo -= delta * space.unit_ball_half_extent();
    grown.hi += delta * space.unit_ball_half_extent();
  }
  RunningStats lip;
  for (std::size_t k = 0; k < opts.outer_samples; ++k) {
    const Point x = uniform_in_box(grown, rng);
    const double l = lip_delta(space, f, x, delta, opts.lip_budget, seed + 31 * k + 1);
    lip.push(abs_pow(l, p) * d_out(x) * grown.volume());
  }
  rep.lip_norm = lip.mean();
  rep.u_norm = u_out.mean();

  const Kernel kernel = family.kernel(n);
  const double polar = space.scaling_dim() * space.unit_ball_volume();
  double far, far_se;
  if (kernel.integrable()) {
    const double mass = kernel.mass(0.0, std::numeric_limits<double>::infinity());
    rep.c1 = polar * mass * sup_in;
    const double c1_out = polar * mass * sup_out;
    const double k = std::pow(2.0, p - 1.0) / std::pow(delta, p);
    far = k * (rep.c1 * u_out.mean() + c1_out * u_in.mean());
    far_se = k * std::hypot(rep.c1 * u_out.std_error(), c1_out * u_in.std_error());
  } else {
    rep.refined = true;
    rep.c1 = polar * kernel.mass(0.0, delta) * sup_in;
    const double tail = polar * kernel.energy_tail(delta);
    const double k = std::pow(2.0, p - 1.0) * tail;
    far = k * (sup_in * u_out.mean() + sup_out * u_in.mean());
    far_se = k * std::hypot(sup_in * u_out.std_error(), sup_out * u_in.std_error());
  }
  rep.rhs = rep.c1 * rep.lip_norm + far;
  rep.rhs_std_error = std::hypot(rep.c1 * lip.std_error(), far_se);
  rep.margin = (rep.rhs + 3.0 * rep.rhs_std_error) - (rep.lhs - 3.0 * rep.lhs_std_error);
  rep.holds = rep.margin >= 0.0;
  return rep;
}

}  // namespace bbm
