#ifndef BBM_ENERGY_HPP
#define BBM_ENERGY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bbm/core.hpp"
#include "bbm/mollifiers.hpp"
#include "bbm/spaces.hpp"
#include "bbm/testbank.hpp"

namespace bbm {

enum class EnergyMethod { MonteCarlo, Grid };

std::string to_string(EnergyMethod method);

struct EnergyEstimate {
  double value = 0.0;
  /// One-sigma Monte-Carlo error; zero for the grid method.
  double std_error = 0.0;
  std::size_t samples = 0;
  EnergyMethod method = EnergyMethod::MonteCarlo;
  /// Grid only: |I_h - I_{2h}| / 3 from the half-resolution rerun.
  double grid_uncertainty = 0.0;
};

struct McOptions {
  int shards = 16;
  int strata = 64;
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  int threads = 0;
};

/// Monte-Carlo estimate of
///   E_n(u) = int int |u(x) - u(y)|^p / d(x, y)^p rho~_n(d(x, y)) dm(x) dm(y)
/// (dm(x) dVol(y) on the weighted backend with the asymmetric pairing).
///
/// x is uniform on the chart box S containing supp u; y = x . D_r w with w drawn from the cone
/// measure of the unit sphere and r from the kernel's radial importance law, stratified in its
/// quantile. Pairs with x outside S are folded onto the swapped pair, so no truncation of X is
/// needed. Below r = 1e-7 R the difference quotient is replaced by the tangent pairing, which
/// it equals up to O(r) and which floating point cannot resolve there.
EnergyEstimate energy_mc(const Space& space, const TestFunction& f, const MollifierFamily& family,
                         double n, double p, std::size_t budget, std::uint64_t seed,
                         const McOptions& opts = {});

struct GridOptions {
  /// Outer midpoint cells per axis on the support box.
  int resolution = 256;
  /// Angular nodes for 2D backends, Gauss-Legendre on each octant; a multiple of 8 so that the
  /// corners of l^1 and l^inf balls fall on piece boundaries.
  int angles = 64;
  double rel_tol = 1e-9;
  /// Also evaluate at half resolution and annotate |I_h - I_{2h}| / 3.
  bool richardson = true;
};

/// Deterministic oracle for 1D and 2D backends: outer midpoint grid over the support box, inner
/// polar integral around each node by adaptive Gauss-Kronrod in the radial quantile variable
/// (Gauss-Legendre per angular octant in 2D). Uses the same folding of far pairs as energy_mc.
EnergyEstimate energy_grid(const Space& space, const TestFunction& f,
                           const MollifierFamily& family, double n, double p,
                           const GridOptions& opts = {});

/// Lower estimate of Lip_delta(u)(x) = sup_{y in B_delta(x)} |u(x) - u(y)| / d(x, y) from
/// `budget` samples of the ball, gradient-aligned rays, and a local refinement of the best y.
double lip_delta(const Space& space, const TestFunction& f, const PointRef& x, double delta,
                 std::size_t budget = 400, std::uint64_t seed = 11);

/// lip_delta over an increasing list of radii, made non-decreasing by a running maximum (the
/// supremum over a larger ball cannot be smaller).
std::vector<double> lip_delta_profile(const Space& space, const TestFunction& f,
                                      const PointRef& x, const std::vector<double>& deltas,
                                      std::size_t budget = 400, std::uint64_t seed = 11);

struct UpperBoundReport {
  bool holds = false;
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
  double rhs_std_error = 0.0;
  /// (rhs + 3 se) - (lhs - 3 se).
  double margin = 0.0;
  double c1 = 0.0;
  double lip_norm = 0.0;
  double u_norm = 0.0;
  /// The far-field term uses the energy-weighted tail instead of 2^p c1 / delta^p.
  bool refined = false;
};

struct UpperBoundOptions {
  std::size_t energy_budget = 200000;
  std::size_t outer_samples = 400;
  std::size_t lip_budget = 200;
  std::size_t norm_samples = 40000;
};

/// Checks E_n(u) <= c1 ||Lip_delta u||_p^p + (2^p c1 / delta^p) ||u||_p^p with 3-sigma slack on
/// both sides. Kernels whose tail is not integrable have c1 = inf; for them the far pairs are
/// bounded by 2^{p-1} N V Psi(delta) (||u||_p^p + ||u||_p^p) and c1 is taken inside B_delta.
UpperBoundReport upper_bound_check(const Space& space, const TestFunction& f,
                                   const MollifierFamily& family, double n, double p,
                                   double delta, std::uint64_t seed,
                                   const UpperBoundOptions& opts = {});

}  // namespace bbm

#endif  // BBM_ENERGY_HPP
