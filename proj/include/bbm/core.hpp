#ifndef BBM_CORE_HPP
#define BBM_CORE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bbm {

/// Chart coordinates of a point. Length equals the backend's topological dimension.
using Point = Eigen::VectorXd;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using PointRef = Eigen::Ref<const Eigen::VectorXd>;

/// Bad arguments or violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation that the selected backend does not provide (e.g. dilation of a weighted space).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Quadrature or root finding that failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimate carrying a one-sigma standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// |x|^p with exact fast paths for the integer exponents used throughout the suite, so that
/// scaling by powers of two commutes bit-for-bit with the power.
inline double abs_pow(double x, double p) {
  const double a = std::abs(x);
  if (p == 2.0) return a * a;
  if (p == 1.0) return a;
  if (p == 3.0) return a * a * a;
  if (p == 4.0) return (a * a) * (a * a);
  return std::pow(a, p);
}

/// Lebesgue volume of the Euclidean unit ball in dimension n.
inline double unit_ball_volume_euclidean(double n) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

/// SplitMix64 step; used to derive independent stream seeds from (seed, stream id).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seeded generator. Streams derived with `stream()` are decorrelated from each other.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  /// Uniform on [0, 1).
  double uniform() {
    // 53 random mantissa bits; avoids distribution-implementation differences.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bbm

#endif  // BBM_CORE_HPP
