#include "sulp/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sulp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Robert (1995) exponential rejection for N(0,1) truncated to [a, inf), a > 0.
double right_tail(double a, double b, Rng& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / rate;
    if (z > b) continue;
    const double d = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

double Rng::uniform() {
  // 53 random bits mapped into (0, 1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("Rng::gamma: shape and rate must be positive");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::MatrixXd Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double truncated_normal(double mean, double sd, double lower, double upper, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated_normal: sd must be positive");
  if (!(lower < upper)) throw std::invalid_argument("truncated_normal: empty interval");
  double a = (lower - mean) / sd;
  double b = (upper - mean) / sd;
  bool flip = false;
  if (b <= 0.0) {
    // Work in the right tail for precision.
    flip = true;
    const double t = a;
    a = -b;
    b = -t;
  }
  double z;
  if (a >= 0.0) {
    const double qa = 0.5 * std::erfc(a / std::sqrt(2.0));
    const double qb = std::isinf(b) ? 0.0 : 0.5 * std::erfc(b / std::sqrt(2.0));
    if (qa - qb > 1e-300 && a < 30.0) {
      const double u = rng.uniform();
      z = -normal_quantile(qb + u * (qa - qb));
      z = std::min(std::max(z, a), b);
    } else {
      z = right_tail(a, b, rng);
    }
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    z = normal_quantile(pa + rng.uniform() * (pb - pa));
    z = std::min(std::max(z, a), b);
  }
  if (flip) z = -z;
  return mean + sd * z;
}

}  // namespace sulp
