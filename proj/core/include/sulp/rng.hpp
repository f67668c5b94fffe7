#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sulp {

/// Mix a base seed with a list of keys into an independent stream seed.
/// Used so that replications, cells and chains draw from substreams that do
/// not depend on scheduling order.
std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// Random source used throughout the library. Wraps a 64-bit Mersenne twister
/// with the handful of distributions the samplers need.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : engine_(substream_seed(seed, keys)) {}

  Engine& engine() { return engine_; }

  double normal() { return normal_(engine_); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Gamma with shape and *rate*.
  double gamma(double shape, double rate);
  /// Inverse gamma with shape and scale (density proportional to x^{-a-1} exp(-b/x)).
  double inverse_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }
  double chi_square(double dof) { return gamma(0.5 * dof, 0.5); }
  std::uint64_t uniform_index(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  Engine engine_;
  std::normal_distribution<double> normal_;
};

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

/// Draw from N(mean, sd^2) truncated to [lower, upper]. Uses inverse-CDF
/// sampling on whichever tail keeps precision, and exponential rejection far
/// out in a tail.
double truncated_normal(double mean, double sd, double lower, double upper, Rng& rng);

}  // namespace sulp
