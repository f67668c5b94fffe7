#include "sulp/gig.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sulp {
namespace {

constexpr double kZeroTol = 10.0 * std::numeric_limits<double>::epsilon();

// Mode of the two-parameter density x^{lambda-1} exp(-omega/2 (x + 1/x)).
double gig_mode(double lambda, double omega) {
  if (lambda >= 1.0) return (std::sqrt((lambda - 1.0) * (lambda - 1.0) + omega * omega) + (lambda - 1.0)) / omega;
  return omega / (std::sqrt((1.0 - lambda) * (1.0 - lambda) + omega * omega) + (1.0 - lambda));
}

double ratio_no_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym = ((lambda + 1.0) + std::sqrt((lambda + 1.0) * (lambda + 1.0) + omega * omega)) / omega;
  const double um = std::exp(0.5 * (lambda + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

double ratio_shift(double lambda, double omega, Rng& rng) {
  const double t = 0.5 * (lambda - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lambda, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  // Bounding rectangle from the roots of a depressed cubic (Cardano).
  const double a = -(2.0 * (lambda + 1.0) / omega + xm);
  const double b = (2.0 * (lambda - 1.0) * xm / omega - 1.0);
  const double c = xm;
  const double p = b - a * a / 3.0;
  const double q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-q / (2.0 * std::sqrt(-(p * p * p) / 27.0)));
  const double fak = 2.0 * std::sqrt(-p / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * std::numbers::pi) - a / 3.0;
  const double uplus = (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus = (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x <= 0.0) continue;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Valid for 0 <= lambda < 1 and 0 < omega <= 1.
double concave_rejection(double lambda, double omega, Rng& rng) {
  const double xm = gig_mode(lambda, omega);
  const double x0 = omega / (1.0 - lambda);
  const double k0 = std::exp((lambda - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double area[3];
  area[0] = k0 * x0;
  double k1, k2;
  if (x0 >= 2.0 / omega) {
    k1 = 0.0;
    area[1] = 0.0;
    k2 = std::pow(x0, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    area[1] = (lambda == 0.0) ? k1 * std::log(2.0 / (omega * omega))
                              : k1 / lambda * (std::pow(2.0 / omega, lambda) - std::pow(x0, lambda));
    k2 = std::pow(2.0 / omega, lambda - 1.0);
    area[2] = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double total = area[0] + area[1] + area[2];

  for (;;) {
    double v = total * rng.uniform();
    double x;
    double hx;
    if (v <= area[0]) {
      x = x0 * v / area[0];
      hx = k0;
    } else if ((v -= area[0]) <= area[1]) {
      if (lambda == 0.0) {
        x = omega * std::exp(std::exp(omega) * v);
        hx = k1 / x;
      } else {
        x = std::pow(std::pow(x0, lambda) + (lambda / k1 * v), 1.0 / lambda);
        hx = k1 * std::pow(x, lambda - 1.0);
      }
    } else {
      v -= area[1];
      const double lo = (x0 > 2.0 / omega) ? x0 : 2.0 / omega;
      x = -2.0 / omega * std::log(std::exp(-omega / 2.0 * lo) - omega / (2.0 * k2) * v);
      hx = k2 * std::exp(-omega / 2.0 * x);
    }
    const double u = rng.uniform() * hx;
    if (std::log(u) <= (lambda - 1.0) * std::log(x) - omega / 2.0 * (x + 1.0 / x)) return x;
  }
}

}  // namespace

GigRegime gig_regime(double nu, double chi, double psi) {
  if (chi < kZeroTol && nu > 0.0) return GigRegime::GammaLimit;
  const double lambda = std::abs(nu);
  const double omega = std::sqrt(psi * std::max(chi, kGigChiFloor));
  if (lambda > 2.0 || omega > 3.0) return GigRegime::RatioShift;
  if (lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2) return GigRegime::RatioNoShift;
  return GigRegime::ConcaveRejection;
}

double sample_gig(double nu, double chi, double psi, Rng& rng) {
  if (!std::isfinite(nu) || !std::isfinite(chi) || !std::isfinite(psi) || chi < 0.0 || !(psi > 0.0))
    throw std::invalid_argument("sample_gig: invalid parameters nu=" + std::to_string(nu) +
                                " chi=" + std::to_string(chi) + " psi=" + std::to_string(psi));

  if (chi < kZeroTol && nu > 0.0) return rng.gamma(nu, 0.5 * psi);
  chi = std::max(chi, kGigChiFloor);

  const double lambda = std::abs(nu);
  const double omega = std::sqrt(psi * chi);
  const double alpha = std::sqrt(chi / psi);

  double x;
  switch (gig_regime(nu, chi, psi)) {
    case GigRegime::RatioShift:
      x = ratio_shift(lambda, omega, rng);
      break;
    case GigRegime::RatioNoShift:
      x = ratio_no_shift(lambda, omega, rng);
      break;
    default:
      x = concave_rejection(lambda, omega, rng);
      break;
  }
  // GIG(-lambda, chi, psi) is the law of 1 / GIG(lambda, psi, chi).
  return nu < 0.0 ? alpha / x : alpha * x;
}

}  // namespace sulp
