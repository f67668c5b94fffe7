#pragma once

#include "sulp/rng.hpp"

namespace sulp {

/// Which generator branch sample_gig() uses for given parameters.
enum class GigRegime {
  GammaLimit,        // chi ~ 0: Gamma / inverse-Gamma limits
  RatioShift,        // ratio-of-uniforms with mode shift (large nu or omega)
  RatioNoShift,      // ratio-of-uniforms without mode shift
  ConcaveRejection,  // rejection from a three-piece hat (small omega, 0 <= |nu| < 1)
};

GigRegime gig_regime(double nu, double chi, double psi);

/// Draw from the generalized inverse Gaussian GIG(nu, chi, psi) with density
/// proportional to x^{nu-1} exp(-(chi/x + psi x)/2), x > 0.
///
/// Follows Hoermann & Leydold (2014). When chi underflows the draw is taken
/// from the Gamma(nu, psi/2) limit (nu > 0); for nu <= 0 chi is floored at
/// `kGigChiFloor` so the density stays proper.
double sample_gig(double nu, double chi, double psi, Rng& rng);

inline constexpr double kGigChiFloor = 1e-14;

}  // namespace sulp
