#pragma once

namespace iotra {

/// Regularized incomplete beta function I_x(a, b) for a > 0, b > 0 and
/// x in [0, 1]. Continued fraction (modified Lentz) evaluated on whichever
/// side of the mean converges fastest.
double incomplete_beta(double a, double b, double x);

/// Solves I_x(a, b) = q for x by bisection on [0, 1]; the returned point is
/// within `tolerance` of the root.
double incomplete_beta_inverse(double a, double b, double q, double tolerance = 1e-10);

}  // namespace iotra
