#pragma once

#include <string>

namespace metabound {

enum class Family {
  ChernoffCoeff,      // phi(t) = t^alpha
  DTildeRational,     // phi(t) = 4 q1 q2 t / (q1 t + q2),         D~ = 1 - D_phi
  DTildeVariational,  // phi(t) = (q1 t - q2)^2 / (q1 t + q2),     D~ = D_phi
  GAlpha,             // soft-min of posteriors times the mixture, G = D_phi / alpha
};

/// A functional of the form integral of phi(f1/f2) f2, together with the
/// affine map from that integral to the quantity a bound consumes:
/// bound quantity = post_offset() + post_scale() * D_phi.
struct FunctionalSpec {
  Family family = Family::DTildeRational;
  double alpha = 0.5;
  double q1 = 0.5;

  static FunctionalSpec chernoff(double alpha);
  static FunctionalSpec dtilde_rational(double q1);
  static FunctionalSpec dtilde_variational(double q1);
  static FunctionalSpec galpha(double alpha, double q1);

  double q2() const { return 1.0 - q1; }
  double post_offset() const;
  double post_scale() const;
  std::string name() const;
  void validate() const;
};

/// phi(t) for t > 0. GAlpha is evaluated with the largest exponent factored
/// out, so alpha in the hundreds is safe.
double phi_eval(const FunctionalSpec& spec, double t);

/// Maps an estimated D_phi to the bound quantity (no clamping).
double bound_from_dphi(const FunctionalSpec& spec, double dphi);

}  // namespace metabound
