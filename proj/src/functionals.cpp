#include "metabound/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "metabound/error.hpp"

namespace metabound {

FunctionalSpec FunctionalSpec::chernoff(double alpha) { return {Family::ChernoffCoeff, alpha, 0.5}; }
FunctionalSpec FunctionalSpec::dtilde_rational(double q1) { return {Family::DTildeRational, 0.0, q1}; }
FunctionalSpec FunctionalSpec::dtilde_variational(double q1) { return {Family::DTildeVariational, 0.0, q1}; }
FunctionalSpec FunctionalSpec::galpha(double alpha, double q1) { return {Family::GAlpha, alpha, q1}; }

double FunctionalSpec::post_offset() const { return family == Family::DTildeRational ? 1.0 : 0.0; }

double FunctionalSpec::post_scale() const {
  switch (family) {
    case Family::DTildeRational:
      return -1.0;
    case Family::GAlpha:
      return 1.0 / alpha;
    default:
      return 1.0;
  }
}

std::string FunctionalSpec::name() const {
  switch (family) {
    case Family::ChernoffCoeff:
      return "chernoff_coeff";
    case Family::DTildeRational:
      return "dtilde_rational";
    case Family::DTildeVariational:
      return "dtilde_variational";
    case Family::GAlpha:
      return "galpha";
  }
  return "unknown";
}

void FunctionalSpec::validate() const {
  if (family == Family::ChernoffCoeff && !(alpha > 0.0 && alpha < 1.0))
    throw Error("Chernoff alpha must lie in (0, 1)");
  if (family == Family::GAlpha && !(alpha > 0.0 && std::isfinite(alpha)))
    throw Error("G_alpha requires alpha > 0");
  if (family != Family::ChernoffCoeff && !(q1 > 0.0 && q1 < 1.0)) throw Error("prior q1 must lie in (0, 1)");
}

double phi_eval(const FunctionalSpec& spec, double t) {
  if (!std::isfinite(t) || !(t > 0.0)) throw Error("phi argument must be positive and finite");
  const double q1 = spec.q1;
  const double q2 = spec.q2();
  switch (spec.family) {
    case Family::ChernoffCoeff:
      return std::pow(t, spec.alpha);
    case Family::DTildeRational:
      return 4.0 * q1 * q2 * t / (q1 * t + q2);
    case Family::DTildeVariational: {
      const double diff = q1 * t - q2;
      return diff * diff / (q1 * t + q2);
    }
    case Family::GAlpha: {
      // With mixture m = q1 t + q2 and posteriors a = q1 t / m, b = q2 / m:
      //   m ln[(1 + e^-alpha) / (e^-alpha a + e^-alpha b)]
      //   = m log1p(e^-alpha) + alpha min(q1 t, q2) - m log1p(e^{-alpha |a - b|}).
      const double alpha = spec.alpha;
      const double mix = q1 * t + q2;
      const double gap = std::abs(q1 * t - q2) / mix;
      return mix * std::log1p(std::exp(-alpha)) + alpha * std::min(q1 * t, q2) -
             mix * std::log1p(std::exp(-alpha * gap));
    }
  }
  throw Error("unknown functional family");
}

double bound_from_dphi(const FunctionalSpec& spec, double dphi) {
  return spec.post_offset() + spec.post_scale() * dphi;
}

}  // namespace metabound
