#pragma once

#include <stdexcept>
#include <string>

namespace fracquench::mlf {

/// Arguments of the two-parameter Mittag-Leffler function E_{alpha,beta}(z).
struct MLQuery {
  double alpha = 1.0;  // (0, 2)
  double beta = 1.0;   // > 0
  double z = 0.0;      // finite
};

enum class Regime { Series, Contour, Asymptotic };

const char* regime_name(Regime r);

/// Raised when an evaluation cannot reach the requested accuracy. Carries
/// the best partial value and the regime that produced it.
class MlfError : public std::runtime_error {
 public:
  MlfError(const std::string& what, double partial, Regime regime)
      : std::runtime_error(what), partial_(partial), regime_(regime) {}

  double partial() const { return partial_; }
  Regime regime() const { return regime_; }

 private:
  double partial_;
  Regime regime_;
};

/// Internal error of the weighted integral: quadrature and closed form
/// disagree, which means one of the regimes is broken.
class ConsistencyError : public std::runtime_error {
 public:
  ConsistencyError(const std::string& what, double quadrature, double closed)
      : std::runtime_error(what), quadrature_(quadrature), closed_(closed) {}

  double quadrature() const { return quadrature_; }
  double closed_form() const { return closed_; }

 private:
  double quadrature_;
  double closed_;
};

/// 1/Gamma(x) for any real x; zero at the poles 0, -1, -2, ...
double rgamma(double x);

/// Regime the evaluator picks for q. Exposed for diagnostics and tests.
Regime select_regime(const MLQuery& q);

/// E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta) for real z.
///
/// Three regimes are used internally: the power series where it has no
/// damaging cancellation, an optimally truncated asymptotic expansion when
/// |z|^{1/alpha} is large, and a Hankel-type contour integral in between.
/// Positive arguments whose value exceeds the double range return +inf.
///
/// rel_tol must lie in (0, 1e-3]; the internal target is tighter than
/// 1e-12 so any rel_tol >= 1e-10 is met.
double mittag_leffler(const MLQuery& q, double rel_tol = 1e-10);

/// Same evaluation with an explicit regime, bypassing the selector. Used to
/// check continuity across regime boundaries.
double mittag_leffler_in(Regime regime, const MLQuery& q);

/// \int_0^t tau^{alpha-1} E_{alpha,alpha}(a tau^alpha) dtau.
///
/// Evaluated twice: by adaptive quadrature after the substitution
/// s = tau^alpha (which removes the endpoint singularity) and by the closed
/// form t^alpha E_{alpha,alpha+1}(a t^alpha). Returns the closed form and
/// throws ConsistencyError if the two differ by more than 10 * rel_tol.
double ml_weighted_integral(double alpha, double a, double t, double rel_tol = 1e-10);

}  // namespace fracquench::mlf
