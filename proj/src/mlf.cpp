#include "fracquench/mlf.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <algorithm>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace fracquench::mlf {

namespace {

using cplx = std::complex<double>;
using std::numbers::pi;

// Effective scale of the argument: the series peaks near |z|^{1/alpha}.
constexpr double kSeriesNegativeLimit = 3.0;   // cancellation <= e^3 ulps
constexpr double kSeriesPositiveLimit = 50.0;  // positive terms, no cancellation
constexpr double kAsymptoticLimit = 40.0;      // remainder ~ e^{-40}
constexpr double kInternalTol = 1e-13;
constexpr int kSeriesBudget = 200000;

void check_query(const MLQuery& q) {
  if (!(q.alpha > 0.0 && q.alpha < 2.0))
    throw std::invalid_argument("mittag_leffler: alpha must lie in (0, 2)");
  if (!(q.beta > 0.0)) throw std::invalid_argument("mittag_leffler: beta must be > 0");
  if (!std::isfinite(q.z)) throw std::invalid_argument("mittag_leffler: z must be finite");
}

void check_tol(double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol <= 1e-3))
    throw std::invalid_argument("mittag_leffler: rel_tol must lie in (0, 1e-3]");
}

double scale_of(const MLQuery& q) { return std::pow(std::abs(q.z), 1.0 / q.alpha); }

// log|Gamma(x)| without the sign; only used for x > 0.
double log_gamma(double x) { return std::lgamma(x); }

double series(const MLQuery& q) {
  const double z = q.z;
  if (z == 0.0) return rgamma(q.beta);

  const double log_abs_z = std::log(std::abs(z));
  const double peak = scale_of(q);
  double power = 1.0;
  double sum = 0.0;
  double abs_sum = 0.0;
  for (int k = 0; k < kSeriesBudget; ++k) {
    const double arg = q.alpha * k + q.beta;
    double term;
    if (std::abs(power) < 1e300 && arg < 170.0) {
      term = power * rgamma(arg);
    } else {
      const double sign = (z < 0.0 && (k % 2 == 1)) ? -1.0 : 1.0;
      term = sign * std::exp(k * log_abs_z - log_gamma(arg));
    }
    sum += term;
    abs_sum += std::abs(term);
    // Terms decay monotonically once alpha k + beta exceeds the peak.
    const bool past_peak = arg > 2.0 && peak < arg;
    if (past_peak && std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
    if (past_peak && abs_sum > 0.0 && std::abs(term) <= 1e-300) return sum;
    power *= z;
  }
  throw MlfError("mittag_leffler: power series did not converge", sum, Regime::Series);
}

// -sum_{k>=1} z^{-k} / Gamma(beta - alpha k), optimally truncated. The
// smallest term envelope seen is the truncation error estimate.
double algebraic_tail(const MLQuery& q, double& min_envelope) {
  const double inv = 1.0 / q.z;
  const double log_inv = std::log(std::abs(inv));
  double power = 1.0;
  double sum = 0.0;
  min_envelope = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 10000; ++k) {
    // |1/Gamma(beta - alpha k)| <= Gamma(1 - beta + alpha k) / pi.
    const double g_arg = 1.0 - q.beta + q.alpha * k;
    const double envelope = g_arg > 0.0 ? std::exp(k * log_inv + log_gamma(g_arg)) / pi
                                        : std::abs(power * inv * rgamma(q.beta - q.alpha * k));
    if (g_arg > 1.0 && envelope > min_envelope) break;  // divergent from here on
    min_envelope = std::min(min_envelope, envelope);
    power *= inv;
    sum -= power * rgamma(q.beta - q.alpha * k);
    if (envelope <= 1e-18 * std::abs(sum) || envelope < 1e-300) break;
  }
  return sum;
}

// Exponential contributions (1/alpha) t^{1-beta} e^{t} over the roots
// t^alpha = z with |arg z + 2 pi m| < alpha pi.
double exponential_part(const MLQuery& q) {
  const double x = scale_of(q);
  if (q.z > 0.0) {
    // Evaluate in log space so only a genuinely out-of-range value overflows.
    return std::exp(x + (1.0 - q.beta) * std::log(x) - std::log(q.alpha));
  }
  if (q.alpha <= 1.0) return 0.0;
  const double theta = pi / q.alpha;
  const cplx t = std::polar(x, theta);
  const cplx factor = std::polar(std::pow(x, 1.0 - q.beta), (1.0 - q.beta) * theta);
  return 2.0 / q.alpha * (factor * std::exp(t)).real();
}

double asymptotic(const MLQuery& q, bool& ok) {
  double min_envelope = 0.0;
  const double tail = algebraic_tail(q, min_envelope);
  const double value = exponential_part(q) + tail;
  ok = min_envelope <= kInternalTol * std::abs(value);
  return value;
}

double contour_angle(double alpha) {
  if (alpha < 1.0) return std::min(alpha * pi, 0.8 * pi);
  return alpha * pi / 2.0 + 0.6 * (pi - alpha * pi / 2.0);
}

struct ContourResult {
  double value;
  double error;
};

// Hankel-type contour: rays arg zeta = +-mu for |zeta| >= eps and the arc
// |zeta| = eps. Real z, so both rays and both arc halves are conjugate.
ContourResult contour(const MLQuery& q) {
  using boost::math::quadrature::gauss_kronrod;
  const double alpha = q.alpha;
  const double z = q.z;
  const double mu = contour_angle(alpha);
  const double inv_alpha = 1.0 / alpha;
  const double expo = (1.0 - q.beta) / alpha;
  const double eps = (z > 0.0) ? 0.5 * z : 1.0;

  auto kernel = [&](cplx zeta, double modulus, double arg) {
    const cplx root = std::polar(std::pow(modulus, inv_alpha), arg * inv_alpha);
    const cplx power = std::polar(std::pow(modulus, expo), arg * expo);
    return std::exp(root) * power / (zeta - z);
  };

  const cplx dir = std::polar(1.0, mu);
  auto ray = [&](double r) {
    const cplx zeta = r * dir;
    return (kernel(zeta, r, mu) * dir).imag();
  };
  auto arc = [&](double phi) {
    const cplx e = std::polar(1.0, phi);
    return (kernel(eps * e, eps, phi) * e).real();
  };

  // Cut the ray where exp(r^{1/alpha} cos(mu/alpha)) is below e^{-50}.
  const double decay = -std::cos(mu / alpha);
  const double r_max = std::max(2.0 * eps, std::pow(50.0 / decay, alpha));

  double ray_sum = 0.0;
  double ray_err = 0.0;
  double ray_l1 = 0.0;
  // Breakpoints: the near-pole radius |z| and a geometric ladder.
  std::vector<double> cuts{eps};
  const double near = std::abs(z);
  for (double c = 2.0 * eps; c < r_max; c *= 2.0) cuts.push_back(c);
  if (near > eps && near < r_max) cuts.push_back(near);
  cuts.push_back(r_max);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double err = 0.0;
    double l1 = 0.0;
    ray_sum += gauss_kronrod<double, 31>::integrate(ray, cuts[i], cuts[i + 1], 8, 1e-14, &err, &l1);
    ray_err += err;
    ray_l1 += l1;
  }

  double arc_err = 0.0;
  double arc_l1 = 0.0;
  const double arc_sum =
      gauss_kronrod<double, 31>::integrate(arc, 0.0, mu, 8, 1e-14, &arc_err, &arc_l1);

  double value = ray_sum / (pi * alpha) + eps * arc_sum / (pi * alpha);
  double error = ray_err / (pi * alpha) + eps * arc_err / (pi * alpha);
  // Roundoff floor of the cancelling integrals.
  error += 4.0 * std::numeric_limits<double>::epsilon() * (ray_l1 + eps * arc_l1) / (pi * alpha);

  if (z > eps) value += std::exp(std::pow(z, inv_alpha)) * std::pow(z, expo) / alpha;
  return {value, error};
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Series: return "series";
    case Regime::Contour: return "contour";
    case Regime::Asymptotic: return "asymptotic";
  }
  return "unknown";
}

double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x < 170.0) return 1.0 / std::tgamma(x);
  return std::exp(-std::lgamma(x));
}

Regime select_regime(const MLQuery& q) {
  check_query(q);
  if (q.z == 0.0) return Regime::Series;
  const double x = scale_of(q);
  if (q.z > 0.0) return x <= kSeriesPositiveLimit ? Regime::Series : Regime::Asymptotic;
  if (x <= kSeriesNegativeLimit) return Regime::Series;
  if (q.alpha != 1.0 && x >= kAsymptoticLimit) return Regime::Asymptotic;
  return Regime::Contour;
}

double mittag_leffler_in(Regime regime, const MLQuery& q) {
  check_query(q);
  switch (regime) {
    case Regime::Series: return series(q);
    case Regime::Contour: return contour(q).value;
    case Regime::Asymptotic: {
      bool ok = false;
      return asymptotic(q, ok);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double mittag_leffler(const MLQuery& q, double rel_tol) {
  check_tol(rel_tol);
  check_query(q);

  // Closed forms on the exponential line.
  if (q.alpha == 1.0 && q.beta == 1.0) return std::exp(q.z);
  if (q.alpha == 1.0 && q.beta == 2.0) return q.z == 0.0 ? 1.0 : std::expm1(q.z) / q.z;

  Regime regime = select_regime(q);
  if (regime == Regime::Series) return series(q);
  if (regime == Regime::Asymptotic) {
    bool ok = false;
    const double v = asymptotic(q, ok);
    if (ok) return v;
    regime = Regime::Contour;
  }

  const ContourResult r = contour(q);
  if (!(r.error <= rel_tol * std::abs(r.value)) && !(r.error < 1e-300)) {
    std::ostringstream os;
    os << "mittag_leffler: contour quadrature reached only " << r.error / std::abs(r.value)
       << " relative accuracy at alpha=" << q.alpha << " beta=" << q.beta << " z=" << q.z;
    throw MlfError(os.str(), r.value, Regime::Contour);
  }
  return r.value;
}

double ml_weighted_integral(double alpha, double a, double t, double rel_tol) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("ml_weighted_integral: alpha must lie in (0, 1]");
  if (!(t >= 0.0)) throw std::invalid_argument("ml_weighted_integral: t must be >= 0");
  check_tol(rel_tol);
  if (t == 0.0) return 0.0;

  const double s_max = std::pow(t, alpha);
  const double closed = s_max * mittag_leffler({alpha, alpha + 1.0, a * s_max}, rel_tol);

  // tau = s^{1/alpha} turns tau^{alpha-1} dtau into ds / alpha.
  auto integrand = [&](double s) { return mittag_leffler({alpha, alpha, a * s}, rel_tol); };
  double err = 0.0;
  const double quad =
      gauss_kronrod<double, 15>::integrate(integrand, 0.0, s_max, 15, rel_tol * 0.1, &err) / alpha;

  const double scale = std::max(std::abs(closed), std::numeric_limits<double>::min());
  if (std::abs(quad - closed) > 10.0 * rel_tol * scale) {
    std::ostringstream os;
    os << "ml_weighted_integral: quadrature " << quad << " and closed form " << closed
       << " disagree (alpha=" << alpha << ", a=" << a << ", t=" << t << ")";
    throw ConsistencyError(os.str(), quad, closed);
  }
  return closed;
}

}  // namespace fracquench::mlf
