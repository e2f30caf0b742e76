#pragma once

// Extended-precision power-series evaluation of E_{alpha,beta}(z), used as an
// independent oracle for moderate arguments (no regime switching, no
// contour integrals). 50 decimal digits absorb the cancellation of the
// alternating series as long as |z|^{1/alpha} stays below ~60.

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace fracquench::testing {

using Real50 = boost::multiprecision::cpp_bin_float_50;

inline double ml_series_oracle(double alpha, double beta, double z, int terms = 200) {
  Real50 sum = 0;
  Real50 power = 1;
  const Real50 a(alpha);
  const Real50 b(beta);
  const Real50 x(z);
  for (int k = 0; k < terms; ++k) {
    sum += power / boost::multiprecision::tgamma(a * k + b);
    power *= x;
  }
  return static_cast<double>(sum);
}

}  // namespace fracquench::testing
