#pragma once

#include "fracquench/grid.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace fracquench::spectral {

/// Phi_n(x) = amplitude * cos(lambda x) for -Phi'' = lambda^2 Phi,
/// Phi'(0) = 0 = Phi(L). The amplitude makes int_0^L Phi_n dx = 1.
struct EigenPair {
  int n = 1;
  double lambda = 0.0;
  double amplitude = 0.0;

  double operator()(double x) const;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// (2n - 1) pi / (2L)
double eigenvalue(int n, double length);
EigenPair eigenpair(int n, double length);

/// Phi_1 = (pi / 2L) cos(pi x / 2L) sampled on the grid nodes.
std::vector<double> first_eigenfunction(const SpatialGrid& grid);

struct Moment {
  double value = 0.0;
  /// Richardson-style estimate of the quadrature error.
  double error_bound = 0.0;
};

/// Composite Simpson approximation of int_0^L u * phi1 dx.
double weighted_moment(std::span<const double> u, std::span<const double> phi1, const SpatialGrid& grid);
/// Same, with an error estimate from comparing against the coarser rule.
Moment weighted_moment_with_error(std::span<const double> u, std::span<const double> phi1,
                                  const SpatialGrid& grid);

/// Composite Simpson weights for the grid (sum to L).
std::vector<double> simpson_weights(const SpatialGrid& grid);

}  // namespace fracquench::spectral
