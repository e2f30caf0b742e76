#include "fracquench/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fracquench::spectral {

double EigenPair::operator()(double x) const { return amplitude * std::cos(lambda * x); }

double eigenvalue(int n, double length) {
  if (n < 1) throw std::invalid_argument("eigenvalue: n must be >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("eigenvalue: L must be > 0");
  return (2.0 * n - 1.0) * std::numbers::pi / (2.0 * length);
}

EigenPair eigenpair(int n, double length) {
  const double lambda = eigenvalue(n, length);
  // int_0^L cos(lambda x) dx = sin(lambda L) / lambda = (-1)^{n+1} / lambda
  const double sign = (n % 2 == 1) ? 1.0 : -1.0;
  return {n, lambda, sign * lambda};
}

std::vector<double> first_eigenfunction(const SpatialGrid& grid) {
  const EigenPair phi = eigenpair(1, grid.length());
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi(grid.x(i));
  out.back() = 0.0;
  return out;
}

std::vector<double> simpson_weights(const SpatialGrid& grid) {
  std::vector<double> w(grid.size());
  const double h = grid.dx() / 3.0;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h;
  w.front() = h;
  w.back() = h;
  return w;
}

namespace {

void check_sizes(std::span<const double> u, std::span<const double> phi1, const SpatialGrid& grid) {
  if (u.size() != grid.size() || phi1.size() != grid.size())
    throw ContractError("weighted_moment: samples (" + std::to_string(u.size()) + ", " +
                        std::to_string(phi1.size()) + ") do not match grid of " +
                        std::to_string(grid.size()) + " nodes");
}

// Simpson on every `stride`-th node; the node count must fit.
double simpson_strided(std::span<const double> u, std::span<const double> phi1, double dx,
                       std::size_t stride) {
  const std::size_t m = (u.size() - 1) / stride;
  const double h = dx * static_cast<double>(stride);
  double acc = 0.0;
  for (std::size_t j = 0; j <= m; ++j) {
    const double c = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    acc += c * u[j * stride] * phi1[j * stride];
  }
  return acc * h / 3.0;
}

double trapezoid(std::span<const double> u, std::span<const double> phi1, double dx) {
  double acc = 0.5 * (u.front() * phi1.front() + u.back() * phi1.back());
  for (std::size_t i = 1; i + 1 < u.size(); ++i) acc += u[i] * phi1[i];
  return acc * dx;
}

}  // namespace

double weighted_moment(std::span<const double> u, std::span<const double> phi1, const SpatialGrid& grid) {
  check_sizes(u, phi1, grid);
  return simpson_strided(u, phi1, grid.dx(), 1);
}

Moment weighted_moment_with_error(std::span<const double> u, std::span<const double> phi1,
                                  const SpatialGrid& grid) {
  check_sizes(u, phi1, grid);
  const double fine = simpson_strided(u, phi1, grid.dx(), 1);
  double coarse;
  if (grid.intervals() % 4 == 0) {
    // |S_h - S_2h| overestimates the S_h error by roughly 15x for smooth data.
    coarse = simpson_strided(u, phi1, grid.dx(), 2);
  } else {
    coarse = trapezoid(u, phi1, grid.dx());
  }
  return {fine, std::abs(fine - coarse)};
}

}  // namespace fracquench::spectral
