#include "fracquench/spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace fracquench;
using namespace fracquench::spectral;
using std::numbers::pi;

TEST_CASE("eigenvalues") {
  CHECK(eigenvalue(1, 1.0) == doctest::Approx(pi / 2.0).epsilon(1e-15));
  CHECK(eigenvalue(1, pi / 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eigenvalue(2, 1.0) == doctest::Approx(1.5 * pi).epsilon(1e-15));
  CHECK_THROWS_AS(eigenvalue(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eigenvalue(1, 0.0), std::invalid_argument);
}

TEST_CASE("first eigenfunction normalization and boundary structure") {
  const EigenPair p = eigenpair(1, 1.0);
  CHECK(p.amplitude == doctest::Approx(pi / 2.0));
  CHECK(p(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  const double h = 1e-6;
  CHECK(std::abs(p(h) - p(-h)) / (2 * h) < 1e-12);

  const SpatialGrid grid(1.0, 400);
  const auto phi = first_eigenfunction(grid);
  const std::vector<double> one(grid.size(), 1.0);
  CHECK(std::abs(weighted_moment(one, phi, grid) - 1.0) < 1e-8);
  CHECK(phi.back() == 0.0);
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) CHECK(phi[i] > 0.0);

  // Higher modes carry unit integral too.
  for (int n : {2, 3}) {
    const EigenPair q = eigenpair(n, 2.0);
    const SpatialGrid g(2.0, 800);
    std::vector<double> s(g.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = q(g.x(i));
    const std::vector<double> ones(g.size(), 1.0);
    CHECK(weighted_moment(ones, s, g) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("weighted moment examples") {
  const SpatialGrid grid(1.0, 64);
  const auto phi = first_eigenfunction(grid);
  CHECK(weighted_moment(phi, phi, grid) == doctest::Approx(pi * pi / 8.0).epsilon(1e-7));
  const std::vector<double> zero(grid.size(), 0.0);
  CHECK(weighted_moment(zero, phi, grid) == 0.0);
  const std::vector<double> shorter(grid.size() - 1, 1.0);
  CHECK_THROWS_AS(weighted_moment(shorter, phi, grid), ContractError);
}

TEST_CASE("Simpson converges at fourth order and the bound is honest") {
  double prev = 0.0;
  for (int nx : {16, 32, 64, 128}) {
    const SpatialGrid grid(3.0, nx);
    const auto phi = first_eigenfunction(grid);
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(-grid.x(i));
    // int_0^L A cos(l x) e^{-x} dx in closed form
    const double l = pi / 6.0, A = l;
    const double exact = A * (1.0 + l * std::exp(-3.0)) / (1.0 + l * l);
    const Moment m = weighted_moment_with_error(u, phi, grid);
    const double err = std::abs(m.value - exact);
    CHECK(err <= m.error_bound);
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("discrete eigen-residual is second order") {
  double prev = 0.0;
  for (int nx : {32, 64, 128}) {
    const SpatialGrid grid(2.0, nx);
    const auto phi = first_eigenfunction(grid);
    const double l2 = std::pow(eigenvalue(1, 2.0), 2);
    const double h2 = grid.dx() * grid.dx();
    double worst = std::abs(2.0 * (phi[1] - phi[0]) / h2 + l2 * phi[0]);
    for (std::size_t i = 1; i + 1 < phi.size(); ++i)
      worst = std::max(worst, std::abs((phi[i - 1] - 2 * phi[i] + phi[i + 1]) / h2 + l2 * phi[i]));
    if (prev > 0.0) CHECK(std::log2(prev / worst) == doctest::Approx(2.0).epsilon(0.02));
    prev = worst;
  }
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(SpatialGrid(1.0, 15), std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid(1.0, 17), std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid(-1.0, 16), std::invalid_argument);
  const SpatialGrid g(2.0, 16);
  CHECK(g.x(16) == 2.0);
  CHECK(g.dx() == 0.125);
}
