#include "fracquench/caputo.hpp"

#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

using namespace fracquench::caputo;

namespace {

std::vector<double> sample(const TimeMesh& mesh, auto&& f) {
  std::vector<double> v;
  for (double t : mesh.nodes()) v.push_back(f(t));
  return v;
}

// max_n |D^alpha t^2 (t_n) - exact| on a uniform mesh with 2^level steps
double caputo_t2_error(double alpha, int steps) {
  const TimeMesh mesh = TimeMesh::uniform(1.0, steps);
  const auto u = sample(mesh, [](double t) { return t * t; });
  double worst = 0.0;
  for (int n = 1; n <= steps; ++n) {
    const double got = caputo_l1_apply(u, mesh.nodes(), n, alpha);
    worst = std::max(worst, std::abs(got - caputo_exact_power(alpha, 2.0, mesh[n])));
  }
  return worst;
}

}  // namespace

TEST_CASE("mesh construction") {
  const TimeMesh g = TimeMesh::graded(2.0, 8, 2.0);
  CHECK(g.steps() == 8);
  CHECK(g[0] == 0.0);
  CHECK(g.horizon() == 2.0);
  CHECK(g[4] == doctest::Approx(0.5));
  CHECK(g.min_step() == doctest::Approx(2.0 / 64.0));
  CHECK_THROWS_AS(TimeMesh({0.0}), std::invalid_argument);
  CHECK_THROWS_AS(TimeMesh({0.1, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(TimeMesh({0.0, 0.2, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(TimeMesh::graded(1.0, 4, 0.5), std::invalid_argument);
}

TEST_CASE("L1 weights sum to zero and have the comparison sign pattern") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    const TimeMesh mesh = TimeMesh::graded(1.0, 40, 1.7);
    for (int n : {1, 2, 17, 40}) {
      const auto b = l1_weights(mesh, n, alpha);
      REQUIRE(b.size() == static_cast<std::size_t>(n) + 1);
      const double total = std::accumulate(b.begin(), b.end(), 0.0);
      CHECK(std::abs(total) <= 1e-12 * b.back());
      CHECK(b.back() > 0.0);
      for (int k = 0; k < n; ++k) CHECK(b[static_cast<std::size_t>(k)] < 0.0);
    }
  }
}

TEST_CASE("first step closed form") {
  // D^alpha t at t = dt from one L1 step equals dt^{1-alpha} / Gamma(2-alpha).
  const double alpha = 0.4;
  const double dt = 0.01;
  const std::vector<double> nodes{0.0, dt};
  const std::vector<double> u{0.0, dt};
  CHECK(caputo_l1_apply(u, nodes, 1, alpha) ==
        doctest::Approx(std::pow(dt, 1.0 - alpha) / std::tgamma(2.0 - alpha)).epsilon(1e-14));
}

TEST_CASE("exact for linear data on any mesh") {
  const double alpha = 0.65;
  const TimeMesh mesh = TimeMesh::graded(3.0, 25, 2.3);
  const auto u = sample(mesh, [](double t) { return 2.0 - 0.5 * t; });
  for (int n = 1; n <= mesh.steps(); ++n) {
    const double want = -0.5 * caputo_exact_power(alpha, 1.0, mesh[n]);
    CHECK(caputo_l1_apply(u, mesh.nodes(), n, alpha) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("observed order on t^2 is 2 - alpha") {
  for (double alpha : {0.3, 0.5, 0.8}) {
    double prev = caputo_t2_error(alpha, 64);
    for (int level = 1; level <= 4; ++level) {
      const double err = caputo_t2_error(alpha, 64 << level);
      const double order = std::log2(prev / err);
      CHECK_MESSAGE(std::abs(order - (2.0 - alpha)) < 0.15, "alpha=" << alpha << " order " << order);
      prev = err;
    }
  }
}

TEST_CASE("exact power derivative") {
  CHECK(caputo_exact_power(0.5, 1.0, 1.0) == doctest::Approx(2.0 / std::sqrt(M_PI)));
  CHECK(caputo_exact_power(1.0, 2.0, 3.0) == doctest::Approx(6.0));
  CHECK(caputo_exact_power(0.5, 0.5, 0.0) == doctest::Approx(std::tgamma(1.5)));
  CHECK(caputo_exact_power(0.5, 2.0, 0.0) == 0.0);
  CHECK(std::isinf(caputo_exact_power(0.7, 0.3, 0.0)));
  CHECK_THROWS_AS(caputo_exact_power(0.5, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(caputo_exact_power(0.5, -1.0, 1.0), std::domain_error);
}

TEST_CASE("history contract") {
  HistoryBuffer h(3);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  h.push(a);
  h.push(b);
  CHECK(h.size() == 2);
  CHECK(h.value(1, 2) == 6.0);
  CHECK(h.series(1) == std::vector<double>{2, 5});
  CHECK_THROWS_AS(h.push(std::vector<double>{1, 2}), ContractError);
  const TimeMesh mesh = TimeMesh::uniform(1.0, 4);
  CHECK_THROWS_AS(caputo_l1_apply(h, 0, mesh, 2, 0.5), ContractError);
  CHECK_THROWS_AS(caputo_l1_apply(std::vector<double>{0.0}, mesh.nodes(), 1, 0.5), ContractError);
  h.truncate(1);
  CHECK(h.size() == 1);
}

TEST_CASE("whole-buffer apply matches per-node apply") {
  const double alpha = 0.35;
  const TimeMesh mesh = TimeMesh::graded(1.0, 12, 1.5);
  HistoryBuffer h(4);
  for (double t : mesh.nodes()) {
    const std::vector<double> level{t, t * t, std::sin(t), 1.0};
    h.push(level);
  }
  std::vector<double> out(4);
  caputo_l1_apply_all(h, mesh.nodes(), 12, alpha, out);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(out[i] == doctest::Approx(caputo_l1_apply(h, i, mesh, 12, alpha)).epsilon(1e-14));
  CHECK(std::abs(out[3]) < 1e-14);
}

TEST_CASE("Riemann-Liouville integral") {
  // I^alpha 1 = t^alpha / Gamma(1+alpha), I^alpha t = t^{1+alpha} / Gamma(2+alpha): exact.
  const double alpha = 0.6;
  const TimeMesh mesh = TimeMesh::graded(2.0, 30, 2.0);
  const auto one = sample(mesh, [](double) { return 1.0; });
  const auto lin = sample(mesh, [](double t) { return t; });
  const auto i_one = rl_integral(alpha, one, mesh.nodes());
  const auto i_lin = rl_integral(alpha, lin, mesh.nodes());
  for (int n = 0; n <= mesh.steps(); ++n) {
    const double t = mesh[n];
    CHECK(i_one[static_cast<std::size_t>(n)] ==
          doctest::Approx(std::pow(t, alpha) / std::tgamma(1.0 + alpha)).epsilon(1e-12));
    CHECK(i_lin[static_cast<std::size_t>(n)] ==
          doctest::Approx(std::pow(t, 1.0 + alpha) / std::tgamma(2.0 + alpha)).epsilon(1e-12));
  }
  // I^alpha applied to the L1 derivative of t^2 recovers t^2 up to the L1 error.
  const TimeMesh fine = TimeMesh::uniform(1.0, 400);
  const auto sq = sample(fine, [](double t) { return t * t; });
  std::vector<double> d(sq.size(), 0.0);
  for (int n = 1; n <= fine.steps(); ++n)
    d[static_cast<std::size_t>(n)] = caputo_l1_apply(sq, fine.nodes(), n, alpha);
  d[0] = d[1];
  const auto back = rl_integral(alpha, d, fine.nodes());
  CHECK(back.back() == doctest::Approx(1.0).epsilon(2e-3));
}
