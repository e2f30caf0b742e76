#include "fracquench/theory.hpp"
#include "fracquench/spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace fracquench;
using namespace fracquench::solver;
using namespace fracquench::theory;
using std::numbers::pi;

namespace {

ProblemSpec spec_of(double alpha, double L) {
  ProblemSpec s;
  s.alpha = alpha;
  s.length = L;
  return s;
}

GrowthCertificate cert_of(double c1, double c2) {
  GrowthCertificate c;
  c.c1 = c1;
  c.c2 = c2;
  c.valid = c1 > 0.0 && c2 > 0.0;
  return c;
}

RunResult quench_run(int nx = 64, double dt0 = 1e-3) {
  TimeControl tc;
  tc.t_max = 2.0;
  tc.dt0 = dt0;
  return run(spec_of(0.5, 4.0), SpatialGrid(4.0, nx), tc, DetectControl{});
}

}  // namespace

TEST_CASE("assumptions: reciprocal source passes with the geometric-series certificate") {
  const ProblemSpec s = spec_of(0.5, 4.0);
  const VerificationReport r = validate_assumptions(s, SpatialGrid(4.0, 32));
  CHECK(r.verdict());
  for (const auto& e : r.entries) CHECK(e.status == Status::Pass);
  const GrowthCertificate c = certify_growth(s);
  CHECK(c.valid);
  CHECK(c.c1 == 1.0);
  CHECK(c.c2 == 1.0);
  CHECK(c.method == CertMethod::Analytic);
}

TEST_CASE("assumptions: a bounded source fails divergence with a witness") {
  ProblemSpec s = spec_of(0.5, 1.0);
  s.source.family = SourceFamily::Affine;
  s.source.kappa = 1.0;
  s.source.slope = -1.0;
  const VerificationReport r = validate_assumptions(s, SpatialGrid(1.0, 32));
  CHECK_FALSE(r.verdict());
  const CheckEntry* d = r.find("f_diverges_at_u_star");
  REQUIRE(d != nullptr);
  CHECK(d->status == Status::Fail);
  CHECK(d->witness.has_value());
  for (const auto& e : r.entries)
    if (e.status == Status::Fail) CHECK(e.witness.has_value());
}

TEST_CASE("assumptions: cosine initial datum satisfies the boundary conditions") {
  ProblemSpec s = spec_of(0.5, 2.0);
  s.u0 = {InitialFamily::Bump, 0.4};
  const VerificationReport r = validate_assumptions(s, SpatialGrid(2.0, 32));
  const CheckEntry* e = r.find("initial_datum");
  REQUIRE(e != nullptr);
  CHECK(e->status == Status::Pass);
}

TEST_CASE("sampled certificate for a general reciprocal source") {
  ProblemSpec s = spec_of(0.5, 1.0);
  s.source.p = 2.0;
  s.source.kappa = 0.5;
  s.u_star = 2.0;
  const GrowthCertificate c = certify_growth(s);
  CHECK(c.valid);
  CHECK(c.method == CertMethod::Sampled);
  CHECK(c.c1 == doctest::Approx(0.125).epsilon(1e-5));
  CHECK(c.c2 == doctest::Approx(0.125).epsilon(1e-5));
  for (double u = 0.0; u < 2.0; u += 0.01) CHECK(s.f(u) >= c.c1 + c.c2 * u);
}

TEST_CASE("quench criterion") {
  const GrowthCertificate one = cert_of(1.0, 1.0);
  CHECK(quench_criterion(one, spectral::eigenvalue(1, 4.0)));
  CHECK(std::pow(spectral::eigenvalue(1, 4.0), 2) == doctest::Approx(0.154).epsilon(2e-3));
  CHECK_FALSE(quench_criterion(one, spectral::eigenvalue(1, pi / 2.0)));
  CHECK_FALSE(quench_criterion(cert_of(1.0, 0.1), spectral::eigenvalue(1, 1.0)));
}

TEST_CASE("lower bound curve") {
  const GrowthCertificate c = cert_of(1.0, 1.0);
  const double l1 = spectral::eigenvalue(1, 4.0);
  CHECK(lower_bound_curve(0.5, c, l1, 0.3, 0.0) == 0.3);

  SUBCASE("classical limit") {
    const double a = 1.0 - l1 * l1;
    for (double t : {0.01, 0.1, 0.5, 1.0, 2.0}) {
      const double exact = 0.2 * std::exp(a * t) + (std::exp(a * t) - 1.0) / a;
      CHECK(lower_bound_curve(1.0, c, l1, 0.2, t) == doctest::Approx(exact).epsilon(1e-8));
    }
    const GrowthCertificate c3 = cert_of(3.0, 1.0);
    const double t = 0.7;
    CHECK(lower_bound_curve(1.0, c3, l1, 0.0, t) == doctest::Approx(3.0 * (std::exp(a * t) - 1.0) / a).epsilon(1e-8));
    CHECK(lower_bound_curve_literal(1.0, c3, l1, 0.0, t) ==
          doctest::Approx((std::exp(a * t) - 1.0) / a).epsilon(1e-8));
  }
  SUBCASE("strictly increasing for positive rate") {
    double prev = -1.0;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const double v = lower_bound_curve(0.5, c, l1, 0.0, t);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("quench time upper bound") {
  const GrowthCertificate c = cert_of(1.0, 1.0);
  // Classical case: ln(1 + a) / a with a = 0.846.
  const double l = std::sqrt(0.154);
  const double a = 1.0 - 0.154;
  CHECK(quench_time_upper_bound(1.0, c, l, 0.0, 1.0) == doctest::Approx(std::log1p(a) / a).epsilon(1e-9));
  CHECK(quench_time_upper_bound(1.0, c, l, 0.0, 1.0) == doctest::Approx(0.7246112719629556).epsilon(1e-9));

  // Fractional case, reference from an independent series evaluation.
  const double l4 = spectral::eigenvalue(1, 4.0);
  CHECK(quench_time_upper_bound(0.5, c, l4, 0.0, 1.0) == doctest::Approx(0.30094179779000391).epsilon(1e-9));

  // Starting close to u_star leaves almost no time.
  double prev = 1.0;
  for (double y0 : {0.5, 0.9, 0.99, 0.999}) {
    const double T = quench_time_upper_bound(0.5, c, l4, y0, 1.0);
    CHECK(T < prev);
    prev = T;
  }
  CHECK(prev < 1e-3);

  CHECK_THROWS_AS(quench_time_upper_bound(0.5, c, spectral::eigenvalue(1, 1.0), 0.0, 1.0), PreconditionError);
}

TEST_CASE("moment bound: constant source") {
  ProblemSpec s = spec_of(0.5, 1.0);
  s.source.family = SourceFamily::Constant;
  s.source.kappa = 1.0;
  TimeControl tc;
  tc.t_max = 1.0;
  const RunResult coarse = run(s, SpatialGrid(1.0, 32), tc, DetectControl{});
  // Reference two refinements down: the start-up error converges below first order.
  tc.dt0 *= std::pow(4.0, -1.5);
  const RunResult fine = run(s, SpatialGrid(1.0, 64), tc, DetectControl{});
  const GrowthCertificate c = certify_growth(s);
  CHECK(c.c1 == 1.0);
  CHECK(c.c2 == 0.0);
  const MomentBudget b{moment_self_convergence(coarse.trajectory, fine.trajectory),
                       moment_quadrature_bound(coarse.trajectory)};
  MomentCurve curve;
  const CheckEntry e = verify_moment_bound(coarse.trajectory, s, c, b, &curve);
  CHECK(e.status == Status::Pass);
  // The moment equation is linear here, so the bound is attained; the margin is scheme error.
  CHECK(std::abs(curve.margin.back()) < 1e-3);
  CHECK(curve.bound.size() == coarse.trajectory.levels());
}

TEST_CASE("verifiers on the quenching run") {
  const ProblemSpec s = spec_of(0.5, 4.0);
  const RunResult r = quench_run();
  const RunResult fine = quench_run(128, 1e-3 * std::pow(4.0, -1.5));
  const GrowthCertificate c = certify_growth(s);
  REQUIRE(r.report.quenched);
  const double T = r.report.t_hi;

  SUBCASE("moment bound within the budget") {
    const MomentBudget b{moment_self_convergence(r.trajectory, fine.trajectory),
                         moment_quadrature_bound(r.trajectory)};
    CHECK(b.tol_b() > 0.0);
    const CheckEntry e = verify_moment_bound(r.trajectory, s, c, b);
    CHECK(e.status == Status::Pass);
    CHECK(e.parameters.contains("tol_b"));
  }
  SUBCASE("detected time below the bound") {
    const CheckEntry e = verify_quench_time(r.report, s, c, 0.0);
    CHECK(e.status == Status::Pass);
    CHECK(e.margin > 0.0);
  }
  SUBCASE("monotonicity and floor") {
    const LowerSolutionReport lower = check_lower_solution(s, r.trajectory.grid);
    double floor = 0.0;
    const auto entries = verify_monotonicity(r.trajectory, lower, Window{1.0, 3.0, 0.1 * T, T}, &floor);
    REQUIRE(entries.size() == 3);
    for (const auto& e : entries) CHECK(e.status == Status::Pass);
    CHECK(floor > 0.0);
    // Floors shrink as the window approaches x = L.
    double prev = std::numeric_limits<double>::infinity();
    for (double x0 : {0.5, 2.0, 3.5}) {
      double f = 0.0;
      verify_monotonicity(r.trajectory, lower, Window{x0, 4.0, 0.1 * T, T}, &f);
      CHECK(f <= prev);
      prev = f;
    }
    CHECK(prev == 0.0);
  }
  SUBCASE("blow-up coupling") {
    const Window w{r.report.localization.x0, r.report.localization.x1, 0.5 * T, T};
    const std::vector<double> terminal{r.report.terminal_max_caputo, 4.0 * r.report.terminal_max_caputo,
                                       16.0 * r.report.terminal_max_caputo};
    const auto entries = verify_blowup_coupling(r, s, w, DeltaPolicy{}, terminal);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].status == Status::Pass);
    CHECK(entries[0].parameters["delta"].get<double>() > 0.0);
    CHECK(entries[1].status == Status::Pass);
    CHECK(entries[2].status == Status::Pass);
    const std::vector<double> stalled{1.0, 1.5, 4.0};
    CHECK(verify_blowup_coupling(r, s, w, DeltaPolicy{}, stalled)[1].status == Status::Fail);
    CHECK_THROWS_AS(verify_blowup_coupling(r, s, Window{0.0, 1.0, T, T}, DeltaPolicy{}, terminal),
                    std::invalid_argument);
  }
  SUBCASE("commutation and localization") {
    CHECK(verify_commutation(r.trajectory).status == Status::Pass);
    const CheckEntry loc = verify_localization(r);
    CHECK(loc.status == Status::Pass);
    CHECK(loc.parameters["touches_origin"].get<bool>());
  }
}

TEST_CASE("verifiers without a quench") {
  ProblemSpec s = spec_of(0.5, 1.0);
  s.source.family = SourceFamily::Zero;
  s.u0 = {InitialFamily::Bump, 0.5};
  TimeControl tc;
  tc.t_max = 0.5;
  const RunResult r = run(s, SpatialGrid(1.0, 32), tc, DetectControl{});
  REQUIRE_FALSE(r.report.quenched);

  const LowerSolutionReport lower = check_lower_solution(s, r.trajectory.grid);
  const auto entries = verify_monotonicity(r.trajectory, lower, Window{0.0, 0.5, 0.0, 0.5});
  CHECK(entries[0].status == Status::Fail);
  CHECK(entries[0].witness.has_value());

  const auto blow = verify_blowup_coupling(r, s, Window{0.0, 0.5, 0.0, 0.5}, DeltaPolicy{}, {});
  for (const auto& e : blow) CHECK(e.status == Status::NotApplicable);
  CHECK(verify_localization(r).status == Status::NotApplicable);
  CHECK(verify_quench_time(r.report, s, certify_growth(s), 0.0).status == Status::NotApplicable);
}

TEST_CASE("report serialization") {
  VerificationReport r;
  CheckEntry a;
  a.name = "a";
  a.status = Status::Pass;
  a.margin = 1.0;
  r.add(a);
  CheckEntry b;
  b.name = "b";
  b.status = Status::Fail;
  b.margin = -std::numeric_limits<double>::infinity();
  b.witness = Witness{0.5, 0.25};
  r.add(b);
  const auto j = r.to_json();
  CHECK(j["verdict"] == "fail");
  CHECK(j["checks"].size() == 2);
  CHECK(j["checks"][0]["witness"].is_null());
  CHECK(j["checks"][1]["margin"].is_null());
  CHECK(j["checks"][1]["witness"]["x"] == 0.5);
  CHECK(j.begin().key() == "verdict");
}
