#include "fracquench/theory.hpp"

#include "fracquench/mlf.hpp"
#include "fracquench/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fracquench::theory {

using nlohmann::ordered_json;
using solver::ProblemSpec;
using solver::SourceFamily;
using solver::Trajectory;

namespace {

constexpr double kCertMargin = 1e-6;

// Dense sample of [0, u_star): uniform part plus a geometric approach to u_star.
std::vector<double> source_samples(double u_star) {
  std::vector<double> u;
  const int uniform = 2000;
  for (int k = 0; k < uniform; ++k) u.push_back(u_star * (1.0 - 1e-3) * k / (uniform - 1));
  for (int j = 4; j <= 10; ++j) u.push_back(u_star * (1.0 - std::pow(10.0, -j)));
  return u;
}

double min_gap(const ProblemSpec& spec, double c1, double c2, double* where) {
  double worst = std::numeric_limits<double>::infinity();
  for (double u : source_samples(spec.u_star)) {
    const double gap = spec.f(u) - c1 - c2 * u;
    if (gap < worst) {
      worst = gap;
      if (where) *where = u;
    }
  }
  return worst;
}

CheckEntry entry(std::string name, bool pass, double margin) {
  CheckEntry e;
  e.name = std::move(name);
  e.status = pass ? Status::Pass : Status::Fail;
  e.margin = margin;
  return e;
}

}  // namespace

const char* cert_method_name(CertMethod m) { return m == CertMethod::Analytic ? "analytic" : "sampled"; }

const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::NotApplicable: return "not_applicable";
  }
  return "unknown";
}

bool VerificationReport::verdict() const {
  return std::none_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.status == Status::Fail; });
}

const CheckEntry* VerificationReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

ordered_json VerificationReport::to_json() const {
  ordered_json checks = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json j;
    j["name"] = e.name;
    j["status"] = status_name(e.status);
    j["margin"] = std::isfinite(e.margin) ? ordered_json(e.margin) : ordered_json(nullptr);
    if (e.witness)
      j["witness"] = {{"x", e.witness->x}, {"t", e.witness->t}};
    else
      j["witness"] = nullptr;
    j["parameters"] = e.parameters;
    checks.push_back(std::move(j));
  }
  ordered_json out;
  out["verdict"] = verdict() ? "pass" : "fail";
  out["checks"] = std::move(checks);
  return out;
}

GrowthCertificate certify_growth(const ProblemSpec& spec) {
  GrowthCertificate c;
  c.u_hi = spec.u_star;
  const auto& s = spec.source;
  switch (s.family) {
    case SourceFamily::Reciprocal:
      if (s.p == 1.0 && spec.u_star == 1.0) {
        // kappa / (1 - u) = kappa * sum_k u^k >= kappa + kappa u
        c.c1 = s.kappa;
        c.c2 = s.kappa;
        c.method = CertMethod::Analytic;
        c.note = "geometric series";
      } else {
        c.c1 = spec.f(0.0) * (1.0 - kCertMargin);
        c.c2 = spec.df(0.0) * (1.0 - kCertMargin);
        c.method = CertMethod::Sampled;
        c.note = "tangent at 0, sampled";
      }
      break;
    case SourceFamily::Zero:
      c.method = CertMethod::Analytic;
      c.note = "no source";
      break;
    case SourceFamily::Constant:
      c.c1 = s.kappa;
      c.method = CertMethod::Analytic;
      c.note = "constant source: c2 = 0";
      break;
    case SourceFamily::Affine:
      c.c2 = std::max(0.0, s.slope);
      c.c1 = s.slope >= 0.0 ? s.kappa : s.kappa + s.slope * spec.u_star;
      c.method = CertMethod::Analytic;
      c.note = "affine source";
      break;
    case SourceFamily::User: {
      c.c1 = spec.f(0.0) * (1.0 - kCertMargin);
      c.c2 = std::max(0.0, spec.df(0.0) * (1.0 - kCertMargin));
      c.method = CertMethod::Sampled;
      c.note = "tangent at 0, sampled";
      if (min_gap(spec, c.c1, c.c2, nullptr) < 0.0) {
        // Not convex: largest slope the samples allow through (0, c1).
        double slope = std::numeric_limits<double>::infinity();
        for (double u : source_samples(spec.u_star))
          if (u > 0.0) slope = std::min(slope, (spec.f(u) - c.c1) / u);
        c.c2 = std::max(0.0, slope * (1.0 - kCertMargin));
        c.note = "secant bound, sampled";
      }
      break;
    }
  }
  const bool holds = c.c1 >= 0.0 && c.c2 >= 0.0 && min_gap(spec, c.c1, c.c2, nullptr) >= 0.0;
  c.valid = holds && c.c1 > 0.0 && c.c2 > 0.0;
  if (!holds) c.note += "; inequality violated on samples";
  return c;
}

VerificationReport validate_assumptions(const ProblemSpec& spec, const SpatialGrid& grid) {
  VerificationReport rep;
  const double u_star = spec.u_star;
  const double f0 = spec.f(0.0);
  {
    CheckEntry e = entry("f_positive_at_zero", f0 > 0.0, f0);
    if (!(f0 > 0.0)) e.witness = Witness{0.0, 0.0};
    e.parameters = {{"witness_x_is", "u"}};
    rep.add(std::move(e));
  }
  {
    double worst = std::numeric_limits<double>::infinity();
    double where = 0.0;
    for (double u : source_samples(u_star)) {
      const double m = std::min({spec.f(u), spec.df(u), spec.source.second_derivative(u, u_star)});
      if (std::isnan(m)) continue;  // user source without f''
      if (m < worst) {
        worst = m;
        where = u;
      }
    }
    CheckEntry e = entry("f_nonnegative_increasing_convex", worst >= 0.0, worst);
    if (worst < 0.0) e.witness = Witness{where, 0.0};
    e.parameters = {{"witness_x_is", "u"}, {"samples", source_samples(u_star).size()}};
    rep.add(std::move(e));
  }
  {
    // Divergence at u_star: growth beyond 1/margin at u_star (1 - 1e-10), increasing on approach.
    double prev = f0;
    bool increasing = true;
    double witness = 0.0;
    for (int j = 1; j <= 10; ++j) {
      const double u = u_star * (1.0 - std::pow(10.0, -j));
      const double v = spec.f(u);
      if (!(v > prev) && increasing) {
        increasing = false;
        witness = u;
      }
      prev = v;
    }
    const double ratio = prev / std::max(1.0, std::abs(f0));
    const bool pass = increasing && ratio > 1e6;
    CheckEntry e = entry("f_diverges_at_u_star", pass, std::log10(std::max(ratio, 1e-300)) - 6.0);
    if (!pass) e.witness = Witness{increasing ? u_star * (1.0 - 1e-10) : witness, 0.0};
    e.parameters = {{"witness_x_is", "u"}, {"probe", u_star * (1.0 - 1e-10)}, {"f_probe", prev}};
    rep.add(std::move(e));
  }
  {
    const GrowthCertificate c = certify_growth(spec);
    double where = 0.0;
    const double gap = min_gap(spec, c.c1, c.c2, &where);
    CheckEntry e = entry("growth_certificate", c.valid, std::min({c.c1, c.c2, gap}));
    if (!c.valid) e.witness = Witness{where, 0.0};
    e.parameters = {{"c1", c.c1}, {"c2", c.c2}, {"method", cert_method_name(c.method)}, {"note", c.note}};
    rep.add(std::move(e));
  }
  {
    const double L = spec.length;
    const double d0 = std::abs(spec.u0.derivative(0.0, L));
    const double uL = std::abs(spec.u0.value(L, L));
    double top = -std::numeric_limits<double>::infinity(), bottom = std::numeric_limits<double>::infinity();
    double top_x = 0.0, bottom_x = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double v = spec.u0.value(grid.x(i), L);
      if (v > top) top = v, top_x = grid.x(i);
      if (v < bottom) bottom = v, bottom_x = grid.x(i);
    }
    const bool pass = d0 <= 1e-12 && uL <= 1e-12 && bottom >= 0.0 && top < u_star;
    CheckEntry e = entry("initial_datum", pass, std::min(u_star - top, bottom));
    if (!pass) e.witness = Witness{bottom < 0.0 ? bottom_x : (top >= u_star ? top_x : (d0 > 1e-12 ? 0.0 : L)), 0.0};
    e.parameters = {{"u0_prime_at_0", d0}, {"u0_at_L", uL}, {"max_u0", top}, {"min_u0", bottom}};
    rep.add(std::move(e));
  }
  return rep;
}

bool quench_criterion(const GrowthCertificate& cert, double lambda1) { return lambda1 * lambda1 < cert.c2; }

double lower_bound_curve(double alpha, const GrowthCertificate& cert, double lambda1, double y0, double t) {
  const double k = cert.c2 - lambda1 * lambda1;
  if (t == 0.0) return y0;
  const double integral = mlf::ml_weighted_integral(alpha, k, t);
  const double decay = y0 == 0.0 ? 0.0 : y0 * mlf::mittag_leffler({alpha, 1.0, k * std::pow(t, alpha)});
  return cert.c1 * integral + decay;
}

double lower_bound_curve_literal(double alpha, const GrowthCertificate& cert, double lambda1, double y0,
                                 double t) {
  const double k = cert.c2 - lambda1 * lambda1;
  if (t == 0.0) return y0;
  const double decay = y0 == 0.0 ? 0.0 : y0 * mlf::mittag_leffler({alpha, 1.0, k * std::pow(t, alpha)});
  return mlf::ml_weighted_integral(alpha, k, t) + decay;
}

double quench_time_upper_bound(double alpha, const GrowthCertificate& cert, double lambda1, double y0,
                               double u_star) {
  if (!quench_criterion(cert, lambda1)) {
    std::ostringstream os;
    os << "quench_time_upper_bound: criterion lambda1^2 = " << lambda1 * lambda1 << " < c2 = " << cert.c2
       << " does not hold; the bound may not exist";
    throw PreconditionError(os.str());
  }
  if (y0 >= u_star) return 0.0;
  auto g = [&](double t) { return lower_bound_curve(alpha, cert, lambda1, y0, t) - u_star; };
  double lo = 0.0, hi = 1e-6;
  while (g(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw PreconditionError("quench_time_upper_bound: no crossing below t = 1e12");
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double moment_self_convergence(const Trajectory& coarse, const Trajectory& fine) {
  const auto& tf = fine.monitors.t;
  const auto& yf = fine.monitors.y;
  double worst = 0.0;
  for (std::size_t n = 0; n < coarse.levels(); ++n) {
    const double t = coarse.monitors.t[n];
    if (t > tf.back()) break;
    const auto it = std::lower_bound(tf.begin(), tf.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - tf.begin());
    double y;
    if (j == 0 || tf[j] == t) {
      y = yf[j];
    } else {
      const double w = (t - tf[j - 1]) / (tf[j] - tf[j - 1]);
      y = (1.0 - w) * yf[j - 1] + w * yf[j];
    }
    worst = std::max(worst, std::abs(coarse.monitors.y[n] - y));
  }
  return worst;
}

double moment_quadrature_bound(const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t n = 0; n < traj.levels(); ++n)
    worst = std::max(worst, spectral::weighted_moment_with_error(traj.u.level(n), traj.phi1, traj.grid).error_bound);
  return worst;
}

CheckEntry verify_moment_bound(const Trajectory& traj, const ProblemSpec& spec, const GrowthCertificate& cert,
                               const MomentBudget& budget, MomentCurve* curve) {
  CheckEntry e;
  e.name = "moment_lower_bound";
  const double lambda1 = spectral::eigenvalue(1, spec.length);
  const double tol_b = budget.tol_b();
  e.parameters = {{"c1", cert.c1},
                  {"c2", cert.c2},
                  {"lambda1_sq", lambda1 * lambda1},
                  {"tol_b", tol_b},
                  {"self_convergence", budget.self_convergence},
                  {"quadrature_bound", budget.quadrature}};
  const bool usable = cert.c1 >= 0.0 && cert.c2 >= 0.0 && cert.note.find("violated") == std::string::npos;
  if (!usable) {
    e.status = Status::NotApplicable;
    e.parameters["reason"] = "no growth certificate";
    return e;
  }
  const double y0 = traj.monitors.y.front();
  MomentCurve local;
  MomentCurve& c = curve ? *curve : local;
  c.bound.assign(traj.levels(), 0.0);
  c.margin.assign(traj.levels(), 0.0);
  double worst = std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  std::size_t positive = 0;
  for (std::size_t n = 0; n < traj.levels(); ++n) {
    const double t = traj.monitors.t[n];
    c.bound[n] = lower_bound_curve(spec.alpha, cert, lambda1, y0, t);
    c.margin[n] = traj.monitors.y[n] - c.bound[n];
    if (n >= 1 && c.margin[n] > 0.0) ++positive;
    if (c.margin[n] < worst) {
      worst = c.margin[n];
      worst_t = t;
    }
  }
  const std::size_t steps = traj.levels() - 1;
  const double fraction = steps > 0 ? static_cast<double>(positive) / static_cast<double>(steps) : 1.0;
  e.status = worst >= -tol_b ? Status::Pass : Status::Fail;
  e.margin = worst + tol_b;
  e.witness = Witness{0.0, worst_t};
  e.parameters["min_margin"] = worst;
  e.parameters["positive_margin_fraction"] = fraction;
  e.parameters["literal_form_at_end"] =
      lower_bound_curve_literal(spec.alpha, cert, lambda1, y0, traj.monitors.t.back());
  return e;
}

CheckEntry verify_quench_time(const solver::QuenchReport& report, const ProblemSpec& spec,
                              const GrowthCertificate& cert, double y0) {
  CheckEntry e;
  e.name = "quench_time_upper_bound";
  const double lambda1 = spectral::eigenvalue(1, spec.length);
  e.parameters = {{"lambda1_sq", lambda1 * lambda1}, {"c2", cert.c2}};
  if (!cert.valid || !quench_criterion(cert, lambda1)) {
    e.status = Status::NotApplicable;
    e.parameters["reason"] = "criterion lambda1^2 < c2 does not hold";
    return e;
  }
  const double bound = quench_time_upper_bound(spec.alpha, cert, lambda1, y0, spec.u_star);
  e.parameters["T_upper_bound"] = bound;
  e.parameters["T_bracket"] = {report.t_lo, report.t_hi};
  if (!report.quenched) {
    e.status = Status::Fail;
    e.margin = -std::numeric_limits<double>::infinity();
    e.parameters["reason"] = "criterion holds but the run did not quench";
    return e;
  }
  // Within bracket tolerance: the bracket's lower end must not exceed the bound.
  e.margin = bound - report.t_lo;
  e.status = e.margin >= 0.0 ? Status::Pass : Status::Fail;
  if (e.status == Status::Fail) e.witness = Witness{report.x_star, report.t_lo};
  return e;
}

std::vector<CheckEntry> verify_monotonicity(const Trajectory& traj, const solver::LowerSolutionReport& lower,
                                            const Window& window, double* floor_out) {
  const std::size_t width = traj.grid.size();
  const double tol = 1e-12 * traj.u_star;
  const ordered_json hypothesis = {{"lower_solution", lower.lower}, {"strict", lower.strict}};

  CheckEntry mono;
  mono.name = "monotone_in_time";
  mono.margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n < traj.levels(); ++n) {
    const auto a = traj.u.level(n - 1), b = traj.u.level(n);
    for (std::size_t i = 0; i + 1 < width; ++i) {
      const double inc = b[i] - a[i];
      if (inc < mono.margin) {
        mono.margin = inc;
        mono.witness = Witness{traj.grid.x(i), traj.times[n]};
      }
    }
  }
  mono.status = mono.margin >= -tol ? Status::Pass : Status::Fail;
  mono.parameters = {{"tolerance", tol}, {"hypothesis", hypothesis}};
  if (mono.status == Status::Pass) mono.witness.reset();

  CheckEntry pos;
  pos.name = "caputo_positive";
  pos.margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n < traj.levels(); ++n) {
    const auto c = traj.caputo.level(n);
    for (std::size_t i = 1; i + 1 < width; ++i) {
      if (c[i] < pos.margin) {
        pos.margin = c[i];
        pos.witness = Witness{traj.grid.x(i), traj.times[n]};
      }
    }
  }
  pos.status = pos.margin > 0.0 ? Status::Pass : Status::Fail;
  pos.parameters = {{"nodes", "interior"}, {"hypothesis", hypothesis}};
  if (pos.status == Status::Pass) pos.witness.reset();

  CheckEntry floor;
  floor.name = "caputo_positivity_floor";
  floor.margin = std::numeric_limits<double>::infinity();
  std::size_t points = 0;
  for (std::size_t n = 1; n < traj.levels(); ++n) {
    const double t = traj.times[n];
    if (t < window.t0 || t >= window.t1) continue;
    const auto c = traj.caputo.level(n);
    for (std::size_t i = 0; i < width; ++i) {
      const double x = traj.grid.x(i);
      if (x < window.x0 || x > window.x1) continue;
      ++points;
      if (c[i] < floor.margin) {
        floor.margin = c[i];
        floor.witness = Witness{x, t};
      }
    }
  }
  floor.parameters = {{"window", {{"x0", window.x0}, {"x1", window.x1}, {"t0", window.t0}, {"t1", window.t1}}},
                      {"points", points}};
  if (points == 0) {
    floor.status = Status::NotApplicable;
    floor.parameters["reason"] = "empty window";
    floor.margin = 0.0;
  } else {
    floor.status = floor.margin > 0.0 ? Status::Pass : Status::Fail;
    floor.parameters["c1_floor"] = floor.margin;
    if (floor_out) *floor_out = floor.margin;
  }
  return {mono, pos, floor};
}

std::vector<CheckEntry> verify_blowup_coupling(const solver::RunResult& run, const ProblemSpec& spec,
                                               const Window& window, const DeltaPolicy& policy,
                                               std::span<const double> terminal_max, double tol) {
  const Trajectory& traj = run.trajectory;
  CheckEntry w;
  w.name = "blowup_coupling";
  CheckEntry growth;
  growth.name = "blowup_refinement_growth";
  CheckEntry ratio;
  ratio.name = "blowup_terminal_ratio";
  const std::string note = "unboundedness is checked as growth of the terminal maximum under refinement";
  growth.parameters = {{"operationalization", note}};
  if (!run.report.quenched) {
    for (CheckEntry* e : {&w, &growth, &ratio}) {
      e->status = Status::NotApplicable;
      e->parameters["reason"] = "run did not quench";
    }
    return {w, growth, ratio};
  }
  if (!(window.x1 >= window.x0) || !(window.t1 > window.t0))
    throw std::invalid_argument("verify_blowup_coupling: empty window");

  const std::size_t width = traj.grid.size();
  std::vector<std::size_t> levels;
  for (std::size_t n = 1; n < traj.levels(); ++n)
    if (traj.times[n] >= window.t0 && traj.times[n] < window.t1) levels.push_back(n);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i + 1 < width; ++i)
    if (traj.grid.x(i) >= window.x0 && traj.grid.x(i) <= window.x1) nodes.push_back(i);
  if (levels.empty() || nodes.empty()) throw std::invalid_argument("verify_blowup_coupling: empty window");

  double c1_floor = std::numeric_limits<double>::infinity();
  for (std::size_t n : levels)
    for (std::size_t i : nodes) c1_floor = std::min(c1_floor, traj.caputo.value(n, i));

  // Parabolic boundary: the bottom edge and the lateral edge at x1. The edge
  // at x0 = 0 is the Neumann symmetry line and only counts when x0 > 0.
  double c2_loc = -std::numeric_limits<double>::infinity();
  for (std::size_t i : nodes) c2_loc = std::max(c2_loc, traj.u.value(levels.front(), i));
  for (std::size_t n : levels) {
    c2_loc = std::max(c2_loc, traj.u.value(n, nodes.back()));
    if (window.x0 > 0.0) c2_loc = std::max(c2_loc, traj.u.value(n, nodes.front()));
  }
  const double delta = policy.theta * c1_floor / spec.f(c2_loc);

  w.margin = std::numeric_limits<double>::infinity();
  for (std::size_t n : levels) {
    for (std::size_t i : nodes) {
      const double m = traj.caputo.value(n, i) - delta * spec.f(traj.u.value(n, i));
      if (m < w.margin) {
        w.margin = m;
        w.witness = Witness{traj.grid.x(i), traj.times[n]};
      }
    }
  }
  w.status = (delta > 0.0 && w.margin >= -tol) ? Status::Pass : Status::Fail;
  if (w.status == Status::Pass) w.witness.reset();
  w.parameters = {{"delta", delta},
                  {"theta", policy.theta},
                  {"c1_floor", c1_floor},
                  {"c2_loc", c2_loc},
                  {"tol", tol},
                  {"window", {{"x0", window.x0}, {"x1", window.x1}, {"t0", window.t0}, {"t1", window.t1}}}};

  // (c) growth under successive refinements
  growth.parameters["terminal_max"] = std::vector<double>(terminal_max.begin(), terminal_max.end());
  if (terminal_max.size() < 3) {
    growth.status = Status::NotApplicable;
    growth.parameters["reason"] = "needs the base run and two refinements";
  } else {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < terminal_max.size(); ++k)
      worst = std::min(worst, terminal_max[k] / terminal_max[k - 1]);
    growth.margin = worst - 2.0;
    growth.status = worst >= 2.0 ? Status::Pass : Status::Fail;
    growth.parameters["min_ratio"] = worst;
  }

  // Terminal max against its value at 90% of the detection time.
  const double t90 = 0.9 * run.report.t_hi;
  std::size_t k90 = 0;
  for (std::size_t n = 0; n < traj.levels(); ++n)
    if (traj.times[n] <= t90) k90 = n;
  const double at90 = traj.monitors.max_caputo[k90];
  const double terminal = traj.monitors.max_caputo.back();
  ratio.margin = terminal / at90 - 10.0;
  ratio.status = terminal >= 10.0 * at90 ? Status::Pass : Status::Fail;
  ratio.parameters = {{"terminal", terminal}, {"at_90_percent", at90}, {"t_90_percent", traj.times[k90]}};
  // Diagnostic only: D^alpha of the stored D^alpha u series at the argmax node.
  const std::size_t last = traj.levels() - 1;
  std::size_t top = 0;
  for (std::size_t i = 0; i < width; ++i)
    if (traj.u.value(last, i) > traj.u.value(last, top)) top = i;
  ratio.parameters["nested_caputo_at_argmax"] = {
      {"x", traj.grid.x(top)},
      {"value", caputo::caputo_l1_apply(traj.caputo.series(top), traj.times, static_cast<int>(last), traj.alpha)},
      {"note", "diagnostic; no continuous order-2alpha meaning claimed"}};
  return {w, growth, ratio};
}

CheckEntry verify_commutation(const Trajectory& traj, double rel_tol) {
  CheckEntry e;
  e.name = "moment_caputo_commutation";
  // Both sides in extended precision from the same stored levels; near the
  // quench b_nn |u| exceeds |D u| by orders of magnitude, so a double moment
  // series would lose the comparison to rounding alone.
  const std::vector<double> w = spectral::simpson_weights(traj.grid);
  auto moment = [&](std::span<const double> v) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < v.size(); ++i) acc += static_cast<long double>(w[i]) * traj.phi1[i] * v[i];
    return acc;
  };
  std::vector<long double> y(traj.levels());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = moment(traj.u.level(k));

  double worst = 0.0;
  std::optional<Witness> at;
  // Compressed-history rows differ from the L1 sum by the SOE tolerance;
  // rebuild them from the stored levels so both sides use the same weights.
  std::vector<double> row(traj.grid.size());
  for (std::size_t n = 1; n < traj.levels(); ++n) {
    std::span<const double> rows = traj.caputo.level(n);
    if (traj.soe) {
      caputo::caputo_l1_apply_all(traj.u, traj.times, static_cast<int>(n), traj.alpha, row);
      row.back() = 0.0;
      rows = row;
    }
    const long double lhs = moment(rows);
    const long double rhs = caputo::caputo_l1_apply_wide(y, traj.times, static_cast<int>(n), traj.alpha);
    const long double scale = std::max({std::abs(lhs), std::abs(rhs), static_cast<long double>(std::numeric_limits<double>::min())});
    const double rel = static_cast<double>(std::abs(lhs - rhs) / scale);
    if (rel > worst) {
      worst = rel;
      at = Witness{0.0, traj.times[n]};
    }
  }
  e.status = worst <= rel_tol ? Status::Pass : Status::Fail;
  e.margin = rel_tol - worst;
  if (e.status == Status::Fail) e.witness = at;
  e.parameters = {{"max_relative_difference", worst}, {"rel_tol", rel_tol}, {"rows_rebuilt", traj.soe}};
  return e;
}

CheckEntry verify_localization(const solver::RunResult& run) {
  CheckEntry e;
  e.name = "localization";
  const auto& loc = run.report.localization;
  const Trajectory& traj = run.trajectory;
  const double L = traj.grid.length();
  const double dx = traj.grid.dx();
  e.parameters = {{"x0", loc.x0}, {"x1", loc.x1}, {"touches_origin", loc.touches_origin},
                  {"touches_L", loc.touches_end}, {"empty", loc.empty}};
  if (!run.report.quenched) {
    e.status = Status::NotApplicable;
    e.parameters["reason"] = "run did not quench";
    return e;
  }
  double inside = std::numeric_limits<double>::infinity();
  const std::size_t steps = traj.levels() - 1;
  const std::size_t first = traj.levels() - std::max<std::size_t>(1, (steps + 4) / 5);
  for (std::size_t n = first; n < traj.levels(); ++n) {
    const double x = traj.monitors.argmax_x[n];
    const double m = std::min(x - loc.x0, loc.x1 - x);
    if (m < inside) {
      inside = m;
      if (m < 0.0) e.witness = Witness{x, traj.times[n]};
    }
  }
  const double end_margin = (L - 2.0 * dx) - loc.x1;
  e.margin = std::min(end_margin, inside);
  e.status = (!loc.empty && !loc.touches_end && end_margin >= 0.0 && inside >= 0.0) ? Status::Pass : Status::Fail;
  e.parameters["end_margin"] = end_margin;
  e.parameters["argmax_window_steps"] = traj.levels() - first;
  if (loc.touches_origin) e.parameters["flag"] = "x0 = 0 at the Neumann end";
  return e;
}

}  // namespace fracquench::theory
