#include "fracquench/experiment.hpp"

#include "fracquench/mlf.hpp"
#include "fracquench/spectral.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace fracquench::experiment {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using solver::RunResult;
using theory::CheckEntry;
using theory::Status;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json num(const std::optional<double>& v) { return v ? num(*v) : ordered_json(nullptr); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(p.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(p.string() + ": write failed");
}

CheckEntry criterion_entry(const Outcome& o) {
  CheckEntry e;
  e.name = "quench_criterion";
  e.margin = o.cert.c2 - o.lambda1 * o.lambda1;
  e.status = o.criterion ? Status::Pass : Status::NotApplicable;
  e.parameters = {{"lambda1_sq", o.lambda1 * o.lambda1},
                  {"c2", o.cert.c2},
                  {"criterion", o.criterion},
                  {"meaning", o.criterion ? "quenching guaranteed" : "inconclusive"}};
  return e;
}

CheckEntry lower_solution_entry(const solver::LowerSolutionReport& r) {
  CheckEntry e;
  e.name = "initial_lower_solution";
  e.margin = -r.worst;
  e.status = r.lower ? Status::Pass : Status::Fail;
  if (!r.lower) e.witness = theory::Witness{r.worst_x, 0.0};
  e.parameters = {{"strict", r.strict}, {"max_residual", r.worst}, {"tol", r.tol}};
  return e;
}

}  // namespace

Refinement refine(const config::RunConfig& c, int k) {
  Refinement r{c.time_control(), c.detect_control()};
  const double grading = r.time.policy == solver::MeshPolicy::Uniform ? 1.0 : r.time.grading(c.alpha);
  r.time.dt0 *= std::pow(2.0, -k * grading);
  r.time.increment_cap *= std::pow(2.0, -k);
  r.time.dt_min_factor *= std::pow(1000.0, -k);
  r.detect.eps_q = r.detect.resolve(c.u_star) * std::pow(4.0, -k);
  return r;
}

std::optional<double> richardson(double t0, double t1, double t2) {
  const double d1 = t1 - t0, d2 = t2 - t1;
  if (d1 == 0.0) return t2;
  const double ratio = d2 / d1;
  if (!(std::abs(ratio) < 0.9) || d1 - d2 == 0.0) return std::nullopt;
  return t2 - d2 * d2 / (d2 - d1);
}

Outcome execute(const config::RunConfig& c) {
  c.validate();
  const solver::ProblemSpec spec = c.problem();
  const SpatialGrid grid = c.spatial_grid();
  Outcome o(solver::run(spec, grid, c.time_control(), c.detect_control()));
  o.config = c;
  o.spec = spec;
  const solver::Trajectory& traj = o.base.trajectory;
  const solver::QuenchReport& rep = o.base.report;

  o.cert = theory::certify_growth(o.spec);
  o.lambda1 = spectral::eigenvalue(1, c.length);
  o.y0 = traj.monitors.y.front();
  o.criterion = o.cert.valid && theory::quench_criterion(o.cert, o.lambda1);
  if (o.criterion) o.t_bound = theory::quench_time_upper_bound(c.alpha, o.cert, o.lambda1, o.y0, c.u_star);

  o.family.push_back({0, c.time.dt0, rep.eps_q, rep});
  std::vector<double> terminal{rep.terminal_max_caputo};
  if (rep.quenched) {
    for (int k = 1; k <= c.verify.refinements; ++k) {
      const Refinement r = refine(c, k);
      const RunResult rr = solver::run(o.spec, grid, r.time, r.detect);
      o.family.push_back({k, r.time.dt0, rr.report.eps_q, rr.report});
      terminal.push_back(rr.report.terminal_max_caputo);
    }
    if (o.family.size() >= 3) {
      const auto t = [&](std::size_t i) { return o.family[i].report.t_estimate; };
      o.base.report.t_richardson = richardson(t(0), t(1), t(2));
      o.family[0].report.t_richardson = o.base.report.t_richardson;
    }
  }

  // Reference run for the moment budget: twice the nodes, two time refinements.
  config::RunConfig ref_cfg = c;
  ref_cfg.grid.nx *= 2;
  solver::TimeControl ref_time = refine(ref_cfg, 2).time;
  ref_time.increment_cap = c.time.increment_cap / 2.0;
  ref_time.dt_min_factor = c.time.dt_min_factor;
  const RunResult ref = solver::run(o.spec, ref_cfg.spatial_grid(), ref_time, c.detect_control());

  theory::VerificationReport& v = o.verify;
  for (auto& e : theory::validate_assumptions(o.spec, grid).entries) v.add(std::move(e));
  const solver::LowerSolutionReport lower = solver::check_lower_solution(o.spec, grid);
  v.add(lower_solution_entry(lower));
  v.add(criterion_entry(o));

  o.budget = theory::MomentBudget{theory::moment_self_convergence(traj, ref.trajectory),
                                  theory::moment_quadrature_bound(traj)};
  theory::MomentCurve curve;
  CheckEntry moment = theory::verify_moment_bound(traj, o.spec, o.cert, *o.budget, &curve);
  if (moment.status != Status::NotApplicable) o.curve = std::move(curve);
  v.add(std::move(moment));
  v.add(theory::verify_quench_time(o.base.report, o.spec, o.cert, o.y0));

  const double T = rep.quenched ? rep.t_hi : traj.times.back();
  const theory::Window floor_window{c.verify.floor_x0 * c.length, c.verify.floor_x1 * c.length,
                                    c.verify.floor_t0 * T, T};
  for (auto& e : theory::verify_monotonicity(traj, lower, floor_window)) v.add(std::move(e));

  const theory::Window blow_window{rep.localization.x0, rep.localization.x1, c.verify.eta * T, T};
  for (auto& e : theory::verify_blowup_coupling(o.base, o.spec, blow_window, theory::DeltaPolicy{c.verify.theta},
                                                terminal, c.verify.coupling_tol))
    v.add(std::move(e));
  v.add(theory::verify_commutation(traj, c.verify.commutation_tol));
  v.add(theory::verify_localization(o.base));
  return o;
}

ordered_json quench_report_json(const Outcome& o) {
  const solver::QuenchReport& r = o.base.report;
  ordered_json j;
  j["quenched"] = r.quenched;
  j["detection"] = r.quenched ? (r.pressure ? "step_pressure" : "threshold") : "none";
  j["T_bracket"] = r.quenched ? ordered_json{r.t_lo, r.t_hi} : ordered_json(nullptr);
  j["T_estimate"] = r.quenched ? num(r.t_estimate) : ordered_json(nullptr);
  j["T_richardson"] = num(r.t_richardson);
  j["x_star"] = r.quenched ? num(r.x_star) : ordered_json(nullptr);
  j["x_star_at_neumann_end"] = r.quenched && r.x_star == 0.0;
  j["eps_q"] = r.eps_q;
  j["terminal_max_caputo"] = num(r.terminal_max_caputo);
  j["localization"] = {{"c_tilde", o.config.detect.c_tilde * o.config.u_star},
                       {"x0", r.localization.x0},
                       {"x1", r.localization.x1},
                       {"empty", r.localization.empty},
                       {"touches_origin", r.localization.touches_origin},
                       {"touches_L", r.localization.touches_end}};
  j["refusal_reason"] = r.quenched ? ordered_json(nullptr) : ordered_json(r.refusal_reason);
  j["steps"] = r.steps;
  j["rejected_steps"] = r.rejected;
  j["t_final"] = o.base.trajectory.times.back();
  j["lambda1_sq"] = o.lambda1 * o.lambda1;
  j["certificate"] = {{"c1", o.cert.c1},
                      {"c2", o.cert.c2},
                      {"method", theory::cert_method_name(o.cert.method)},
                      {"valid", o.cert.valid},
                      {"note", o.cert.note}};
  j["criterion"] = o.criterion;
  j["T_upper_bound"] = num(o.t_bound);
  j["y0"] = o.y0;
  if (o.budget)
    j["moment_budget"] = {{"tol_b", o.budget->tol_b()},
                          {"self_convergence", o.budget->self_convergence},
                          {"quadrature", o.budget->quadrature}};
  ordered_json fam = ordered_json::array();
  for (const auto& l : o.family) {
    fam.push_back({{"level", l.level},
                   {"dt0", l.dt0},
                   {"eps_q", l.eps_q},
                   {"quenched", l.report.quenched},
                   {"T_bracket", {l.report.t_lo, l.report.t_hi}},
                   {"T_estimate", l.report.t_estimate},
                   {"terminal_max_caputo", num(l.report.terminal_max_caputo)},
                   {"steps", l.report.steps}});
  }
  j["refinement"] = std::move(fam);
  // The output location is not part of the experiment; omit it so reruns elsewhere match.
  ordered_json cfg = config::to_json(o.config);
  cfg.erase("output");
  j["config"] = std::move(cfg);
  return j;
}

void write_artifacts(const Outcome& o, const fs::path& dir) {
  fs::create_directories(dir);
  const solver::Trajectory& tr = o.base.trajectory;
  const auto& m = tr.monitors;
  std::string csv = "n,t,max_u,argmax_x,y,max_caputo,lower_bound,margin\n";
  for (std::size_t n = 0; n < tr.levels(); ++n) {
    csv += std::to_string(n) + "," + fmt(m.t[n]) + "," + fmt(m.max_u[n]) + "," + fmt(m.argmax_x[n]) + "," +
           fmt(m.y[n]) + "," + fmt(m.max_caputo[n]) + ",";
    if (o.curve) csv += fmt(o.curve->bound[n]) + "," + fmt(o.curve->margin[n]);
    else csv += ",";
    csv += "\n";
  }
  write_text(dir / "trajectory.csv", csv);

  auto profile = [&](std::size_t n) {
    std::string s = "t,x,u,caputo\n";
    const auto u = tr.u.level(n), d = tr.caputo.level(n);
    for (std::size_t i = 0; i < u.size(); ++i)
      s += fmt(tr.times[n]) + "," + fmt(tr.grid.x(i)) + "," + fmt(u[i]) + "," + fmt(d[i]) + "\n";
    return s;
  };
  write_text(dir / "profile_000.csv", profile(0));
  write_text(dir / "profile_001.csv", profile(tr.levels() - 1));
  write_text(dir / "quench_report.json", quench_report_json(o).dump(2) + "\n");
  ordered_json v = o.verify.to_json();
  v["note"] = "unboundedness of the Caputo derivative is checked as growth of the terminal maximum under refinement";
  write_text(dir / "verify_report.json", v.dump(2) + "\n");
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out, std::ostream& log,
            bool print_checks) {
  config::RunConfig c = config::load_run_config(config_path);
  if (out) c.output = *out;
  const Outcome o = execute(c);
  write_artifacts(o, c.output);
  const auto& r = o.base.report;
  if (r.quenched)
    log << "quenched in [" << fmt(r.t_lo) << ", " << fmt(r.t_hi) << "] at x = " << fmt(r.x_star)
        << (r.pressure ? " (step pressure)" : "") << "\n";
  else
    log << "no quench: " << r.refusal_reason << "\n";
  if (o.t_bound) log << "T upper bound " << fmt(*o.t_bound) << "\n";
  if (o.budget) log << "moment budget tol_b = " << fmt(o.budget->tol_b()) << "\n";
  if (print_checks) {
    for (const auto& e : o.verify.entries)
      log << "  " << theory::status_name(e.status) << "  " << e.name << "  margin " << fmt(e.margin) << "\n";
  }
  log << "verdict " << (o.verify.verdict() ? "pass" : "fail") << "; artifacts in " << c.output << "\n";
  return 0;
}

std::vector<SweepRow> run_sweep(const config::SweepConfig& c, const fs::path& dir, int width) {
  c.validate();
  const std::size_t cells = c.cells();
  std::vector<SweepRow> rows(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      config::RunConfig cell = c.cell(i);
      char name[32];
      std::snprintf(name, sizeof name, "cell_%03zu", i);
      cell.output = (dir / name).string();
      SweepRow& row = rows[i];
      row.alpha = cell.alpha;
      row.length = cell.length;
      row.kappa = cell.source.kappa;
      try {
        const Outcome o = execute(cell);
        write_artifacts(o, cell.output);
        const auto& r = o.base.report;
        row.criterion = o.criterion;
        row.quenched = r.quenched;
        row.t_lo = r.t_lo;
        row.t_hi = r.t_hi;
        row.t_bound = o.t_bound;
        row.x_star = r.x_star;
        row.verdict = o.verify.verdict() ? "pass" : "fail";
        if (o.criterion && !r.quenched) row.flag = "CRITICAL";
        else if (o.criterion && o.t_bound && r.t_lo > *o.t_bound) row.flag = "BOUND_EXCEEDED";
      } catch (const std::exception& e) {
        row.flag = "ERROR";
        row.error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(width, static_cast<int>(cells)));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  std::string s = "alpha,L,criterion,quenched,T_bracket_lo,T_bracket_hi,T_upper_bound,x_star,flag,kappa,verdict,error\n";
  for (const auto& r : rows) {
    s += fmt(r.alpha) + "," + fmt(r.length) + "," + (r.criterion ? "true" : "false") + "," +
         (r.quenched ? "true" : "false") + ",";
    s += r.quenched ? fmt(r.t_lo) + "," + fmt(r.t_hi) : std::string(",");
    s += "," + (r.t_bound ? fmt(*r.t_bound) : std::string()) + ",";
    s += r.quenched ? fmt(r.x_star) : std::string();
    s += "," + r.flag + "," + fmt(r.kappa) + "," + r.verdict + "," + (r.error.empty() ? "" : quote(r.error)) + "\n";
  }
  return s;
}

int cmd_sweep(const std::string& config_path, const std::optional<std::string>& out, std::optional<int> width,
              std::ostream& log) {
  config::SweepConfig c = config::load_sweep_config(config_path);
  if (out) c.output = *out;
  if (width) c.width = *width;
  if (c.width < 1) throw config::ConfigError("width: must be >= 1");
  const fs::path dir(c.output);
  fs::create_directories(dir);
  const auto rows = run_sweep(c, dir, c.width);
  write_text(dir / "sweep_summary.csv", sweep_csv(rows));
  std::size_t critical = 0, errors = 0;
  for (const auto& r : rows) {
    critical += r.flag == "CRITICAL" || r.flag == "BOUND_EXCEEDED";
    errors += r.flag == "ERROR";
  }
  log << rows.size() << " cells, " << critical << " critical, " << errors << " errors; summary in "
      << (dir / "sweep_summary.csv").string() << "\n";
  return 0;
}

double caputo_t2_error(double alpha, int steps) {
  const caputo::TimeMesh mesh = caputo::TimeMesh::uniform(1.0, steps);
  std::vector<double> u(mesh.nodes().size());
  for (std::size_t n = 0; n < u.size(); ++n) u[n] = mesh.nodes()[n] * mesh.nodes()[n];
  double worst = 0.0;
  for (int n = 1; n <= steps; ++n) {
    const double got = caputo::caputo_l1_apply(u, mesh.nodes(), n, alpha);
    worst = std::max(worst, std::abs(got - caputo::caputo_exact_power(alpha, 2.0, mesh[n])));
  }
  return worst;
}

double manufactured_error(double alpha, int nx, int steps, bool time_study) {
  using std::numbers::pi;
  const double L = 1.0, t_max = 0.8;
  const double l = pi / (2.0 * L);
  const SpatialGrid grid(L, nx);
  const double h = grid.dx();
  const double mu = -(2.0 - 2.0 * std::cos(l * h)) / (h * h);
  const double dt = t_max / steps;
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1), sq(nodes.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    nodes[n] = dt * static_cast<double>(n);
    sq[n] = nodes[n] * nodes[n];
  }
  solver::ProblemSpec s;
  s.alpha = alpha;
  s.length = L;
  s.u_star = 10.0;
  s.source.family = solver::SourceFamily::Zero;
  if (time_study) {
    // The discrete Laplacian of cos(l x) is mu cos(l x): only the time error remains.
    s.forcing = [=](double x, double t) {
      return (caputo::caputo_exact_power(alpha, 2.0, t) - mu * t * t) * std::cos(l * x);
    };
  } else {
    // The discrete L1 derivative of t^2: only the space error remains.
    s.forcing = [=](double x, double t) {
      const int n = static_cast<int>(std::lround(t / dt));
      const double d = n == 0 ? 0.0 : caputo::caputo_l1_apply(sq, nodes, n, alpha);
      return (d + l * l * t * t) * std::cos(l * x);
    };
  }
  solver::TimeControl tc;
  tc.policy = solver::MeshPolicy::Uniform;
  tc.dt0 = dt;
  tc.t_max = t_max;
  tc.increment_cap = 1.0;
  const RunResult r = solver::run(s, grid, tc, solver::DetectControl{});
  const solver::Trajectory& tr = r.trajectory;
  const auto last = tr.u.level(tr.levels() - 1);
  const double T = tr.times.back();
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    err = std::max(err, std::abs(last[i] - T * T * std::cos(l * grid.x(i))));
  return err;
}

double ml_series_reference(double alpha, double beta, double z) {
  using Real = boost::multiprecision::cpp_bin_float_50;
  const double x = std::pow(std::abs(z), 1.0 / alpha);
  const int terms = std::min(2000, static_cast<int>(std::ceil(4.0 * x / alpha)) + 80);
  Real sum = 0, power = 1;
  const Real a(alpha), b(beta), w(z);
  for (int k = 0; k < terms; ++k) {
    const Real arg = a * k + b;
    if (!(arg <= 0 && arg == boost::multiprecision::floor(arg))) sum += power / boost::multiprecision::tgamma(arg);
    power *= w;
  }
  return static_cast<double>(sum);
}

namespace {

void add_orders(std::vector<ConvergenceRow>& rows, std::size_t from) {
  for (std::size_t i = from + 1; i < rows.size(); ++i)
    rows[i].order = std::log(rows[i - 1].error / rows[i].error) / std::log(rows[i - 1].step / rows[i].step);
}

}  // namespace

std::vector<ConvergenceRow> convergence(const std::string& kind, double alpha, int levels) {
  if (levels < 2) throw std::invalid_argument("levels: need at least 2");
  std::vector<ConvergenceRow> rows;
  if (kind == "caputo") {
    for (int k = 0; k < levels; ++k) {
      const int steps = 64 << k;
      rows.push_back({"caputo", k, 1.0 / steps, caputo_t2_error(alpha, steps), std::nullopt});
    }
    add_orders(rows, 0);
  } else if (kind == "solver") {
    for (int k = 0; k < levels; ++k) {
      const int steps = 40 << k;
      rows.push_back({"time", k, 0.8 / steps, manufactured_error(alpha, 16, steps, true), std::nullopt});
    }
    add_orders(rows, 0);
    const std::size_t from = rows.size();
    for (int k = 0; k < levels; ++k) {
      const int nx = 16 << k;
      rows.push_back({"space", k, 1.0 / nx, manufactured_error(alpha, nx, 20, false), std::nullopt});
    }
    add_orders(rows, from);
  } else if (kind == "mlf") {
    // Deviation from the series reference on a fixed grid, one row per alpha.
    const int na = std::max(levels, 2);
    for (int k = 0; k < na; ++k) {
      const double a = 0.2 + 0.8 * k / (na - 1);
      double worst = 0.0;
      for (double b : {0.5, 1.0, 1.5, 2.0}) {
        for (int i = 0; i <= 40; ++i) {
          const double z = -10.0 + 0.5 * i;
          if (std::pow(std::abs(z), 1.0 / a) > 40.0) continue;  // beyond the reference's digits
          const double ref = ml_series_reference(a, b, z);
          const double got = mlf::mittag_leffler({a, b, z});
          const double scale = std::max(std::abs(ref), 1e-300);
          worst = std::max(worst, std::abs(got - ref) / scale);
        }
      }
      rows.push_back({"mlf", k, a, worst, std::nullopt});
    }
  } else {
    throw std::invalid_argument("kind: expected caputo, solver or mlf, got '" + kind + "'");
  }
  return rows;
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::string s = "study,level,step,error,observed_order\n";
  for (const auto& r : rows)
    s += r.study + "," + std::to_string(r.level) + "," + fmt(r.step) + "," + fmt(r.error) + "," +
         (r.order ? fmt(*r.order) : std::string()) + "\n";
  return s;
}

}  // namespace fracquench::experiment
