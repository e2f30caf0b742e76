#include "fracquench/solver.hpp"

#include "fracquench/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fracquench::solver {

namespace {

constexpr double kNewtonTol = 1e-13;
constexpr int kNewtonMaxIts = 40;

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

const char* source_family_name(SourceFamily f) {
  switch (f) {
    case SourceFamily::Reciprocal: return "reciprocal";
    case SourceFamily::Zero: return "zero";
    case SourceFamily::Constant: return "constant";
    case SourceFamily::Affine: return "affine";
    case SourceFamily::User: return "user";
  }
  return "unknown";
}

double Source::value(double u, double u_star) const {
  switch (family) {
    case SourceFamily::Reciprocal: return kappa * std::pow(u_star - u, -p);
    case SourceFamily::Zero: return 0.0;
    case SourceFamily::Constant: return kappa;
    case SourceFamily::Affine: return kappa + slope * u;
    case SourceFamily::User: return user_f(u);
  }
  return 0.0;
}

double Source::derivative(double u, double u_star) const {
  switch (family) {
    case SourceFamily::Reciprocal: return kappa * p * std::pow(u_star - u, -p - 1.0);
    case SourceFamily::Zero:
    case SourceFamily::Constant: return 0.0;
    case SourceFamily::Affine: return slope;
    case SourceFamily::User: return user_df(u);
  }
  return 0.0;
}

double Source::second_derivative(double u, double u_star) const {
  switch (family) {
    case SourceFamily::Reciprocal: return kappa * p * (p + 1.0) * std::pow(u_star - u, -p - 2.0);
    case SourceFamily::Zero:
    case SourceFamily::Constant:
    case SourceFamily::Affine: return 0.0;
    case SourceFamily::User: return user_d2f ? user_d2f(u) : std::numeric_limits<double>::quiet_NaN();
  }
  return 0.0;
}

double InitialDatum::value(double x, double length) const {
  if (family == InitialFamily::Zero) return 0.0;
  if (x >= length) return 0.0;
  return amplitude * std::cos(std::numbers::pi * x / (2.0 * length));
}

double InitialDatum::derivative(double x, double length) const {
  if (family == InitialFamily::Zero) return 0.0;
  const double k = std::numbers::pi / (2.0 * length);
  return -amplitude * k * std::sin(k * x);
}

double InitialDatum::second_derivative(double x, double length) const {
  if (family == InitialFamily::Zero) return 0.0;
  const double k = std::numbers::pi / (2.0 * length);
  return -amplitude * k * k * std::cos(k * x);
}

void ProblemSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha", "must lie in (0, 1)");
  if (!(length > 0.0)) fail("L", "must be > 0");
  if (!(u_star > 0.0)) fail("u_star", "must be > 0");
  switch (source.family) {
    case SourceFamily::Reciprocal:
      if (!(source.kappa > 0.0)) fail("source.kappa", "must be > 0");
      if (!(source.p >= 1.0)) fail("source.p", "must be >= 1");
      break;
    case SourceFamily::User:
      if (!source.user_f || !source.user_df) fail("source", "user family needs f and f'");
      break;
    default: break;
  }
  if (u0.family == InitialFamily::Bump && !(u0.amplitude >= 0.0 && u0.amplitude < u_star))
    fail("u0.amplitude", "must lie in [0, u_star)");
}

double TimeControl::grading(double alpha) const { return r > 0.0 ? r : 2.0 - alpha; }

double TimeControl::nominal(std::size_t n, double alpha) const {
  const double k = static_cast<double>(n);
  return policy == MeshPolicy::Uniform ? dt0 * k : dt0 * std::pow(k, grading(alpha));
}

void Tridiagonal::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * u[i];
    if (i > 0) v += lower[i] * u[i - 1];
    if (i + 1 < n) v += upper[i] * u[i + 1];
    out[i] = v;
  }
}

Tridiagonal assemble_spatial_operator(const SpatialGrid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.intervals());
  const double inv = 1.0 / (grid.dx() * grid.dx());
  Tridiagonal t{std::vector<double>(n, inv), std::vector<double>(n, -2.0 * inv),
                std::vector<double>(n, inv)};
  t.lower[0] = 0.0;
  t.upper[0] = 2.0 * inv;
  t.upper[n - 1] = 0.0;  // u_nx = 0
  return t;
}

void solve_tridiagonal(const Tridiagonal& t, std::span<double> rhs) {
  const std::size_t n = t.size();
  std::vector<double> c(n);
  double denom = t.diag[0];
  c[0] = t.upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = t.diag[i] - t.lower[i] * c[i - 1];
    c[i] = t.upper[i] / denom;
    rhs[i] = (rhs[i] - t.lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

Stepper::Stepper(const ProblemSpec& spec, const SpatialGrid& grid, const TimeControl& time)
    : spec_(spec),
      grid_(grid),
      time_(time),
      op_(assemble_spatial_operator(grid)),
      memory_(spec.alpha, grid.size(),
              time.soe ? std::optional<caputo::SoeModes>(caputo::soe_compress(
                             spec.alpha, time.dt_min_factor * time.t_max, time.t_max, time.soe_tol))
                       : std::nullopt),
      hist_(grid.size()),
      rhs_(grid.size()),
      trial_(grid.size()),
      caputo_(grid.size()),
      work_(grid.size()) {
  std::vector<double> u0(grid.size());
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = spec.u0.value(grid.x(i), grid.length());
  u0.back() = 0.0;
  memory_.commit(0.0, u0);
}

// Newton on F(u) = (b I - A) u + hist - f(u) - g, started from the
// semi-implicit solve with the source lagged at the previous level.
bool Stepper::solve(double t, std::span<double> u) {
  const std::size_t n = static_cast<std::size_t>(grid_.intervals());
  const double b = memory_.local_coefficient(t);
  const auto prev = current();
  const double u_star = spec_.u_star;

  std::vector<double> g(n, 0.0);
  if (spec_.forcing)
    for (std::size_t i = 0; i < n; ++i) g[i] = spec_.forcing(grid_.x(i), t);

  jac_ = op_;
  for (std::size_t i = 0; i < n; ++i) {
    jac_.lower[i] = -op_.lower[i];
    jac_.upper[i] = -op_.upper[i];
    jac_.diag[i] = b - op_.diag[i];
  }
  for (std::size_t i = 0; i < n; ++i) u[i] = -hist_[i] + spec_.f(prev[i]) + g[i];
  solve_tridiagonal(jac_, u.first(n));

  bool guess_ok = true;
  for (std::size_t i = 0; i < n; ++i) guess_ok = guess_ok && std::isfinite(u[i]) && u[i] < u_star;
  if (!guess_ok) std::copy(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(n), u.begin());
  u[n] = 0.0;

  Tridiagonal jn = jac_;
  std::vector<double> residual(n), delta(n);
  for (newton_its_ = 1; newton_its_ <= kNewtonMaxIts; ++newton_its_) {
    op_.apply(u.first(n), residual);
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = b * u[i] - residual[i] + hist_[i] - spec_.f(u[i]) - g[i];
      jn.diag[i] = jac_.diag[i] - spec_.df(u[i]);
      delta[i] = -residual[i];
    }
    solve_tridiagonal(jn, delta);
    double step = 1.0;
    for (int halvings = 0;; ++halvings) {
      bool inside = true;
      for (std::size_t i = 0; i < n && inside; ++i) {
        const double v = u[i] + step * delta[i];
        inside = std::isfinite(v) && v < u_star;
      }
      if (inside) break;
      if (halvings == 30) return false;
      step *= 0.5;
    }
    double change = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += step * delta[i];
      change = std::max(change, std::abs(step * delta[i]));
      scale = std::max(scale, std::abs(u[i]));
    }
    if (step == 1.0 && change <= kNewtonTol * scale) return true;
  }
  return false;
}

bool Stepper::try_step(double dt) {
  const double t = time() + dt;
  if (!(t > time())) return false;
  memory_.history_term(t, hist_);
  if (!solve(t, trial_)) return false;

  const auto prev = current();
  const double cap = time_.increment_cap * spec_.u_star;
  double top = -std::numeric_limits<double>::infinity();
  double jump = 0.0;
  for (std::size_t i = 0; i < trial_.size(); ++i) {
    top = std::max(top, trial_[i]);
    jump = std::max(jump, std::abs(trial_[i] - prev[i]));
  }
  if (!(top < spec_.u_star) || jump > cap) return false;

  memory_.derivative_row(t, trial_, caputo_);
  caputo_.back() = 0.0;
  memory_.commit(t, trial_);
  return true;
}

namespace {

void record(Trajectory& traj, double t, std::span<const double> u, std::span<const double> cap) {
  traj.times.push_back(t);
  traj.u.push(u);
  traj.caputo.push(cap);
  const std::size_t k = argmax(u);
  traj.monitors.t.push_back(t);
  traj.monitors.max_u.push_back(u[k]);
  traj.monitors.argmax_x.push_back(traj.grid.x(k));
  traj.monitors.y.push_back(spectral::weighted_moment(u, traj.phi1, traj.grid));
  traj.monitors.max_caputo.push_back(*std::max_element(cap.begin(), cap.end() - 1));
}

}  // namespace

RunResult run(const ProblemSpec& spec, const SpatialGrid& grid, const TimeControl& time,
              const DetectControl& detect) {
  spec.validate();
  if (!(grid.length() == spec.length)) throw std::invalid_argument("grid: L does not match the problem");
  if (!(time.t_max > 0.0) || !(time.dt0 > 0.0)) throw std::invalid_argument("time: t_max and dt0 must be > 0");

  const double eps_q = detect.resolve(spec.u_star);
  if (!(eps_q > 0.0 && eps_q < spec.u_star / 10.0))
    throw std::invalid_argument("detect.eps_q: must lie in (0, u_star/10)");

  RunResult out{Trajectory(grid), QuenchReport{}};
  Trajectory& traj = out.trajectory;
  QuenchReport& rep = out.report;
  traj.alpha = spec.alpha;
  traj.u_star = spec.u_star;
  traj.soe = time.soe;
  traj.phi1 = spectral::first_eigenfunction(grid);
  rep.eps_q = eps_q;

  Stepper stepper(spec, grid, time);
  {
    // t = 0 row of the Caputo series: right-hand side of the equation.
    const auto u0 = stepper.current();
    const Tridiagonal op = assemble_spatial_operator(grid);
    std::vector<double> rhs(grid.size(), 0.0);
    op.apply(u0, rhs);
    for (std::size_t i = 0; i + 1 < rhs.size(); ++i) {
      rhs[i] += spec.f(u0[i]);
      if (spec.forcing) rhs[i] += spec.forcing(grid.x(i), 0.0);
    }
    rhs.back() = 0.0;
    record(traj, 0.0, u0, rhs);
  }

  const double dt_min = time.dt_min_factor * time.t_max;
  const double threshold = spec.u_star - eps_q;
  std::size_t next_nominal = 1;
  double last_dt = std::numeric_limits<double>::infinity();

  while (true) {
    const double t = stepper.time();
    if (t >= time.t_max * (1.0 - 1e-14)) {
      std::ostringstream os;
      os << "t_max reached without quench (max u = " << traj.monitors.max_u.back() << ")";
      rep.refusal_reason = os.str();
      break;
    }
    if (rep.steps >= time.max_steps) {
      rep.refusal_reason = "step budget exhausted before quench or t_max";
      break;
    }
    while (time.nominal(next_nominal, spec.alpha) <= t * (1.0 + 1e-14)) ++next_nominal;
    double dt = std::min(time.nominal(next_nominal, spec.alpha) - t, 2.0 * last_dt);
    dt = std::min(dt, time.t_max - t);

    bool accepted = false;
    while (!accepted) {
      if (dt < dt_min) break;
      accepted = stepper.try_step(dt);
      if (!accepted) {
        ++rep.rejected;
        dt *= 0.5;
      }
    }
    if (!accepted) {
      const double top = traj.monitors.max_u.back();
      if (top < 0.5 * spec.u_star) {
        std::ostringstream os;
        os << "step failure at t = " << t << ": no acceptable step above dt_min = " << dt_min
           << " with max u = " << top;
        throw StepFailure(os.str());
      }
      rep.quenched = true;
      rep.pressure = true;
      rep.t_lo = t;
      rep.t_hi = t + 2.0 * dt_min;
      rep.t_estimate = t;
      rep.x_star = traj.monitors.argmax_x.back();
      break;
    }
    last_dt = dt;
    ++rep.steps;
    record(traj, stepper.time(), stepper.current(), stepper.current_caputo());

    const double top = traj.monitors.max_u.back();
    if (top >= threshold) {
      const std::size_t n = traj.levels() - 1;
      const double t0 = traj.times[n - 1], t1 = traj.times[n];
      const double m0 = traj.monitors.max_u[n - 1];
      rep.quenched = true;
      rep.t_lo = t0;
      rep.t_hi = t1;
      rep.t_estimate = t0 + (t1 - t0) * (threshold - m0) / (top - m0);
      rep.x_star = traj.monitors.argmax_x.back();
      break;
    }
  }
  rep.terminal_max_caputo = traj.monitors.max_caputo.back();
  rep.localization = locate_quench_set(traj, detect.c_tilde * spec.u_star);
  return out;
}

std::optional<Detection> detect_quench(const Trajectory& traj, double eps_q) {
  const double threshold = traj.u_star - eps_q;
  for (std::size_t n = 0; n < traj.levels(); ++n) {
    if (traj.monitors.max_u[n] >= threshold) return Detection{n, traj.times[n], traj.monitors.argmax_x[n]};
  }
  return std::nullopt;
}

Interval locate_quench_set(const Trajectory& traj, double c_tilde) {
  const std::size_t width = traj.grid.size();
  std::size_t lo = width, hi = 0;
  for (std::size_t n = 0; n < traj.levels(); ++n) {
    const auto level = traj.u.level(n);
    for (std::size_t i = 0; i < width; ++i) {
      if (level[i] >= c_tilde) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
  }
  Interval out;
  if (lo == width) {
    const auto last = traj.u.level(traj.levels() - 1);
    lo = hi = argmax(last);
    out.empty = true;
  }
  out.i0 = lo;
  out.i1 = hi;
  out.x0 = traj.grid.x(lo);
  out.x1 = traj.grid.x(hi);
  out.touches_origin = !out.empty && lo == 0;
  out.touches_end = !out.empty && hi + 1 == width;
  return out;
}

LowerSolutionReport check_lower_solution(const ProblemSpec& spec, const SpatialGrid& grid, double tol) {
  LowerSolutionReport rep;
  rep.tol = tol;
  rep.residual.resize(grid.size());
  rep.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double r = -spec.u0.second_derivative(x, spec.length) - spec.f(spec.u0.value(x, spec.length));
    rep.residual[i] = r;
    if (r > rep.worst) {
      rep.worst = r;
      rep.worst_x = x;
    }
  }
  rep.lower = rep.worst <= tol;
  rep.strict = std::any_of(rep.residual.begin(), rep.residual.end(), [&](double r) { return r < -tol; });
  return rep;
}

}  // namespace fracquench::solver
