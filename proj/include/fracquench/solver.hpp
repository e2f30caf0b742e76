#pragma once

#include "fracquench/caputo.hpp"
#include "fracquench/grid.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracquench::solver {

enum class SourceFamily { Reciprocal, Zero, Constant, Affine, User };

const char* source_family_name(SourceFamily f);

/// Nonlinear source f(u).
///   Reciprocal: kappa / (u_star - u)^p     (kappa > 0, p >= 1)
///   Zero:       0
///   Constant:   kappa
///   Affine:     kappa + slope * u
///   User:       caller-supplied f, f' and f''
struct Source {
  SourceFamily family = SourceFamily::Reciprocal;
  double kappa = 1.0;
  double p = 1.0;
  double slope = 0.0;
  std::function<double(double)> user_f, user_df, user_d2f;

  double value(double u, double u_star) const;
  double derivative(double u, double u_star) const;
  double second_derivative(double u, double u_star) const;
  /// True when f is known to diverge at u_star.
  bool singular() const { return family == SourceFamily::Reciprocal; }
};

enum class InitialFamily { Zero, Bump };

/// u0 = 0, or u0 = amplitude * cos(pi x / 2L) with 0 <= amplitude < u_star.
struct InitialDatum {
  InitialFamily family = InitialFamily::Zero;
  double amplitude = 0.0;

  double value(double x, double length) const;
  double derivative(double x, double length) const;
  double second_derivative(double x, double length) const;
};

struct ProblemSpec {
  double alpha = 0.5;
  double length = 1.0;
  double u_star = 1.0;
  Source source;
  InitialDatum u0;
  /// Optional extra forcing g(x, t) added to the source (manufactured solutions).
  std::function<double(double, double)> forcing;

  double f(double u) const { return source.value(u, u_star); }
  double df(double u) const { return source.derivative(u, u_star); }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class MeshPolicy { Graded, Uniform };

/// Nominal nodes t_n = dt0 * n^r (graded) or dt0 * n (uniform). Accepted
/// steps never jump over a nominal node; the controller halves the trial
/// step on rejection and lets it grow by at most 2x afterwards.
struct TimeControl {
  MeshPolicy policy = MeshPolicy::Graded;
  double dt0 = 1e-3;
  double r = 0.0;  // 0 selects 2 - alpha
  double t_max = 10.0;
  double increment_cap = 0.05;  // fraction of u_star per step
  double dt_min_factor = 1e-12; // dt_min = factor * t_max
  bool soe = false;
  double soe_tol = 1e-8;
  std::size_t max_steps = 2000000;

  double grading(double alpha) const;
  double nominal(std::size_t n, double alpha) const;
};

struct DetectControl {
  double eps_q = 0.0;  // 0 selects 0.01 * u_star
  double c_tilde = 0.9;  // localization threshold as a fraction of u_star
  double resolve(double u_star) const { return eps_q > 0.0 ? eps_q : 0.01 * u_star; }
};

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tridiagonal operator; row i acts as lower[i] u_{i-1} + diag[i] u_i + upper[i] u_{i+1}.
struct Tridiagonal {
  std::vector<double> lower, diag, upper;
  std::size_t size() const { return diag.size(); }
  void apply(std::span<const double> u, std::span<double> out) const;
};

/// Second difference on nodes 0..nx-1. Row 0 is the ghost-point Neumann
/// reduction 2(u_1 - u_0)/dx^2; the Dirichlet node x = L is eliminated.
Tridiagonal assemble_spatial_operator(const SpatialGrid& grid);

/// Solves (T) x = rhs in place by elimination; T must be diagonally dominant
/// or otherwise safe without pivoting.
void solve_tridiagonal(const Tridiagonal& t, std::span<double> rhs);

struct Monitors {
  std::vector<double> t, max_u, argmax_x, y, max_caputo;
};

/// Accepted levels of one run. Level 0 is the initial datum; its Caputo row
/// holds the right-hand side of the equation at t = 0.
struct Trajectory {
  SpatialGrid grid;
  double alpha = 0.5;
  double u_star = 1.0;
  bool soe = false;  // Caputo rows came from the compressed history
  std::vector<double> times;
  caputo::HistoryBuffer u;       // width nx + 1
  caputo::HistoryBuffer caputo;  // discrete D^alpha u per node
  Monitors monitors;
  std::vector<double> phi1;

  explicit Trajectory(const SpatialGrid& g)
      : grid(g), u(g.size()), caputo(g.size()) {}
  std::size_t levels() const { return times.size(); }
};

struct Interval {
  double x0 = 0.0, x1 = 0.0;
  std::size_t i0 = 0, i1 = 0;
  bool empty = false;           // threshold never reached
  bool touches_origin = false;  // flag only (Neumann end)
  bool touches_end = false;     // x1 = L: violation
};

struct QuenchReport {
  bool quenched = false;
  bool pressure = false;  // detection came from the step controller
  double t_lo = 0.0, t_hi = 0.0;
  double x_star = 0.0;
  double terminal_max_caputo = 0.0;
  double t_estimate = 0.0;
  std::optional<double> t_richardson;
  Interval localization;
  std::string refusal_reason;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double eps_q = 0.0;
};

struct RunResult {
  Trajectory trajectory;
  QuenchReport report;
};

/// One accepted step at a time of the implicit L1 scheme
///   (b_nn I - Delta_h) u^n = -sum_{k<n} b_nk u^k + f(u^n) + g(t_n).
class Stepper {
 public:
  Stepper(const ProblemSpec& spec, const SpatialGrid& grid, const TimeControl& time);

  double time() const { return memory_.times().back(); }
  std::span<const double> current() const { return memory_.history().level(memory_.history().size() - 1); }
  std::span<const double> current_caputo() const { return caputo_; }
  const caputo::L1Memory& memory() const { return memory_; }

  /// Tries one step of size dt. On success the level is committed and
  /// true is returned; on rejection nothing changes.
  bool try_step(double dt);
  /// Number of Newton iterations of the last attempt.
  int newton_iterations() const { return newton_its_; }

 private:
  bool solve(double t, std::span<double> u);

  ProblemSpec spec_;
  SpatialGrid grid_;
  TimeControl time_;
  Tridiagonal op_;
  caputo::L1Memory memory_;
  std::vector<double> hist_, rhs_, trial_, caputo_, work_;
  Tridiagonal jac_;
  int newton_its_ = 0;
};

/// Integrates until quench detection, t_max or a step failure.
RunResult run(const ProblemSpec& spec, const SpatialGrid& grid, const TimeControl& time,
              const DetectControl& detect);

struct Detection {
  std::size_t level = 0;
  double t = 0.0;
  double x_star = 0.0;
};

/// First stored level with max u >= u_star - eps_q.
std::optional<Detection> detect_quench(const Trajectory& traj, double eps_q);

/// Smallest node interval outside which u < c_tilde at every stored time.
Interval locate_quench_set(const Trajectory& traj, double c_tilde);

struct LowerSolutionReport {
  std::vector<double> residual;  // -u0'' - f(u0) per node
  bool lower = false;            // all residuals <= tol
  bool strict = false;           // some residual < -tol
  double worst = 0.0;            // max residual
  double worst_x = 0.0;
  double tol = 1e-12;
};

LowerSolutionReport check_lower_solution(const ProblemSpec& spec, const SpatialGrid& grid,
                                         double tol = 1e-12);

}  // namespace fracquench::solver
