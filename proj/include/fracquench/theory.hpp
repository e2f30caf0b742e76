#pragma once

#include "fracquench/solver.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracquench::theory {

enum class CertMethod { Analytic, Sampled };

/// f(u) >= c1 + c2 u on [0, u_star).
struct GrowthCertificate {
  double c1 = 0.0;
  double c2 = 0.0;
  double u_lo = 0.0;
  double u_hi = 1.0;
  CertMethod method = CertMethod::Sampled;
  bool valid = false;  // c1 > 0, c2 > 0 and the inequality held on the samples
  std::string note;
};

const char* cert_method_name(CertMethod m);

/// Tangent line of the convex source at u = 0, checked on a dense sample.
GrowthCertificate certify_growth(const solver::ProblemSpec& spec);

enum class Status { Pass, Fail, NotApplicable };
const char* status_name(Status s);

struct Witness {
  double x = 0.0;
  double t = 0.0;
};

struct CheckEntry {
  std::string name;
  Status status = Status::NotApplicable;
  double margin = 0.0;
  std::optional<Witness> witness;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
};

struct VerificationReport {
  std::vector<CheckEntry> entries;

  void add(CheckEntry e) { entries.push_back(std::move(e)); }
  /// True when no entry failed.
  bool verdict() const;
  const CheckEntry* find(const std::string& name) const;
  nlohmann::ordered_json to_json() const;
};

/// Hypotheses on f and u0: f(0) > 0; f, f', f'' >= 0 on samples of
/// [0, u_star); divergence at u_star; a growth certificate; boundary data.
VerificationReport validate_assumptions(const solver::ProblemSpec& spec, const SpatialGrid& grid);

/// lambda1^2 < c2. True guarantees quenching; false is inconclusive.
bool quench_criterion(const GrowthCertificate& cert, double lambda1);

/// c1 * int_0^t tau^{a-1} E_{a,a}(k tau^a) dtau + y0 E_a(k t^a), k = c2 - lambda1^2.
double lower_bound_curve(double alpha, const GrowthCertificate& cert, double lambda1, double y0, double t);
/// The same expression without the c1 factor on the integral term.
double lower_bound_curve_literal(double alpha, const GrowthCertificate& cert, double lambda1, double y0,
                                 double t);

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Time at which lower_bound_curve reaches u_star (relative tolerance 1e-10).
double quench_time_upper_bound(double alpha, const GrowthCertificate& cert, double lambda1, double y0,
                               double u_star);

/// Budget for the moment check: 2 x self-convergence error of y + quadrature bound.
struct MomentBudget {
  double self_convergence = 0.0;
  double quadrature = 0.0;
  double tol_b() const { return 2.0 * self_convergence + quadrature; }
};

/// max_n |y(t_n) - y_fine(t_n)|, the fine series linearly interpolated in time.
double moment_self_convergence(const solver::Trajectory& coarse, const solver::Trajectory& fine);
/// Largest Simpson error estimate over the stored levels.
double moment_quadrature_bound(const solver::Trajectory& traj);

struct MomentCurve {
  std::vector<double> bound, margin;  // per stored level
};

CheckEntry verify_moment_bound(const solver::Trajectory& traj, const solver::ProblemSpec& spec,
                               const GrowthCertificate& cert, const MomentBudget& budget,
                               MomentCurve* curve = nullptr);

/// T_detect <= quench_time_upper_bound when the criterion holds.
CheckEntry verify_quench_time(const solver::QuenchReport& report, const solver::ProblemSpec& spec,
                              const GrowthCertificate& cert, double y0);

struct Window {
  double x0 = 0.0, x1 = 0.0;
  double t0 = 0.0, t1 = 0.0;  // [t0, t1)
};

/// Monotone-in-time nodes, positive discrete D^alpha u at interior nodes,
/// and the positivity floor over `window`. Returns three entries.
std::vector<CheckEntry> verify_monotonicity(const solver::Trajectory& traj,
                                            const solver::LowerSolutionReport& lower,
                                            const Window& window, double* floor_out = nullptr);

struct DeltaPolicy {
  double theta = 0.5;  // delta = theta * c1_floor / f(c2_loc)
};

/// Discrete analogue of w = D^alpha u - delta f(u) >= 0 on the window, plus
/// growth of the terminal maximum under refinement. `terminal_max` lists the
/// terminal max D^alpha u of the base run followed by refined runs.
std::vector<CheckEntry> verify_blowup_coupling(const solver::RunResult& run, const solver::ProblemSpec& spec,
                                               const Window& window, const DeltaPolicy& policy,
                                               std::span<const double> terminal_max, double tol = 1e-9);

/// Simpson moment of the discrete Caputo rows against the L1 derivative of
/// the moment series, at every level n >= 1.
CheckEntry verify_commutation(const solver::Trajectory& traj, double rel_tol = 1e-12);

/// Localization of the exceedance set: x1 <= L - 2 dx; argmax inside
/// [x0, x1] over the final 20% of steps.
CheckEntry verify_localization(const solver::RunResult& run);

}  // namespace fracquench::theory
