#pragma once

#include "fracquench/config.hpp"
#include "fracquench/theory.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fracquench::experiment {

/// Tied refinement level k: dt0 * 2^{-k r}, increment cap * 2^{-k},
/// eps_q * 4^{-k}, dt_min factor * 1000^{-k}.
struct Refinement {
  solver::TimeControl time;
  solver::DetectControl detect;
};
Refinement refine(const config::RunConfig& c, int k);

struct LevelSummary {
  int level = 0;
  double dt0 = 0.0, eps_q = 0.0;
  solver::QuenchReport report;
};

struct Outcome {
  explicit Outcome(solver::RunResult run) : base(std::move(run)) {}

  config::RunConfig config;
  solver::ProblemSpec spec;
  solver::RunResult base;
  std::vector<LevelSummary> family;  // base run first
  theory::GrowthCertificate cert;
  double lambda1 = 0.0;
  double y0 = 0.0;
  bool criterion = false;
  std::optional<double> t_bound;
  std::optional<theory::MomentCurve> curve;
  std::optional<theory::MomentBudget> budget;
  theory::VerificationReport verify;
};

/// Aitken extrapolation of three tied-refinement estimates; empty when the
/// sequence is not contracting.
std::optional<double> richardson(double t0, double t1, double t2);

/// Runs the configured problem, the reference and refinement runs the checks
/// need, and every applicable check.
Outcome execute(const config::RunConfig& c);

nlohmann::ordered_json quench_report_json(const Outcome& o);

/// Writes exactly: trajectory.csv, profile_000.csv, profile_001.csv,
/// quench_report.json, verify_report.json.
void write_artifacts(const Outcome& o, const std::filesystem::path& dir);

/// Exit 0 on completion regardless of check outcomes.
int cmd_run(const std::string& config_path, const std::optional<std::string>& out, std::ostream& log,
            bool print_checks = false);

struct SweepRow {
  double alpha = 0.0, length = 0.0, kappa = 0.0;
  bool criterion = false, quenched = false;
  double t_lo = 0.0, t_hi = 0.0;
  std::optional<double> t_bound;
  double x_star = 0.0;
  std::string flag;  // CRITICAL, BOUND_EXCEEDED, ERROR or empty
  std::string verdict;
  std::string error;
};

std::vector<SweepRow> run_sweep(const config::SweepConfig& c, const std::filesystem::path& dir, int width);
std::string sweep_csv(const std::vector<SweepRow>& rows);
int cmd_sweep(const std::string& config_path, const std::optional<std::string>& out, std::optional<int> width,
              std::ostream& log);

struct ConvergenceRow {
  std::string study;
  int level = 0;
  double step = 0.0;
  double error = 0.0;
  std::optional<double> order;
};

/// Max error of the discrete derivative of t^2 on [0, 1], uniform mesh.
double caputo_t2_error(double alpha, int steps);
/// Max error at t = 0.8 of the manufactured solution t^2 cos(pi x / 2),
/// isolating the time error (spatially exact forcing) or the space error.
double manufactured_error(double alpha, int nx, int steps, bool time_study);
/// kind: caputo | solver | mlf.
std::vector<ConvergenceRow> convergence(const std::string& kind, double alpha, int levels);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

/// Extended-precision power series of E_{alpha,beta}(z).
double ml_series_reference(double alpha, double beta, double z);

/// "%.17g" formatting used by every emitted number.
std::string fmt(double v);

}  // namespace fracquench::experiment
