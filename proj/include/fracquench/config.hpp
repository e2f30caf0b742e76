#pragma once

#include "fracquench/solver.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace fracquench::config {

/// Malformed or invalid configuration; the message names the line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceConfig {
  std::string family = "reciprocal";  // reciprocal | zero | constant | affine
  double kappa = 1.0;
  double p = 1.0;
  double slope = 0.0;
  bool operator==(const SourceConfig&) const = default;
};

struct InitialConfig {
  std::string family = "zero";  // zero | bump
  double amplitude = 0.0;
  bool operator==(const InitialConfig&) const = default;
};

struct GridConfig {
  int nx = 64;
  bool operator==(const GridConfig&) const = default;
};

struct TimeConfig {
  std::string policy = "graded";  // graded | uniform
  double dt0 = 1e-3;
  double r = 0.0;  // 0 selects 2 - alpha
  double t_max = 10.0;
  double increment_cap = 0.05;
  double dt_min_factor = 1e-12;
  bool soe = false;
  double soe_tol = 1e-8;
  bool operator==(const TimeConfig&) const = default;
};

struct DetectConfig {
  double eps_q = 0.0;  // 0 selects 0.01 u_star
  double c_tilde = 0.9;
  bool operator==(const DetectConfig&) const = default;
};

/// Verification windows as fractions of L and of the detected time.
struct VerifyConfig {
  int refinements = 2;          // extra tied-refinement runs for the blow-up growth check
  double theta = 0.5;           // delta = theta * c1_floor / f(c2_loc)
  double floor_x0 = 0.25, floor_x1 = 0.75, floor_t0 = 0.1;
  double eta = 0.5;             // blow-up window starts at eta * T
  double coupling_tol = 1e-9;
  double commutation_tol = 1e-12;
  bool operator==(const VerifyConfig&) const = default;
};

struct RunConfig {
  double alpha = 0.5;
  double length = 4.0;
  double u_star = 1.0;
  SourceConfig source;
  InitialConfig u0;
  GridConfig grid;
  TimeConfig time;
  DetectConfig detect;
  VerifyConfig verify;
  std::string output = "out";
  bool deterministic = true;

  bool operator==(const RunConfig&) const = default;

  solver::ProblemSpec problem() const;
  SpatialGrid spatial_grid() const;
  solver::TimeControl time_control() const;
  solver::DetectControl detect_control() const;
  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

struct SweepConfig {
  std::vector<double> alpha, length, kappa;
  RunConfig base;
  int width = 1;
  std::string output = "sweep";

  bool operator==(const SweepConfig&) const = default;
  std::size_t cells() const { return alpha.size() * length.size() * kappa.size(); }
  /// Cell i in row-major order over (alpha, L, kappa).
  RunConfig cell(std::size_t i) const;
  void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SweepConfig& c);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// Parses JSON text; syntax errors report line and column.
nlohmann::json parse_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::string& path);
SweepConfig load_sweep_config(const std::string& path);

}  // namespace fracquench::config
