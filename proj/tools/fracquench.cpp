#include "fracquench/experiment.hpp"
#include "fracquench/mlf.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace ex = fracquench::experiment;

namespace {

int emit(const std::string& text, const std::optional<std::string>& out) {
  if (!out) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(*out, std::ios::binary | std::ios::trunc);
  if (!f) {
    std::cerr << *out << ": cannot open for writing\n";
    return 1;
  }
  f << text;
  return f ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-fractional quenching: solver, sweeps and analytic checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> width;
  double tol = 1e-10, alpha = 0.5, beta = 1.0, z = 0.0;
  int levels = 5;
  std::string kind;

  auto* run = app.add_subcommand("run", "Run one configuration and write its five artifacts");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides the config)");

  auto* verify = app.add_subcommand("verify", "Run one configuration and print every check");
  verify->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", out, "Output directory (overrides the config)");

  auto* sweep = app.add_subcommand("sweep", "Run an (alpha, L, kappa) sweep");
  sweep->add_option("--config", config_path, "Sweep configuration (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory (overrides the config)");
  sweep->add_option("--width", width, "Concurrent cells")->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("convergence", "Refinement study as CSV");
  conv->add_option("--kind", kind, "caputo | solver | mlf")->required()->check(CLI::IsMember({"caputo", "solver", "mlf"}));
  conv->add_option("--alpha", alpha, "Fractional order")->check(CLI::Range(0.01, 0.99));
  conv->add_option("--levels", levels, "Refinement levels")->check(CLI::Range(2, 12));
  conv->add_option("--out", out, "CSV file (default stdout)");

  auto* cc = app.add_subcommand("caputo-convergence", "L1 order study on t^2 as CSV");
  cc->add_option("--alpha", alpha, "Fractional order")->check(CLI::Range(0.01, 0.99));
  cc->add_option("--levels", levels, "Refinement levels")->check(CLI::Range(2, 12));
  cc->add_option("--out", out, "CSV file (default stdout)");

  auto* ml = app.add_subcommand("mlf", "Evaluate E_{alpha,beta}(z)");
  ml->add_option("--alpha", alpha, "alpha in (0, 1]")->required();
  ml->add_option("--beta", beta, "beta > 0")->required();
  ml->add_option("--z", z, "real argument")->required();
  ml->add_option("--tol", tol, "relative tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return ex::cmd_run(config_path, out, std::cout);
    if (*verify) return ex::cmd_run(config_path, out, std::cout, true);
    if (*sweep) return ex::cmd_sweep(config_path, out, width, std::cout);
    if (*conv) return emit(ex::convergence_csv(ex::convergence(kind, alpha, levels)), out);
    if (*cc) return emit(ex::convergence_csv(ex::convergence("caputo", alpha, levels)), out);
    if (*ml) {
      const fracquench::mlf::MLQuery q{alpha, beta, z};
      const double v = fracquench::mlf::mittag_leffler(q, tol);
      std::cout << ex::fmt(v) << " " << fracquench::mlf::regime_name(fracquench::mlf::select_regime(q)) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
