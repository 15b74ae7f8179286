#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace almsdp::cli;
  CLI::App app{"Augmented Lagrangian solver for linear and least-squares SDPs"};
  app.require_subcommand(1);

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve a JSON problem file");
  solve->add_option("problem", so.problem, "Problem file (JSON)")->required();
  solve->add_option("--c0", so.c0, "Initial penalty parameter")->capture_default_str();
  solve->add_option("--c-growth", so.c_growth, "Penalty growth factor")->capture_default_str();
  solve->add_option("--c-max", so.c_max, "Penalty cap")->capture_default_str();
  solve->add_option("--mode", so.mode, "implementable | bprime-oracle | bpp-only | auto")
      ->check(CLI::IsMember({"implementable", "bprime-oracle", "bpp-only", "auto"}))
      ->capture_default_str();
  solve->add_option("--tol", so.tol, "KKT residual stopping tolerance")->capture_default_str();
  solve->add_option("--max-outer", so.max_outer, "Outer iteration cap")->capture_default_str();
  solve->add_option("--out-csv", so.out_csv, "Per-iteration CSV log");
  solve->add_option("--out-json", so.out_json, "JSON run summary");
  solve->add_option("--seed", so.seed, "Seed for --x0 random")->capture_default_str();
  solve->add_option("--x0", so.x0, "default | zero | identity | xhat | random | file:PATH")
      ->capture_default_str();
  solve->add_option("--fixture-oracle", so.fixture_oracle,
                    "Distance oracle for dist_est: example31 | example32 | none")
      ->capture_default_str();
  solve->add_flag("--fail-on-unattainable", so.fail_on_unattainable,
                  "Stop (exit 3) when the inexactness criteria cannot be certified");
  solve->add_flag("--quiet", so.quiet, "Suppress the iteration table");

  DiagnoseOptions dop;
  double kappa = -1.0;
  auto* diagnose = app.add_subcommand("diagnose", "Rate and rank report for a logged run");
  diagnose->add_option("problem", dop.problem, "Problem file (JSON)");
  diagnose->add_option("--csv", dop.csv, "CSV log written by solve --out-csv")->required();
  diagnose->add_option("--run-json", dop.run_json, "JSON summary written by solve --out-json");
  diagnose->add_option("--kappa", kappa, "Hypothesised subregularity modulus");
  diagnose->add_option("--eta0", dop.eta0, "eta schedule start when no summary is given")
      ->capture_default_str();
  diagnose->add_option("--eta-ratio", dop.eta_ratio, "eta schedule ratio")->capture_default_str();
  diagnose->add_option("--eigtol", dop.eigtol, "Rank tolerance")->capture_default_str();
  diagnose->add_option("--out-json", dop.out_json, "Write the report as JSON");

  std::string demo_name;
  auto* demo = app.add_subcommand("demo", "Built-in end-to-end demonstrations");
  demo->add_option("name", demo_name, "example31 | example32 | perturbation")->required();

  std::string conv_in, conv_out = "-";
  auto* convert = app.add_subcommand("convert", "Convert an SDPA sparse file to JSON");
  convert->add_option("input", conv_in, "SDPA .dat-s file")->required();
  convert->add_option("output", conv_out, "Output JSON path, - for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kError;
  }

  if (*solve) return cmd_solve(so, std::cout, std::cerr);
  if (*diagnose) {
    if (kappa >= 0.0) dop.kappa = kappa;
    return cmd_diagnose(dop, std::cout, std::cerr);
  }
  if (*demo) return cmd_demo(demo_name, std::cout, std::cerr);
  if (*convert) return cmd_convert(conv_in, conv_out, std::cout, std::cerr);
  return kError;
}
