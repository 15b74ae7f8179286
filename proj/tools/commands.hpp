#pragma once

// Subcommands of the almsdp command-line tool. Each returns the process exit
// code and writes human-readable output to `out`, diagnostics to `err`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "almsdp/almsdp.hpp"

namespace almsdp::cli {

enum ExitCode : int { kOk = 0, kError = 1, kMaxOuter = 2, kUnattainable = 3 };

struct SolveOptions {
  std::string problem;
  double c0 = 1.0;
  double c_growth = 2.0;
  double c_max = 1e6;
  std::string mode = "auto";
  double tol = 1e-8;
  int max_outer = 100;
  std::string out_csv;
  std::string out_json;
  unsigned long long seed = 0;
  std::string x0 = "default";
  std::string fixture_oracle = "none";
  bool fail_on_unattainable = false;
  bool quiet = false;
};

struct DiagnoseOptions {
  std::string problem;
  std::string csv;
  std::string run_json;
  std::optional<double> kappa;
  double eta0 = 0.5;
  double eta_ratio = 0.5;
  double eigtol = 1e-6;
  std::string out_json;
};

inline CriterionMode parse_mode(const std::string& m, const SdpProblem& p) {
  if (m == "implementable") return CriterionMode::Implementable;
  if (m == "bprime-oracle") return CriterionMode::RockafellarOracle;
  if (m == "bpp-only") return CriterionMode::BppOnly;
  if (m == "auto") {
    return p.strictly_feasible() && p.cone().equality_only() ? CriterionMode::Implementable
                                                            : CriterionMode::BppOnly;
  }
  throw ValidationError("--mode: expected implementable, bprime-oracle, bpp-only or auto");
}

inline std::function<double(const SymMat&)> parse_oracle(const std::string& name,
                                                          const SdpProblem& p) {
  if (name == "none" || name.empty()) return {};
  if (p.dim() != 2) throw ValidationError("--fixture-oracle: fixture oracles need n = 2");
  if (name == "example31") return example31_oracle().exact_distance;
  if (name == "example32") return example32_oracle().exact_distance;
  throw ValidationError("--fixture-oracle: expected example31, example32 or none");
}

/// Random PSD matrix G Gᵀ/n with standard normal G.
inline SymMat random_psd(Index n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  return SymMat::symmetrized(g * g.transpose() / static_cast<double>(n));
}

inline std::optional<SymMat> parse_x0(const std::string& spec, const SdpProblem& p,
                                      unsigned long long seed) {
  if (spec == "default") return std::nullopt;
  if (spec == "zero") return SymMat(p.dim());
  if (spec == "identity") return SymMat::identity(p.dim());
  if (spec == "xhat") {
    if (!p.strictly_feasible()) throw ValidationError("--x0 xhat: problem has no strictly_feasible");
    return *p.strictly_feasible();
  }
  if (spec == "random") return random_psd(p.dim(), seed);
  if (spec.rfind("file:", 0) == 0) {
    const std::string path = spec.substr(5);
    io::json doc;
    try {
      doc = io::json::parse(io::read_file(path));
    } catch (const io::json::parse_error& e) {
      throw io::ParseError(path + ": malformed JSON: " + e.what());
    }
    return io::matrix_from_json(doc, p.dim(), path);
  }
  throw ValidationError("--x0: expected zero, identity, xhat, random or file:PATH");
}

inline void print_history(std::ostream& out, const std::vector<ConvergenceRecord>& h) {
  out << std::setw(4) << "k" << std::setw(11) << "c_k" << std::setw(12) << "kkt_norm"
      << std::setw(12) << "step_norm" << std::setw(8) << "inner" << std::setw(12) << "dist_est"
      << "\n";
  for (const auto& r : h) {
    out << std::setw(4) << r.k << std::setw(11) << std::setprecision(4) << r.ck << std::setw(12)
        << std::scientific << std::setprecision(3) << r.kkt_norm << std::setw(12) << r.step_norm
        << std::defaultfloat << std::setw(8) << r.inner_iters << std::setw(12);
    if (r.dist_est) {
      out << std::scientific << std::setprecision(3) << *r.dist_est << std::defaultfloat;
    } else {
      out << "-";
    }
    out << (r.certified ? "" : "  (uncertified)") << "\n";
  }
}

struct SolveOutcome {
  AlmResult result;
  AlmConfig config;
  io::json summary;
};

inline SolveOutcome run_solve(const SdpProblem& p, const SolveOptions& o) {
  AlmConfig cfg;
  cfg.c0 = o.c0;
  cfg.c_growth = o.c_growth;
  cfg.c_max = o.c_max;
  cfg.mode = parse_mode(o.mode, p);
  cfg.kkt_stop_tol = o.tol;
  cfg.max_outer = o.max_outer;
  cfg.fail_on_unattainable = o.fail_on_unattainable;
  cfg.distance_oracle = parse_oracle(o.fixture_oracle, p);
  const auto x0 = parse_x0(o.x0, p, o.seed);
  const auto t0 = std::chrono::steady_clock::now();
  AlmResult res = alm_run(p, cfg, x0);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  io::json summary = io::summary_to_json(res, cfg, ms);
  return {std::move(res), cfg, std::move(summary)};
}

inline int exit_code(StopReason r) {
  switch (r) {
    case StopReason::KktTolerance: return kOk;
    case StopReason::MaxOuter: return kMaxOuter;
    case StopReason::CriterionUnattainable: return kUnattainable;
  }
  return kError;
}

inline int cmd_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const SdpProblem p = io::load_problem(o.problem);
    SolveOutcome s = run_solve(p, o);
    if (!o.out_csv.empty()) io::write_file(o.out_csv, io::history_to_csv(s.result.state.history));
    if (!o.out_json.empty()) io::write_file(o.out_json, s.summary.dump(2) + "\n");
    if (!o.quiet) {
      print_history(out, s.result.state.history);
      for (const auto& n : s.result.state.notes) out << "note: " << n << "\n";
      out << "stop_reason: " << to_string(s.result.reason) << "\n";
    }
    return exit_code(s.result.reason);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

inline void print_rate_report(std::ostream& out, const RateReport& rep) {
  out << std::setw(4) << "k" << std::setw(13) << "dist_k" << std::setw(13) << "ratio"
      << std::setw(13) << "theta_k" << "\n";
  for (const auto& r : rep.rows) {
    out << std::setw(4) << r.k << std::scientific << std::setprecision(4) << std::setw(13)
        << r.dist << std::setw(13) << r.ratio << std::setw(13);
    if (r.theta) {
      out << *r.theta;
    } else {
      out << "-";
    }
    out << std::defaultfloat;
    if (r.within_bound) out << (*r.within_bound ? "  ok" : "  VIOLATED");
    out << "\n";
  }
  if (rep.tail_start) {
    out << "tail starts at k = " << rep.rows[static_cast<std::size_t>(*rep.tail_start)].k << "\n";
  } else {
    out << "no ratio below 1\n";
  }
  out << "kappa_empirical: " << rep.kappa_empirical << "\n";
  if (rep.verdict) out << "verdict: " << (*rep.verdict ? "pass" : "fail") << "\n";
  if (rep.superlinear_signature) {
    out << "superlinear signature: tail ratios decreasing to < 0.1\n";
  }
}

inline void print_rank_report(std::ostream& out, const RankReport& r) {
  out << "rank_X = " << r.rank_X << ", rank_S = " << r.rank_S << ", |beta| = " << r.beta_size
      << "\ncond_i (rank S >= n-1): " << (r.cond_i ? "true" : "false")
      << "\ncond_ii (rank X + rank S = n): " << (r.cond_ii ? "true" : "false") << "\n";
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

inline io::json rate_report_to_json(const RateReport& rep) {
  io::json rows = io::json::array();
  for (const auto& r : rep.rows) {
    io::json row = {{"k", r.k}, {"dist", r.dist}, {"ratio", r.ratio}};
    if (r.theta) row["theta"] = *r.theta;
    if (r.within_bound) row["within_bound"] = *r.within_bound;
    if (r.feas_ratio) row["feas_ratio"] = *r.feas_ratio;
    rows.push_back(row);
  }
  io::json j = {{"rows", rows}, {"superlinear_signature", rep.superlinear_signature}};
  j["kappa_empirical"] = std::isfinite(rep.kappa_empirical) ? io::json(rep.kappa_empirical)
                                                            : io::json(nullptr);
  if (rep.verdict) j["verdict"] = *rep.verdict;
  return j;
}

inline int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out, std::ostream& err) {
  try {
    std::optional<SdpProblem> p;
    if (!o.problem.empty()) p = io::load_problem(o.problem);
    const auto history = io::history_from_csv(io::read_file(o.csv));
    io::json run;
    if (!o.run_json.empty()) run = io::json::parse(io::read_file(o.run_json));

    const bool have_dist =
        !history.empty() && std::all_of(history.begin(), history.end(),
                                         [](const ConvergenceRecord& r) { return r.dist_est.has_value(); });
    if (!have_dist && o.kappa) {
      throw ValidationError(o.csv + ": dist_est column is empty; rerun solve with --fixture-oracle");
    }

    io::json report;
    if (have_dist) {
      RateSeries s;
      std::size_t first = 0;
      if (run.contains("initial_dist_est")) {
        s.dist.push_back(run["initial_dist_est"].get<double>());
      } else {
        s.dist.push_back(*history[0].dist_est);
        first = 1;
      }
      std::vector<int> uncertified;
      if (run.contains("uncertified_steps")) uncertified = run["uncertified_steps"].get<std::vector<int>>();
      for (std::size_t i = first; i < history.size(); ++i) {
        const auto& r = history[i];
        s.dist.push_back(*r.dist_est);
        s.ck.push_back(r.ck);
        double eta = o.eta0 * std::pow(o.eta_ratio, r.k);
        if (run.contains("eta") && static_cast<std::size_t>(r.k) < run["eta"].size()) {
          eta = run["eta"][static_cast<std::size_t>(r.k)].get<double>();
        }
        s.eta.push_back(eta);
        s.feas.push_back(r.dual_infeas);
        s.certified.push_back(std::find(uncertified.begin(), uncertified.end(), r.k) ==
                              uncertified.end());
      }
      const RateReport rep = rate_report(s, o.kappa);
      print_rate_report(out, rep);
      report["rate"] = rate_report_to_json(rep);
    } else {
      out << "no dist_est column: rate report skipped\n";
    }

    if (run.contains("final_point")) {
      const auto& fp = run["final_point"];
      const Index n = static_cast<Index>(fp["X"].size());
      const SymMat x = io::matrix_from_json(fp["X"], n, "final_point.X");
      const SymMat s = io::matrix_from_json(fp["S"], n, "final_point.S");
      const RankReport rr = rank_conditions(x, s, o.eigtol);
      print_rank_report(out, rr);
      report["rank"] = {{"rank_X", rr.rank_X}, {"rank_S", rr.rank_S}, {"beta_size", rr.beta_size},
                        {"cond_i", rr.cond_i}, {"cond_ii", rr.cond_ii}};
    }
    if (!o.out_json.empty()) io::write_file(o.out_json, report.dump(2) + "\n");
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

/// Full pipeline on a built-in fixture: solve, rate report, rank report.
inline int demo_fixture(const SdpProblem& p, const SolveOptions& o, const SolutionSetOracle& oracle,
                        std::ostream& out) {
  AlmConfig cfg;
  cfg.c0 = o.c0;
  cfg.c_growth = o.c_growth;
  cfg.c_max = o.c_max;
  cfg.mode = parse_mode(o.mode, p);
  cfg.kkt_stop_tol = o.tol;
  cfg.max_outer = o.max_outer;
  cfg.distance_oracle = oracle.exact_distance;
  const auto t0 = std::chrono::steady_clock::now();
  const AlmResult res = alm_run(p, cfg, parse_x0(o.x0, p, o.seed));
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const AlmState& st = res.state;
  print_history(out, st.history);
  out << "\n";
  print_rate_report(out, rate_report(rate_series(st.history, *st.initial_dist_est), std::nullopt));
  out << "\n";
  print_rank_report(out, rank_conditions(st.Xk, st.Sk, 1e-6));
  const double dual_dist = oracle.exact_dual_distance(st.yk, st.wk, st.Sk);
  out << "\ndual distance to the solution: " << std::scientific << std::setprecision(3)
      << dual_dist << std::defaultfloat << "\n";
  io::json summary = io::summary_to_json(res, cfg, ms);
  summary["final_dual_dist"] = dual_dist;
  out << "\nsummary: " << summary.dump() << "\n";
  return exit_code(res.reason);
}

inline int cmd_demo(const std::string& name, std::ostream& out, std::ostream& err) {
  try {
    if (name == "example31") {
      SolveOptions o;
      o.mode = "implementable";
      return demo_fixture(fixtures::example31(), o, example31_oracle(), out);
    }
    if (name == "example32") {
      SolveOptions o;
      o.mode = "bpp-only";
      o.c_growth = 1.5;
      o.x0 = "identity";
      return demo_fixture(fixtures::example32(), o, example32_oracle(), out);
    }
    if (name == "perturbation") {
      const auto rows =
          example31_perturbation_demo(fixtures::example31(), {1e-2, 1e-4, 1e-6, 1e-8});
      out << std::setw(8) << "eps" << std::setw(13) << "|(u,V)|" << std::setw(13) << "violation"
          << std::setw(13) << "primal_dist" << std::setw(13) << "dual_dist" << std::setw(13)
          << "ratio" << "\n";
      out << std::scientific << std::setprecision(4);
      for (const auto& r : rows) {
        out << std::setprecision(0) << std::setw(8) << r.eps << std::setprecision(4)
            << std::setw(13) << r.uv_norm << std::setw(13) << r.violation << std::setw(13)
            << r.primal_dist << std::setw(13) << r.dual_dist << std::setw(13) << r.ratio << "\n";
      }
      out << std::defaultfloat;
      return kOk;
    }
    err << "error: unknown demo '" << name << "' (expected example31, example32 or perturbation)\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

inline int cmd_convert(const std::string& input, const std::string& output, std::ostream& out,
                       std::ostream& err) {
  try {
    const SdpProblem p = io::parse_sdpa(io::read_file(input));
    const std::string text = io::serialize_problem(p);
    if (output.empty() || output == "-") {
      out << text;
    } else {
      io::write_file(output, text);
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << input << ": " << e.what() << "\n";
    return kError;
  }
}

}  // namespace almsdp::cli
