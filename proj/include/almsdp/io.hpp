#pragma once

// JSON problem files, CSV iteration logs, run summaries and an SDPA sparse
// (.dat-s) importer.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "almsdp/alm.hpp"
#include "almsdp/error.hpp"
#include "almsdp/model.hpp"
#include "almsdp/symcone.hpp"
#include "json.hpp"

namespace almsdp::io {

using json = nlohmann::json;

/// Malformed or inconsistent input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Problem files

inline json matrix_to_json(const SymMat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field + ": expected a number");
  return j.get<double>();
}

/// Dense row-major n×n array; the asymmetry must not exceed 10⁻¹²·scale.
inline SymMat matrix_from_json(const json& j, Index n, const std::string& field) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw ParseError(field + ": expected an array of " + std::to_string(n) + " rows");
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    const std::string rf = field + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw ParseError(rf + ": expected " + std::to_string(n) + " entries");
    }
    for (Index k = 0; k < n; ++k) {
      m(i, k) = number_field(row[static_cast<std::size_t>(k)], rf + "[" + std::to_string(k) + "]");
    }
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << field << ": matrix is not symmetric (max asymmetry " << asym << ")";
    throw ParseError(os.str());
  }
  return SymMat::symmetrized(m);
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = number_field(j[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) {
    throw ParseError(where + (where.empty() ? "" : ".") + key + ": missing field");
  }
  return j.at(key);
}

inline SdpProblem problem_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("problem: expected a JSON object");
  const json& jn = require(doc, "n", "");
  if (!jn.is_number_integer() || jn.get<long long>() <= 0) {
    throw ParseError("n: expected a positive integer");
  }
  const Index n = jn.get<Index>();
  const SymMat c = matrix_from_json(require(doc, "C", ""), n, "C");

  std::vector<SymMat> rows;
  std::vector<RowKind> kinds;
  Vector b;
  if (doc.contains("constraints")) {
    const json& cons = doc.at("constraints");
    if (!cons.is_array()) throw ParseError("constraints: expected an array");
    b.resize(static_cast<Index>(cons.size()));
    for (std::size_t i = 0; i < cons.size(); ++i) {
      const std::string where = "constraints[" + std::to_string(i) + "]";
      const json& ci = cons[i];
      if (!ci.is_object()) throw ParseError(where + ": expected an object");
      rows.push_back(matrix_from_json(require(ci, "A", where), n, where + ".A"));
      b[static_cast<Index>(i)] = number_field(require(ci, "b", where), where + ".b");
      const std::string kind = ci.value("kind", "eq");
      if (kind == "eq") {
        kinds.push_back(RowKind::Equality);
      } else if (kind == "ge") {
        kinds.push_back(RowKind::InequalityGE);
      } else {
        throw ParseError(where + ".kind: expected \"eq\" or \"ge\", got \"" + kind + "\"");
      }
    }
  }
  LinearOperator a(n, std::move(rows));
  ConeSpec cone(std::move(kinds));

  std::optional<SymMat> xhat;
  if (doc.contains("strictly_feasible") && !doc.at("strictly_feasible").is_null()) {
    xhat = matrix_from_json(doc.at("strictly_feasible"), n, "strictly_feasible");
  }

  std::string kind = "linear";
  const json* obj = nullptr;
  if (doc.contains("objective")) {
    obj = &doc.at("objective");
    if (!obj->is_object()) throw ParseError("objective: expected an object");
    const json& k = require(*obj, "kind", "objective");
    if (!k.is_string()) throw ParseError("objective.kind: expected a string");
    kind = k.get<std::string>();
  }
  try {
    if (kind == "linear") {
      return SdpProblem::linear(c, std::move(a), std::move(b), std::move(cone), std::move(xhat));
    }
    if (kind == "least_squares") {
      const json& jf = require(*obj, "F", "objective");
      if (!jf.is_array()) throw ParseError("objective.F: expected an array of matrices");
      std::vector<SymMat> frows;
      for (std::size_t i = 0; i < jf.size(); ++i) {
        frows.push_back(matrix_from_json(jf[i], n, "objective.F[" + std::to_string(i) + "]"));
      }
      const Vector d = vector_from_json(require(*obj, "d", "objective"), "objective.d");
      if (d.size() != static_cast<Index>(frows.size())) {
        throw ParseError("objective.d: length must equal the number of F matrices");
      }
      return SdpProblem::least_squares(c, std::move(a), std::move(b), std::move(cone),
                                       LinearOperator(n, std::move(frows)), d, std::move(xhat));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("problem: ") + e.what());
  }
  throw ParseError("objective.kind: expected \"linear\" or \"least_squares\", got \"" + kind +
                   "\"");
}

inline SdpProblem parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return problem_from_json(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

inline SdpProblem load_problem(const std::string& path) {
  try {
    return parse_problem(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline json problem_to_json(const SdpProblem& p) {
  json doc;
  doc["n"] = p.dim();
  if (p.objective() == ObjectiveKind::Linear) {
    doc["objective"] = {{"kind", "linear"}};
  } else {
    json f = json::array();
    for (const auto& r : p.F().row_list()) f.push_back(matrix_to_json(r));
    doc["objective"] = {{"kind", "least_squares"}, {"F", f}, {"d", vector_to_json(p.d())}};
  }
  doc["C"] = matrix_to_json(p.C());
  json cons = json::array();
  for (Index i = 0; i < p.num_constraints(); ++i) {
    cons.push_back({{"A", matrix_to_json(p.A().row(i))},
                    {"b", p.b()[i]},
                    {"kind", p.cone().is_inequality(i) ? "ge" : "eq"}});
  }
  doc["constraints"] = cons;
  if (p.strictly_feasible()) doc["strictly_feasible"] = matrix_to_json(*p.strictly_feasible());
  return doc;
}

inline std::string serialize_problem(const SdpProblem& p) { return problem_to_json(p).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Iteration logs

inline const char* csv_header() {
  return "k,ck,primal_obj,dual_obj,primal_infeas,dual_infeas,kkt_norm,step_norm,inner_iters,"
         "dist_est";
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string history_to_csv(const std::vector<ConvergenceRecord>& history) {
  std::ostringstream os;
  os << csv_header() << "\n";
  for (const auto& r : history) {
    os << r.k << ',' << format_double(r.ck) << ',' << format_double(r.primal_obj) << ','
       << format_double(r.dual_obj) << ',' << format_double(r.primal_infeas) << ','
       << format_double(r.dual_infeas) << ',' << format_double(r.kkt_norm) << ','
       << format_double(r.step_norm) << ',' << r.inner_iters << ','
       << (r.dist_est ? format_double(*r.dist_est) : std::string()) << "\n";
  }
  return os.str();
}

inline double parse_double(const std::string& s, std::size_t line, const char* col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    std::ostringstream os;
    os << "csv line " << line << ", column " << col << ": not a number: '" << s << "'";
    throw ParseError(os.str());
  }
}

/// Inverse of history_to_csv for the logged columns.
inline std::vector<ConvergenceRecord> history_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw ParseError("csv: unexpected header '" + line + "'");
  static const char* cols[] = {"k", "ck", "primal_obj", "dual_obj", "primal_infeas",
                               "dual_infeas", "kkt_norm", "step_norm", "inner_iters", "dist_est"};
  std::vector<ConvergenceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) {
      throw ParseError("csv line " + std::to_string(lineno) + ": expected 10 fields");
    }
    ConvergenceRecord r;
    r.k = static_cast<int>(parse_double(f[0], lineno, cols[0]));
    r.ck = parse_double(f[1], lineno, cols[1]);
    r.primal_obj = parse_double(f[2], lineno, cols[2]);
    r.dual_obj = parse_double(f[3], lineno, cols[3]);
    r.primal_infeas = parse_double(f[4], lineno, cols[4]);
    r.dual_infeas = parse_double(f[5], lineno, cols[5]);
    r.kkt_norm = parse_double(f[6], lineno, cols[6]);
    r.step_norm = parse_double(f[7], lineno, cols[7]);
    r.inner_iters = static_cast<int>(parse_double(f[8], lineno, cols[8]));
    if (!f[9].empty()) r.dist_est = parse_double(f[9], lineno, cols[9]);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run summaries

inline json config_to_json(const AlmConfig& cfg) {
  return {{"c0", cfg.c0},
          {"c_growth", cfg.c_growth},
          {"c_max", cfg.c_max},
          {"mode", to_string(cfg.mode)},
          {"eps", {cfg.eps.first, cfg.eps.ratio}},
          {"eta", {cfg.eta.first, cfg.eta.ratio}},
          {"eta_prime", {cfg.eta_prime.first, cfg.eta_prime.ratio}},
          {"max_outer", cfg.max_outer},
          {"kkt_stop_tol", cfg.kkt_stop_tol},
          {"fail_on_unattainable", cfg.fail_on_unattainable}};
}

inline json summary_to_json(const AlmResult& res, const AlmConfig& cfg, double wall_time_ms) {
  const AlmState& st = res.state;
  json s;
  s["stop_reason"] = to_string(res.reason);
  s["iterations"] = st.k;
  s["final_kkt"] = st.history.empty() ? json(nullptr) : json(st.history.back().kkt_norm);
  s["wall_time_ms"] = wall_time_ms;
  s["config_echo"] = config_to_json(cfg);
  s["final_point"] = {{"y", vector_to_json(st.yk)},
                      {"w", vector_to_json(st.wk)},
                      {"S", matrix_to_json(st.Sk)},
                      {"X", matrix_to_json(st.Xk)}};
  json eta = json::array();
  json uncertified = json::array();
  for (const auto& r : st.history) {
    eta.push_back(r.eta_k);
    if (!r.certified) uncertified.push_back(r.k);
  }
  s["eta"] = eta;
  s["uncertified_steps"] = uncertified;
  if (st.initial_dist_est) s["initial_dist_est"] = *st.initial_dist_est;
  if (!st.history.empty() && st.history.back().dist_est) {
    s["final_dist_est"] = *st.history.back().dist_est;
  }
  s["notes"] = st.notes;
  return s;
}

// ---------------------------------------------------------------------------
// SDPA sparse format

/// Reads an SDPA sparse file (min Σ cᵢxᵢ s.t. Σ Fᵢxᵢ − F₀ ⪰ 0) and returns the
/// dual form min <−F₀, Y> s.t. <Fᵢ, Y> = cᵢ, Y ⪰ 0. Blocks are laid out on the
/// diagonal of one matrix; a diagonal (LP) block of size k occupies k diagonal
/// positions. Entries outside the blocks appear in no constraint.
inline SdpProblem parse_sdpa(const std::string& text) {
  std::string clean;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto cpos = line.find_first_of("\"*");
      if (cpos != std::string::npos) line.erase(cpos);
      for (char& ch : line) {
        if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
      }
      clean += line + "\n";
    }
  }
  // Header lines carry one value each (block sizes on one line); trailing
  // words such as "= mDIM" are ignored.
  std::istringstream in(clean);
  std::string line;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw ParseError(std::string("sdpa: missing ") + what);
  };
  long m = 0, nblocks = 0;
  if (!(next_line("number of constraints") >> m) || m <= 0) {
    throw ParseError("sdpa: bad number of constraints");
  }
  if (!(next_line("number of blocks") >> nblocks) || nblocks <= 0) {
    throw ParseError("sdpa: bad number of blocks");
  }
  std::vector<Index> offset, size;
  std::vector<bool> diag;
  Index n = 0;
  std::istringstream blocks = next_line("block structure");
  for (long b = 0; b < nblocks; ++b) {
    long s = 0;
    if (!(blocks >> s) || s == 0) throw ParseError("sdpa: bad block size");
    offset.push_back(n);
    size.push_back(static_cast<Index>(std::labs(s)));
    diag.push_back(s < 0);
    n += static_cast<Index>(std::labs(s));
  }
  Vector c(m);
  for (long i = 0; i < m; ++i) {
    if (!(in >> c[i])) throw ParseError("sdpa: cannot read objective vector");
  }
  std::vector<Matrix> mats(static_cast<std::size_t>(m + 1), Matrix::Zero(n, n));
  long mat = 0, blk = 0, i = 0, j = 0;
  double v = 0.0;
  while (in >> mat >> blk >> i >> j >> v) {
    if (mat < 0 || mat > m) throw ParseError("sdpa: matrix index out of range");
    if (blk < 1 || blk > nblocks) throw ParseError("sdpa: block index out of range");
    const auto b = static_cast<std::size_t>(blk - 1);
    if (i < 1 || j < 1 || i > size[b] || j > size[b]) {
      throw ParseError("sdpa: entry index out of range");
    }
    if (diag[b] && i != j) throw ParseError("sdpa: off-diagonal entry in a diagonal block");
    const Index r = offset[b] + i - 1;
    const Index s = offset[b] + j - 1;
    mats[static_cast<std::size_t>(mat)](r, s) = v;
    mats[static_cast<std::size_t>(mat)](s, r) = v;
  }
  if (!in.eof()) throw ParseError("sdpa: trailing garbage in entry list");
  std::vector<SymMat> rows;
  for (long k = 1; k <= m; ++k) rows.push_back(SymMat::symmetrized(mats[static_cast<std::size_t>(k)]));
  mats[0] = (-mats[0]).array() + 0.0;  // no negative zeros
  return SdpProblem::linear(SymMat::symmetrized(mats[0]), LinearOperator(n, std::move(rows)), c,
                            ConeSpec::all_equality(m));
}

}  // namespace almsdp::io
