#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "impdde/hypotheses.hpp"
#include "impdde/solver.hpp"
#include "impdde/trajectory.hpp"

namespace impdde {

/// Write-temp-then-rename; readers never observe partial files.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot open output file: " + tmp);
    out << content;
    if (!out) throw DomainError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// CSV layout: header `t,z1..zn,side`; segment-boundary nodes appear twice
/// (side L then R), capturing jumps exactly.
inline std::string trajectory_csv(const Trajectory& z) {
  std::ostringstream out;
  out << "t";
  for (std::size_t k = 1; k <= z.dim(); ++k) out << ",z" << k;
  out << ",side\n";
  const auto& grid = *z.grid();
  auto row = [&](double t, const Vec& v, char side) {
    out << format_full(t);
    for (std::size_t k = 0; k < v.size(); ++k) out << ',' << format_full(v[k]);
    out << ',' << side << '\n';
  };
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    row(grid.node(i), z.left_at(i), 'L');
    if (grid.is_breakpoint(i)) row(grid.node(i), z.right_at(i), 'R');
  }
  return out.str();
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& z) {
  atomic_write(path, trajectory_csv(z));
}

/// Inverse of trajectory_csv against the same partition.
inline Trajectory read_trajectory_csv(const std::string& path, const Partition& partition) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open trajectory file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty trajectory file: " + path);
  std::size_t n = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(header, col, ',')) cols.push_back(col);
    if (cols.size() < 3 || cols.front() != "t" || cols.back() != "side")
      throw DomainError("unrecognized trajectory header: " + line);
    n = cols.size() - 2;
  }

  struct Row {
    double t;
    Vec v;
    char side;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Row r{0, Vec(n), 'L'};
    if (!std::getline(ss, cell, ',')) throw DomainError("malformed trajectory row: " + line);
    r.t = std::stod(cell);
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::getline(ss, cell, ',')) throw DomainError("malformed trajectory row: " + line);
      r.v[k] = std::stod(cell);
    }
    if (!std::getline(ss, cell, ',')) throw DomainError("malformed trajectory row: " + line);
    r.side = cell.empty() ? 'L' : cell[0];
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DomainError("trajectory file has no rows: " + path);

  std::vector<double> nodes;
  for (const auto& r : rows)
    if (nodes.empty() || r.t > nodes.back()) nodes.push_back(r.t);
  GridPtr grid = TimeGrid::from_nodes(partition, nodes);

  Trajectory z(grid, n);
  std::size_t node = 0;
  for (const auto& r : rows) {
    while (node + 1 < nodes.size() && r.t > grid->node(node)) ++node;
    if (r.side == 'R')
      z.set_right(node, r.v);
    else
      z.set_left(node, r.v);
  }
  return z;
}

inline const char* kEstimateWarning =
    "estimated constants are lower bounds of the true constants; declare analytic constants for a certificate";

inline nlohmann::json inequality_json(const InequalityCheck& c) {
  return {{"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}};
}

inline nlohmann::json hypothesis_report_json(const HypothesisReport& rep) {
  auto source = [](ConstantSource s) { return s == ConstantSource::Declared ? "declared" : "estimated"; };
  nlohmann::json j;
  j["constants"] = {
      {"M", {{"value", rep.constants.M}, {"source", source(rep.constants.M_source)}}},
      {"L", {{"value", rep.constants.L}, {"source", source(rep.constants.L_source)}}},
      {"N_q", {{"value", rep.constants.N_q}, {"source", source(rep.constants.N_q_source)}}},
      {"q", rep.constants.q},
  };
  j["rho"] = rep.rho;
  j["phi_tilde_norm"] = rep.phi_tilde_norm;
  j["checks"] = {
      {"h1_i", inequality_json(rep.h1_i)},   {"h1_ii", inequality_json(rep.h1_ii)},
      {"h3_i", inequality_json(rep.h3_i)},   {"h3_ii", inequality_json(rep.h3_ii)},
      {"h3_iii", inequality_json(rep.h3_iii)}, {"h4_i", inequality_json(rep.h4_i)},
      {"h4_ii", inequality_json(rep.h4_ii)},
  };
  j["overall"] = rep.overall;
  nlohmann::json warnings = nlohmann::json::array();
  if (rep.constants.any_estimated()) warnings.push_back(kEstimateWarning);
  j["warnings"] = warnings;

  std::ostringstream human;
  human << "hypothesis check at rho = " << rep.rho << ", ||phi~|| = " << rep.phi_tilde_norm << "\n";
  auto line = [&](const char* name, const InequalityCheck& c, const char* rel) {
    human << "  " << name << ": " << c.lhs << ' ' << rel << ' ' << c.rhs << "  " << (c.pass ? "pass" : "FAIL")
          << "\n";
  };
  line("H1(i)  structural defect", rep.h1_i, "<=");
  line("H1(ii) L + N_q q", rep.h1_ii, "<");
  line("H3(i)", rep.h3_i, "<=");
  line("H3(ii)", rep.h3_ii, "<=");
  line("H3(iii)", rep.h3_iii, "<=");
  line("H4(i)", rep.h4_i, "<");
  line("H4(ii)", rep.h4_ii, "<");
  human << "  overall: " << (rep.overall ? "pass" : "FAIL");
  if (rep.constants.any_estimated()) human << "\n  warning: " << kEstimateWarning;
  j["summary"] = human.str();
  return j;
}

inline nlohmann::json diagnostics_json(const SolveDiagnostics& diag, const VerificationReport& ver) {
  nlohmann::json j;
  j["iterations"] = diag.iterations;
  j["residual_history"] = diag.residual_history;
  j["final_residual"] = diag.final_residual;
  j["empirical_contraction"] = diag.empirical_contraction;
  j["characterization_residual"] = diag.characterization;
  j["converged"] = diag.converged;
  j["verification"] = {{"ode_residual", ver.ode_residual},
                       {"impulse_residual", ver.impulse_residual},
                       {"nonlocal_residual", ver.nonlocal_residual}};
  std::ostringstream human;
  human << (diag.converged ? "converged" : "NOT converged") << " after " << diag.iterations
        << " iterations; last step " << diag.final_residual << ", contraction " << diag.empirical_contraction
        << ", fixed-point defect " << diag.characterization << "\nresiduals: ode " << ver.ode_residual
        << ", impulse " << ver.impulse_residual << ", nonlocal " << ver.nonlocal_residual;
  j["summary"] = human.str();
  return j;
}

}  // namespace impdde
