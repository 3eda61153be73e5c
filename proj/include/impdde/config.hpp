#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "impdde/expr.hpp"
#include "impdde/hypotheses.hpp"
#include "impdde/solver.hpp"
#include "impdde/system.hpp"

// JSON problem definitions. The schema is strict: unknown fields are
// rejected so typos surface instead of silently applying defaults.

namespace impdde {

using json = nlohmann::json;

struct LoadedSystem {
  SystemSpec spec;
  double grid_step = 0;  // 0 = default (tau + r) / 2000
  SolveOptions solve_options;
  OperatorParams params;
  std::shared_ptr<const std::map<std::string, double>> named_params;
};

namespace configdetail {

using ExprPtr = std::shared_ptr<const expr::Node>;
using ParamsPtr = std::shared_ptr<const std::map<std::string, double>>;

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "required field missing");
  return *it;
}

inline double number_at(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

inline ExprPtr parse_expr_field(const json& v, const std::string& path, expr::Slot slot,
                                const expr::SlotContext& ctx) {
  if (!v.is_string()) throw ConfigError(path, "expected an expression string");
  try {
    expr::Ast ast = expr::parse(v.get<std::string>());
    expr::validate_slot(*ast, slot, ctx);
    return ExprPtr(ast.release());
  } catch (const ParseError& e) {
    throw ConfigError(path, e.what());
  }
}

inline std::vector<ExprPtr> parse_expr_array(const json& v, const std::string& path, std::size_t count,
                                             expr::Slot slot, const expr::SlotContext& ctx) {
  if (!v.is_array() || v.size() != count)
    throw ConfigError(path, "expected an array of " + std::to_string(count) + " expression strings");
  std::vector<ExprPtr> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(parse_expr_field(v[i], path + "[" + std::to_string(i) + "]", slot, ctx));
  return out;
}

inline Vec vec_field(const json& v, const std::string& path, std::size_t n) {
  if (!v.is_array() || v.size() != n)
    throw ConfigError(path, "expected an array of " + std::to_string(n) + " numbers");
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = number_at(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

inline Vec eval_components(const std::vector<ExprPtr>& asts, const expr::EvalEnv& env) {
  Vec out(asts.size());
  for (std::size_t i = 0; i < asts.size(); ++i) out[i] = expr::eval(*asts[i], env);
  return out;
}

}  // namespace configdetail

inline LoadedSystem load_config_json(const json& root) {
  using namespace configdetail;
  if (!root.is_object()) throw ConfigError("", "config root must be a JSON object");
  check_keys(root, "",
             {"n", "r", "tau", "grid_step", "A", "f", "impulses", "theta", "g", "phi", "params", "constants",
              "solver", "operator"});

  LoadedSystem out;
  const std::size_t n = [&] {
    const json& v = require(root, "", "n");
    if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError("n", "expected an integer >= 1");
    return static_cast<std::size_t>(v.get<int>());
  }();
  out.spec.n = n;
  out.spec.partition.r = number_at(require(root, "", "r"), "r");
  out.spec.partition.tau = number_at(require(root, "", "tau"), "tau");
  if (!(out.spec.partition.r > 0)) throw ConfigError("r", "delay must be positive");
  if (!(out.spec.partition.tau > 0)) throw ConfigError("tau", "horizon must be positive");
  if (root.contains("grid_step")) {
    out.grid_step = number_at(root["grid_step"], "grid_step");
    if (!(out.grid_step > 0)) throw ConfigError("grid_step", "must be positive");
  }

  auto params = std::make_shared<std::map<std::string, double>>();
  if (root.contains("params")) {
    const json& p = root["params"];
    if (!p.is_object()) throw ConfigError("params", "expected an object of name -> number");
    for (const auto& [key, val] : p.items()) (*params)[key] = number_at(val, "params." + key);
  }
  // The problem's own r and tau are available to expressions unless shadowed.
  params->emplace("r", out.spec.partition.r);
  params->emplace("tau", out.spec.partition.tau);
  out.named_params = params;

  // Partition pieces next (theta count feeds slot validation).
  if (root.contains("theta")) {
    const json& th = root["theta"];
    if (!th.is_array()) throw ConfigError("theta", "expected an array of numbers");
    for (std::size_t j = 0; j < th.size(); ++j) {
      const double v = number_at(th[j], "theta[" + std::to_string(j) + "]");
      if (!(v > 0 && v < out.spec.partition.tau))
        throw ConfigError("theta[" + std::to_string(j) + "]", "theta must lie strictly inside (0, tau)");
      if (j > 0 && !(out.spec.partition.theta.back() < v))
        throw ConfigError("theta[" + std::to_string(j) + "]", "theta must be strictly increasing");
      out.spec.partition.theta.push_back(v);
    }
  }
  const std::size_t q = out.spec.partition.theta.size();

  expr::SlotContext ctx;
  ctx.n = n;
  ctx.q = q;
  ctx.r = out.spec.partition.r;
  ctx.params = params.get();

  // A: n x n entries in t.
  {
    const json& a = require(root, "", "A");
    if (!a.is_array() || a.size() != n) throw ConfigError("A", "expected " + std::to_string(n) + " rows");
    std::vector<std::vector<ExprPtr>> rows;
    for (std::size_t i = 0; i < n; ++i)
      rows.push_back(parse_expr_array(a[i], "A[" + std::to_string(i) + "]", n, expr::Slot::Matrix, ctx));
    out.spec.A = [rows, params, n](double t) {
      expr::EvalEnv env;
      env.t = t;
      env.params = params.get();
      Mat m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = expr::eval(*rows[i][j], env);
      return m;
    };
  }

  // f: n components in (t, history).
  {
    auto comps = parse_expr_array(require(root, "", "f"), "f", n, expr::Slot::Rhs, ctx);
    out.spec.f = [comps, params](double t, const HistorySegment& h) {
      expr::EvalEnv env;
      env.t = t;
      env.params = params.get();
      env.history = &h;
      return eval_components(comps, env);
    };
  }

  // Impulse windows.
  if (root.contains("impulses")) {
    const json& imp = root["impulses"];
    if (!imp.is_array()) throw ConfigError("impulses", "expected an array");
    double prev_s = 0;
    for (std::size_t i = 0; i < imp.size(); ++i) {
      const std::string path = "impulses[" + std::to_string(i) + "]";
      const json& w = imp[i];
      if (!w.is_object()) throw ConfigError(path, "expected an object {t, s, G}");
      check_keys(w, path, {"t", "s", "G"});
      ImpulseWindow win;
      win.t = number_at(require(w, path, "t"), path + ".t");
      win.s = number_at(require(w, path, "s"), path + ".s");
      if (i == 0 && !(win.t > 0)) throw ConfigError(path, "requires 0 < t_1");
      if (i > 0 && !(prev_s < win.t)) throw ConfigError(path, "requires s_i < t_{i+1}");
      if (!(win.t <= win.s)) throw ConfigError(path, "requires t_i <= s_i");
      if (!(win.s < out.spec.partition.tau)) throw ConfigError(path, "requires s_i < tau");
      prev_s = win.s;
      out.spec.partition.impulses.push_back(win);
      auto comps = parse_expr_array(require(w, path, "G"), path + ".G", n, expr::Slot::Impulse, ctx);
      out.spec.G.push_back([comps, params](double t, const Vec& x) {
        expr::EvalEnv env;
        env.t = t;
        env.params = params.get();
        env.state = &x;
        return eval_components(comps, env);
      });
    }
  }

  // Non-local map.
  if (root.contains("g")) {
    if (q == 0) throw ConfigError("g", "given but theta is empty");
    auto comps = parse_expr_array(root["g"], "g", n, expr::Slot::Nonlocal, ctx);
    out.spec.g = [comps, params](std::span<const HistorySegment> tuple, double t) {
      expr::EvalEnv env;
      env.t = t;
      env.params = params.get();
      env.tuple = tuple;
      return eval_components(comps, env);
    };
  } else if (q > 0) {
    throw ConfigError("g", "required when theta is nonempty");
  }

  // Initial history.
  {
    auto comps = parse_expr_array(require(root, "", "phi"), "phi", n, expr::Slot::Initial, ctx);
    out.spec.phi = [comps, params](double t) {
      expr::EvalEnv env;
      env.t = t;
      env.params = params.get();
      return eval_components(comps, env);
    };
  }

  // Declared constants and envelopes.
  if (root.contains("constants")) {
    const json& c = root["constants"];
    if (!c.is_object()) throw ConfigError("constants", "expected an object");
    check_keys(c, "constants", {"M", "L", "N_q", "Psi", "K", "h"});
    if (c.contains("M")) out.spec.declared.M = number_at(c["M"], "constants.M");
    if (c.contains("L")) out.spec.declared.L = number_at(c["L"], "constants.L");
    if (c.contains("N_q")) out.spec.declared.N_q = number_at(c["N_q"], "constants.N_q");
    if (c.contains("Psi")) {
      auto ast = parse_expr_field(c["Psi"], "constants.Psi", expr::Slot::PsiEnv, ctx);
      out.spec.declared.Psi = [ast, params](double x) {
        expr::EvalEnv env;
        env.x = x;
        env.params = params.get();
        return expr::eval(*ast, env);
      };
    }
    if (c.contains("K")) {
      auto ast = parse_expr_field(c["K"], "constants.K", expr::Slot::KEnv, ctx);
      out.spec.declared.K = [ast, params](double u, double v) {
        expr::EvalEnv env;
        env.u = u;
        env.v = v;
        env.params = params.get();
        return expr::eval(*ast, env);
      };
    }
    if (c.contains("h")) {
      auto ast = parse_expr_field(c["h"], "constants.h", expr::Slot::Growth, ctx);
      out.spec.declared.growth = [ast, params](double t) {
        expr::EvalEnv env;
        env.t = t;
        env.params = params.get();
        return expr::eval(*ast, env);
      };
    }
  }

  // Solver options.
  if (root.contains("solver")) {
    const json& s = root["solver"];
    if (!s.is_object()) throw ConfigError("solver", "expected an object");
    check_keys(s, "solver", {"tol", "max_iters", "initial"});
    if (s.contains("tol")) {
      out.solve_options.tol = number_at(s["tol"], "solver.tol");
      if (!(out.solve_options.tol > 0)) throw ConfigError("solver.tol", "must be positive");
    }
    if (s.contains("max_iters")) {
      if (!s["max_iters"].is_number_integer() || s["max_iters"].get<int>() < 1)
        throw ConfigError("solver.max_iters", "expected an integer >= 1");
      out.solve_options.max_iters = static_cast<std::size_t>(s["max_iters"].get<int>());
    }
    if (s.contains("initial")) {
      const std::string v = s["initial"].is_string() ? s["initial"].get<std::string>() : "";
      if (v == "phi_tilde") out.solve_options.initial = InitialIterate::PhiTilde;
      else if (v == "zero") out.solve_options.initial = InitialIterate::Zero;
      else throw ConfigError("solver.initial", "expected \"phi_tilde\" or \"zero\"");
    }
  }

  // Operator parameters.
  out.params = OperatorParams::zeros(n);
  if (root.contains("operator")) {
    const json& o = root["operator"];
    if (!o.is_object()) throw ConfigError("operator", "expected an object");
    check_keys(o, "operator", {"eta", "alpha", "beta", "rho"});
    if (o.contains("eta")) out.params.eta = vec_field(o["eta"], "operator.eta", n);
    if (o.contains("alpha")) out.params.alpha = vec_field(o["alpha"], "operator.alpha", n);
    if (o.contains("beta")) out.params.beta = vec_field(o["beta"], "operator.beta", n);
    if (o.contains("rho")) {
      out.params.rho = number_at(o["rho"], "operator.rho");
      if (!(out.params.rho > 0)) throw ConfigError("operator.rho", "must be positive");
    }
  }

  const auto violations = validate_spec(out.spec);
  if (!violations.empty()) throw ConfigError("", violations.front());
  return out;
}

inline LoadedSystem load_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return load_config_json(root);
}

inline LoadedSystem load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_config_text(text);
}

}  // namespace impdde
