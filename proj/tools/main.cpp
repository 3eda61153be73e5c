#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "impdde/impdde.hpp"

namespace {

using namespace impdde;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitBlowup = 4;
constexpr int kExitHypothesisFail = 5;

struct Options {
  std::string config;
  std::string out;
  double grid_step = 0;  // 0 = config/default
  std::uint64_t seed = 20240901;
  std::size_t samples = 10000;
  bool json_out = false;

  // check
  std::optional<double> rho;
  bool find_rho = false;
  double rho_max = 10.0;
  bool estimate = false;

  // extend
  double to = 0;
  std::string growth;
  double blowup_cap = 1e6;
};

LoadedSystem load(const Options& opt) {
  if (opt.config.empty()) throw ConfigError("", "--config is required (file path or built-in scenario name)");
  if (std::filesystem::exists(opt.config)) {
    log_info("loading config file " + opt.config);
    return load_config_file(opt.config);
  }
  if (auto j = builtin_scenario_json(opt.config)) {
    log_info("loading built-in scenario " + opt.config);
    return load_config_text(*j);
  }
  throw ConfigError("", "no such file or built-in scenario: " + opt.config);
}

GridPtr make_grid(const LoadedSystem& ls, const Options& opt) {
  double h = opt.grid_step > 0 ? opt.grid_step : ls.grid_step;
  if (h <= 0) h = (ls.spec.partition.tau + ls.spec.partition.r) / 2000.0;
  return TimeGrid::build(ls.spec.partition, h);
}

std::string sibling_path(const std::string& out, const std::string& suffix) {
  const std::filesystem::path p(out);
  std::filesystem::path q = p.parent_path() / p.stem();
  return q.string() + suffix;
}

ConstantSet assemble_constants(const LoadedSystem& ls, const EvolutionCache& cache, const Options& opt) {
  const SystemSpec& spec = ls.spec;
  ConstantSet c;
  c.q = spec.partition.nonlocal_count();
  c.M = spec.declared.M.value_or(cache.norm_bound());

  const bool may_estimate = opt.estimate;
  double structural = 0;

  if (spec.declared.L) {
    c.L = *spec.declared.L;
  } else if (spec.partition.impulse_count() > 0) {
    if (!may_estimate) throw ConfigError("constants.L", "not declared; pass --estimate to sample it");
    const auto est = estimate_lipschitz_impulses(spec, opt.samples, 1.0 + opt.rho_max, opt.seed);
    c.L = est.value;
    c.L_source = ConstantSource::Estimated;
    structural = std::max(structural, est.zero_defect);
  }

  if (spec.declared.N_q) {
    c.N_q = *spec.declared.N_q;
  } else if (c.q > 0) {
    if (!may_estimate) throw ConfigError("constants.N_q", "not declared; pass --estimate to sample it");
    const auto est = estimate_lipschitz_g(spec, opt.samples, 1.0 + opt.rho_max, opt.seed);
    c.N_q = est.value;
    c.N_q_source = ConstantSource::Estimated;
    structural = std::max(structural, est.zero_defect);
  }

  if (spec.declared.Psi && spec.declared.K) {
    c.Psi = Envelope1::from_function(spec.declared.Psi);
    c.K = Envelope2::from_function(spec.declared.K);
  } else {
    if (!may_estimate)
      throw ConfigError("constants", "Psi/K not declared; pass --estimate to sample the envelopes");
    const auto est = estimate_K_Psi(spec, opt.samples / 10 + 1, {}, opt.seed);
    if (spec.declared.Psi) {
      c.Psi = Envelope1::from_function(spec.declared.Psi);
    } else {
      c.Psi = est.Psi;
      c.Psi_source = ConstantSource::Estimated;
    }
    if (spec.declared.K) {
      c.K = Envelope2::from_function(spec.declared.K);
    } else {
      c.K = est.K;
      c.K_source = ConstantSource::Estimated;
    }
  }

  c.structural_defect = structural;
  return c;
}

int cmd_solve(const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  LoadedSystem ls = load(opt);
  const GridPtr grid = make_grid(ls, opt);
  const EvolutionCache cache = EvolutionCache::build(ls.spec.A, grid);

  int exit_code = kExitOk;
  auto [z, diag] = solve(ls.spec, cache, ls.params, grid, ls.solve_options);
  if (!diag.converged) exit_code = kExitNotConverged;
  for (std::size_t k = 0; k < diag.residual_history.size(); ++k)
    log_debug("iteration " + std::to_string(k + 1) + ": step " + std::to_string(diag.residual_history[k]));
  const VerificationReport ver = verify_solution(ls.spec, cache, z);

  const std::string out = opt.out.empty() ? "trajectory.csv" : opt.out;
  write_trajectory_csv(out, z);
  nlohmann::json report = diagnostics_json(diag, ver);
  report["trajectory_csv"] = out;
  atomic_write(sibling_path(out, ".diag.json"), report.dump(2) + "\n");

  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (opt.json_out)
    std::cout << report.dump(2) << std::endl;
  else
    std::cout << report["summary"].get<std::string>() << "\nwrote " << out << " ("
              << std::fixed << dt << "s)" << std::endl;
  return exit_code;
}

int cmd_check(const Options& opt) {
  LoadedSystem ls = load(opt);
  const GridPtr grid = make_grid(ls, opt);
  const EvolutionCache cache = EvolutionCache::build(ls.spec.A, grid);
  const ConstantSet constants = assemble_constants(ls, cache, opt);

  const Trajectory ref = phi_tilde(ls.spec, cache, ls.params, grid);
  const double ref_norm = ref.sup_norm();

  double rho = opt.rho.value_or(ls.params.rho);
  FindRhoResult found;
  if (opt.find_rho) {
    found = find_rho(constants, ls.spec.partition, ref_norm, ls.params.alpha, ls.params.beta, opt.rho_max);
    if (found.feasible) rho = found.rho;
  }

  HypothesisReport rep =
      check_hypotheses(constants, ls.spec.partition, ref_norm, rho, ls.params.alpha, ls.params.beta);
  nlohmann::json j = hypothesis_report_json(rep);
  if (opt.find_rho) {
    j["find_rho"] = {{"feasible", found.feasible},
                     {"rho", found.rho},
                     {"resolution", found.resolution},
                     {"binding", found.binding}};
  }

  const std::string out = opt.out.empty() ? "hypotheses.json" : opt.out;
  atomic_write(out, j.dump(2) + "\n");

  if (opt.json_out) {
    std::cout << j.dump(2) << std::endl;
  } else {
    if (opt.find_rho) {
      if (found.feasible)
        std::cout << "smallest feasible rho ~ " << found.rho << std::endl;
      else
        std::cout << "no feasible rho in (0, " << opt.rho_max << "]; binding inequality: " << found.binding
                  << std::endl;
    }
    std::cout << j["summary"].get<std::string>() << "\nwrote " << out << std::endl;
  }
  const bool ok = opt.find_rho ? found.feasible && rep.overall : rep.overall;
  return ok ? kExitOk : kExitHypothesisFail;
}

int cmd_extend(const Options& opt) {
  LoadedSystem ls = load(opt);
  if (!(opt.to > ls.spec.partition.tau)) throw ConfigError("", "--to must exceed tau");
  const GridPtr grid = make_grid(ls, opt);
  const EvolutionCache cache = EvolutionCache::build(ls.spec.A, grid);

  auto [z, diag] = solve(ls.spec, cache, ls.params, grid, ls.solve_options);
  if (!diag.converged) {
    std::cerr << "solve on the base horizon did not converge" << std::endl;
    return kExitNotConverged;
  }

  const ExtendResult ext = extend_solution(ls.spec, z, opt.to, opt.blowup_cap);
  const std::string out = opt.out.empty() ? "extended.csv" : opt.out;
  write_trajectory_csv(out, ext.trajectory);

  nlohmann::json j;
  j["to"] = opt.to;
  j["escaped"] = ext.escaped;
  if (ext.escaped) j["escape_time"] = ext.escape_time;

  std::function<double(double)> growth;
  if (!opt.growth.empty()) {
    try {
      expr::Ast ast = expr::parse(opt.growth);
      expr::SlotContext ctx;
      ctx.n = ls.spec.n;
      ctx.q = ls.spec.partition.nonlocal_count();
      ctx.r = ls.spec.partition.r;
      ctx.params = ls.named_params.get();
      expr::validate_slot(*ast, expr::Slot::Growth, ctx);
      std::shared_ptr<const expr::Node> shared(ast.release());
      growth = [shared, params = ls.named_params](double t) {
        expr::EvalEnv env;
        env.t = t;
        env.params = params.get();
        return expr::eval(*shared, env);
      };
    } catch (const ParseError& e) {
      throw ConfigError("--growth", e.what());
    }
  } else if (ls.spec.declared.growth) {
    growth = ls.spec.declared.growth;
  }

  if (growth) {
    const std::size_t N = ls.spec.partition.impulse_count();
    const double a = N ? ls.spec.partition.impulses.back().s : 0.0;
    const double L = N ? ls.spec.declared.L.value_or(0.0) : 1.0;  // no impulse: plain initial-value coefficient
    const double b = ext.escaped ? ext.trajectory.grid()->end() : opt.to;
    const double bound = gronwall_bound(cache.norm_bound(), L, ext.trajectory, a, b, growth);
    j["gronwall"] = {{"from", a}, {"to", b}, {"L", L}, {"M", cache.norm_bound()}, {"bound", bound}};
  }

  atomic_write(sibling_path(out, ".extend.json"), j.dump(2) + "\n");
  if (opt.json_out)
    std::cout << j.dump(2) << std::endl;
  else if (ext.escaped)
    std::cout << "blow-up: state escaped at t ~ " << ext.escape_time << "; partial trajectory in " << out
              << std::endl;
  else
    std::cout << "extended to " << opt.to << "; wrote " << out << std::endl;
  return ext.escaped ? kExitBlowup : kExitOk;
}

int cmd_scenarios(const Options& opt) {
  if (opt.json_out) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : builtin_scenarios()) j.push_back({{"name", s.name}, {"description", s.description}});
    std::cout << j.dump(2) << std::endl;
  } else {
    for (const auto& s : builtin_scenarios()) std::printf("%-20s %s\n", s.name.c_str(), s.description.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solver and hypothesis checker for semi-linear systems with non-instantaneous impulses, "
               "delay, and non-local initial conditions"};
  app.fallthrough();
  Options opt;

  app.add_option("--config", opt.config, "config file path or built-in scenario name");
  app.add_option("--out", opt.out, "output path");
  app.add_option("--grid-step", opt.grid_step, "override grid step");
  app.add_option("--seed", opt.seed, "sampling seed");
  app.add_option("--samples", opt.samples, "Monte-Carlo sample budget");
  app.add_flag("--json", opt.json_out, "machine-readable stdout");

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve on [-r, tau] and write trajectory + diagnostics");
  CLI::App* check_cmd = app.add_subcommand("check", "evaluate the feasibility inequalities H1-H4");
  check_cmd->add_option("--rho", [&opt](const std::vector<std::string>& v) {
    opt.rho = std::stod(v.front());
    return true;
  }, "ball radius (overrides config)");
  check_cmd->add_flag("--find-rho", opt.find_rho, "search the smallest feasible rho");
  check_cmd->add_option("--rho-max", opt.rho_max, "search ceiling for --find-rho");
  check_cmd->add_flag("--estimate", opt.estimate, "sample undeclared constants");
  CLI::App* extend_cmd = app.add_subcommand("extend", "solve, then continue past tau");
  extend_cmd->add_option("--to", opt.to, "extension endpoint")->required();
  extend_cmd->add_option("--growth", opt.growth, "growth envelope h(t) for the a-priori bound");
  extend_cmd->add_option("--blowup-cap", opt.blowup_cap, "norm cap treated as numerical blow-up");
  CLI::App* list_cmd = app.add_subcommand("scenarios", "list built-in scenarios");
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(opt);
    if (check_cmd->parsed()) return cmd_check(opt);
    if (extend_cmd->parsed()) return cmd_extend(opt);
    if (list_cmd->parsed()) return cmd_scenarios(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return kExitBlowup;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitConfig;
  }
  return kExitOk;
}
