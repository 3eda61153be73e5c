#pragma once

#include <optional>
#include <string>
#include <vector>

namespace impdde {

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::string config_json;
};

/// Built-in problem instances, each a complete config document.
inline const std::vector<ScenarioInfo>& builtin_scenarios() {
  static const std::vector<ScenarioInfo> scenarios = {
      {"paper_example",
       "planar rotation with quadratic delayed feedback, one sine impulse window, two-point non-local condition",
       R"json({
  "n": 2, "r": 0.5, "tau": 2.0,
  "A": [["0", "1"], ["-1", "0"]],
  "f": ["zd(1, r)^2 / R", "zd(2, r)^2 / R"],
  "impulses": [{"t": 0.8, "s": 1.0,
                "G": ["cos(1.0)/R * sin(z(1))", "cos(1.0)/R * sin(z(2))"]}],
  "theta": [0.3, 1.5],
  "g": ["(yq(1,1) + yq(2,1))/R", "(yq(1,2) + yq(2,2))/R"],
  "phi": ["0.5", "0.5"],
  "params": {"R": 100},
  "constants": {"L": 0.005403023058681398, "N_q": 0.01,
                "Psi": "x^2/R", "K": "(u+v)/R"},
  "operator": {"rho": 1.0}
})json"},
      {"linear_homogeneous",
       "constant-coefficient linear system, no delay feedback, no impulses, no non-local term",
       R"json({
  "n": 2, "r": 0.25, "tau": 1.0,
  "A": [["-0.5", "1"], ["0", "-0.3"]],
  "f": ["0", "0"],
  "phi": ["1", "0.5"],
  "constants": {"L": 0, "N_q": 0, "Psi": "0", "K": "0"}
})json"},
      {"pure_delay",
       "scalar pure-delay feedback z' = z(t-1) with unit history",
       R"json({
  "n": 1, "r": 1.0, "tau": 1.0,
  "A": [["0"]],
  "f": ["zd(1, 1)"],
  "phi": ["1"],
  "constants": {"L": 0, "N_q": 0, "Psi": "x", "K": "1"}
})json"},
      {"riccati_blowup",
       "scalar quadratic growth z' = z^2 from 2; finite-time escape at t = 0.5",
       R"json({
  "n": 1, "r": 0.25, "tau": 0.2,
  "A": [["0"]],
  "f": ["z(1)^2"],
  "phi": ["2"]
})json"},
      {"rotation_matrix",
       "planar rotation generator; orthogonal evolution operator",
       R"json({
  "n": 2, "r": 0.5, "tau": 3.0,
  "A": [["0", "1"], ["-1", "0"]],
  "f": ["0", "0"],
  "phi": ["1", "0"],
  "constants": {"L": 0, "N_q": 0, "Psi": "0", "K": "0"}
})json"}};
  return scenarios;
}

inline std::optional<std::string> builtin_scenario_json(const std::string& name) {
  for (const auto& s : builtin_scenarios())
    if (s.name == name) return s.config_json;
  return std::nullopt;
}

}  // namespace impdde
