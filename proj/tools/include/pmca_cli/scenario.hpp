#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmca/model.hpp"
#include "pmca/optimize.hpp"
#include "pmca/rate_function.hpp"

namespace pmca::cli {

/// Rate block. Only the parameters of `form` are read and written.
struct RateSpec {
  std::string form = "rational";  // rational | affine | power_tail | tabulated
  double a = 0.0, b = 0.0;        // rational
  double c0 = 0.0, c1 = 0.0;      // affine
  double r0 = 0.0, rl = 0.0, l = 0.0;  // power_tail
  std::vector<double> knots_u, knots_r;  // tabulated

  RateFunction build() const;
  bool operator==(const RateSpec&) const = default;
};

/// Explicit piecewise-constant control. `on` selects how v is obtained:
/// "graph" (v = r(u)), "string" (v = sigma(u)) or "explicit" (v listed).
struct ControlSpec {
  std::string on = "graph";
  std::vector<double> breakpoints;
  std::vector<double> u;
  std::vector<double> v;

  bool operator==(const ControlSpec&) const = default;
};

struct ScanSpec {
  int points = 257;
  bool operator==(const ScanSpec&) const = default;
};

struct FloquetSpec {
  std::vector<double> omega;
  bool finite_difference = true;
  bool operator==(const FloquetSpec&) const = default;
};

struct ExpansionSpec {
  int k = 1;
  std::vector<double> samples{1e3, 3e3, 1e4};
  bool operator==(const ExpansionSpec&) const = default;
};

struct ChatterSpec {
  int n_pieces = 8;
  std::vector<int> pieces{1, 2, 4, 8, 16, 32, 64};
  bool operator==(const ChatterSpec&) const = default;
};

struct OptimizerSpec {
  std::vector<double> cells;  // one run per cell width
  double substep = 1e-2;
  int max_iterations = 3000;
  double grad_tol = 1e-8;
  double armijo = 1e-4;
  double shrink = 0.5;
  int restarts = 0;
  unsigned seed = 1;
  std::optional<double> window_start;  // default T / 6
  std::optional<double> window_end;    // default 5 T / 6

  OptimizerSettings settings() const;
  bool operator==(const OptimizerSpec&) const = default;
};

struct ScenarioConfig {
  std::string name;
  ModelParams model;
  RateSpec rate;
  double u_min = 0.0;
  double u_max = 0.0;
  double T = 0.0;
  double dt = 0.0;  // 0 selects the module default
  std::vector<double> x0;

  std::optional<ControlSpec> control;
  std::optional<ScanSpec> scan;
  std::optional<FloquetSpec> floquet;
  std::optional<ExpansionSpec> expansion;
  std::optional<ChatterSpec> chatter;
  std::optional<OptimizerSpec> optimizer;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ValidationError naming the offending key.
ScenarioConfig parse_scenario(const nlohmann::ordered_json& doc);
ScenarioConfig load_scenario(const std::string& path);
nlohmann::ordered_json to_json(const ScenarioConfig& cfg);

/// Model validation report plus bounds, horizon and x0 checks. Throws
/// ValidationError with every violation named.
void validate_scenario(const ScenarioConfig& cfg);

}  // namespace pmca::cli
