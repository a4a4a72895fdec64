#pragma once

#include <optional>
#include <vector>

#include "pmca/dynamics.hpp"
#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"

namespace pmca {

struct OptimizerSettings {
  int max_iterations = 3000;
  double grad_tol = 1e-8;  // infinity norm of the projected-gradient step
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
  /// Extra runs from seeded random starts; the best local optimum is kept.
  int restarts = 0;
  unsigned seed = 1;
};

/// Piecewise-constant u on a uniform grid of `cell` width, v = r(u).
struct DirectProblem {
  GrowthFragMatrices model;
  RateFunction rate = RateFunction::affine(1.0, 0.0);
  double u_min = 0.0;
  double u_max = 1.0;
  double T = 1.0;
  double cell = 1.0;
  Vector x0;
  /// Integration sub-step bound inside a cell.
  double dt = 1e-2;
  OptimizerSettings settings;

  int cells() const;
  std::vector<double> breakpoints() const;
  ControlSignal control(const std::vector<double>& u) const;
  /// Throws ValidationError if cell does not divide T, bounds are inverted or x0 is not positive.
  void validate() const;
};

struct ObjectiveValue {
  double J = 0.0;
  std::vector<double> gradient;  // dJ / du_k, k = 0..K-1
};

/// J = psi x(T) of the discrete RK4 scheme and its exact gradient in the
/// cell values, obtained from the discrete adjoint.
ObjectiveValue objective_gradient(const DirectProblem& problem, const std::vector<double>& u);

double objective_value(const DirectProblem& problem, const std::vector<double>& u);

struct HistoryRow {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;  // infinity norm of the projected-gradient step
  double step = 0.0;
};

struct DirectResult {
  std::vector<double> u;
  double J = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<HistoryRow> history;
};

/// Projected gradient ascent on ln J with Armijo backtracking. Starts from
/// `initial` or the interval midpoint.
DirectResult optimize_direct(const DirectProblem& problem,
                             const std::optional<std::vector<double>>& initial = {});

/// Repeats every cell value `factor` times.
std::vector<double> refine_cells(const std::vector<double>& u, int factor);

struct DutyStats {
  double mean_u = 0.0;
  double fraction_at_umax = 0.0;
  double fraction_at_umin = 0.0;
  std::optional<double> R_emp;  // time at u_max / time at u_min; empty if no time at u_min
};

/// Time-weighted statistics of `control` over [window_start, window_end].
/// A value counts as a bound when within `tol` (relative to the range).
DutyStats duty_ratio_stats(const ControlSignal& control, double window_start, double window_end,
                           double u_min, double u_max, double tol = 1e-6);

/// R_opt = (u_bar - u_min) / (u_max - u_bar).
double optimal_ratio(double u_bar, double u_min, double u_max);

/// Changes between the two bounds among the cells whose start lies in
/// [window_start, window_end); cells strictly inside the range are skipped.
int count_switches(const ControlSignal& control, double window_start, double window_end,
                   double u_min, double u_max, double tol = 1e-6);

}  // namespace pmca
