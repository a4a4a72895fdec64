#pragma once

#include <optional>
#include <vector>

#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"
#include "pmca/spectral.hpp"

namespace pmca {

struct ControlSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// Piecewise-constant control (u, v) on 0 = t_0 < ... < t_K = T.
class ControlSignal {
 public:
  ControlSignal() = default;
  /// `breakpoints` has one more entry than `u` and `v`.
  ControlSignal(std::vector<double> breakpoints, std::vector<double> u, std::vector<double> v);

  /// v = r(u) on every interval.
  static ControlSignal on_graph(std::vector<double> breakpoints, std::vector<double> u,
                                const RateFunction& r);
  /// v = theta u + zeta on every interval.
  static ControlSignal on_string(std::vector<double> breakpoints, std::vector<double> u,
                                 const StringLine& line);
  static ControlSignal constant(double horizon, double u, double v);

  std::size_t size() const { return u_.size(); }
  double horizon() const { return t_.back(); }
  const std::vector<double>& breakpoints() const { return t_; }
  const std::vector<double>& u_values() const { return u_; }
  const std::vector<double>& v_values() const { return v_; }
  ControlSegment segment(std::size_t k) const { return {t_[k], t_[k + 1], u_[k], v_[k]}; }
  std::vector<ControlSegment> segments() const;

  /// Index of the interval containing t (right-continuous, the last interval at t = T).
  std::size_t index_at(double t) const;
  ControlSegment at(double t) const { return segment(index_at(t)); }

  /// Throws ValidationError unless u_k in [u_min, u_max] and
  /// r(u_k) <= v_k <= sigma(u_k), both up to `tol` relative.
  void check_admissible(const RateFunction& r, double u_min, double u_max,
                        double tol = 1e-12) const;

  double integral_u() const;
  double integral_v() const;

 private:
  std::vector<double> t_;
  std::vector<double> u_;
  std::vector<double> v_;
};

/// Integration grid: every control interval is split into equal sub-steps no
/// longer than dt, so no step straddles a control jump.
struct TimeGrid {
  std::vector<double> t;          // grid times, t.front() = 0, t.back() = T
  std::vector<std::size_t> step_segment;  // control interval of step j (t_j -> t_{j+1})
  std::vector<int> substeps;      // per control interval
  std::vector<double> h;          // sub-step length per control interval

  std::size_t points() const { return t.size(); }
};

TimeGrid make_grid(const ControlSignal& control, double dt);

/// One classical RK4 step for x' = A x, i.e. the degree-4 Taylor polynomial
/// of exp(hA).
Matrix rk4_propagator(const Matrix& a, double h);

struct StatePath {
  std::vector<double> t;
  Matrix x;  // column j is x(t_j)
};

/// Forward RK4 from x0 (nonnegative, nonzero). Throws NumericError naming the
/// step if a component stops being positive for t > 0.
StatePath integrate_forward(const Vector& x0, const ControlSignal& control,
                            const GrowthFragMatrices& m, double dt);

struct AdjointPath {
  std::vector<double> t;
  Matrix p;  // column j is p(t_j) (stored forward-indexed)
};

/// Backward RK4 for p' = -p(uF + vG) from p(T) = terminal (psi by default).
/// Uses the transpose of the forward propagator so that p x is conserved
/// exactly by the discrete scheme.
AdjointPath integrate_adjoint(const ControlSignal& control, const GrowthFragMatrices& m,
                              double dt, const std::optional<RowVector>& terminal = {});

struct Trajectory {
  std::vector<double> t;
  Matrix x;
  Matrix p;
  std::vector<double> u;  // control in force on [t_j, t_{j+1}); last value repeated at T
  std::vector<double> v;
  std::vector<double> Phi;
  std::vector<double> H;
  double theta = 0.0;
  double J = 0.0;
  double dt = 0.0;

  std::size_t points() const { return t.size(); }
};

struct SimulateOptions {
  double dt = 0.0;  // 0 selects T / 20000
  /// Halve dt on a positivity failure up to this many times.
  int max_refinements = 6;
};

/// Forward state, adjoint, switching function p(F + theta G)x and
/// Hamiltonian on a shared grid.
Trajectory simulate(const Vector& x0, const ControlSignal& control, const GrowthFragMatrices& m,
                    double theta, const SimulateOptions& options = {});

/// J = psi x(T).
double objective(const Trajectory& traj, const GrowthFragMatrices& m);
double objective(const Vector& x_final, const GrowthFragMatrices& m);

/// H = p(uF + vG)x.
double hamiltonian(const Vector& x, const RowVector& p, double u, double v,
                   const GrowthFragMatrices& m);

/// Phi(t_j) = p(t_j)(F + theta G)x(t_j).
std::vector<double> switching_function(const Matrix& x, const Matrix& p, double theta,
                                       const GrowthFragMatrices& m);
std::vector<double> switching_function(const Trajectory& traj, double theta,
                                       const GrowthFragMatrices& m);

struct PmpReport {
  double tolerance = 0.0;  // rel_tol * max |Phi|
  std::size_t points = 0;
  std::size_t positive = 0;  // Phi > tol
  std::size_t negative = 0;  // Phi < -tol
  std::size_t singular = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  std::vector<std::size_t> violating_indices;  // first 32 at most
  double H_median = 0.0;
  double H_max_deviation = 0.0;  // max |H - median H|
  double H_relative_deviation = 0.0;
};

/// Sign classification of the maximality condition at every grid time and
/// constancy of the Hamiltonian.
PmpReport pmp_residual(const Trajectory& traj, double u_min, double u_max,
                       double rel_tol = 1e-7);

}  // namespace pmca
