#pragma once

#include <vector>

#include "pmca/dynamics.hpp"
#include "pmca/error.hpp"
#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"
#include "pmca/spectral.hpp"

namespace pmca::dim2 {

/// Two-compartment problem restricted to the string v = theta u + zeta.
struct Dim2Config {
  double theta = 0.0;  // < 0
  double zeta = 0.0;   // > 0
  double tau = 0.0;
  double beta = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;

  /// theta/zeta from the chord of r on [u_min, u_max].
  static Dim2Config from_model(const ModelParams& params, const RateFunction& r, double u_min,
                               double u_max);

  GrowthFragMatrices matrices() const;
  StringLine line() const { return {theta, zeta}; }
  /// zeta / (-theta): the point where the string reaches v = 0.
  double u_root() const { return zeta / -theta; }

  /// Throws ValidationError unless theta < 0 < zeta, tau, beta and
  /// 0 < u_min < u_max < zeta / (-theta).
  void validate() const;
};

/// A = theta tau + beta, B = sqrt(-2 theta tau beta), C = theta tau + 3 beta,
/// D = zeta tau.
struct CharParams {
  double A, B, C, D;
};

CharParams char_params(const Dim2Config& cfg);

/// Delta(u) = (A^2 - 2B^2)u^2 + 2CDu + D^2, the discriminant of M(u, sigma(u)).
double delta(const Dim2Config& cfg, double u);

/// lambda_P(u, sigma(u)) = (-Au - D + sqrt(Delta)) / 2.
double lambda_closed_form(const Dim2Config& cfg, double u);

/// Maximizer of lambda_P along the string.
double singular_control(const Dim2Config& cfg);

/// Smaller root of the critical-point quadratic, (D/B)(BC - 2 beta A)/(2B^2 - A^2).
double u_minus(const Dim2Config& cfg);

struct OptimalEigen {
  double u_bar = 0.0;
  double v_bar = 0.0;
  double lambda_bar = 0.0;
  Vector X_raw;     // (2 beta, B)
  RowVector phi_raw;  // (beta + B, 2 beta + B)
  Vector X;         // ||X||_1 = 1
  RowVector phi;    // phi X = 1
};

OptimalEigen optimal_eigenelements(const Dim2Config& cfg);

/// Right-hand sides of the projective equations for y = x1/(x1+x2) and
/// q = p1/(p1+p2) under a constant control u on the string.
double y_field(double y, double u, const Dim2Config& cfg);
double q_field(double q, double u, const Dim2Config& cfg);

struct ProjectiveRates {
  double ydot, qdot;
};

ProjectiveRates projective_fields(double y, double q, double u, const Dim2Config& cfg);

/// Stationary points Y(u) of the y-flow and pi(u) of the q-flow in (0, 1).
struct SteadyProjections {
  double Y, pi;
};

SteadyProjections steady_projections(double u, const Dim2Config& cfg);

/// Projection of a positive state or adjoint vector.
inline double projection(double a, double b) { return a / (a + b); }

/// Solves s' = f(s) forward from s0 until s crosses `target`; RK4 with step
/// h and bisection on the last step length down to 1e-12 in time. Throws
/// NumericError if no crossing happens before t_max.
double first_passage(const std::function<double(double)>& f, double s0, double target,
                     double h = 1e-3, double t_max = 1e6);

/// RK4 solution of s' = f(s) after time t.
double flow(const std::function<double(double)>& f, double s0, double t, double h = 1e-3);

/// Time for the y-flow with u_max (y0 < Y(u_bar)) or u_min (y0 > Y(u_bar))
/// to reach Y(u_bar); zero when y0 is within 1e-12 of it.
double entry_time(double y0, const Dim2Config& cfg);

struct ExitResult {
  double T_psi = 0.0;
  double Y_psi = 0.0;
};

/// Duration of the final u_min arc: the q-flow with u_min reaches 1/3 at the
/// horizon when started from pi(u_bar). Y_psi is the y-flow with u_min from
/// Y(u_bar) after T_psi.
ExitResult exit_time(const Dim2Config& cfg);

class HorizonTooShort : public ValidationError {
 public:
  HorizonTooShort(const std::string& what, double minimum)
      : ValidationError(what), minimum_(minimum) {}
  double minimum_horizon() const noexcept { return minimum_; }

 private:
  double minimum_;
};

struct TurnpikeControl {
  double u_init = 0.0;
  double T0 = 0.0;
  double u_bar = 0.0;
  double v_bar = 0.0;
  double lambda_bar = 0.0;
  double Y_bar = 0.0;
  double pi_bar = 0.0;
  double T_psi = 0.0;
  double Y_psi = 0.0;
  double T = 0.0;
  double y0 = 0.0;
  double R = 0.0;  // ||x0||_1
  double S = 1.0;  // adjoint scale, p(T) = psi
  ControlSignal control;
};

/// Three-arc control u_init on [0, T0], u_bar on (T0, T - T_psi], u_min on
/// (T - T_psi, T], all on the string. Throws HorizonTooShort if
/// T <= T0 + T_psi.
TurnpikeControl synthesize_turnpike(const Vector& x0, double T, const Dim2Config& cfg);

/// Replaces the singular arc by n_pieces cells, each u_min for
/// dt (u_max - u_bar)/(u_max - u_min) then u_max for the rest; v = sigma(u)
/// which equals r(u) at the bounds.
ControlSignal chattering_approximation(const TurnpikeControl& tc, const Dim2Config& cfg,
                                       int n_pieces);

struct ChatterRow {
  int n_pieces = 0;
  double J = 0.0;
  double rel_gap = 0.0;  // |J - J*| / J*
  double integral_u_error = 0.0;
  double integral_v_error = 0.0;
};

struct ChatterReport {
  double J_star = 0.0;
  std::vector<ChatterRow> rows;
  bool monotone = true;  // gaps non-increasing along `rows`
  int reported_N = -1;   // first n after which every gap is <= 1%, -1 if none
};

ChatterReport chattering_convergence(const Vector& x0, const TurnpikeControl& tc,
                                     const Dim2Config& cfg, const std::vector<int>& pieces,
                                     double dt = 0.0);

struct IdentityReport {
  double u = 0.0;
  double delta = 0.0;
  double delta_from_matrix = 0.0;  // tr^2 - 4 det of M(u, sigma(u))
  double lambda_closed = 0.0;
  double lambda_numeric = 0.0;
  double concavity_identity = 0.0;     // 2 Delta Delta'' - Delta'^2
  double concavity_expected = 0.0;     // -32 D^2 beta^2
  double discriminant = 0.0;           // of the critical-point quadratic
  double discriminant_expected = 0.0;  // 64 A^2 B^2 D^2 beta^2
  double u_minus = 0.0;
  double u_sing = 0.0;
};

IdentityReport string_identities(const Dim2Config& cfg, double u);

/// Heuristic long-horizon threshold 3 (max(T0(0), T0(1)) + T_psi).
double horizon_threshold(const Dim2Config& cfg);

struct ProbeCase {
  double entry_shift = 0.0;
  double exit_shift = 0.0;
  double J = 0.0;
};

struct ProbeReport {
  double J_ref = 0.0;
  std::vector<ProbeCase> cases;
  bool all_smaller = true;
};

/// Shifts the entry and exit switching times by +-delta and records J.
ProbeReport perturbation_probe(const Vector& x0, const TurnpikeControl& tc,
                               const Dim2Config& cfg, double delta, double dt = 0.0);

}  // namespace pmca::dim2
