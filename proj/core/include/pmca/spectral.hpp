#pragma once

#include <functional>
#include <vector>

#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"

namespace pmca {

/// Dominant eigenvalue of M(u, v) = uF + vG with its right eigenvector X
/// (||X||_1 = 1) and left eigenvector phi (phi X = 1).
struct PerronTriple {
  double lambda = 0.0;
  Vector X;
  RowVector phi;
  /// Set for u = 0: M = vG is reducible and lambda is the limit value 0.
  bool reducible_limit = false;
  int iterations = 0;
  /// max(||MX - lambda X||_inf, ||phi M - lambda phi||_inf) / ||M||_inf
  double residual = 0.0;
};

struct PerronOptions {
  int max_iterations = 100000;
  double tolerance = 1e-13;
};

/// Shifted power iteration on M + cI (c = max |diag| + 1) for both
/// eigenvectors, followed by Newton polishing of the bordered eigen-system.
/// Throws NumericError if the final residual exceeds 1e-11 ||M||_inf.
PerronTriple perron_triple(double u, double v, const GrowthFragMatrices& m,
                           const PerronOptions& options = {});

struct PerronGradient {
  double du = 0.0;  // phi F X
  double dv = 0.0;  // phi G X
};

PerronGradient perron_gradient(const PerronTriple& triple, const GrowthFragMatrices& m);
PerronGradient perron_gradient(double u, double v, const GrowthFragMatrices& m);

/// Chord sigma(u) = theta u + zeta joining the endpoints of Graph(r).
struct StringLine {
  double theta = 0.0;
  double zeta = 0.0;

  double operator()(double u) const { return theta * u + zeta; }
};

StringLine string_params(const RateFunction& r, double u_min, double u_max);

struct HullPoint {
  double u = 0.0;
  double v = 0.0;
};

/// u in [u_min, u_max] and r(u) <= v <= sigma(u), up to `tol` (relative).
bool in_hull(const HullPoint& point, const RateFunction& r, double u_min, double u_max,
             double tol = 1e-12);

struct LineMaximum {
  double u = 0.0;
  double lambda = 0.0;
  bool at_boundary = false;
};

/// Maximizes f on [a, b] with a `grid`-point pre-scan, golden-section on the
/// bracket around the best sample, and bisection on the sign of `df` when a
/// derivative is supplied. Returns the endpoint with `at_boundary` set when
/// the scan peaks there.
LineMaximum maximize_on_interval(const std::function<double(double)>& f,
                                 const std::function<double(double)>& df, double a, double b,
                                 int grid = 256, double width = 1e-10);

/// argmax of u -> lambda_P(u, r(u)) on [a, b].
LineMaximum maximize_perron_constant(const RateFunction& r, double a, double b,
                                     const GrowthFragMatrices& m);

/// argmax of u -> lambda_P(u, theta u + zeta) on [a, b].
LineMaximum maximize_perron_along(const StringLine& line, double a, double b,
                                  const GrowthFragMatrices& m);

struct HullMaximum {
  double u_bar = 0.0;
  double v_bar = 0.0;
  PerronTriple triple;
  StringLine line;
  bool at_boundary = false;
};

/// Maximizer of lambda_P over Conv(Graph r), searched on the upper string.
HullMaximum maximize_perron_hull(const RateFunction& r, double u_min, double u_max,
                                 const GrowthFragMatrices& m);

struct ScanRow {
  double u, v, lambda, dlambda_du, dlambda_dv;
};

/// lambda_P and its gradient at `points` equally spaced u in [a, b], v = r(u).
std::vector<ScanRow> perron_scan(const RateFunction& r, double a, double b, int points,
                                 const GrowthFragMatrices& m);

enum class ExpansionRegime { GrowthDominated, Balanced, RateDominated };  // k<l, k=l, k>l

const char* to_string(ExpansionRegime regime);

/// Large-u behavior of lambda_P(u, r(u)) for r = r0 + rl u^(-l) and growth
/// rates with tau_i = i tau_1 for i <= k, tau_{k+1} > (k+1) tau_1.
struct ExpansionReport {
  int k = 0;
  double l = 0.0;
  ExpansionRegime regime = ExpansionRegime::GrowthDominated;
  double limit = 0.0;              // r0 tau_1
  double predicted_exponent = 0.0;  // min(k, l)
  double predicted_coefficient = 0.0;
  double correction_step = 0.0;  // exponent gap used by the fit

  std::vector<double> u;
  std::vector<double> lambda;
  double fitted_exponent = 0.0;  // log-log slope between the two largest samples
  double fitted_coefficient = 0.0;
  double coefficient_rel_error = 0.0;

  // Eigenvector decay x_i ~ C_i u^(1-i), i = 1..n.
  std::vector<double> eigvec_predicted_coefficient;
  std::vector<double> eigvec_predicted_exponent;
  std::vector<double> eigvec_fitted_coefficient;
  std::vector<double> eigvec_fitted_exponent;
};

/// Throws ValidationError if tau violates the stated structure for `k`.
ExpansionReport expansion_check(const ModelParams& params, const RateFunction::PowerTail& rate,
                                int k, const std::vector<double>& samples = {1e3, 3e3, 1e4});

}  // namespace pmca
