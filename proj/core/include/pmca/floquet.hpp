#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"

namespace pmca {

/// Time-periodic intensity u(t) acting through M(u) = uF + r(u)G.
struct PeriodicControl {
  double period = 1.0;
  std::function<double(double)> u;
  std::string tag;

  /// u0 + eps cos(omega t), period 2 pi / omega.
  static PeriodicControl cosine(double u0, double eps, double omega);
  static PeriodicControl constant(double c, double period);
};

/// Fundamental matrix of x' = M(u(t)) x over one period, classical RK4 with
/// `steps` uniform steps (steps >= 1024).
Matrix monodromy(const PeriodicControl& control, const GrowthFragMatrices& m,
                 const RateFunction& r, int steps);

struct FloquetEigen {
  double lambda = 0.0;                // ln(rho) / period
  std::complex<double> dominant;      // dominant monodromy eigenvalue
  int steps = 0;
  double self_convergence = 0.0;      // |lambda(steps) - lambda(steps / 2)|
};

/// lambda_F = ln(spectral radius of the monodromy) / period.
double floquet_eigenvalue(const PeriodicControl& control, const GrowthFragMatrices& m,
                          const RateFunction& r, int steps);

/// Doubles the step count from `initial_steps` until successive estimates
/// agree within `tolerance` (or `max_steps` is hit, which throws).
FloquetEigen floquet_eigenvalue_converged(const PeriodicControl& control,
                                          const GrowthFragMatrices& m, const RateFunction& r,
                                          int initial_steps = 4096, double tolerance = 1e-9,
                                          int max_steps = 1 << 22);

/// Dominant monodromy eigenvalue with the full monodromy spectrum.
FloquetEigen floquet_dominant(const PeriodicControl& control, const GrowthFragMatrices& m,
                              const RateFunction& r, int steps);

/// Biorthonormal eigenbases of M(u) = uF + r(u)G: columns of X are right
/// eigenvectors, rows of phi are left eigenvectors, phi_i X_j = delta_ij.
/// Index 0 is the Perron pair with X_1 > 0 and ||X_1||_1 = 1.
struct SpectralBasis {
  double u = 0.0;
  std::vector<std::complex<double>> lambda;
  Eigen::MatrixXcd X;
  Eigen::MatrixXcd phi;
  double condition = 0.0;
  double biorthogonality_residual = 0.0;
};

/// Throws NumericError if the eigenvector matrix has condition number > 1e12.
SpectralBasis spectral_basis(double u, const GrowthFragMatrices& m, const RateFunction& r);

/// Cos/sin coefficients of the 2 pi / omega periodic solution of
/// g' + (lambda_1 - lambda_i) g = cos(omega t).
struct GammaCoefficients {
  std::complex<double> cos_coef;
  std::complex<double> sin_coef;
};

GammaCoefficients gamma_coefficient(double omega, std::complex<double> lambda_1,
                                    std::complex<double> lambda_i);

/// d^2 lambda_F / d eps^2 at eps = 0 for u(t) = u_opt + eps cos(omega t),
/// from the spectral basis at u_opt. Requires d lambda_P / du (u_opt) to
/// vanish within 1e-8; throws NumericError otherwise or if the conjugate
/// pairs fail to cancel (imaginary residue > 1e-10).
double floquet_second_derivative_formula(double omega, const SpectralBasis& basis,
                                         const GrowthFragMatrices& m, const RateFunction& r);

/// 1/2 r''/(r - u r') lambda_P at u_opt: the omega -> infinity value.
double resonance_limit(double u_opt, double lambda_p, const RateFunction& r);

/// Sum over i >= 2 of |d_i c_i| / (omega^2 - |d_i|^2), d_i = lambda_1 - lambda_i,
/// c_i = (phi_1 M' X_i)(phi_i M' X_1): bound on |formula - 1/2 phi_1 M'' X_1|.
/// Infinite when omega <= max |d_i|.
double resonance_tail_bound(double omega, const SpectralBasis& basis,
                            const GrowthFragMatrices& m, const RateFunction& r);

/// d^2 lambda_P / du^2 at basis.u from the eigen-decomposition.
double perron_second_derivative(const SpectralBasis& basis, const GrowthFragMatrices& m,
                                const RateFunction& r);

/// Central second difference of lambda_F in eps at eps in {1e-2, 1e-3},
/// Richardson-combined. lambda_F(0) is recomputed with the same monodromy
/// step count so that discretization error cancels to leading order.
double floquet_second_derivative_fd(double u_opt, double omega, const GrowthFragMatrices& m,
                                    const RateFunction& r, int steps = 4096);

struct ResonanceRow {
  double omega;
  double formula;
  double finite_difference;
  double limit;
};

/// omega sweep; `with_fd` toggles the monodromy-based column (NaN otherwise).
std::vector<ResonanceRow> resonance_sweep(double u_opt, const std::vector<double>& omegas,
                                          const GrowthFragMatrices& m, const RateFunction& r,
                                          bool with_fd = true);

/// Smallest sampled omega above which every sampled formula value is
/// positive; NaN if the last sample is not positive.
double saddle_threshold(const std::vector<ResonanceRow>& rows);

}  // namespace pmca
