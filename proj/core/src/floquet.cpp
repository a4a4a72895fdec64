#include "pmca/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pmca/error.hpp"
#include "pmca/spectral.hpp"

namespace pmca {

PeriodicControl PeriodicControl::cosine(double u0, double eps, double omega) {
  if (!(omega > 0.0)) throw ValidationError("cosine control needs omega > 0");
  PeriodicControl c;
  c.period = 2.0 * std::numbers::pi / omega;
  c.u = [u0, eps, omega](double t) { return u0 + eps * std::cos(omega * t); };
  c.tag = "cosine: " + std::to_string(u0) + " + " + std::to_string(eps) + " cos(" +
          std::to_string(omega) + " t)";
  return c;
}

PeriodicControl PeriodicControl::constant(double c, double period) {
  PeriodicControl out;
  out.period = period;
  out.u = [c](double) { return c; };
  out.tag = "constant: " + std::to_string(c);
  return out;
}

Matrix monodromy(const PeriodicControl& control, const GrowthFragMatrices& m,
                 const RateFunction& r, int steps) {
  if (steps < 1024) throw ValidationError("monodromy needs at least 1024 steps per period");
  if (!(control.period > 0.0)) throw ValidationError("monodromy needs a positive period");

  const int n = m.n();
  const double h = control.period / steps;
  auto a_at = [&](double t) {
    const double u = control.u(t);
    return m.combined(u, r(u));
  };

  Matrix phi = Matrix::Identity(n, n);
  Matrix a0 = a_at(0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Matrix a_mid = a_at(t + 0.5 * h);
    const Matrix a1 = a_at(t + h);
    const Matrix k1 = a0 * phi;
    const Matrix k2 = a_mid * (phi + 0.5 * h * k1);
    const Matrix k3 = a_mid * (phi + 0.5 * h * k2);
    const Matrix k4 = a1 * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    a0 = a1;
  }
  if (!phi.allFinite()) {
    throw NumericError("monodromy overflowed", phi.cwiseAbs().maxCoeff());
  }
  return phi;
}

FloquetEigen floquet_dominant(const PeriodicControl& control, const GrowthFragMatrices& m,
                              const RateFunction& r, int steps) {
  const Matrix mono = monodromy(control, m, r, steps);
  Eigen::EigenSolver<Matrix> es(mono, false);
  if (es.info() != Eigen::Success) throw NumericError("monodromy eigen-decomposition failed");
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > std::abs(ev(best))) best = i;
  }
  FloquetEigen out;
  out.dominant = ev(best);
  out.lambda = std::log(std::abs(out.dominant)) / control.period;
  out.steps = steps;
  return out;
}

double floquet_eigenvalue(const PeriodicControl& control, const GrowthFragMatrices& m,
                          const RateFunction& r, int steps) {
  return floquet_dominant(control, m, r, steps).lambda;
}

FloquetEigen floquet_eigenvalue_converged(const PeriodicControl& control,
                                          const GrowthFragMatrices& m, const RateFunction& r,
                                          int initial_steps, double tolerance, int max_steps) {
  int steps = std::max(initial_steps, 1024);
  FloquetEigen prev = floquet_dominant(control, m, r, steps);
  while (true) {
    if (steps > max_steps / 2) {
      throw NumericError("Floquet eigenvalue did not self-converge", prev.self_convergence);
    }
    steps *= 2;
    FloquetEigen next = floquet_dominant(control, m, r, steps);
    next.self_convergence = std::abs(next.lambda - prev.lambda);
    if (next.self_convergence <= tolerance) return next;
    prev = next;
  }
}

SpectralBasis spectral_basis(double u, const GrowthFragMatrices& m, const RateFunction& r) {
  const int n = m.n();
  const Matrix mat = m.combined(u, r(u));
  Eigen::EigenSolver<Matrix> es(mat);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return es.eigenvalues()(a).real() > es.eigenvalues()(b).real();
  });

  SpectralBasis basis;
  basis.u = u;
  basis.X.resize(n, n);
  for (int k = 0; k < n; ++k) {
    basis.lambda.push_back(es.eigenvalues()(order[k]));
    basis.X.col(k) = es.eigenvectors().col(order[k]);
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(basis.X);
  const auto& sv = svd.singularValues();
  basis.condition = sv(0) / sv(n - 1);
  if (!(basis.condition <= 1e12)) {
    throw NumericError("M(u) is not numerically diagonalizable (eigenvector condition number " +
                           std::to_string(basis.condition) + ")",
                       basis.condition);
  }

  basis.X.col(0) /= basis.X.col(0).sum();
  basis.phi = basis.X.inverse();
  basis.biorthogonality_residual =
      (basis.phi * basis.X - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  return basis;
}

GammaCoefficients gamma_coefficient(double omega, std::complex<double> lambda_1,
                                    std::complex<double> lambda_i) {
  const std::complex<double> d = lambda_1 - lambda_i;
  if (std::abs(d) == 0.0) {
    throw ValidationError("gamma_coefficient: lambda_i equals the dominant eigenvalue");
  }
  const std::complex<double> denom = omega * omega + d * d;
  return {d / denom, omega / denom};
}

namespace {

struct BasisProducts {
  std::complex<double> first_order;       // phi_1 M' X_1
  std::complex<double> second_order;      // phi_1 M'' X_1
  std::vector<std::complex<double>> d;    // lambda_1 - lambda_i, i >= 2
  std::vector<std::complex<double>> c;    // (phi_1 M' X_i)(phi_i M' X_1)
};

BasisProducts basis_products(const SpectralBasis& basis, const GrowthFragMatrices& m,
                             const RateFunction& r) {
  const double u = basis.u;
  const Eigen::MatrixXcd mp = (r.d1(u) * m.G + m.F).cast<std::complex<double>>();
  const Eigen::MatrixXcd mpp = (r.d2(u) * m.G).cast<std::complex<double>>();
  BasisProducts out;
  out.first_order = (basis.phi.row(0) * mp * basis.X.col(0))(0);
  out.second_order = (basis.phi.row(0) * mpp * basis.X.col(0))(0);
  for (std::size_t i = 1; i < basis.lambda.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.d.push_back(basis.lambda[0] - basis.lambda[i]);
    out.c.push_back((basis.phi.row(0) * mp * basis.X.col(k))(0) *
                    (basis.phi.row(k) * mp * basis.X.col(0))(0));
  }
  return out;
}

}  // namespace

double floquet_second_derivative_formula(double omega, const SpectralBasis& basis,
                                         const GrowthFragMatrices& m, const RateFunction& r) {
  const auto bp = basis_products(basis, m, r);
  if (std::abs(bp.first_order) > 1e-8) {
    throw NumericError("u_opt is not a Perron critical point (d lambda/du = " +
                           std::to_string(std::abs(bp.first_order)) + ")",
                       std::abs(bp.first_order));
  }
  std::complex<double> total = 0.5 * bp.second_order;
  for (std::size_t i = 0; i < bp.d.size(); ++i) {
    const auto g = gamma_coefficient(omega, basis.lambda[0], basis.lambda[i + 1]);
    total += g.cos_coef * bp.c[i];
  }
  const double scale = std::max(1.0, std::abs(total.real()));
  if (std::abs(total.imag()) > 1e-10 * scale) {
    throw NumericError("conjugate eigenpairs did not cancel", std::abs(total.imag()));
  }
  return total.real();
}

double resonance_limit(double u_opt, double lambda_p, const RateFunction& r) {
  return 0.5 * r.d2(u_opt) / (r(u_opt) - u_opt * r.d1(u_opt)) * lambda_p;
}

double resonance_tail_bound(double omega, const SpectralBasis& basis,
                            const GrowthFragMatrices& m, const RateFunction& r) {
  const auto bp = basis_products(basis, m, r);
  double bound = 0.0;
  for (std::size_t i = 0; i < bp.d.size(); ++i) {
    const double dd = std::abs(bp.d[i]);
    if (omega * omega <= dd * dd) return std::numeric_limits<double>::infinity();
    bound += dd * std::abs(bp.c[i]) / (omega * omega - dd * dd);
  }
  return bound;
}

double perron_second_derivative(const SpectralBasis& basis, const GrowthFragMatrices& m,
                                const RateFunction& r) {
  const auto bp = basis_products(basis, m, r);
  std::complex<double> total = bp.second_order;
  for (std::size_t i = 0; i < bp.d.size(); ++i) total += 2.0 * bp.c[i] / bp.d[i];
  return total.real();
}

double floquet_second_derivative_fd(double u_opt, double omega, const GrowthFragMatrices& m,
                                    const RateFunction& r, int steps) {
  auto lf = [&](double eps) {
    return floquet_eigenvalue(PeriodicControl::cosine(u_opt, eps, omega), m, r, steps);
  };
  const double center = lf(0.0);
  auto second_difference = [&](double h) { return (lf(h) - 2.0 * center + lf(-h)) / (h * h); };
  const double coarse = second_difference(1e-2);
  const double fine = second_difference(1e-3);
  return (100.0 * fine - coarse) / 99.0;
}

std::vector<ResonanceRow> resonance_sweep(double u_opt, const std::vector<double>& omegas,
                                          const GrowthFragMatrices& m, const RateFunction& r,
                                          bool with_fd) {
  const auto basis = spectral_basis(u_opt, m, r);
  const double limit = resonance_limit(u_opt, basis.lambda[0].real(), r);
  std::vector<ResonanceRow> rows;
  rows.reserve(omegas.size());
  for (double w : omegas) {
    const double fd = with_fd ? floquet_second_derivative_fd(u_opt, w, m, r)
                              : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({w, floquet_second_derivative_formula(w, basis, m, r), fd, limit});
  }
  return rows;
}

double saddle_threshold(const std::vector<ResonanceRow>& rows) {
  if (rows.empty() || !(rows.back().formula > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  std::size_t k = rows.size() - 1;
  while (k > 0 && rows[k - 1].formula > 0.0) --k;
  return rows[k].omega;
}

}  // namespace pmca
