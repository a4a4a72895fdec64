#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pmca {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

/// Biological coefficients of the n-compartment growth-fragmentation model.
///
/// `tau` and `beta` are indexed from 0 (entry k holds the rate of compartment
/// k+1). Kernel entries are keyed by the 1-based compartment pair (i, j) with
/// i < j; a missing entry means zero.
struct ModelParams {
  int n = 0;
  std::vector<double> tau;
  std::vector<double> beta;
  std::map<std::pair<int, int>, double> kappa;

  double kappa_at(int i, int j) const;

  bool operator==(const ModelParams&) const = default;
};

enum class ViolationKind {
  TooFewCompartments,
  SizeMismatch,
  NonPositiveGrowth,
  NonPositiveFragmentation,
  NonZeroLastGrowth,
  NonZeroFirstFragmentation,
  NegativeKernel,
  KernelIndexOutOfRange,
  MassConservation,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int i = 0;  // 1-based compartment index, 0 when not applicable
  int j = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

/// Checks positivity of the rates, the boundary conditions beta_1 = 0 and
/// tau_n = 0, kernel sign and the discrete mass-conservation law
/// sum_{i<j} i * kappa_ij = j (tolerance 1e-12 * j).
ValidationReport validate(const ModelParams& params);

/// Dense growth matrix G, fragmentation matrix F and mass row-vector
/// psi = (1, ..., n). Immutable once built.
struct GrowthFragMatrices {
  Matrix F;
  Matrix G;
  RowVector psi;

  int n() const { return static_cast<int>(F.rows()); }
  Matrix combined(double u, double v) const { return u * F + v * G; }
};

/// Throws ValidationError carrying the report summary if `params` is invalid.
GrowthFragMatrices build_matrices(const ModelParams& params);

/// Two-compartment model with tau_1 = tau, beta_2 = beta and kappa_12 = 2.
ModelParams two_compartment(double tau, double beta);

}  // namespace pmca
