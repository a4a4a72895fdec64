#include "pmca/model.hpp"

#include <cmath>
#include <sstream>

#include "pmca/error.hpp"

namespace pmca {

double ModelParams::kappa_at(int i, int j) const {
  auto it = kappa.find({i, j});
  return it == kappa.end() ? 0.0 : it->second;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::TooFewCompartments: return "too_few_compartments";
    case ViolationKind::SizeMismatch: return "size_mismatch";
    case ViolationKind::NonPositiveGrowth: return "non_positive_growth";
    case ViolationKind::NonPositiveFragmentation: return "non_positive_fragmentation";
    case ViolationKind::NonZeroLastGrowth: return "non_zero_last_growth";
    case ViolationKind::NonZeroFirstFragmentation: return "non_zero_first_fragmentation";
    case ViolationKind::NegativeKernel: return "negative_kernel";
    case ViolationKind::KernelIndexOutOfRange: return "kernel_index_out_of_range";
    case ViolationKind::MassConservation: return "mass_conservation";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  for (const auto& v : violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    if (k) os << "; ";
    os << to_string(violations[k].kind) << ": " << violations[k].message;
  }
  return os.str();
}

ValidationReport validate(const ModelParams& params) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, int i, int j, std::string msg) {
    report.violations.push_back({kind, i, j, std::move(msg)});
  };

  const int n = params.n;
  if (n < 2) {
    add(ViolationKind::TooFewCompartments, 0, 0,
        "n = " + std::to_string(n) + " but at least 2 compartments are required");
    return report;
  }
  if (static_cast<int>(params.tau.size()) != n || static_cast<int>(params.beta.size()) != n) {
    add(ViolationKind::SizeMismatch, 0, 0,
        "tau and beta must both have n = " + std::to_string(n) + " entries");
    return report;
  }

  for (int i = 1; i <= n - 1; ++i) {
    if (!(params.tau[i - 1] > 0.0)) {
      add(ViolationKind::NonPositiveGrowth, i, 0, "tau_" + std::to_string(i) + " must be > 0");
    }
    if (!(params.beta[i] > 0.0)) {
      add(ViolationKind::NonPositiveFragmentation, i + 1, 0,
          "beta_" + std::to_string(i + 1) + " must be > 0");
    }
  }
  if (params.tau[n - 1] != 0.0) {
    add(ViolationKind::NonZeroLastGrowth, n, 0, "tau_" + std::to_string(n) + " must be 0");
  }
  if (params.beta[0] != 0.0) {
    add(ViolationKind::NonZeroFirstFragmentation, 1, 0, "beta_1 must be 0");
  }

  for (const auto& [key, value] : params.kappa) {
    const auto [i, j] = key;
    if (i < 1 || j > n || i >= j) {
      add(ViolationKind::KernelIndexOutOfRange, i, j,
          "kappa_(" + std::to_string(i) + "," + std::to_string(j) + ") needs 1 <= i < j <= n");
    } else if (value < 0.0) {
      add(ViolationKind::NegativeKernel, i, j,
          "kappa_(" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
    }
  }

  for (int j = 2; j <= n; ++j) {
    double mass = 0.0;
    for (int i = 1; i < j; ++i) mass += i * params.kappa_at(i, j);
    if (std::abs(mass - j) > 1e-12 * j) {
      std::ostringstream os;
      os << "sum_i i*kappa_(i," << j << ") = " << mass << " but must equal " << j;
      add(ViolationKind::MassConservation, 0, j, os.str());
    }
  }
  return report;
}

GrowthFragMatrices build_matrices(const ModelParams& params) {
  const auto report = validate(params);
  if (!report.ok()) throw ValidationError("invalid model: " + report.summary());

  const int n = params.n;
  GrowthFragMatrices m;
  m.F = Matrix::Zero(n, n);
  m.G = Matrix::Zero(n, n);
  m.psi = RowVector::LinSpaced(n, 1.0, static_cast<double>(n));

  for (int j = 0; j < n; ++j) {
    m.F(j, j) = -params.beta[j];
    for (int i = 0; i < j; ++i) m.F(i, j) = params.kappa_at(i + 1, j + 1) * params.beta[j];
    m.G(j, j) = -params.tau[j];
    if (j + 1 < n) m.G(j + 1, j) = params.tau[j];
  }
  return m;
}

ModelParams two_compartment(double tau, double beta) {
  ModelParams p;
  p.n = 2;
  p.tau = {tau, 0.0};
  p.beta = {0.0, beta};
  p.kappa[{1, 2}] = 2.0;
  return p;
}

}  // namespace pmca
