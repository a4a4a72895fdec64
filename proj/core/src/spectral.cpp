#include "pmca/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmca/error.hpp"

namespace pmca {
namespace {

constexpr double kResidualGate = 1e-11;

// Power iteration for the dominant eigenvector of a nonnegative primitive
// matrix, starting from the uniform positive vector.
Vector power_iterate(const Matrix& a, const PerronOptions& options, int& iterations,
                     double& last_change) {
  const auto n = a.rows();
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  last_change = std::numeric_limits<double>::infinity();
  for (iterations = 0; iterations < options.max_iterations; ++iterations) {
    Vector y = a * x;
    y /= y.lpNorm<1>();
    last_change = (y - x).lpNorm<Eigen::Infinity>();
    x = std::move(y);
    if (last_change <= options.tolerance) break;
  }
  return x;
}

// Newton steps on [A - mu I, -w; c^T, 0] [dw; dmu] = -[A w - mu w; c^T w - 1].
void polish_eigenpair(const Matrix& a, const Vector& c, Vector& w, double& mu) {
  const auto n = a.rows();
  Matrix jac(n + 1, n + 1);
  Vector rhs(n + 1);
  for (int step = 0; step < 4; ++step) {
    jac.topLeftCorner(n, n) = a - mu * Matrix::Identity(n, n);
    jac.topRightCorner(n, 1) = -w;
    jac.bottomLeftCorner(1, n) = c.transpose();
    jac(n, n) = 0.0;
    rhs.head(n) = -(a * w - mu * w);
    rhs(n) = 1.0 - c.dot(w);
    const Vector delta = jac.fullPivLu().solve(rhs);
    if (!delta.allFinite()) break;
    w += delta.head(n);
    mu += delta(n);
    if (delta.head(n).lpNorm<Eigen::Infinity>() <= 1e-16 * w.lpNorm<Eigen::Infinity>()) break;
  }
}

}  // namespace

PerronTriple perron_triple(double u, double v, const GrowthFragMatrices& m,
                           const PerronOptions& options) {
  if (u < 0.0 || !(v > 0.0)) {
    throw ValidationError("perron_triple requires u >= 0 and v > 0");
  }
  const int n = m.n();
  const Matrix mat = m.combined(u, v);
  PerronTriple out;

  if (u == 0.0) {
    // vG is lower bidiagonal with spectrum {-v tau_i} u {0}; the Perron limit
    // pair is the last unit vector with the all-ones left vector.
    out.lambda = 0.0;
    out.X = Vector::Zero(n);
    out.X(n - 1) = 1.0;
    out.phi = RowVector::Ones(n);
    out.reducible_limit = true;
    return out;
  }

  const double shift = mat.diagonal().cwiseAbs().maxCoeff() + 1.0;
  const Matrix shifted = mat + shift * Matrix::Identity(n, n);

  int it_right = 0, it_left = 0;
  double change_right = 0.0, change_left = 0.0;
  Vector x = power_iterate(shifted, options, it_right, change_right);
  Vector y = power_iterate(shifted.transpose(), options, it_left, change_left);
  out.iterations = std::max(it_right, it_left);

  double lambda = (x.transpose() * mat * x)(0) / x.squaredNorm();
  double lambda_left = (y.transpose() * mat * y)(0) / y.squaredNorm();

  polish_eigenpair(mat, Vector::Ones(n), x, lambda);
  // Left pair normalized against X so that phi X = 1 directly.
  polish_eigenpair(mat.transpose(), x, y, lambda_left);

  out.lambda = lambda;
  out.X = x / x.sum();
  out.phi = y.transpose() / (y.transpose() * out.X)(0);

  const double scale = mat.lpNorm<Eigen::Infinity>();
  const double res_x = (mat * out.X - out.lambda * out.X).lpNorm<Eigen::Infinity>() /
                       (scale * out.X.lpNorm<Eigen::Infinity>());
  const double res_phi = (out.phi * mat - out.lambda * out.phi).lpNorm<Eigen::Infinity>() /
                         (scale * out.phi.lpNorm<Eigen::Infinity>());
  out.residual = std::max(res_x, res_phi);

  if (!(out.residual <= kResidualGate) || (out.X.array() <= 0.0).any() ||
      (out.phi.array() <= 0.0).any()) {
    throw NumericError("Perron eigen-iteration did not converge (u=" + std::to_string(u) +
                           ", v=" + std::to_string(v) + ")",
                       out.residual);
  }
  return out;
}

PerronGradient perron_gradient(const PerronTriple& triple, const GrowthFragMatrices& m) {
  return {(triple.phi * m.F * triple.X)(0), (triple.phi * m.G * triple.X)(0)};
}

PerronGradient perron_gradient(double u, double v, const GrowthFragMatrices& m) {
  return perron_gradient(perron_triple(u, v, m), m);
}

StringLine string_params(const RateFunction& r, double u_min, double u_max) {
  if (!(u_min < u_max)) throw ValidationError("string_params requires u_min < u_max");
  const double r_lo = r(u_min);
  const double r_hi = r(u_max);
  return {(r_hi - r_lo) / (u_max - u_min), (u_max * r_lo - u_min * r_hi) / (u_max - u_min)};
}

bool in_hull(const HullPoint& point, const RateFunction& r, double u_min, double u_max,
             double tol) {
  const double su = tol * std::max(1.0, std::abs(u_max));
  if (point.u < u_min - su || point.u > u_max + su) return false;
  const double lo = r(point.u);
  const double hi = string_params(r, u_min, u_max)(point.u);
  const double sv = tol * std::max({1.0, std::abs(lo), std::abs(hi)});
  return point.v >= lo - sv && point.v <= hi + sv;
}

LineMaximum maximize_on_interval(const std::function<double(double)>& f,
                                 const std::function<double(double)>& df, double a, double b,
                                 int grid, double width) {
  if (!(a < b) || grid < 3) throw ValidationError("maximize_on_interval needs a < b, grid >= 3");

  std::vector<double> xs(grid), fs(grid);
  int best = 0;
  for (int i = 0; i < grid; ++i) {
    xs[i] = i + 1 == grid ? b : a + (b - a) * i / (grid - 1);
    fs[i] = f(xs[i]);
    if (fs[i] > fs[best]) best = i;
  }
  if (best == 0 || best == grid - 1) return {xs[best], fs[best], true};

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = xs[best - 1], hi = xs[best + 1];
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > width) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  double x = 0.5 * (lo + hi);

  if (df) {
    // Near the peak f is flat to O(sqrt(eps)); the derivative sign resolves it.
    const double left_limit = xs[best - 1], right_limit = xs[best + 1];
    double step = 1e-9 * (b - a);
    double l = x, r = x;
    bool bracketed = false;
    while (!bracketed && step < (right_limit - left_limit)) {
      l = std::max(left_limit, x - step);
      r = std::min(right_limit, x + step);
      bracketed = df(l) >= 0.0 && df(r) <= 0.0;
      step *= 4.0;
    }
    if (bracketed) {
      for (int k = 0; k < 200 && r - l > 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x); ++k) {
        const double mid = 0.5 * (l + r);
        const double g = df(mid);
        if (g == 0.0) {
          l = r = mid;
          break;
        }
        (g > 0.0 ? l : r) = mid;
      }
      x = 0.5 * (l + r);
    }
  }
  return {x, f(x), false};
}

LineMaximum maximize_perron_constant(const RateFunction& r, double a, double b,
                                     const GrowthFragMatrices& m) {
  auto f = [&](double u) { return perron_triple(u, r(u), m).lambda; };
  auto df = [&](double u) {
    const auto g = perron_gradient(u, r(u), m);
    return g.du + r.d1(u) * g.dv;
  };
  return maximize_on_interval(f, df, a, b);
}

LineMaximum maximize_perron_along(const StringLine& line, double a, double b,
                                  const GrowthFragMatrices& m) {
  auto f = [&](double u) { return perron_triple(u, line(u), m).lambda; };
  auto df = [&](double u) {
    const auto g = perron_gradient(u, line(u), m);
    return g.du + line.theta * g.dv;
  };
  return maximize_on_interval(f, df, a, b);
}

HullMaximum maximize_perron_hull(const RateFunction& r, double u_min, double u_max,
                                 const GrowthFragMatrices& m) {
  HullMaximum out;
  out.line = string_params(r, u_min, u_max);
  const auto best = maximize_perron_along(out.line, u_min, u_max, m);
  out.u_bar = best.u;
  out.v_bar = out.line(best.u);
  out.at_boundary = best.at_boundary;
  out.triple = perron_triple(out.u_bar, out.v_bar, m);
  return out;
}

std::vector<ScanRow> perron_scan(const RateFunction& r, double a, double b, int points,
                                 const GrowthFragMatrices& m) {
  if (points < 2) throw ValidationError("perron_scan needs at least 2 points");
  std::vector<ScanRow> rows;
  rows.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double u = i + 1 == points ? b : a + (b - a) * i / (points - 1);
    const double v = r(u);
    const auto t = perron_triple(u, v, m);
    const auto g = perron_gradient(t, m);
    rows.push_back({u, v, t.lambda, g.du, g.dv});
  }
  return rows;
}

const char* to_string(ExpansionRegime regime) {
  switch (regime) {
    case ExpansionRegime::GrowthDominated: return "k<l";
    case ExpansionRegime::Balanced: return "k=l";
    case ExpansionRegime::RateDominated: return "k>l";
  }
  return "?";
}

namespace {

// Solves sum_t c_t * basis_t(u_j) = rhs_j for as many terms as samples (<= 3).
Vector fit_terms(const std::vector<std::vector<double>>& basis, const std::vector<double>& rhs) {
  const auto rows = static_cast<Eigen::Index>(rhs.size());
  const auto cols = static_cast<Eigen::Index>(basis.front().size());
  Matrix a(rows, cols);
  Vector b(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index t = 0; t < cols; ++t) a(j, t) = basis[j][t];
    b(j) = rhs[j];
  }
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace

ExpansionReport expansion_check(const ModelParams& params, const RateFunction::PowerTail& rate,
                                int k, const std::vector<double>& samples) {
  const auto matrices = build_matrices(params);
  const int n = params.n;
  const auto& tau = params.tau;
  const auto& beta = params.beta;

  if (k < 1 || k + 1 > n) throw ValidationError("expansion_check: k must satisfy 1 <= k < n");
  for (int i = 1; i <= k; ++i) {
    if (std::abs(tau[i - 1] - i * tau[0]) > 1e-12 * i * tau[0]) {
      throw ValidationError("expansion_check: tau_" + std::to_string(i) + " != " +
                            std::to_string(i) + " tau_1");
    }
  }
  if (!(tau[k] > (k + 1) * tau[0])) {
    throw ValidationError("expansion_check: tau_" + std::to_string(k + 1) + " must exceed " +
                          std::to_string(k + 1) + " tau_1");
  }
  if (!(rate.r0 > 0.0) || rate.rl < 0.0 || !(rate.l > 0.0)) {
    throw ValidationError("expansion_check: need r0 > 0, rl >= 0, l > 0");
  }
  if (samples.size() < 2) throw ValidationError("expansion_check: need at least two samples");

  ExpansionReport rep;
  rep.k = k;
  rep.l = rate.l;
  rep.limit = rate.r0 * tau[0];

  double prod = 1.0;
  for (int i = 1; i <= k; ++i) prod *= tau[i - 1] / beta[i];
  const double growth_term = std::pow(rate.r0, k + 1) * (tau[k] - (k + 1) * tau[0]) * prod;
  const double rate_term = rate.rl * tau[0];

  const double gap = static_cast<double>(k) - rate.l;
  if (std::abs(gap) <= 1e-12) {
    rep.regime = ExpansionRegime::Balanced;
    rep.predicted_exponent = k;
    rep.predicted_coefficient = growth_term + rate_term;
  } else if (gap < 0.0) {
    rep.regime = ExpansionRegime::GrowthDominated;
    rep.predicted_exponent = k;
    rep.predicted_coefficient = growth_term;
  } else {
    rep.regime = ExpansionRegime::RateDominated;
    rep.predicted_exponent = rate.l;
    rep.predicted_coefficient = rate_term;
  }
  rep.correction_step = std::min(1.0, rate.l);
  if (std::abs(gap) > 1e-12) rep.correction_step = std::min(rep.correction_step, std::abs(gap));

  rep.u = samples;
  std::sort(rep.u.begin(), rep.u.end());
  const auto r = RateFunction::power_tail(rate.r0, rate.rl, rate.l);
  std::vector<Vector> eigvecs;
  for (double u : rep.u) {
    const auto t = perron_triple(u, r(u), matrices);
    rep.lambda.push_back(t.lambda);
    eigvecs.push_back(t.X);
  }

  const std::size_t ns = rep.u.size();
  const std::size_t terms = std::min<std::size_t>(ns, 3);
  const double m_exp = rep.predicted_exponent;
  const double s = rep.correction_step;

  {
    const double u1 = rep.u[ns - 2], u2 = rep.u[ns - 1];
    const double d1 = std::abs(rep.lambda[ns - 2] - rep.limit);
    const double d2 = std::abs(rep.lambda[ns - 1] - rep.limit);
    rep.fitted_exponent = -std::log(d2 / d1) / std::log(u2 / u1);

    std::vector<std::vector<double>> basis;
    std::vector<double> rhs;
    for (std::size_t j = ns - terms; j < ns; ++j) {
      std::vector<double> row;
      for (std::size_t t = 0; t < terms; ++t) row.push_back(std::pow(rep.u[j], -s * t));
      basis.push_back(row);
      rhs.push_back((rep.lambda[j] - rep.limit) * std::pow(rep.u[j], m_exp));
    }
    rep.fitted_coefficient = fit_terms(basis, rhs)(0);
    rep.coefficient_rel_error = std::abs(rep.fitted_coefficient - rep.predicted_coefficient) /
                                std::abs(rep.predicted_coefficient);
  }

  double c = 1.0;
  for (int i = 1; i <= n; ++i) {
    if (i > 1) c *= rate.r0 * tau[i - 2] / beta[i - 1];
    rep.eigvec_predicted_coefficient.push_back(c);
    rep.eigvec_predicted_exponent.push_back(1.0 - i);

    // ln x_i = ln C + e ln u + d u^(-s)
    std::vector<std::vector<double>> basis;
    std::vector<double> rhs;
    for (std::size_t j = ns - terms; j < ns; ++j) {
      std::vector<double> row{1.0, std::log(rep.u[j])};
      if (terms == 3) row.push_back(std::pow(rep.u[j], -s));
      basis.push_back(row);
      rhs.push_back(std::log(eigvecs[j](i - 1)));
    }
    const Vector fit = fit_terms(basis, rhs);
    rep.eigvec_fitted_coefficient.push_back(std::exp(fit(0)));
    rep.eigvec_fitted_exponent.push_back(fit(1));
  }
  return rep;
}

}  // namespace pmca
