#include "pmca/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pmca/error.hpp"

namespace pmca {

int DirectProblem::cells() const { return static_cast<int>(std::llround(T / cell)); }

std::vector<double> DirectProblem::breakpoints() const {
  const int k = cells();
  std::vector<double> t(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) t[static_cast<std::size_t>(i)] = i == k ? T : i * cell;
  return t;
}

ControlSignal DirectProblem::control(const std::vector<double>& u) const {
  return ControlSignal::on_graph(breakpoints(), u, rate);
}

void DirectProblem::validate() const {
  if (!(T > 0.0) || !(cell > 0.0)) throw ValidationError("horizon and cell width must be positive");
  const int k = cells();
  if (k < 1 || std::abs(k * cell - T) > 1e-9 * T) {
    throw ValidationError("cell width " + std::to_string(cell) + " does not divide T = " +
                          std::to_string(T));
  }
  if (!(u_min < u_max)) throw ValidationError("need u_min < u_max");
  if (!(dt > 0.0)) throw ValidationError("integration step must be positive");
  if (x0.size() != model.n() || (x0.array() <= 0.0).any()) {
    throw ValidationError("x0 must be a positive vector of the model dimension");
  }
  if (!rate.positive_on(u_min, u_max)) throw ValidationError("r must be positive on the bounds");
}

namespace {

struct CellScheme {
  int substeps = 1;
  double h = 0.0;
};

CellScheme cell_scheme(const DirectProblem& pb) {
  CellScheme s;
  s.substeps = std::max(1, static_cast<int>(std::ceil(pb.cell / pb.dt * (1.0 - 1e-12))));
  s.h = pb.cell / s.substeps;
  return s;
}

/// d/du of the degree-4 Taylor polynomial of exp(hA(u)), with dA/du = b.
Matrix propagator_derivative(const Matrix& a, const Matrix& b, double h) {
  const int n = static_cast<int>(a.rows());
  Matrix power = Matrix::Identity(n, n);  // A^(i-1)
  Matrix dpower = Matrix::Zero(n, n);     // d(A^(i-1))
  Matrix out = Matrix::Zero(n, n);
  double coef = 1.0;
  for (int i = 1; i <= 4; ++i) {
    dpower = dpower * a + power * b;
    power = power * a;
    coef *= h / i;
    out += coef * dpower;
  }
  return out;
}

void check_cells(const DirectProblem& pb, const std::vector<double>& u) {
  if (static_cast<int>(u.size()) != pb.cells()) {
    throw ValidationError("control has " + std::to_string(u.size()) + " cells, expected " +
                          std::to_string(pb.cells()));
  }
}

}  // namespace

double objective_value(const DirectProblem& pb, const std::vector<double>& u) {
  check_cells(pb, u);
  const auto s = cell_scheme(pb);
  Vector x = pb.x0;
  for (double uk : u) {
    const Matrix prop = rk4_propagator(pb.model.combined(uk, pb.rate(uk)), s.h);
    for (int j = 0; j < s.substeps; ++j) x = prop * x;
  }
  return pb.model.psi.dot(x);
}

ObjectiveValue objective_gradient(const DirectProblem& pb, const std::vector<double>& u) {
  check_cells(pb, u);
  const auto s = cell_scheme(pb);
  const std::size_t k_cells = u.size();
  const int n = pb.model.n();

  std::vector<Matrix> props(k_cells);
  Matrix xs(n, static_cast<Eigen::Index>(k_cells * s.substeps + 1));
  xs.col(0) = pb.x0;
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < k_cells; ++k) {
    props[k] = rk4_propagator(pb.model.combined(u[k], pb.rate(u[k])), s.h);
    for (int j = 0; j < s.substeps; ++j, ++col) xs.col(col + 1) = props[k] * xs.col(col);
  }

  ObjectiveValue out;
  out.J = pb.model.psi.dot(xs.col(col));
  out.gradient.assign(k_cells, 0.0);
  Vector p = pb.model.psi.transpose();
  for (std::size_t k = k_cells; k-- > 0;) {
    Matrix w = Matrix::Zero(n, n);  // sum of p_{j+1} x_j^T over the cell
    for (int j = 0; j < s.substeps; ++j, --col) {
      w += p * xs.col(col - 1).transpose();
      p = props[k].transpose() * p;
    }
    const Matrix a = pb.model.combined(u[k], pb.rate(u[k]));
    const Matrix b = pb.model.F + pb.rate.d1(u[k]) * pb.model.G;
    out.gradient[k] = propagator_derivative(a, b, s.h).cwiseProduct(w).sum();
  }
  return out;
}

std::vector<double> refine_cells(const std::vector<double>& u, int factor) {
  if (factor < 1) throw ValidationError("refinement factor must be positive");
  std::vector<double> out;
  out.reserve(u.size() * static_cast<std::size_t>(factor));
  for (double x : u) out.insert(out.end(), static_cast<std::size_t>(factor), x);
  return out;
}

namespace {

DirectResult ascend(const DirectProblem& pb, std::vector<double> u) {
  const auto& st = pb.settings;
  auto clamp = [&](double x) { return std::clamp(x, pb.u_min, pb.u_max); };
  for (double& x : u) x = clamp(x);

  DirectResult res;
  ObjectiveValue cur = objective_gradient(pb, u);
  if (!(cur.J > 0.0)) throw NumericError("objective is not positive", cur.J);
  double f = std::log(cur.J);
  double step = 0.0;

  for (int it = 0; it < st.max_iterations; ++it) {
    std::vector<double> g(u.size());
    double gmax = 0.0;
    double pg = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      g[k] = cur.gradient[k] / cur.J;
      gmax = std::max(gmax, std::abs(g[k]));
      pg = std::max(pg, std::abs(clamp(u[k] + g[k]) - u[k]));
    }
    res.history.push_back({it, cur.J, pg, step});
    if (pg <= st.grad_tol) {
      res.converged = true;
      res.iterations = it;
      break;
    }
    double s = step > 0.0 ? 4.0 * step : (pb.u_max - pb.u_min) / gmax;
    bool accepted = false;
    for (int bt = 0; bt < st.max_backtracks; ++bt, s *= st.shrink) {
      std::vector<double> trial(u.size());
      double slope = 0.0;
      for (std::size_t k = 0; k < u.size(); ++k) {
        trial[k] = clamp(u[k] + s * g[k]);
        slope += g[k] * (trial[k] - u[k]);
      }
      const ObjectiveValue next = objective_gradient(pb, trial);
      if (next.J > 0.0 && std::log(next.J) >= f + st.armijo * slope) {
        u = std::move(trial);
        cur = next;
        f = std::log(cur.J);
        step = s;
        accepted = true;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) break;
  }
  res.u = std::move(u);
  res.J = cur.J;
  return res;
}

}  // namespace

DirectResult optimize_direct(const DirectProblem& pb,
                             const std::optional<std::vector<double>>& initial) {
  pb.validate();
  std::vector<double> u0 = initial ? *initial
                                   : std::vector<double>(static_cast<std::size_t>(pb.cells()),
                                                         0.5 * (pb.u_min + pb.u_max));
  DirectResult best = ascend(pb, u0);
  std::mt19937 gen(pb.settings.seed);
  std::uniform_real_distribution<double> dist(pb.u_min, pb.u_max);
  for (int r = 0; r < pb.settings.restarts; ++r) {
    for (double& x : u0) x = dist(gen);
    DirectResult cand = ascend(pb, u0);
    if (cand.J > best.J) best = std::move(cand);
  }
  return best;
}

namespace {

enum class BoundClass { Low, High, Inside };

BoundClass classify(double u, double u_min, double u_max, double tol) {
  const double eps = tol * (u_max - u_min);
  if (std::abs(u - u_min) <= eps) return BoundClass::Low;
  if (std::abs(u - u_max) <= eps) return BoundClass::High;
  return BoundClass::Inside;
}

}  // namespace

DutyStats duty_ratio_stats(const ControlSignal& control, double window_start, double window_end,
                           double u_min, double u_max, double tol) {
  if (!(window_end > window_start)) throw ValidationError("empty duty-ratio window");
  double total = 0.0;
  double integral = 0.0;
  double at_max = 0.0;
  double at_min = 0.0;
  for (const auto& seg : control.segments()) {
    const double len =
        std::min(seg.t_end, window_end) - std::max(seg.t_start, window_start);
    if (len <= 0.0) continue;
    total += len;
    integral += len * seg.u;
    switch (classify(seg.u, u_min, u_max, tol)) {
      case BoundClass::High: at_max += len; break;
      case BoundClass::Low: at_min += len; break;
      case BoundClass::Inside: break;
    }
  }
  if (!(total > 0.0)) throw ValidationError("window does not overlap the control");
  DutyStats out;
  out.mean_u = integral / total;
  out.fraction_at_umax = at_max / total;
  out.fraction_at_umin = at_min / total;
  if (at_min > 0.0) out.R_emp = at_max / at_min;
  return out;
}

double optimal_ratio(double u_bar, double u_min, double u_max) {
  return (u_bar - u_min) / (u_max - u_bar);
}

int count_switches(const ControlSignal& control, double window_start, double window_end,
                   double u_min, double u_max, double tol) {
  int switches = 0;
  BoundClass last = BoundClass::Inside;
  for (const auto& seg : control.segments()) {
    if (seg.t_start < window_start || seg.t_start >= window_end) continue;
    const BoundClass c = classify(seg.u, u_min, u_max, tol);
    if (c == BoundClass::Inside) continue;
    if (last != BoundClass::Inside && c != last) ++switches;
    last = c;
  }
  return switches;
}

}  // namespace pmca
