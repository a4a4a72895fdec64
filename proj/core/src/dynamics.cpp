#include "pmca/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmca/error.hpp"

namespace pmca {

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<double> u,
                             std::vector<double> v)
    : t_(std::move(breakpoints)), u_(std::move(u)), v_(std::move(v)) {
  if (u_.empty()) throw ValidationError("control needs at least one interval");
  if (t_.size() != u_.size() + 1 || v_.size() != u_.size()) {
    throw ValidationError("control breakpoints/values size mismatch");
  }
  if (t_.front() != 0.0) throw ValidationError("control grid must start at t = 0");
  for (std::size_t k = 0; k + 1 < t_.size(); ++k) {
    if (!(t_[k + 1] > t_[k])) {
      throw ValidationError("control breakpoints must be strictly increasing (index " +
                            std::to_string(k + 1) + ")");
    }
  }
}

ControlSignal ControlSignal::on_graph(std::vector<double> breakpoints, std::vector<double> u,
                                      const RateFunction& r) {
  std::vector<double> v(u.size());
  std::transform(u.begin(), u.end(), v.begin(), [&](double x) { return r(x); });
  return ControlSignal(std::move(breakpoints), std::move(u), std::move(v));
}

ControlSignal ControlSignal::on_string(std::vector<double> breakpoints, std::vector<double> u,
                                       const StringLine& line) {
  std::vector<double> v(u.size());
  std::transform(u.begin(), u.end(), v.begin(), [&](double x) { return line(x); });
  return ControlSignal(std::move(breakpoints), std::move(u), std::move(v));
}

ControlSignal ControlSignal::constant(double horizon, double u, double v) {
  return ControlSignal({0.0, horizon}, {u}, {v});
}

std::vector<ControlSegment> ControlSignal::segments() const {
  std::vector<ControlSegment> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back(segment(k));
  return out;
}

std::size_t ControlSignal::index_at(double t) const {
  if (t >= t_.back()) return size() - 1;
  if (t <= 0.0) return 0;
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  return static_cast<std::size_t>(it - t_.begin()) - 1;
}

void ControlSignal::check_admissible(const RateFunction& r, double u_min, double u_max,
                                     double tol) const {
  const StringLine line = string_params(r, u_min, u_max);
  const double span = u_max - u_min;
  for (std::size_t k = 0; k < size(); ++k) {
    const double u = u_[k];
    if (u < u_min - tol * span || u > u_max + tol * span) {
      throw ValidationError("control interval " + std::to_string(k) + ": u = " +
                            std::to_string(u) + " outside [u_min, u_max]");
    }
    const double lo = r(u);
    const double hi = line(u);
    const double slack = tol * std::max(1.0, std::abs(hi));
    if (v_[k] < lo - slack || v_[k] > hi + slack) {
      throw ValidationError("control interval " + std::to_string(k) +
                            ": (u, v) outside the convex hull of the graph of r");
    }
  }
}

double ControlSignal::integral_u() const {
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += (t_[k + 1] - t_[k]) * u_[k];
  return s;
}

double ControlSignal::integral_v() const {
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) s += (t_[k + 1] - t_[k]) * v_[k];
  return s;
}

TimeGrid make_grid(const ControlSignal& control, double dt) {
  if (!(dt > 0.0)) throw ValidationError("integration step dt must be positive");
  TimeGrid grid;
  grid.t.push_back(0.0);
  const auto& bp = control.breakpoints();
  for (std::size_t k = 0; k < control.size(); ++k) {
    const double len = bp[k + 1] - bp[k];
    const int m = std::max(1, static_cast<int>(std::ceil(len / dt * (1.0 - 1e-12))));
    const double h = len / m;
    grid.substeps.push_back(m);
    grid.h.push_back(h);
    for (int s = 1; s <= m; ++s) {
      grid.t.push_back(s == m ? bp[k + 1] : bp[k] + s * h);
      grid.step_segment.push_back(k);
    }
  }
  return grid;
}

Matrix rk4_propagator(const Matrix& a, double h) {
  const Matrix ha = h * a;
  const int n = static_cast<int>(a.rows());
  Matrix term = Matrix::Identity(n, n);
  Matrix p = term;
  for (int i = 1; i <= 4; ++i) {
    term = term * ha / static_cast<double>(i);
    p += term;
  }
  return p;
}

namespace {

std::vector<Matrix> segment_propagators(const ControlSignal& control, const TimeGrid& grid,
                                        const GrowthFragMatrices& m) {
  std::vector<Matrix> props;
  props.reserve(control.size());
  for (std::size_t k = 0; k < control.size(); ++k) {
    const auto seg = control.segment(k);
    props.push_back(rk4_propagator(m.combined(seg.u, seg.v), grid.h[k]));
  }
  return props;
}

}  // namespace

StatePath integrate_forward(const Vector& x0, const ControlSignal& control,
                            const GrowthFragMatrices& m, double dt) {
  const int n = m.n();
  if (x0.size() != n) throw ValidationError("x0 has the wrong dimension");
  if ((x0.array() < 0.0).any() || !(x0.sum() > 0.0)) {
    throw ValidationError("x0 must be nonnegative and nonzero");
  }
  const TimeGrid grid = make_grid(control, dt);
  const auto props = segment_propagators(control, grid, m);

  StatePath path;
  path.t = grid.t;
  path.x.resize(n, static_cast<Eigen::Index>(grid.points()));
  path.x.col(0) = x0;
  for (std::size_t j = 0; j + 1 < grid.points(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    path.x.col(jj + 1) = props[grid.step_segment[j]] * path.x.col(jj);
    const double lo = path.x.col(jj + 1).minCoeff();
    if (!(lo > 0.0)) {
      throw NumericError("state lost positivity at step " + std::to_string(j + 1) +
                             " (t = " + std::to_string(grid.t[j + 1]) + "); dt too large",
                         lo);
    }
  }
  return path;
}

AdjointPath integrate_adjoint(const ControlSignal& control, const GrowthFragMatrices& m,
                              double dt, const std::optional<RowVector>& terminal) {
  const int n = m.n();
  const RowVector pT = terminal ? *terminal : m.psi;
  if (pT.size() != n) throw ValidationError("adjoint terminal condition has the wrong dimension");
  const TimeGrid grid = make_grid(control, dt);
  const auto props = segment_propagators(control, grid, m);

  AdjointPath path;
  path.t = grid.t;
  const auto last = static_cast<Eigen::Index>(grid.points()) - 1;
  path.p.resize(n, last + 1);
  path.p.col(last) = pT.transpose();
  for (Eigen::Index j = last - 1; j >= 0; --j) {
    const Matrix& prop = props[grid.step_segment[static_cast<std::size_t>(j)]];
    path.p.col(j) = prop.transpose() * path.p.col(j + 1);
    const double lo = path.p.col(j).minCoeff();
    if (!(lo > 0.0)) {
      throw NumericError("adjoint lost positivity at step " + std::to_string(j) + " (t = " +
                             std::to_string(grid.t[static_cast<std::size_t>(j)]) +
                             "); dt too large",
                         lo);
    }
  }
  return path;
}

double objective(const Vector& x_final, const GrowthFragMatrices& m) {
  return m.psi.dot(x_final);
}

double objective(const Trajectory& traj, const GrowthFragMatrices& m) {
  return objective(Vector(traj.x.col(traj.x.cols() - 1)), m);
}

double hamiltonian(const Vector& x, const RowVector& p, double u, double v,
                   const GrowthFragMatrices& m) {
  return p * (m.combined(u, v) * x);
}

std::vector<double> switching_function(const Matrix& x, const Matrix& p, double theta,
                                       const GrowthFragMatrices& m) {
  const Matrix k = m.F + theta * m.G;
  std::vector<double> phi(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    phi[static_cast<std::size_t>(j)] = p.col(j).dot(k * x.col(j));
  }
  return phi;
}

std::vector<double> switching_function(const Trajectory& traj, double theta,
                                       const GrowthFragMatrices& m) {
  return switching_function(traj.x, traj.p, theta, m);
}

Trajectory simulate(const Vector& x0, const ControlSignal& control, const GrowthFragMatrices& m,
                    double theta, const SimulateOptions& options) {
  double dt = options.dt > 0.0 ? options.dt : control.horizon() / 20000.0;
  StatePath fwd;
  AdjointPath adj;
  for (int attempt = 0;; ++attempt) {
    try {
      fwd = integrate_forward(x0, control, m, dt);
      adj = integrate_adjoint(control, m, dt);
      break;
    } catch (const NumericError&) {
      if (attempt >= options.max_refinements) throw;
      dt *= 0.5;
    }
  }

  Trajectory traj;
  traj.t = fwd.t;
  traj.x = std::move(fwd.x);
  traj.p = std::move(adj.p);
  traj.theta = theta;
  traj.dt = dt;
  const std::size_t np = traj.points();
  traj.u.resize(np);
  traj.v.resize(np);
  traj.H.resize(np);
  const TimeGrid grid = make_grid(control, dt);
  for (std::size_t j = 0; j < np; ++j) {
    const std::size_t k = j + 1 < np ? grid.step_segment[j] : control.size() - 1;
    const auto seg = control.segment(k);
    traj.u[j] = seg.u;
    traj.v[j] = seg.v;
    const auto jj = static_cast<Eigen::Index>(j);
    traj.H[j] = hamiltonian(traj.x.col(jj), traj.p.col(jj).transpose(), seg.u, seg.v, m);
  }
  traj.Phi = switching_function(traj.x, traj.p, theta, m);
  traj.J = objective(traj, m);
  return traj;
}

PmpReport pmp_residual(const Trajectory& traj, double u_min, double u_max, double rel_tol) {
  PmpReport rep;
  rep.points = traj.points();
  double phi_max = 0.0;
  for (double f : traj.Phi) phi_max = std::max(phi_max, std::abs(f));
  rep.tolerance = rel_tol * phi_max;
  const double bound_tol = 1e-12 * std::max(1.0, u_max - u_min);

  for (std::size_t j = 0; j < rep.points; ++j) {
    const double f = traj.Phi[j];
    bool bad = false;
    if (f > rep.tolerance) {
      ++rep.positive;
      bad = std::abs(traj.u[j] - u_max) > bound_tol;
    } else if (f < -rep.tolerance) {
      ++rep.negative;
      bad = std::abs(traj.u[j] - u_min) > bound_tol;
    } else {
      ++rep.singular;
    }
    if (bad) {
      ++rep.violations;
      if (rep.violating_indices.size() < 32) rep.violating_indices.push_back(j);
    }
  }
  rep.violation_fraction =
      rep.points ? static_cast<double>(rep.violations) / static_cast<double>(rep.points) : 0.0;

  std::vector<double> h = traj.H;
  if (!h.empty()) {
    auto mid = h.begin() + static_cast<std::ptrdiff_t>(h.size() / 2);
    std::nth_element(h.begin(), mid, h.end());
    rep.H_median = *mid;
    for (double x : traj.H) rep.H_max_deviation = std::max(rep.H_max_deviation, std::abs(x - rep.H_median));
    rep.H_relative_deviation =
        rep.H_median != 0.0 ? rep.H_max_deviation / std::abs(rep.H_median) : rep.H_max_deviation;
  }
  return rep;
}

}  // namespace pmca
