#include "pmca/dim2.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pmca::dim2 {

Dim2Config Dim2Config::from_model(const ModelParams& params, const RateFunction& r,
                                  double u_min, double u_max) {
  if (params.n != 2) throw ValidationError("two-compartment analysis needs n = 2");
  build_matrices(params);
  const StringLine line = string_params(r, u_min, u_max);
  Dim2Config cfg{line.theta, line.zeta, params.tau[0], params.beta[1], u_min, u_max};
  return cfg;
}

GrowthFragMatrices Dim2Config::matrices() const {
  return build_matrices(two_compartment(tau, beta));
}

void Dim2Config::validate() const {
  if (!(theta < 0.0)) throw ValidationError("string slope theta must be negative");
  if (!(zeta > 0.0)) throw ValidationError("string intercept zeta must be positive");
  if (!(tau > 0.0) || !(beta > 0.0)) throw ValidationError("tau and beta must be positive");
  if (!(u_min > 0.0) || !(u_min < u_max)) throw ValidationError("need 0 < u_min < u_max");
  if (!(u_max < u_root())) {
    throw ValidationError("u_max must lie below zeta / (-theta) so that sigma > 0");
  }
}

CharParams char_params(const Dim2Config& cfg) {
  const double b2 = -2.0 * cfg.theta * cfg.tau * cfg.beta;
  if (!(b2 > 0.0)) throw ValidationError("-2 theta tau beta must be positive");
  return {cfg.theta * cfg.tau + cfg.beta, std::sqrt(b2), cfg.theta * cfg.tau + 3.0 * cfg.beta,
          cfg.zeta * cfg.tau};
}

double delta(const Dim2Config& cfg, double u) {
  const auto [A, B, C, D] = char_params(cfg);
  return (A * A - 2.0 * B * B) * u * u + 2.0 * C * D * u + D * D;
}

double lambda_closed_form(const Dim2Config& cfg, double u) {
  const auto p = char_params(cfg);
  return 0.5 * (-p.A * u - p.D + std::sqrt(delta(cfg, u)));
}

double singular_control(const Dim2Config& cfg) {
  const auto p = char_params(cfg);
  const double b = p.B;
  const double u = (cfg.zeta * cfg.tau / b) * (2.0 * cfg.beta + b) /
                   (cfg.beta + 2.0 * b - cfg.theta * cfg.tau);
  if (!(u > 0.0 && u < cfg.u_root())) {
    throw NumericError("singular control outside (0, zeta / (-theta))", u);
  }
  return u;
}

double u_minus(const Dim2Config& cfg) {
  const auto [A, B, C, D] = char_params(cfg);
  return (D / B) * (B * C - 2.0 * cfg.beta * A) / (2.0 * B * B - A * A);
}

OptimalEigen optimal_eigenelements(const Dim2Config& cfg) {
  const auto p = char_params(cfg);
  OptimalEigen e;
  e.u_bar = singular_control(cfg);
  e.v_bar = cfg.line()(e.u_bar);
  e.lambda_bar =
      cfg.zeta * cfg.tau * cfg.beta / (cfg.beta + 2.0 * p.B - cfg.theta * cfg.tau);
  e.X_raw = Vector(2);
  e.X_raw << 2.0 * cfg.beta, p.B;
  e.phi_raw = RowVector(2);
  e.phi_raw << cfg.beta + p.B, 2.0 * cfg.beta + p.B;
  e.X = e.X_raw / e.X_raw.sum();
  e.phi = e.phi_raw / e.phi_raw.dot(e.X);
  return e;
}

double y_field(double y, double u, const Dim2Config& cfg) {
  const double s = (u * cfg.theta + cfg.zeta) * cfg.tau;
  const double ub = u * cfg.beta;
  return 2.0 * ub - (3.0 * ub + s) * y + ub * y * y;
}

double q_field(double q, double u, const Dim2Config& cfg) {
  const double s = (u * cfg.theta + cfg.zeta) * cfg.tau;
  const double ub = u * cfg.beta;
  return -(s - (3.0 * s - ub) * q + (2.0 * s - 3.0 * ub) * q * q);
}

ProjectiveRates projective_fields(double y, double q, double u, const Dim2Config& cfg) {
  return {y_field(y, u, cfg), q_field(q, u, cfg)};
}

SteadyProjections steady_projections(double u, const Dim2Config& cfg) {
  const double s = (u * cfg.theta + cfg.zeta) * cfg.tau;
  const double ub = u * cfg.beta;
  const double root = std::sqrt(delta(cfg, u));
  return {(ub - s + root) / (ub + s + root), (ub - s + root) / (5.0 * ub - s + root)};
}

namespace {

double rk4_step(const std::function<double(double)>& f, double s, double h) {
  const double k1 = f(s);
  const double k2 = f(s + 0.5 * h * k1);
  const double k3 = f(s + 0.5 * h * k2);
  const double k4 = f(s + h * k3);
  return s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

double first_passage(const std::function<double(double)>& f, double s0, double target, double h,
                     double t_max) {
  if (s0 == target) return 0.0;
  const double side = s0 < target ? -1.0 : 1.0;
  double s = s0;
  double t = 0.0;
  while (t < t_max) {
    const double next = rk4_step(f, s, h);
    if ((next - target) * side <= 0.0) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if ((rk4_step(f, s, mid) - target) * side > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return t + 0.5 * (lo + hi);
    }
    s = next;
    t += h;
  }
  throw NumericError("scalar flow did not reach its target", std::abs(s - target));
}

double flow(const std::function<double(double)>& f, double s0, double t, double h) {
  if (t <= 0.0) return s0;
  const int steps = std::max(1, static_cast<int>(std::ceil(t / h)));
  const double step = t / steps;
  double s = s0;
  for (int k = 0; k < steps; ++k) s = rk4_step(f, s, step);
  return s;
}

double entry_time(double y0, const Dim2Config& cfg) {
  if (!(y0 >= 0.0 && y0 <= 1.0)) throw ValidationError("y0 must lie in [0, 1]");
  const double u_bar = singular_control(cfg);
  const double y_bar = steady_projections(u_bar, cfg).Y;
  if (std::abs(y0 - y_bar) <= 1e-12) return 0.0;
  const double u = y0 < y_bar ? cfg.u_max : cfg.u_min;
  return first_passage([&](double y) { return y_field(y, u, cfg); }, y0, y_bar);
}

ExitResult exit_time(const Dim2Config& cfg) {
  const double u_bar = singular_control(cfg);
  const auto ss = steady_projections(u_bar, cfg);
  if (!(ss.pi > 1.0 / 3.0)) {
    throw NumericError("pi(u_bar) <= 1/3: no final u_min arc", ss.pi - 1.0 / 3.0);
  }
  ExitResult out;
  out.T_psi = first_passage([&](double q) { return -q_field(q, cfg.u_min, cfg); }, 1.0 / 3.0,
                            ss.pi);
  out.Y_psi = flow([&](double y) { return y_field(y, cfg.u_min, cfg); }, ss.Y, out.T_psi);
  return out;
}

TurnpikeControl synthesize_turnpike(const Vector& x0, double T, const Dim2Config& cfg) {
  cfg.validate();
  if (x0.size() != 2 || (x0.array() < 0.0).any() || !(x0.sum() > 0.0)) {
    throw ValidationError("x0 must be a nonnegative nonzero 2-vector");
  }
  const auto eig = optimal_eigenelements(cfg);
  if (!(eig.u_bar > cfg.u_min && eig.u_bar < cfg.u_max)) {
    throw ValidationError("singular control " + std::to_string(eig.u_bar) +
                          " is not inside (u_min, u_max)");
  }
  const auto ss = steady_projections(eig.u_bar, cfg);

  TurnpikeControl tc;
  tc.u_bar = eig.u_bar;
  tc.v_bar = eig.v_bar;
  tc.lambda_bar = eig.lambda_bar;
  tc.Y_bar = ss.Y;
  tc.pi_bar = ss.pi;
  tc.T = T;
  tc.y0 = projection(x0(0), x0(1));
  tc.R = x0.sum();
  tc.T0 = entry_time(tc.y0, cfg);
  tc.u_init = tc.y0 < ss.Y ? cfg.u_max : cfg.u_min;
  const auto ex = exit_time(cfg);
  tc.T_psi = ex.T_psi;
  tc.Y_psi = ex.Y_psi;

  const double minimum = tc.T0 + tc.T_psi;
  if (!(T > minimum)) {
    throw HorizonTooShort("horizon " + std::to_string(T) + " does not exceed T0 + T_psi = " +
                              std::to_string(minimum),
                          minimum);
  }
  const StringLine line = cfg.line();
  if (tc.T0 > 0.0) {
    tc.control = ControlSignal::on_string({0.0, tc.T0, T - tc.T_psi, T},
                                          {tc.u_init, tc.u_bar, cfg.u_min}, line);
  } else {
    tc.control = ControlSignal::on_string({0.0, T - tc.T_psi, T}, {tc.u_bar, cfg.u_min}, line);
  }
  return tc;
}

ControlSignal chattering_approximation(const TurnpikeControl& tc, const Dim2Config& cfg,
                                       int n_pieces) {
  if (n_pieces < 1) throw ValidationError("n_pieces must be at least 1");
  const StringLine line = cfg.line();
  const double a = tc.T0;
  const double b = tc.T - tc.T_psi;
  const double cell = (b - a) / n_pieces;
  const double span = cfg.u_max - cfg.u_min;
  const double d_min = cell * (cfg.u_max - tc.u_bar) / span;

  std::vector<double> t{0.0};
  std::vector<double> u;
  if (a > 0.0) {
    t.push_back(a);
    u.push_back(tc.u_init);
  }
  for (int k = 0; k < n_pieces; ++k) {
    const double start = a + k * cell;
    t.push_back(start + d_min);
    u.push_back(cfg.u_min);
    t.push_back(k + 1 == n_pieces ? b : a + (k + 1) * cell);
    u.push_back(cfg.u_max);
  }
  t.push_back(tc.T);
  u.push_back(cfg.u_min);
  return ControlSignal::on_string(std::move(t), std::move(u), line);
}

ChatterReport chattering_convergence(const Vector& x0, const TurnpikeControl& tc,
                                     const Dim2Config& cfg, const std::vector<int>& pieces,
                                     double dt) {
  const auto m = cfg.matrices();
  if (dt <= 0.0) dt = tc.T / 20000.0;
  auto final_mass = [&](const ControlSignal& c) {
    const auto path = integrate_forward(x0, c, m, dt);
    return objective(Vector(path.x.col(path.x.cols() - 1)), m);
  };
  ChatterReport rep;
  rep.J_star = final_mass(tc.control);
  for (int n : pieces) {
    const auto c = chattering_approximation(tc, cfg, n);
    ChatterRow row;
    row.n_pieces = n;
    row.J = final_mass(c);
    row.rel_gap = std::abs(row.J - rep.J_star) / rep.J_star;
    row.integral_u_error = std::abs(c.integral_u() - tc.control.integral_u());
    row.integral_v_error = std::abs(c.integral_v() - tc.control.integral_v());
    if (!rep.rows.empty() && row.rel_gap > rep.rows.back().rel_gap) rep.monotone = false;
    rep.rows.push_back(row);
  }
  for (std::size_t k = rep.rows.size(); k-- > 0;) {
    if (rep.rows[k].rel_gap > 0.01) break;
    rep.reported_N = rep.rows[k].n_pieces;
  }
  return rep;
}

IdentityReport string_identities(const Dim2Config& cfg, double u) {
  const auto [A, B, C, D] = char_params(cfg);
  const double beta = cfg.beta;
  IdentityReport rep;
  rep.u = u;
  rep.delta = delta(cfg, u);
  const auto m = cfg.matrices();
  const Matrix mat = m.combined(u, cfg.line()(u));
  const double tr = mat.trace();
  rep.delta_from_matrix = tr * tr - 4.0 * mat.determinant();
  rep.lambda_closed = lambda_closed_form(cfg, u);
  rep.lambda_numeric = perron_triple(u, cfg.line()(u), m).lambda;

  const double a2 = A * A - 2.0 * B * B;
  const double d1 = 2.0 * a2 * u + 2.0 * C * D;
  const double d2 = 2.0 * a2;
  rep.concavity_identity = 2.0 * rep.delta * d2 - d1 * d1;
  rep.concavity_expected = -32.0 * D * D * beta * beta;

  // lambda' = 0 squares to qa u^2 + qb u + qc = 0.
  const double qa = -2.0 * B * B * a2;
  const double qb = -4.0 * B * B * C * D;
  const double qc = D * D * (C * C - A * A);
  rep.discriminant = qb * qb - 4.0 * qa * qc;
  rep.discriminant_expected = 64.0 * A * A * B * B * D * D * beta * beta;
  rep.u_minus = u_minus(cfg);
  rep.u_sing = singular_control(cfg);
  return rep;
}

double horizon_threshold(const Dim2Config& cfg) {
  const double t0 = std::max(entry_time(0.0, cfg), entry_time(1.0, cfg));
  return 3.0 * (t0 + exit_time(cfg).T_psi);
}

ProbeReport perturbation_probe(const Vector& x0, const TurnpikeControl& tc,
                               const Dim2Config& cfg, double delta_t, double dt) {
  const auto m = cfg.matrices();
  if (dt <= 0.0) dt = tc.T / 20000.0;
  const StringLine line = cfg.line();
  auto final_mass = [&](const ControlSignal& c) {
    const auto path = integrate_forward(x0, c, m, dt);
    return objective(Vector(path.x.col(path.x.cols() - 1)), m);
  };
  ProbeReport rep;
  rep.J_ref = final_mass(tc.control);
  const double exit = tc.T - tc.T_psi;
  std::vector<std::pair<double, double>> shifts{{0.0, -delta_t}, {0.0, delta_t}};
  if (tc.T0 > delta_t) {
    shifts.insert(shifts.begin(), {{-delta_t, 0.0}, {delta_t, 0.0}});
  }
  for (auto [de, dx] : shifts) {
    const double t0 = tc.T0 + de;
    const double t1 = exit + dx;
    ControlSignal c = tc.T0 > 0.0
                          ? ControlSignal::on_string({0.0, t0, t1, tc.T},
                                                     {tc.u_init, tc.u_bar, cfg.u_min}, line)
                          : ControlSignal::on_string({0.0, t1, tc.T}, {tc.u_bar, cfg.u_min}, line);
    const double j = final_mass(c);
    rep.cases.push_back({de, dx, j});
    if (!(j < rep.J_ref)) rep.all_smaller = false;
  }
  return rep;
}

}  // namespace pmca::dim2
