// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pmca/dim2.hpp"
#include "pmca/dynamics.hpp"
#include "pmca/floquet.hpp"
#include "pmca/model.hpp"
#include "pmca/optimize.hpp"
#include "pmca/spectral.hpp"

using namespace pmca;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-12 * std::max(1.0, std::abs(a))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Outcome closed_form_consistency() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  double worst_minus = 0.0, worst_golden = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto cfg = fixtures::random_config(gen);
    const double us = dim2::singular_control(cfg);
    worst_minus = std::max(worst_minus, std::abs(us - dim2::u_minus(cfg)));
    const auto m = cfg.matrices();
    const auto line = cfg.line();
    const double ug = golden_max(
        [&](double u) { return perron_triple(u, line(u), m).lambda; }, cfg.u_min, cfg.u_max);
    worst_golden = std::max(worst_golden, std::abs(us - ug));
  }
  const double elapsed = seconds_since(t0);
  o.require(worst_minus <= 1e-10, fmt("max |u_sing - u_minus| = %.2e", worst_minus));
  o.require(worst_golden <= 1e-6, fmt("max |u_sing - golden argmax| = %.2e", worst_golden));
  o.require(elapsed < 5.0, fmt("%.2f s", elapsed));
  return o;
}

std::vector<HullPoint> hull_points(const RateFunction& r, double a, double b, int count,
                                   unsigned seed) {
  const StringLine line = string_params(r, a, b);
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> uu(a, b), ss(0.0, 1.0);
  std::vector<HullPoint> pts;
  for (int k = 0; k < count; ++k) {
    const double u = uu(gen);
    pts.push_back({u, r(u) + ss(gen) * (line(u) - r(u))});
  }
  return pts;
}

Outcome eigen_machinery() {
  Outcome o;
  const auto m = build_matrices(fixtures::three_compartment());
  const auto r = fixtures::convex_rate();
  const auto pts = hull_points(r, fixtures::kThreeMin, fixtures::kThreeMax, 20, 7);
  double worst_res = 0.0, worst_hom = 0.0, worst_grad = 0.0;
  const double h = 1e-5;
  for (const auto& p : pts) {
    const auto t = perron_triple(p.u, p.v, m);
    worst_res = std::max(worst_res, t.residual);
    for (double alpha : {0.25, 3.0, 10.0}) {
      const double scaled = perron_triple(alpha * p.u, alpha * p.v, m).lambda;
      worst_hom = std::max(worst_hom, rel(scaled, alpha * t.lambda));
    }
    const auto g = perron_gradient(t, m);
    const double du = (perron_triple(p.u + h, p.v, m).lambda - perron_triple(p.u - h, p.v, m).lambda) / (2 * h);
    const double dv = (perron_triple(p.u, p.v + h, m).lambda - perron_triple(p.u, p.v - h, m).lambda) / (2 * h);
    worst_grad = std::max({worst_grad, rel(g.du, du), rel(g.dv, dv)});
  }
  o.require(worst_res <= 1e-11, fmt("max residual %.2e", worst_res));
  o.require(worst_hom <= 1e-10, fmt("max homogeneity error %.2e", worst_hom));
  o.require(worst_grad <= 1e-6, fmt("max gradient rel. error %.2e", worst_grad));
  return o;
}

Outcome asymptotics() {
  Outcome o;
  auto params = fixtures::three_compartment();
  const std::vector<std::pair<const char*, RateFunction::PowerTail>> cases{
      {"k<l", {1.0, 1.0, 2.0}}, {"k=l", {1.0, 5.0, 1.0}}, {"k>l", {1.0, 5.0, 0.5}}};
  for (const auto& [name, rate] : cases) {
    const auto rep = expansion_check(params, rate, 1);
    double worst_exp = 0.0;
    for (std::size_t i = 0; i < rep.eigvec_fitted_exponent.size(); ++i) {
      const double pred = rep.eigvec_predicted_exponent[i];
      worst_exp = std::max(worst_exp, std::abs(rep.eigvec_fitted_exponent[i] - pred) /
                                          std::max(1.0, std::abs(pred)));
    }
    o.require(rep.coefficient_rel_error <= 0.01,
              std::string(name) + fmt(": coefficient err %.2e", rep.coefficient_rel_error));
    o.require(worst_exp <= 0.02, std::string(name) + fmt(": decay exponent err %.2e", worst_exp));
  }
  return o;
}

Outcome floquet() {
  Outcome o;
  const auto m = build_matrices(fixtures::three_compartment());
  const auto r = fixtures::convex_rate();
  const auto opt = maximize_perron_constant(r, fixtures::kThreeMin, fixtures::kThreeMax, m);
  const auto fe = floquet_eigenvalue_converged(PeriodicControl::constant(opt.u, 1.0), m, r);
  o.require(std::abs(fe.lambda - opt.lambda) <= 1e-8,
            fmt("|lambda_F - lambda_P| = %.2e", std::abs(fe.lambda - opt.lambda)));

  const auto basis = spectral_basis(opt.u, m, r);
  double worst = 0.0;
  for (double w : {1.0, 10.0, 100.0}) {
    const double formula = floquet_second_derivative_formula(w, basis, m, r);
    worst = std::max(worst, rel(floquet_second_derivative_fd(opt.u, w, m, r), formula));
  }
  o.require(worst <= 1e-3, fmt("formula vs fd max rel. err %.2e", worst));

  const double f200 = floquet_second_derivative_formula(200.0, basis, m, r);
  const double limit = resonance_limit(opt.u, opt.lambda, r);
  const double bound = resonance_tail_bound(200.0, basis, m, r);
  o.require(std::abs(f200 - limit) <= bound,
            fmt("|formula(200) - limit| = %.3e vs bound %.3e", std::abs(f200 - limit), bound));

  const std::vector<double> omegas{0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500};
  const auto rows = resonance_sweep(opt.u, omegas, m, r, false);
  const double thr = saddle_threshold(rows);
  o.require(std::isfinite(thr) && limit > 0.0 && rows.back().formula > 0.0,
            fmt("second derivative > 0 for omega >= %g", thr));
  return o;
}

struct TurnpikeRun {
  dim2::Dim2Config cfg;
  dim2::TurnpikeControl tc;
  Trajectory traj;
};

TurnpikeRun turnpike_run(double T) {
  TurnpikeRun run;
  run.cfg = fixtures::turnpike_config();
  run.tc = dim2::synthesize_turnpike(fixtures::turnpike_x0(), T, run.cfg);
  run.traj = simulate(fixtures::turnpike_x0(), run.tc.control, run.cfg.matrices(), run.cfg.theta);
  return run;
}

Outcome turnpike() {
  Outcome o;
  const auto t0 = Clock::now();
  const TurnpikeRun run = turnpike_run(24.0);
  const auto& tc = run.tc;
  const auto& traj = run.traj;
  const auto& segs = tc.control.segments();
  const bool structure = segs.size() == 3 && segs[0].u == run.cfg.u_max &&
                         std::abs(segs[1].u - tc.u_bar) < 1e-12 && segs[2].u == run.cfg.u_min;
  o.require(structure, "u_max -> u_bar -> u_min");

  const double t_enter = segs[0].t_end, t_leave = segs[1].t_end;
  const double Y_bar = dim2::steady_projections(tc.u_bar, run.cfg).Y;
  double y_dev = 0.0, phi_rel = 0.0;
  std::size_t before_bad = 0, after_bad = 0;
  for (std::size_t j = 0; j < traj.points(); ++j) {
    const double t = traj.t[j];
    if (t >= t_enter && t <= t_leave) {
      y_dev = std::max(y_dev, std::abs(dim2::projection(traj.x(0, j), traj.x(1, j)) - Y_bar));
      phi_rel = std::max(phi_rel, std::abs(traj.Phi[j]) / (traj.p.col(j).norm() * traj.x.col(j).norm()));
    } else if (t < t_enter) {
      before_bad += !(traj.Phi[j] > 0.0);
    } else {
      after_bad += !(traj.Phi[j] < 0.0);
    }
  }
  const PmpReport pmp = pmp_residual(traj, run.cfg.u_min, run.cfg.u_max);
  const double elapsed = seconds_since(t0);
  o.require(y_dev <= 1e-6, fmt("arc |y - Y(u_bar)| = %.2e", y_dev));
  o.require(phi_rel <= 1e-7, fmt("arc |Phi|/(|p||x|) = %.2e", phi_rel));
  o.require(before_bad == 0 && after_bad == 0,
            fmt("sign errors before/after arc %g/%g", double(before_bad), double(after_bad)));
  o.require(pmp.violations == 0, fmt("PMP violations %g", double(pmp.violations)));
  o.require(pmp.H_relative_deviation <= 1e-6, fmt("H rel. deviation %.2e", pmp.H_relative_deviation));
  o.require(elapsed < 10.0, fmt("%.2f s", elapsed));
  return o;
}

Outcome chattering() {
  Outcome o;
  const auto cfg = fixtures::turnpike_config();
  const auto x0 = fixtures::turnpike_x0();
  const auto tc = dim2::synthesize_turnpike(x0, 24.0, cfg);
  double worst_mean = 0.0;
  for (int n : {1, 3, 8, 64}) {
    const auto c = dim2::chattering_approximation(tc, cfg, n);
    worst_mean = std::max({worst_mean, rel(c.integral_u(), tc.control.integral_u()),
                           rel(c.integral_v(), tc.control.integral_v())});
  }
  const auto rep = dim2::chattering_convergence(x0, tc, cfg, {1, 2, 4, 8, 16, 32, 64});
  double gap_at_N = NAN;
  for (const auto& row : rep.rows)
    if (row.n_pieces == rep.reported_N) gap_at_N = row.rel_gap;
  o.require(worst_mean <= 1e-13, fmt("mean-preservation rel. err %.2e", worst_mean));
  o.require(rep.monotone, "gaps monotone");
  o.require(rep.reported_N > 0 && gap_at_N <= 0.01,
            fmt("gap %.2e at N = %g", gap_at_N, double(rep.reported_N)));
  return o;
}

Outcome ergodic_limit() {
  Outcome o;
  const TurnpikeRun run = turnpike_run(200.0);
  const double rate = std::log(run.traj.J) / 200.0;
  const double err = rel(rate, run.tc.lambda_bar);
  o.require(err <= 0.05, fmt("ln J/T = %.6f vs lambda_bar %.6f", rate, run.tc.lambda_bar) +
                             fmt(", rel. err %.2f%%", 100.0 * err));
  return o;
}

DirectProblem three_compartment_problem(double T, double cell) {
  DirectProblem pb;
  pb.model = build_matrices(fixtures::three_compartment());
  pb.rate = fixtures::convex_rate();
  pb.u_min = fixtures::kThreeMin;
  pb.u_max = fixtures::kThreeMax;
  pb.T = T;
  pb.cell = cell;
  pb.x0 = Vector::Constant(3, 1.0 / 3.0);
  pb.dt = 1e-2;
  return pb;
}

Outcome direct_optimizer() {
  Outcome o;
  const double T = 48.0, wa = 8.0, wb = 40.0;
  const auto pb0 = three_compartment_problem(T, 0.8);
  const double u_bar =
      maximize_perron_hull(pb0.rate, pb0.u_min, pb0.u_max, pb0.model).u_bar;

  std::vector<int> switches;
  std::string counts;
  double finest_mean = 0.0;
  bool oscillating = true;
  for (double cell : {0.8, 0.6, 0.4, 0.2}) {
    auto pb = three_compartment_problem(T, cell);
    pb.settings.restarts = 4;
    const auto res = optimize_direct(pb);
    const auto control = pb.control(res.u);
    const int s = count_switches(control, wa, wb, pb.u_min, pb.u_max);
    switches.push_back(s);
    oscillating = oscillating && s > 0;
    counts += (counts.empty() ? "" : ",") + std::to_string(s);
    finest_mean = duty_ratio_stats(control, wa, wb, pb.u_min, pb.u_max).mean_u;
  }
  o.require(oscillating, "bang-bang oscillation at every dt (switches " + counts + ")");
  o.require(std::is_sorted(switches.begin(), switches.end()), "switch counts non-decreasing");
  o.require(rel(finest_mean, u_bar) <= 0.10,
            fmt("window mean %.4f vs u_bar %.4f", finest_mean, u_bar) +
                fmt(" (%.1f%%)", 100.0 * rel(finest_mean, u_bar)));

  const auto pb2 = three_compartment_problem(1.6, 0.8);
  const auto res2 = optimize_direct(pb2);
  const int n = 141;
  const double spacing = (pb2.u_max - pb2.u_min) / (n - 1.0);
  double best = -1.0;
  std::vector<double> arg;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::vector<double> u{pb2.u_min + spacing * i, pb2.u_min + spacing * j};
      const double J = objective_value(pb2, u);
      if (J > best) {
        best = J;
        arg = u;
      }
    }
  }
  const bool agree = res2.J >= best * (1.0 - 1e-12) && std::abs(res2.u[0] - arg[0]) <= spacing &&
                     std::abs(res2.u[1] - arg[1]) <= spacing;
  o.require(agree, fmt("two-cell optimum (%.4f, %.4f)", res2.u[0], res2.u[1]) +
                       fmt(" vs grid (%.4f, %.4f)", arg[0], arg[1]));
  return o;
}

Outcome adjoint_cone() {
  Outcome o;
  const auto cfg = fixtures::turnpike_config();
  const auto m = cfg.matrices();
  const auto r = RateFunction::rational(0.8, 0.0);
  const auto line = cfg.line();
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> uu(cfg.u_min, cfg.u_max), ss(0.0, 1.0), xx(0.05, 1.0);
  std::uniform_int_distribution<int> kk(1, 12);
  std::size_t cone_bad = 0;
  double worst_duality = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int K = kk(gen);
    const double T = 5.0 + 25.0 * ss(gen);
    std::vector<double> cuts{0.0, T};
    for (int k = 1; k < K; ++k) cuts.push_back(T * ss(gen));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> u, v;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      u.push_back(uu(gen));
      v.push_back(r(u.back()) + ss(gen) * (line(u.back()) - r(u.back())));
    }
    const ControlSignal control(cuts, u, v);
    const Vector x0 = (Vector(2) << xx(gen), xx(gen)).finished();
    const auto traj = simulate(x0, control, m, cfg.theta, {0.005, 6});
    const double ref = traj.p.col(0).dot(traj.x.col(0));
    for (std::size_t j = 0; j < traj.points(); ++j) {
      worst_duality = std::max(worst_duality, rel(traj.p.col(j).dot(traj.x.col(j)), ref));
      if (j + 1 == traj.points()) continue;
      const double p1 = traj.p(0, j), p2 = traj.p(1, j);
      cone_bad += !(2 * p1 - p2 > 0.0 && p2 - p1 > 0.0);
    }
  }
  o.require(cone_bad == 0, fmt("cone violations %g", double(cone_bad)));
  o.require(worst_duality <= 1e-9, fmt("max duality drift %.2e", worst_duality));
  return o;
}

Outcome concavity_identity() {
  Outcome o;
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto cfg = fixtures::random_config(gen);
    const auto rep = dim2::string_identities(cfg, frac(gen) * cfg.u_root());
    worst = std::max(worst, rel(rep.concavity_identity, rep.concavity_expected));
  }
  o.require(worst <= 1e-12, fmt("max rel. err %.2e", worst));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed-form singular control (n=2)", closed_form_consistency},
      {"Perron triple, homogeneity, gradient", eigen_machinery},
      {"large-u asymptotics", asymptotics},
      {"Floquet second derivative", floquet},
      {"turnpike synthesis (T=24)", turnpike},
      {"chattering approximation", chattering},
      {"ergodic growth rate (T=200)", ergodic_limit},
      {"direct optimizer structure", direct_optimizer},
      {"adjoint cone and duality", adjoint_cone},
      {"discriminant concavity identity", concavity_identity},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %zu: %s  %s (%s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
