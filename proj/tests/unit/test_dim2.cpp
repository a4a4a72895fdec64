#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pmca/dim2.hpp"
#include "pmca/error.hpp"
#include "pmca/optimize.hpp"

using namespace pmca;
using namespace pmca::dim2;

TEST(SingularControl, ReferenceValue) {
  const auto cfg = fixtures::turnpike_config();
  EXPECT_NEAR(singular_control(cfg), fixtures::kTurnpikeUSing, 1e-14);
  EXPECT_NEAR(singular_control(cfg), 2.02962, 1e-5);
  EXPECT_NEAR(u_minus(cfg), fixtures::kTurnpikeUSing, 1e-13);
}

TEST(SingularControl, ThreeWayAgreementOnRandomConfigs) {
  std::mt19937_64 gen(2024);
  for (int k = 0; k < 100; ++k) {
    const auto cfg = fixtures::random_config(gen);
    const double us = singular_control(cfg);
    EXPECT_NEAR(us, u_minus(cfg), 1e-10 * std::max(1.0, us));
    const auto best = maximize_perron_along(cfg.line(), 1e-9 * cfg.u_root(),
                                            (1 - 1e-9) * cfg.u_root(), cfg.matrices());
    EXPECT_NEAR(best.u, us, 1e-6) << k;
  }
}

TEST(SingularControl, LinearInIntercept) {
  auto cfg = fixtures::turnpike_config();
  const double us = singular_control(cfg);
  cfg.zeta *= 3.0;
  EXPECT_NEAR(singular_control(cfg), 3.0 * us, 1e-13);
}

TEST(SingularControl, RejectsNonNegativeSlope) {
  auto cfg = fixtures::turnpike_config();
  cfg.theta = 0.1;
  EXPECT_THROW(singular_control(cfg), ValidationError);
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(OptimalEigenelements, ClosedForms) {
  const auto cfg = fixtures::turnpike_config();
  const auto e = optimal_eigenelements(cfg);
  EXPECT_NEAR(e.lambda_bar, fixtures::kTurnpikeLambda, 1e-15);
  EXPECT_NEAR(e.X_raw(0), 0.1, 1e-15);
  EXPECT_NEAR(e.X_raw(1), std::sqrt(0.002), 1e-15);
  EXPECT_NEAR(e.X.sum(), 1.0, 1e-15);
  EXPECT_NEAR(e.phi.dot(e.X), 1.0, 1e-15);

  const auto m = cfg.matrices();
  const Matrix mat = m.combined(e.u_bar, e.v_bar);
  EXPECT_LE((mat * e.X_raw - e.lambda_bar * e.X_raw).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_LE((e.phi_raw * mat - e.lambda_bar * e.phi_raw).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_NEAR(e.phi_raw * (m.F + cfg.theta * m.G) * e.X_raw, 0.0, 1e-16);

  const auto t = perron_triple(e.u_bar, e.v_bar, m);
  EXPECT_LE(t.residual, 1e-11);
  EXPECT_LE((t.X - e.X).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((t.phi - e.phi).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectiveFields, BoundaryAndFixedPoints) {
  const auto cfg = fixtures::turnpike_config();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> uu(0.01, cfg.u_root() - 0.01);
  for (int k = 0; k < 20; ++k) {
    const double u = uu(gen);
    EXPECT_NEAR(y_field(0.0, u, cfg), 2 * u * cfg.beta, 1e-15);
    EXPECT_NEAR(y_field(1.0, u, cfg), -(u * cfg.theta + cfg.zeta) * cfg.tau, 1e-15);
    const auto s = steady_projections(u, cfg);
    EXPECT_NEAR(y_field(s.Y, u, cfg), 0.0, 1e-15);
    EXPECT_NEAR(q_field(s.pi, u, cfg), 0.0, 1e-15);
    EXPECT_GT(s.Y, 0.0);
    EXPECT_LT(s.Y, 1.0);
  }
}

TEST(ProjectiveFields, SignStructure) {
  const auto cfg = fixtures::turnpike_config();
  for (double u = cfg.u_min; u <= cfg.u_max + 1e-12; u += 0.25) {
    const auto s = steady_projections(u, cfg);
    for (int k = 0; k <= 100; ++k) {
      const double z = k / 100.0;
      if (std::abs(z - s.Y) > 1e-9) EXPECT_LT((z - s.Y) * y_field(z, u, cfg), 0.0);
      if (std::abs(z - s.pi) > 1e-9) EXPECT_GT((z - s.pi) * q_field(z, u, cfg), 0.0);
    }
  }
}

TEST(ProjectiveFields, ReproduceFullSystemProjection) {
  const auto cfg = fixtures::turnpike_config();
  const auto m = cfg.matrices();
  const double u = 3.0, T = 8.0;
  const auto c = ControlSignal::on_string({0.0, T}, {u}, cfg.line());
  const Vector x0 = (Vector(2) << 0.2, 0.8).finished();
  const auto path = integrate_forward(x0, c, m, 1e-3);
  const auto adj = integrate_adjoint(c, m, 1e-3);
  const double y_end = flow([&](double y) { return y_field(y, u, cfg); }, 0.2, T);
  const auto last = path.x.cols() - 1;
  EXPECT_NEAR(projection(path.x(0, last), path.x(1, last)), y_end, 1e-12);
  const double q0 = flow([&](double q) { return -q_field(q, u, cfg); }, 1.0 / 3.0, T);
  EXPECT_NEAR(projection(adj.p(0, 0), adj.p(1, 0)), q0, 1e-12);
}

TEST(SteadyProjections, ReferenceValues) {
  const auto cfg = fixtures::turnpike_config();
  const auto s = steady_projections(singular_control(cfg), cfg);
  EXPECT_NEAR(s.Y, 0.690984, 1e-6);
  EXPECT_NEAR(s.pi, 0.395591, 1e-6);
  const auto e = optimal_eigenelements(cfg);
  EXPECT_NEAR(s.Y, projection(e.X(0), e.X(1)), 1e-14);
  EXPECT_NEAR(s.pi, projection(e.phi(0), e.phi(1)), 1e-14);
  EXPECT_NEAR(steady_projections(cfg.u_root(), cfg).pi, 1.0 / 3.0, 1e-15);
}

TEST(SteadyProjections, MonotoneAndOrdered) {
  const auto cfg = fixtures::turnpike_config();
  double prev_y = -1.0, prev_pi = 2.0;
  for (int k = 1; k < 100; ++k) {
    const auto s = steady_projections(cfg.u_root() * k / 100.0, cfg);
    EXPECT_GT(s.Y, prev_y);
    EXPECT_LT(s.pi, prev_pi);
    prev_y = s.Y;
    prev_pi = s.pi;
  }
  const auto lo = steady_projections(cfg.u_min, cfg);
  const auto mid = steady_projections(singular_control(cfg), cfg);
  const auto hi = steady_projections(cfg.u_max, cfg);
  EXPECT_LT(lo.Y, mid.Y);
  EXPECT_LT(mid.Y, hi.Y);
  EXPECT_GT(lo.pi, mid.pi);
  EXPECT_GT(mid.pi, hi.pi);
  EXPECT_GT(hi.pi, 1.0 / 3.0);
}

TEST(ClosedForm, StrictlyConcaveAlongString) {
  const auto cfg = fixtures::turnpike_config();
  const double h = cfg.u_root() / 1001.0;
  for (int k = 1; k < 1000; ++k) {
    const double u = k * h;
    EXPECT_LT(lambda_closed_form(cfg, u + h) - 2 * lambda_closed_form(cfg, u) +
                  lambda_closed_form(cfg, u - h),
              0.0);
  }
}

TEST(Identities, AgreeWithEigenSolver) {
  const auto cfg = fixtures::turnpike_config();
  const auto rep = string_identities(cfg, 1.0);
  EXPECT_NEAR(rep.lambda_closed, rep.lambda_numeric, 1e-11);
  EXPECT_NEAR(rep.delta, rep.delta_from_matrix, 1e-15);
  EXPECT_NEAR(rep.u_minus, rep.u_sing, 1e-12);
}

TEST(Identities, ConcavityAndDiscriminant) {
  std::mt19937_64 gen(77);
  const auto cfg = fixtures::turnpike_config();
  std::uniform_real_distribution<double> uu(0.0, cfg.u_root());
  for (int k = 0; k < 20; ++k) {
    const auto rep = string_identities(cfg, uu(gen));
    EXPECT_LE(std::abs(rep.concavity_identity - rep.concavity_expected),
              1e-12 * std::abs(rep.concavity_expected));
    EXPECT_LE(std::abs(rep.discriminant - rep.discriminant_expected),
              1e-12 * rep.discriminant_expected);
  }
}

TEST(EntryTime, Cases) {
  const auto cfg = fixtures::turnpike_config();
  const auto s = steady_projections(singular_control(cfg), cfg);
  EXPECT_EQ(entry_time(s.Y, cfg), 0.0);
  const double t0 = entry_time(0.0, cfg);
  EXPECT_NEAR(t0, 4.039111613, 1e-8);
  const double y = flow([&](double z) { return y_field(z, cfg.u_max, cfg); }, 0.0, t0, 1e-4);
  EXPECT_NEAR(y, s.Y, 1e-10);
  const double sup = std::max(entry_time(0.0, cfg), entry_time(1.0, cfg));
  for (int k = 0; k <= 50; ++k) EXPECT_LE(entry_time(k / 50.0, cfg), sup + 1e-12);
  EXPECT_THROW(entry_time(1.5, cfg), ValidationError);
}

TEST(ExitTime, RoundTripAndTailValue) {
  const auto cfg = fixtures::turnpike_config();
  const auto s = steady_projections(singular_control(cfg), cfg);
  const auto ex = exit_time(cfg);
  EXPECT_NEAR(ex.T_psi, 5.592553404, 1e-8);
  const double q = flow([&](double z) { return q_field(z, cfg.u_min, cfg); }, s.pi, ex.T_psi, 1e-4);
  EXPECT_NEAR(q, 1.0 / 3.0, 1e-8);
  EXPECT_GT(ex.Y_psi, steady_projections(cfg.u_min, cfg).Y);
  EXPECT_LT(ex.Y_psi, s.Y);
}

TEST(ExitTime, BackwardFlowTendsToLowerSteadyState) {
  const auto cfg = fixtures::turnpike_config();
  const double target = steady_projections(cfg.u_min, cfg).pi;
  double prev = 1.0 / 3.0;
  for (double t : {1.0, 5.0, 20.0, 80.0}) {
    const double q = flow([&](double z) { return -q_field(z, cfg.u_min, cfg); }, 1.0 / 3.0, t);
    EXPECT_GT(q, prev);
    EXPECT_LT(q, target);
    prev = q;
  }
  EXPECT_NEAR(prev, target, 1e-6);
}

TEST(Turnpike, StructureAndArcInvariants) {
  const auto cfg = fixtures::turnpike_config();
  const auto x0 = fixtures::turnpike_x0();
  const auto tc = synthesize_turnpike(x0, 24.0, cfg);
  ASSERT_EQ(tc.control.size(), 3u);
  EXPECT_EQ(tc.control.segment(0).u, cfg.u_max);
  EXPECT_EQ(tc.control.segment(1).u, tc.u_bar);
  EXPECT_EQ(tc.control.segment(2).u, cfg.u_min);
  EXPECT_NEAR(tc.control.segment(1).t_start, tc.T0, 0.0);
  EXPECT_NEAR(tc.control.segment(2).t_start, 24.0 - tc.T_psi, 1e-14);
  EXPECT_EQ(tc.R, 1.0);
  EXPECT_EQ(tc.S, 1.0);

  const auto m = cfg.matrices();
  const auto tr = simulate(x0, tc.control, m, cfg.theta);
  for (std::size_t j = 0; j < tr.points(); ++j) {
    const double t = tr.t[j];
    if (t < tc.T0 || t > 24.0 - tc.T_psi) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    EXPECT_NEAR(projection(tr.x(0, jj), tr.x(1, jj)), tc.Y_bar, 1e-6);
    EXPECT_NEAR(projection(tr.p(0, jj), tr.p(1, jj)), tc.pi_bar, 1e-6);
  }
  const auto rep = pmp_residual(tr, cfg.u_min, cfg.u_max);
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_LE(rep.H_relative_deviation, 1e-6);
}

TEST(Turnpike, StartOnEigenvector) {
  const auto cfg = fixtures::turnpike_config();
  const auto e = optimal_eigenelements(cfg);
  const auto tc = synthesize_turnpike(2.5 * e.X, 24.0, cfg);
  EXPECT_EQ(tc.T0, 0.0);
  ASSERT_EQ(tc.control.size(), 2u);
  EXPECT_EQ(tc.control.segment(0).u, tc.u_bar);
  EXPECT_EQ(tc.control.segment(1).u, cfg.u_min);
  EXPECT_NEAR(tc.R, 2.5, 1e-15);
}

TEST(Turnpike, HorizonTooShort) {
  const auto cfg = fixtures::turnpike_config();
  try {
    synthesize_turnpike(fixtures::turnpike_x0(), 9.0, cfg);
    FAIL() << "expected HorizonTooShort";
  } catch (const HorizonTooShort& e) {
    EXPECT_NEAR(e.minimum_horizon(), 4.039111613 + 5.592553404, 1e-7);
  }
}

TEST(Turnpike, RejectsBoundaryOptimum) {
  auto cfg = fixtures::turnpike_config();
  cfg.u_min = 2.5;
  EXPECT_THROW(synthesize_turnpike(fixtures::turnpike_x0(), 24.0, cfg), ValidationError);
}

TEST(Chattering, MeanPreservationAndCellSplit) {
  const auto cfg = fixtures::turnpike_config();
  const auto tc = synthesize_turnpike(fixtures::turnpike_x0(), 24.0, cfg);
  for (int n : {1, 3, 16}) {
    const auto c = chattering_approximation(tc, cfg, n);
    EXPECT_NEAR(c.integral_u(), tc.control.integral_u(), 1e-12);
    EXPECT_NEAR(c.integral_v(), tc.control.integral_v(), 1e-12);
    EXPECT_EQ(c.size(), static_cast<std::size_t>(2 * n + 2));
    const double cell = (24.0 - tc.T_psi - tc.T0) / n;
    const auto a = c.segment(1), b = c.segment(2);
    EXPECT_EQ(a.u, cfg.u_min);
    EXPECT_EQ(b.u, cfg.u_max);
    EXPECT_NEAR((a.t_end - a.t_start) + (b.t_end - b.t_start), cell, 1e-13);
    EXPECT_NEAR(a.t_end - a.t_start, cell * (cfg.u_max - tc.u_bar) / (cfg.u_max - cfg.u_min), 1e-13);
    const auto r = RateFunction::rational(0.8, 0.0);
    c.check_admissible(r, cfg.u_min, cfg.u_max, 1e-12);
    const auto d = duty_ratio_stats(c, tc.T0, 24.0 - tc.T_psi, cfg.u_min, cfg.u_max);
    ASSERT_TRUE(d.R_emp.has_value());
    EXPECT_NEAR(*d.R_emp, optimal_ratio(tc.u_bar, cfg.u_min, cfg.u_max), 1e-12);
  }
  EXPECT_THROW(chattering_approximation(tc, cfg, 0), ValidationError);
}

TEST(Chattering, ConvergesToRelaxedOptimum) {
  const auto cfg = fixtures::turnpike_config();
  const auto x0 = fixtures::turnpike_x0();
  const auto tc = synthesize_turnpike(x0, 24.0, cfg);
  const auto rep = chattering_convergence(x0, tc, cfg, {1, 2, 4, 8, 16, 32});
  EXPECT_TRUE(rep.monotone);
  EXPECT_GT(rep.reported_N, 0);
  EXPECT_LE(rep.rows.back().rel_gap, 1e-4);
  for (const auto& row : rep.rows) EXPECT_LT(row.J, rep.J_star);
}

TEST(Turnpike, LocalOptimalityProbe) {
  const auto cfg = fixtures::turnpike_config();
  const auto x0 = fixtures::turnpike_x0();
  const double T = horizon_threshold(cfg) + 1.0;
  const auto tc = synthesize_turnpike(x0, T, cfg);
  const auto rep = perturbation_probe(x0, tc, cfg, 0.05);
  EXPECT_EQ(rep.cases.size(), 4u);
  EXPECT_TRUE(rep.all_smaller);
}

TEST(Dim2Config, FromModel) {
  const auto r = RateFunction::rational(0.8, 0.0);
  const auto cfg = Dim2Config::from_model(two_compartment(0.1, 0.05), r, 1.0, 4.0);
  EXPECT_NEAR(cfg.theta, -0.2, 1e-15);
  EXPECT_NEAR(cfg.zeta, 1.0, 1e-15);
  EXPECT_EQ(cfg.tau, 0.1);
  EXPECT_EQ(cfg.beta, 0.05);
  EXPECT_THROW(Dim2Config::from_model(fixtures::three_compartment(), r, 1.0, 4.0), ValidationError);
}
