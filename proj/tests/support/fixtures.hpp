#pragma once

#include <random>

#include "pmca/dim2.hpp"
#include "pmca/model.hpp"
#include "pmca/rate_function.hpp"

namespace pmca::fixtures {

/// n = 3 model with tau = (1, 10, 0), beta = (0, 0.5, 1), kappa_12 = 2,
/// kappa_13 = kappa_23 = 1.
inline ModelParams three_compartment() {
  ModelParams p;
  p.n = 3;
  p.tau = {1.0, 10.0, 0.0};
  p.beta = {0.0, 0.5, 1.0};
  p.kappa = {{{1, 2}, 2.0}, {{1, 3}, 1.0}, {{2, 3}, 1.0}};
  return p;
}

inline RateFunction convex_rate() { return RateFunction::rational(2.0, 1.0); }

constexpr double kThreeMin = 1.0;
constexpr double kThreeMax = 8.0;

/// theta = -0.2, zeta = 1, tau = 0.1, beta = 0.05 on [1, 4].
inline dim2::Dim2Config turnpike_config() { return {-0.2, 1.0, 0.1, 0.05, 1.0, 4.0}; }

inline Vector turnpike_x0() { return (Vector(2) << 0.0, 1.0).finished(); }

constexpr double kTurnpikeUSing = 2.029611634677622;
constexpr double kTurnpikeLambda = 0.03135922435482514;

/// Random two-compartment string problem with an interior singular control.
inline dim2::Dim2Config random_config(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> th(-1.0, -0.01);
  std::uniform_real_distribution<double> pos(0.01, 2.0);
  for (;;) {
    dim2::Dim2Config c{th(gen), pos(gen), pos(gen), pos(gen), 0.0, 0.0};
    const double root = c.u_root();
    const double us = dim2::singular_control(c);
    c.u_min = 0.25 * us;
    c.u_max = us + 0.5 * (root - us);
    if (c.u_min < us && us < c.u_max && c.u_max < root) return c;
  }
}

}  // namespace pmca::fixtures
