#include "pmca/rate_function.hpp"

#include <algorithm>
#include <cmath>

#include "pmca/error.hpp"

namespace pmca {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t spline_interval(const RateFunction::Tabulated& t, double u) {
  auto it = std::upper_bound(t.u.begin(), t.u.end(), u);
  std::size_t k = it == t.u.begin() ? 0 : static_cast<std::size_t>(it - t.u.begin()) - 1;
  return std::min(k, t.u.size() - 2);
}

// Evaluates the cubic on interval k: derivative order 0, 1 or 2.
double spline_eval(const RateFunction::Tabulated& t, double u, int order) {
  const std::size_t k = spline_interval(t, u);
  const double h = t.u[k + 1] - t.u[k];
  const double a = (t.u[k + 1] - u) / h;
  const double b = (u - t.u[k]) / h;
  const double m0 = t.second[k];
  const double m1 = t.second[k + 1];
  switch (order) {
    case 0:
      return a * t.r[k] + b * t.r[k + 1] +
             ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
    case 1:
      return (t.r[k + 1] - t.r[k]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 +
             (3.0 * b * b - 1.0) * h * m1 / 6.0;
    default:
      return a * m0 + b * m1;
  }
}

}  // namespace

RateFunction RateFunction::rational(double a, double b) { return RateFunction(Rational{a, b}); }

RateFunction RateFunction::affine(double c0, double c1) { return RateFunction(Affine{c0, c1}); }

RateFunction RateFunction::power_tail(double r0, double rl, double l) {
  if (!(l > 0.0)) throw ValidationError("power-tail exponent l must be > 0");
  return RateFunction(PowerTail{r0, rl, l});
}

RateFunction RateFunction::tabulated(std::vector<double> u, std::vector<double> r) {
  const std::size_t n = u.size();
  if (n < 3 || r.size() != n) {
    throw ValidationError("tabulated rate needs at least 3 knots and matching value count");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(u[k] > u[k - 1])) throw ValidationError("tabulated rate knots must be strictly increasing");
  }

  // Natural spline: tridiagonal solve for interior second derivatives.
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h0 = u[k] - u[k - 1];
    const double h1 = u[k + 1] - u[k];
    const double rhs = 6.0 * ((r[k + 1] - r[k]) / h1 - (r[k] - r[k - 1]) / h0);
    const double diag = 2.0 * (h0 + h1) - h0 * c[k - 1];
    c[k] = h1 / diag;
    d[k] = (rhs - h0 * d[k - 1]) / diag;
  }
  for (std::size_t k = n - 2; k >= 1; --k) {
    m[k] = d[k] - c[k] * m[k + 1];
  }
  return RateFunction(Tabulated{std::move(u), std::move(r), std::move(m)});
}

double RateFunction::value(double u) const {
  return std::visit(overloaded{
                        [u](const Rational& f) { return f.a / (f.b + u); },
                        [u](const Affine& f) { return f.c0 + f.c1 * u; },
                        [u](const PowerTail& f) { return f.r0 + f.rl * std::pow(u, -f.l); },
                        [u](const Tabulated& f) { return spline_eval(f, u, 0); },
                    },
                    repr_);
}

double RateFunction::d1(double u) const {
  return std::visit(overloaded{
                        [u](const Rational& f) { return -f.a / ((f.b + u) * (f.b + u)); },
                        [](const Affine& f) { return f.c1; },
                        [u](const PowerTail& f) { return -f.l * f.rl * std::pow(u, -f.l - 1.0); },
                        [u](const Tabulated& f) { return spline_eval(f, u, 1); },
                    },
                    repr_);
}

double RateFunction::d2(double u) const {
  return std::visit(
      overloaded{
          [u](const Rational& f) { return 2.0 * f.a / ((f.b + u) * (f.b + u) * (f.b + u)); },
          [](const Affine&) { return 0.0; },
          [u](const PowerTail& f) {
            return f.l * (f.l + 1.0) * f.rl * std::pow(u, -f.l - 2.0);
          },
          [u](const Tabulated& f) { return spline_eval(f, u, 2); },
      },
      repr_);
}

RateFunction::Form RateFunction::form() const { return static_cast<Form>(repr_.index()); }

std::string RateFunction::form_name() const {
  switch (form()) {
    case Form::Rational: return "rational";
    case Form::Affine: return "affine";
    case Form::PowerTail: return "power_tail";
    case Form::Tabulated: return "tabulated";
  }
  return "unknown";
}

bool RateFunction::positive_on(double a, double b, int samples) const {
  for (int k = 0; k < samples; ++k) {
    const double u = a + (b - a) * k / (samples - 1);
    if (!(value(u) > 0.0)) return false;
  }
  return true;
}

bool RateFunction::strictly_convex_on(double a, double b, int samples) const {
  for (int k = 1; k + 1 < samples; ++k) {
    const double u = a + (b - a) * k / (samples - 1);
    if (!(d2(u) > 0.0)) return false;
  }
  return true;
}

}  // namespace pmca
