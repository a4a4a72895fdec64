#pragma once

#include <string>
#include <variant>
#include <vector>

namespace pmca {

/// Sonication response r(u) multiplying the growth matrix.
///
/// Four closed families are supported; each evaluates r, r' and r''.
class RateFunction {
 public:
  enum class Form { Rational, Affine, PowerTail, Tabulated };

  /// a / (b + u)
  struct Rational {
    double a;
    double b;
  };
  /// c0 + c1 * u
  struct Affine {
    double c0;
    double c1;
  };
  /// r0 + rl * u^(-l)
  struct PowerTail {
    double r0;
    double rl;
    double l;
  };
  /// Natural cubic spline through (u_k, r_k); knots strictly increasing.
  struct Tabulated {
    std::vector<double> u;
    std::vector<double> r;
    std::vector<double> second;  // spline second derivatives at the knots
  };

  static RateFunction rational(double a, double b);
  static RateFunction affine(double c0, double c1);
  static RateFunction power_tail(double r0, double rl, double l);
  static RateFunction tabulated(std::vector<double> u, std::vector<double> r);

  double operator()(double u) const { return value(u); }
  double value(double u) const;
  double d1(double u) const;
  double d2(double u) const;

  Form form() const;
  std::string form_name() const;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&repr_);
  }

  /// Sampled check of r > 0 on [a, b].
  bool positive_on(double a, double b, int samples = 257) const;
  /// Sampled check of r'' > 0 on the open interval (a, b).
  bool strictly_convex_on(double a, double b, int samples = 257) const;

 private:
  using Repr = std::variant<Rational, Affine, PowerTail, Tabulated>;
  explicit RateFunction(Repr repr) : repr_(std::move(repr)) {}

  Repr repr_;
};

}  // namespace pmca
