#include "raincast/stats.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "raincast/errors.hpp"

namespace raincast {

namespace {

constexpr int kMaxIter = 600;
constexpr double kEps = 1e-16;

void check_domain(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("igamma: a must be positive");
  if (x < 0.0 || !std::isfinite(x)) throw ValidationError("igamma: x must be nonnegative");
}

// series for P(a, x) * Gamma(a) * e^x * x^-a, i.e. sum_n x^n / (a (a+1) ... (a+n))
double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEps) return sum;
  }
  throw NumericError("igamma: series failed to converge at a=" + std::to_string(a) +
                     ", x=" + std::to_string(x));
}

// modified Lentz evaluation of the continued fraction for Q(a, x) e^x x^-a Gamma(a)
double upper_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("igamma: continued fraction failed to converge at a=" + std::to_string(a) +
                     ", x=" + std::to_string(x));
}

double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

}  // namespace

double gamma_p(double a, double x) {
  check_domain(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_series(a, x) * std::exp(log_prefactor(a, x));
  return 1.0 - gamma_q(a, x);
}

double gamma_q(double a, double x) {
  check_domain(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p(a, x);
  return upper_cf(a, x) * std::exp(log_prefactor(a, x));
}

double log_gamma_q(double a, double x) {
  check_domain(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    const double q = gamma_q(a, x);
    if (q <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(q);
  }
  return std::log(upper_cf(a, x)) + log_prefactor(a, x);
}

}  // namespace raincast
