#pragma once

namespace raincast {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x)
// for a > 0, x >= 0: series expansion below the a+1 crossover, modified-Lentz
// continued fraction above it.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// log Q(a, x), finite far into the tail where Q itself underflows (the
// chi-square p-values here reach 1e-8555).
double log_gamma_q(double a, double x);

}  // namespace raincast
