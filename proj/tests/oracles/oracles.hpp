// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used only by tests. Nothing here calls
// into the library; each routine uses a different numerical route from the
// implementation it checks.

#ifndef GPX_TESTS_ORACLES_HPP
#define GPX_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double Q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Adaptive Simpson with Richardson correction.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::fabs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) + rec(mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Root of sqrt(2 pi) u exp(u^2/2) = n by plain bisection on [lo, hi].
inline double bisect_un(double n, double lo = 0.5, double hi = 30.0) {
  auto g = [n](double u) { return std::log(std::sqrt(2.0 * M_PI) * u) + 0.5 * u * u - std::log(n); };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// sqrt(2 log n) - (log log n / 2 + log(2 sqrt(pi))) / sqrt(2 log n).
inline double un_asymptotic(double n) {
  const double r = std::sqrt(2.0 * std::log(n));
  return r - (0.5 * std::log(std::log(n)) + std::log(2.0 * std::sqrt(M_PI))) / r;
}

// Cosine integral by its power series (accurate for x <= ~4).
inline double Ci(double x) {
  double sum = 0.0, term = 1.0;  // term = (-1)^k x^{2k} / (2k)!
  for (int k = 1; k < 60; ++k) {
    term *= -x * x / ((2.0 * k - 1.0) * (2.0 * k));
    sum += term / (2.0 * k);
  }
  return 0.5772156649015328606 + std::log(x) + sum;
}

// Integral of sin(x)/x^2 over [a, b] via the antiderivative Ci(x) - sin(x)/x.
inline double sinc2_closed(double a, double b) { return (Ci(b) - std::sin(b) / b) - (Ci(a) - std::sin(a) / a); }

// Bivariate normal density with unit variances and correlation r.
inline double bvn_density(double a, double b, double r) {
  const double s = 1.0 - r * r;
  return std::exp(-(a * a - 2.0 * r * a * b + b * b) / (2.0 * s)) / (2.0 * M_PI * std::sqrt(s));
}

// P[X > a, Y > b] by Plackett's identity: Q(a)Q(b) + int_0^rho density(a, b; r) dr.
inline double bvn_upper(double a, double b, double rho) {
  return Q(a) * Q(b) + simpson([&](double r) { return bvn_density(a, b, r); }, 0.0, rho, 1e-15);
}

inline double bvn_cdf(double a, double b, double rho) { return bvn_upper(-a, -b, rho); }

// Exact P[u(M_1 - u) <= y1, u(M_2 - u) <= y2] for the max of n standard
// bivariate normals with correlation rho, u = u_n.
inline double exact_max_cdf(double n, double u, double rho, double y1, double y2) {
  const double x1 = u + y1 / u, x2 = u + y2 / u;
  const double miss = Q(x1) + Q(x2) - bvn_upper(x1, x2, rho);
  return std::exp(n * std::log1p(-miss));
}

// Exact marginal P[u(M - u) <= y] for unit variance.
inline double exact_max_marginal(double n, double u, double y) { return std::exp(n * std::log1p(-Q(u + y / u))); }

// E[a (M - b)] for the max of n N(0, s1^2) variables, with a = u/s0 and
// b = s0 u: integral of the survival minus integral of the cdf.
inline double exact_max_mean(double n, double u, double s0, double s1) {
  auto cdf = [&](double y) { return std::exp(n * std::log1p(-Q((s0 * u + s0 * y / u) / s1))); };
  const double pos = simpson([&](double y) { return 1.0 - cdf(y); }, 0.0, 40.0, 1e-12);
  const double neg = simpson(cdf, -15.0, 0.0, 1e-12);
  return pos - neg;
}

// Conditional negative definiteness by Schoenberg's theorem: exp(-t G) is
// positive semidefinite for every t > 0. Checked on a log grid of t.
inline bool negdef_by_schoenberg(const Eigen::MatrixXd& g, double tol = 1e-9) {
  for (int i = -30; i <= 30; ++i) {
    const double t = std::pow(10.0, i / 10.0);
    const Eigen::MatrixXd e = (-t * g.array()).exp().matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
    if (es.eigenvalues().minCoeff() < -tol) return false;
  }
  return true;
}

}  // namespace oracle

#endif  // GPX_TESTS_ORACLES_HPP
