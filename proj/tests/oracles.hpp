#pragma once
// Independent reference computations used by the tests. Nothing here calls
// the library's quadrature or partition code.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "spherequad/geom.hpp"

namespace oracle {

using sq::Vec;

inline Vec random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = n(rng);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

inline Vec random_tangent(std::mt19937_64& rng, const Vec& x) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(x.size());
  for (int i = 0; i < x.size(); ++i) v[i] = n(rng);
  v -= v.dot(x) * x;
  return v / v.norm();
}

inline double sphere_area(int d) {
  // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
  return 2 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
}

struct MCResult {
  double mean, stderr_;
};

// Monte Carlo estimate of (1/|S|) * integral of f over S^{d-1}.
inline MCResult monte_carlo(int d, long samples, const std::function<double(const Vec&)>& f, unsigned seed = 7) {
  std::mt19937_64 rng(seed);
  double s = 0, s2 = 0;
  for (long i = 0; i < samples; ++i) {
    double v = f(random_unit(rng, d));
    s += v;
    s2 += v * v;
  }
  double m = s / samples;
  double var = std::max(0.0, s2 / samples - m * m);
  return {m, std::sqrt(var / samples)};
}

// Integral over S^{d-1} of prod |x_j|^{b_j}: 2 prod Gamma((b_j+1)/2) / Gamma((|b|+d)/2).
inline double abs_moment(const std::vector<double>& b) {
  double lg = 0, s = 0;
  for (double x : b) {
    lg += std::lgamma((x + 1) / 2);
    s += x;
  }
  return 2 * std::exp(lg - std::lgamma((s + b.size()) / 2.0));
}

// Signed monomial moment over the sphere: zero unless all exponents even.
inline double monomial_moment(const std::vector<int>& e) {
  std::vector<double> b;
  for (int k : e) {
    if (k % 2) return 0.0;
    b.push_back(k);
  }
  return abs_moment(b);
}

// A polynomial given as a list of (coefficient, exponent vector).
struct Poly {
  std::vector<std::pair<double, std::vector<int>>> terms;
  double operator()(const Vec& x) const {
    double s = 0;
    for (const auto& [c, e] : terms) {
      double t = c;
      for (size_t j = 0; j < e.size(); ++j) t *= std::pow(x[j], e[j]);
      s += t;
    }
    return s;
  }
};

inline Poly random_poly(std::mt19937_64& rng, int d, int degree, int nterms = 8) {
  std::uniform_int_distribution<int> u(0, degree);
  std::uniform_real_distribution<double> c(-1, 1);
  Poly p;
  for (int t = 0; t < nterms; ++t) {
    std::vector<int> e(d, 0);
    int budget = u(rng);
    for (int k = 0; k < budget; ++k) e[std::uniform_int_distribution<int>(0, d - 1)(rng)]++;
    p.terms.push_back({c(rng), e});
  }
  return p;
}

// Gauss-Legendre by Newton iteration on Legendre polynomials (independent of
// the library's Golub-Welsch code).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = n == 1 ? z : p1;
      double pm = n == 1 ? 1 : p0;
      double dp = n * (z * pn - pm) / (z * z - 1);
      double dz = pn / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1, p1 = z;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (z * p1 - p0) / (z * z - 1);
    x[i] = z;
    w[i] = 2 / ((1 - z * z) * dp * dp);
  }
}

// Integral of a smooth f over S^2 by product Gauss-Legendre in (z, phi)
// restricted to a polar box: z in [z0, z1], phi in [p0, p1].
inline double s2_box_integral(const std::function<double(const Vec&)>& f, double z0, double z1, double p0, double p1,
                              int n = 64) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    double z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x[i];
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    for (int j = 0; j < n; ++j) {
      double ph = 0.5 * (p0 + p1) + 0.5 * (p1 - p0) * x[j];
      Vec v(3);
      v << r * std::cos(ph), r * std::sin(ph), z;
      s += w[i] * w[j] * f(v);
    }
  }
  return s * 0.25 * (z1 - z0) * (p1 - p0);
}

// Spiral point set on S^2, nearly uniform.
inline std::vector<Vec> fibonacci_sphere(int n) {
  std::vector<Vec> out;
  const double golden = M_PI * (3 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1 - (2 * i + 1.0) / n, r = std::sqrt(1 - z * z);
    Vec v(3);
    v << r * std::cos(golden * i), r * std::sin(golden * i), z;
    out.push_back(v);
  }
  return out;
}

// Integral over the wedge phi in [p0, p1] of S^2 in (theta, phi) polar
// coordinates about e3; smooth for every polynomial, unlike the (z, phi) box.
inline double s2_wedge_integral(const std::function<double(const Vec&)>& f, double p0, double p1, int n = 64) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    double th = M_PI / 2 * (x[i] + 1);
    for (int j = 0; j < n; ++j) {
      double ph = p0 + (p1 - p0) / 2 * (x[j] + 1);
      Vec v(3);
      v << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
      s += w[i] * w[j] * std::sin(th) * f(v);
    }
  }
  return s * (M_PI / 2) * (p1 - p0) / 2;
}

// ---------------------------------------------------------------- designs

inline std::vector<Vec> octahedron() {
  std::vector<Vec> out;
  for (int i = 0; i < 3; ++i)
    for (int s : {1, -1}) {
      Vec v = Vec::Zero(3);
      v[i] = s;
      out.push_back(v);
    }
  return out;
}

// Twelve vertices (0, +-1, +-phi) and cyclic permutations, normalized.
inline std::vector<Vec> icosahedron() {
  const double phi = (1 + std::sqrt(5.0)) / 2;
  std::vector<Vec> out;
  for (int s1 : {1, -1})
    for (int s2 : {1, -1})
      for (int c = 0; c < 3; ++c) {
        double a[3] = {0, 0, 0};
        a[(c + 1) % 3] = s1;
        a[(c + 2) % 3] = s2 * phi;
        Vec v(3);
        v << a[0], a[1], a[2];
        out.push_back(v.normalized());
      }
  return out;
}

// ---------------------------------------------------------------- moments

// Mean of x^e under the normalized weight prod |x_j|^{alpha_j} on S^{d-1}.
inline double weighted_monomial_mean(const std::vector<double>& alpha, const std::vector<int>& e) {
  std::vector<double> b(alpha);
  for (size_t j = 0; j < e.size(); ++j) {
    if (e[j] % 2) return 0.0;
    b[j] += e[j];
  }
  return abs_moment(b) / abs_moment(alpha);
}

// All exponent tuples of total degree <= n in d variables.
inline std::vector<std::vector<int>> exponents_up_to(int d, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(d, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == d) {
      out.push_back(e);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      e[i] = a;
      rec(i + 1, left - a);
    }
    e[i] = 0;
  };
  rec(0, n);
  return out;
}

inline double monomial(const Vec& x, const std::vector<int>& e) {
  double p = 1;
  for (size_t j = 0; j < e.size(); ++j) p *= std::pow(x[j], e[j]);
  return p;
}

// Integral of y^e over the unit ball B^d: zero unless e is even, otherwise
// the sphere moment divided by |e| + d.
inline double ball_monomial(const std::vector<int>& e) {
  int s = 0;
  std::vector<double> b;
  for (int k : e) {
    if (k % 2) return 0.0;
    s += k;
    b.push_back(k);
  }
  return abs_moment(b) / (s + static_cast<double>(e.size()));
}

// Dirichlet integral of prod y_j^{e_j + kappa_j} (1-|y|)^{kappa_last} over T^d.
inline double simplex_monomial(const std::vector<int>& e, const std::vector<double>& kappa = {}) {
  const size_t d = e.size();
  std::vector<double> k = kappa.empty() ? std::vector<double>(d + 1, 0.0) : kappa;
  double lg = std::lgamma(k[d] + 1), s = k[d] + 1;
  for (size_t j = 0; j < d; ++j) {
    lg += std::lgamma(e[j] + k[j] + 1);
    s += e[j] + k[j] + 1;
  }
  return std::exp(lg - std::lgamma(s));
}

// Legendre P_k(t) by the three-term recurrence.
inline double legendre(int k, double t) {
  double p0 = 1, p1 = t;
  if (k == 0) return p0;
  for (int m = 2; m <= k; ++m) {
    double p2 = ((2 * m - 1) * t * p1 - (m - 1) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Zero-mean reproducing kernel of the normalized uniform measure on S^2
// (addition formula).
inline double uniform_kernel_s2(int n, double t) {
  double s = 0;
  for (int k = 1; k <= n; ++k) s += (2 * k + 1) * legendre(k, t);
  return s;
}

// Product Gauss-Legendre rule on S^2 in (z, phi), split at z = 0 and at the
// coordinate half-planes so that weights with |x_j|^a factors of even
// integer a are integrated exactly. Weights sum to 4 pi.
struct S2Rule {
  std::vector<Vec> x;
  std::vector<double> w;
};
inline S2Rule s2_product_rule(int n) {
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  S2Rule R;
  for (int zs = 0; zs < 2; ++zs)
    for (int q = 0; q < 4; ++q)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double z = zs == 0 ? 0.5 * (gx[i] + 1) : -0.5 * (gx[i] + 1);
          double ph = q * M_PI / 2 + M_PI / 4 * (gx[j] + 1);
          double r = std::sqrt(1 - z * z);
          Vec v(3);
          v << r * std::cos(ph), r * std::sin(ph), z;
          R.x.push_back(v);
          R.w.push_back(0.5 * gw[i] * (M_PI / 4) * gw[j]);
        }
  return R;
}

}  // namespace oracle
