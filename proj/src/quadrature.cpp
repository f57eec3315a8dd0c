#include "spherequad/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace sq {

const Rule1D& gauss_jacobi(int n, double a, double b) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  // Jacobi matrix of the monic recurrence.
  Eigen::VectorXd diag(n), off(std::max(n - 1, 0));
  double ab = a + b;
  for (int k = 0; k < n; ++k) {
    double s = 2.0 * k + ab;
    diag[k] = (k == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    double s = 2.0 * k + ab;
    double beta;
    if (k == 1)
      beta = 4.0 * (1 + a) * (1 + b) / ((2 + ab) * (2 + ab) * (3 + ab));
    else
      beta = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1) * (s - 1));
    off[k - 1] = std::sqrt(beta);
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) J(k, k) = diag[k];
  for (int k = 0; k + 1 < n; ++k) J(k, k + 1) = J(k + 1, k) = off[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double mu0 = std::exp((ab + 1) * std::log(2.0) + std::lgamma(a + 1) + std::lgamma(b + 1) - std::lgamma(ab + 2));
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()[i];
    double v = es.eigenvectors()(0, i);
    r.w[i] = mu0 * v * v;
  }
  return cache.emplace(key, std::move(r)).first->second;
}

MeasureResult tanh_sinh(const std::function<double(double, double, double)>& f, double a, double b,
                        const TanhSinhOptions& opt) {
  MeasureResult res;
  if (!(b > a)) return res;
  const double L = b - a;
  const double half = 0.5 * L;
  const double hpi = 0.5 * kPi;
  long evals = 0;

  auto term = [&](double t) -> double {
    double u = hpi * std::sinh(t);
    double e2 = std::exp(-2.0 * std::abs(u));
    double da, db;
    if (u >= 0) {
      da = L / (1.0 + e2);
      db = L * e2 / (1.0 + e2);
    } else {
      da = L * e2 / (1.0 + e2);
      db = L / (1.0 + e2);
    }
    if (da <= 0 || db <= 0) return 0.0;
    double x = (da <= db) ? a + da : b - db;
    double sech2 = 4.0 * e2 / ((1.0 + e2) * (1.0 + e2));
    double wt = half * hpi * std::cosh(t) * sech2;
    if (wt == 0.0) return 0.0;
    ++evals;
    return wt * f(x, da, db);
  };

  // Level 0 with step h0 and discovery of the effective range.
  const double h0 = 0.5;
  const double tcap = 6.5;
  double sum = term(0.0);
  double tR = 0, tL = 0;
  for (int dir = -1; dir <= 1; dir += 2) {
    int quiet = 0;
    for (int k = 1;; ++k) {
      double t = dir * k * h0;
      if (std::abs(t) > tcap) break;
      double v = term(t);
      sum += v;
      (dir > 0 ? tR : tL) = std::abs(t);
      if (std::abs(t) > 1.5 && std::abs(v) <= 1e-20 * std::abs(sum)) {
        if (++quiet >= 2) break;
      } else {
        quiet = 0;
      }
    }
  }
  double prev2 = NAN, prev = sum * h0;
  double h = h0;
  double I = prev;
  double est = INFINITY;
  for (int level = 1; level <= opt.max_level; ++level) {
    h *= 0.5;
    double add = 0;
    for (double t = h; t <= tR + 1e-12; t += 2 * h) add += term(t);
    for (double t = h; t <= tL + 1e-12; t += 2 * h) add += term(-t);
    sum += add;
    I = sum * h;
    double e1 = std::abs(I - prev);
    est = e1;
    if (level >= 2 && std::abs(I) > 0) {
      double e2 = std::abs(prev - prev2);
      if (e2 > e1) est = std::min(e1, 16.0 * e1 * e1 / std::abs(I));
    }
    prev2 = prev;
    prev = I;
    double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(I));
    if (level >= 2 && est <= tol) {
      res.value = I;
      res.error_bound = est + 1e-16 * std::abs(I);
      res.evaluations = evals;
      return res;
    }
  }
  res.value = I;
  res.error_bound = est;
  res.evaluations = evals;
  throw QuadratureFailure("double-exponential integration did not reach tolerance",
                          {{"estimate", est}, {"value", I}, {"a", a}, {"b", b}});
}

namespace {

double sinc(double t) { return std::abs(t) < 1e-8 ? 1.0 - t * t / 6.0 : std::sin(t) / t; }

void orthant_rule(const std::vector<double>& a, int k, int m, std::vector<Vec>& nodes, std::vector<double>& w) {
  // nodes on the positive orthant of S^{k-1}, coordinates a[0..k-1]
  if (k == 2) {
    const Rule1D& gj = gauss_jacobi(m, a[0], a[1]);
    double scale = std::pow(kPi / 4, 1 + a[0] + a[1]);
    for (int i = 0; i < m; ++i) {
      double u = gj.x[i];
      double phi = (kPi / 4) * (1 + u), cphi = (kPi / 4) * (1 - u);
      Vec x(2);
      x << std::sin(cphi), std::sin(phi);
      nodes.push_back(x);
      w.push_back(gj.w[i] * scale * std::pow(sinc(cphi), a[0]) * std::pow(sinc(phi), a[1]));
    }
    return;
  }
  std::vector<Vec> sub;
  std::vector<double> subw;
  orthant_rule(a, k - 1, m, sub, subw);
  double A = 0;
  for (int j = 0; j < k - 1; ++j) A += a[j];
  double B = k - 2 + A;
  const Rule1D& gj = gauss_jacobi(m, B, a[k - 1]);
  double scale = std::pow(kPi / 4, 1 + B + a[k - 1]);
  for (int i = 0; i < m; ++i) {
    double u = gj.x[i];
    double psi = (kPi / 4) * (1 + u), cpsi = (kPi / 4) * (1 - u);
    double c = std::sin(cpsi), s = std::sin(psi);
    double wi = gj.w[i] * scale * std::pow(sinc(cpsi), B) * std::pow(sinc(psi), a[k - 1]);
    for (size_t q = 0; q < sub.size(); ++q) {
      Vec x(k);
      x.head(k - 1) = c * sub[q];
      x[k - 1] = s;
      nodes.push_back(x);
      w.push_back(wi * subw[q]);
    }
  }
}

}  // namespace

SphereRule sphere_product_rule(const std::vector<double>& exponents, int order) {
  const int d = static_cast<int>(exponents.size());
  std::vector<Vec> on;
  std::vector<double> ow;
  orthant_rule(exponents, d, order, on, ow);
  SphereRule r;
  r.nodes.reserve(on.size() << d);
  r.weights.reserve(on.size() << d);
  for (int s = 0; s < (1 << d); ++s) {
    for (size_t q = 0; q < on.size(); ++q) {
      Vec x = on[q];
      for (int j = 0; j < d; ++j)
        if (s & (1 << j)) x[j] = -x[j];
      r.nodes.push_back(x);
      r.weights.push_back(ow[q]);
    }
  }
  return r;
}

double sphere_abs_moment(const std::vector<double>& b) {
  double lg = 0, s = 0;
  for (double bj : b) {
    lg += std::lgamma((bj + 1) / 2);
    s += bj;
  }
  return 2.0 * std::exp(lg - std::lgamma((s + static_cast<double>(b.size())) / 2));
}

}  // namespace sq
