#pragma once

#include <functional>
#include <vector>

#include "spherequad/geom.hpp"

namespace sq {

struct Rule1D {
  std::vector<double> x, w;
};

// Gauss-Jacobi rule on [-1,1] for the weight (1-x)^a (1+x)^b, via the
// eigen-decomposition of the Jacobi matrix. Results are cached.
const Rule1D& gauss_jacobi(int n, double a, double b);
inline const Rule1D& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

struct MeasureResult {
  double value = 0;
  double error_bound = 0;
  long evaluations = 0;
};

// Double-exponential integration of f over [a,b]. The integrand receives
// (x, x-a, b-x), with both endpoint distances computed without cancellation so
// that endpoint singularities |x-a|^p can be evaluated accurately.
struct TanhSinhOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-13;
  int max_level = 9;
};
MeasureResult tanh_sinh(const std::function<double(double, double, double)>& f, double a, double b,
                        const TanhSinhOptions& opt = {});

// Tensor rule on the full sphere S^{d-1} integrating
//   prod_j |x_j|^{a_j} * g(x) dsigma
// with nodes chosen so that the singular product is built into the weights.
// `order` counts nodes per angular variable in each orthant.
struct SphereRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};
SphereRule sphere_product_rule(const std::vector<double>& exponents, int order);

// Double factorial-free closed form: integral over S^{d-1} of prod |x_j|^{b_j}.
double sphere_abs_moment(const std::vector<double>& b);

}  // namespace sq
