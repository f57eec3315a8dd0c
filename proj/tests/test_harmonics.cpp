#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spherequad/errors.hpp"
#include "spherequad/harmonics.hpp"

using namespace sq;

namespace {

// Gram matrix of the basis under w, computed with the oracle product rule.
// Only valid for weights whose exponents are even integers.
Eigen::MatrixXd oracle_gram(const WeightedBasis& B, const std::vector<double>& alpha, int order) {
  auto R = oracle::s2_product_rule(order);
  double Z = oracle::abs_moment(alpha);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(B.size(), B.size());
  for (size_t i = 0; i < R.x.size(); ++i) {
    double wt = R.w[i] / Z;
    for (int j = 0; j < 3; ++j) wt *= std::pow(std::abs(R.x[i][j]), alpha[j]);
    Eigen::VectorXd v = B.eval(R.x[i]);
    G.noalias() += wt * v * v.transpose();
  }
  return G;
}

// lambda_n(w, x) = 1 / (v^T G^{-1} v) over the monomials of degree n and n-1,
// which together span the polynomials of degree <= n on S^2.
double oracle_christoffel(const std::vector<double>& alpha, int n, const Vec& x) {
  std::vector<std::vector<int>> mons;
  for (int deg : {n, n - 1}) {
    if (deg < 0) continue;
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) mons.push_back({a, b, deg - a - b});
  }
  const int m = static_cast<int>(mons.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  double Z = oracle::abs_moment(alpha);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      std::vector<double> b(alpha);
      for (int k = 0; k < 3; ++k) b[k] += mons[i][k] + mons[j][k];
      bool even = true;
      for (int k = 0; k < 3; ++k) even &= (mons[i][k] + mons[j][k]) % 2 == 0;
      G(i, j) = G(j, i) = even ? oracle::abs_moment(b) / Z : 0.0;
    }
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v[i] = oracle::monomial(x, mons[i]);
  return 1.0 / v.dot(G.ldlt().solve(v));
}

}  // namespace

TEST_CASE("polynomial space dimensions") {
  CHECK(polynomial_space_dim(2, 5) == 11);
  for (int n = 0; n < 10; ++n) {
    CHECK(polynomial_space_dim(3, n) == (n + 1) * (n + 1));
    CHECK(polynomial_space_dim(4, n) == (n + 1) * (n + 2) * (2 * n + 3) / 6);
  }
  for (int d = 2; d <= 4; ++d)
    for (int n : {0, 1, 4}) {
      Vec x = Vec::Zero(d);
      x[0] = 1;
      CHECK(raw_harmonics(d, n, x).size() == polynomial_space_dim(d, n));
    }
}

TEST_CASE("weighted basis is orthonormal against an oracle quadrature") {
  struct C {
    std::vector<double> alpha;
    int n;
  };
  for (const auto& c : {C{{0, 0, 0}, 6}, C{{0, 0, 2}, 5}, C{{2, 0, 0}, 5}, C{{2, 2, 2}, 4}}) {
    auto B = WeightedBasis::build(WeightSpec::product_power(c.alpha), c.n);
    CHECK(B.size() == polynomial_space_dim(3, c.n));
    CHECK(B.gram_residual() < 1e-11);
    auto G = oracle_gram(B, c.alpha, 24);
    double err = (G - Eigen::MatrixXd::Identity(B.size(), B.size())).cwiseAbs().maxCoeff();
    CHECK(err < 1e-10);
    CHECK(B.recheck_gram(2 * B.rule_order()) < 1e-10);
    // phi_0 is the constant 1
    CHECK(std::abs(B.eval(make_vec({0.6, 0, 0.8}))[0] - 1) < 1e-12);
  }
}

TEST_CASE("symmetry filters") {
  auto w = WeightSpec::constant(3);
  CHECK(WeightedBasis::build(w, 2, SymmetryTag::Z2).size() == 3);
  CHECK(WeightedBasis::build(w, 2, SymmetryTag::Tau).size() == 6);
  auto B = WeightedBasis::build(WeightSpec::product_power({0, 0, 2}), 5, SymmetryTag::Tau);
  std::mt19937_64 rng(2);
  for (int s = 0; s < 20; ++s) {
    Vec x = oracle::random_unit(rng, 3), y = x;
    y[2] = -y[2];
    CHECK((B.eval(x) - B.eval(y)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reproducing kernel") {
  std::mt19937_64 rng(4);
  const int n = 6;
  auto B = WeightedBasis::build(WeightSpec::constant(3), n);
  KernelEval G(B);
  for (int s = 0; s < 50; ++s) {
    Vec x = oracle::random_unit(rng, 3), y = oracle::random_unit(rng, 3);
    CHECK(std::abs(G(x, y) - oracle::uniform_kernel_s2(n, x.dot(y))) < 1e-10);
    CHECK(std::abs(G(x, y) - G(y, x)) < 1e-12);
    CHECK(G(x, x) >= 0);
  }

  // reproducing: int G(x, .) p dw = p(x) - mean_w(p) for p of degree <= n
  auto w = WeightSpec::product_power({2, 0, 0});
  auto Bw = WeightedBasis::build(w, 4);
  KernelEval Gw(Bw);
  auto R = oracle::s2_product_rule(20);
  double Z = oracle::abs_moment({2, 0, 0});
  for (int t = 0; t < 5; ++t) {
    auto p = oracle::random_poly(rng, 3, 4);
    double mean = 0;
    for (size_t i = 0; i < R.x.size(); ++i) mean += R.w[i] * R.x[i][0] * R.x[i][0] / Z * p(R.x[i]);
    Vec x = oracle::random_unit(rng, 3);
    double s = 0;
    for (size_t i = 0; i < R.x.size(); ++i) s += R.w[i] * R.x[i][0] * R.x[i][0] / Z * Gw(x, R.x[i]) * p(R.x[i]);
    CHECK(std::abs(s - (p(x) - mean)) < 1e-10);
  }
}

TEST_CASE("Christoffel function") {
  std::mt19937_64 rng(6);
  for (int n : {2, 5, 9}) {
    auto B = WeightedBasis::build(WeightSpec::constant(3), n);
    for (int s = 0; s < 10; ++s) {
      Vec x = oracle::random_unit(rng, 3);
      CHECK(std::abs(christoffel(B, x) - 1.0 / ((n + 1) * (n + 1))) < 1e-12);
    }
  }
  for (std::vector<double> a : {std::vector<double>{0, 0, 2}, {2, 2, 2}, {2, 0, 0}}) {
    const int n = 5;
    auto B = WeightedBasis::build(WeightSpec::product_power(a), n);
    for (int s = 0; s < 10; ++s) {
      Vec x = oracle::random_unit(rng, 3);
      double lo = oracle_christoffel(a, n, x);
      CHECK(std::abs(christoffel(B, x) - lo) < 1e-9 * std::max(1.0, lo));
    }
  }
  CHECK_THROWS_AS(christoffel(WeightedBasis::build(WeightSpec::constant(3), 3, SymmetryTag::Tau), make_vec({0, 0, 1})),
                  InvalidArgument);
}

TEST_CASE("residual polynomial") {
  auto B = WeightedBasis::build(WeightSpec::constant(3), 3);
  auto oct = oracle::octahedron();
  ResidualPolynomial P(B, oct);
  CHECK(P.max_coefficient() < 1e-14);

  ResidualPolynomial Q(B, {make_vec({0, 0, 1})});
  CHECK(std::abs(Q.squared_norm() - 15) < 1e-10);  // (n+1)^2 - 1
  KernelEval G(B);
  Vec z = make_vec({0.36, 0.48, 0.8});
  CHECK(std::abs(Q(z) - G(make_vec({0, 0, 1}), z)) < 1e-12);
  CHECK(std::abs(Q.coefficients()[0]) == 0.0);

  // gradient against central differences along tangent directions
  std::mt19937_64 rng(8);
  auto Bw = WeightedBasis::build(WeightSpec::product_power({0, 0, 2}), 4);
  std::vector<Vec> nodes;
  for (int i = 0; i < 7; ++i) nodes.push_back(oracle::random_unit(rng, 3));
  ResidualPolynomial R(Bw, nodes);
  for (int s = 0; s < 10; ++s) {
    Vec x = oracle::random_unit(rng, 3), v = oracle::random_tangent(rng, x);
    const double h = 1e-6;
    double fd = (R(exp_map(x, h * v)) - R(exp_map(x, -h * v))) / (2 * h);
    Vec g = R.gradient(x);
    CHECK(std::abs(g.dot(x)) < 1e-10);
    CHECK(std::abs(g.dot(v) - fd) < 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("basis gradients match finite differences") {
  std::mt19937_64 rng(10);
  for (int d : {2, 3, 4}) {
    auto B = WeightedBasis::build(WeightSpec::constant(d), d == 4 ? 4 : 6);
    for (int s = 0; s < 5; ++s) {
      Vec x = oracle::random_unit(rng, d), v = oracle::random_tangent(rng, x);
      Eigen::VectorXd val;
      Eigen::MatrixXd tg;
      B.eval_grad(x, val, tg);
      CHECK((val - B.eval(x)).cwiseAbs().maxCoeff() < 1e-12);
      const double h = 1e-6;
      Eigen::VectorXd fd = (B.eval(exp_map(x, h * v)) - B.eval(exp_map(x, -h * v))) / (2 * h);
      CHECK((tg * v - fd).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((tg * x).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("degree limits") {
  CHECK_THROWS_AS(WeightedBasis::build(WeightSpec::constant(3), 40), InvalidArgument);
  CHECK_THROWS_AS(raw_harmonics(1, 2, Vec::Ones(1)), InvalidArgument);
  auto j = WeightedBasis::build(WeightSpec::constant(3), 2).to_json();
  CHECK(j["degree"] == 2);
}
