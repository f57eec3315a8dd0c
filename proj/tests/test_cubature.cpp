#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spherequad/cubature.hpp"
#include "spherequad/errors.hpp"

using namespace sq;

namespace {

double brute_min_distance(const std::vector<Vec>& z) {
  double best = M_PI;
  for (size_t i = 0; i < z.size(); ++i)
    for (size_t j = i + 1; j < z.size(); ++j) best = std::min(best, geodesic_distance(z[i], z[j]));
  return best;
}

// max over |e| <= n of |mean_j z_j^e - mean_w x^e| for product weights.
double monomial_error(const std::vector<double>& alpha, int n, const std::vector<Vec>& z) {
  double worst = 0;
  for (const auto& e : oracle::exponents_up_to(static_cast<int>(alpha.size()), n)) {
    double s = 0;
    for (const auto& x : z) s += oracle::monomial(x, e);
    worst = std::max(worst, std::abs(s / z.size() - oracle::weighted_monomial_mean(alpha, e)));
  }
  return worst;
}

std::vector<Vec> random_nodes(std::mt19937_64& rng, int N, int d = 3) {
  std::vector<Vec> z;
  for (int i = 0; i < N; ++i) z.push_back(oracle::random_unit(rng, d));
  return z;
}

}  // namespace

TEST_CASE("seed placement") {
  auto w = WeightSpec::constant(3);
  auto P = regular_convex_partition(w, 40);
  auto S = seed_nodes(P, 3);
  CHECK(S.full_size() == 40);
  CHECK(static_cast<int>(S.nodes.size()) == 40);
  std::vector<int> used(P.cells.size(), 0);
  for (size_t i = 0; i < S.nodes.size(); ++i) {
    const auto& c = P.cells[S.cell[i]];
    CHECK(c.contains(S.nodes[i], 1e-12));
    // B(x, r_j) stays inside the cell
    CHECK(c.depth(S.nodes[i]) >= S.r[S.cell[i]] * (1 - 1e-9));
    if (used[S.cell[i]]++ == 0) CHECK((S.nodes[i] - c.inball.center).norm() < 1e-12);
  }
  for (size_t c = 0; c < P.cells.size(); ++c) CHECK(used[c] == P.cells[c].k);
  for (size_t i = 0; i < S.nodes.size(); ++i)
    for (size_t j = i + 1; j < S.nodes.size(); ++j)
      if (S.cell[i] == S.cell[j])
        CHECK(geodesic_distance(S.nodes[i], S.nodes[j]) >= 2 * S.r[S.cell[i]] * (1 - 1e-9));

  // bounded weight: r_j is bounded below by a multiple of N^{-1/2}
  auto wb = WeightSpec::product_power({0, 0, 2});
  for (int N : {64, 256}) {
    auto Pb = regular_convex_partition(wb, N);
    auto Sb = seed_nodes(Pb, 4);
    double rmin = *std::min_element(Sb.r.begin(), Sb.r.end());
    CHECK(rmin * std::sqrt(static_cast<double>(N)) > 1e-3);
  }
  CHECK_THROWS_AS(seed_nodes(P, 3, 1.5), InvalidArgument);
}

TEST_CASE("moment residual examples") {
  auto B3 = WeightedBasis::build(WeightSpec::constant(3), 3);
  CHECK(moment_residual(B3, oracle::octahedron()).cwiseAbs().maxCoeff() < 1e-14);
  auto B1 = WeightedBasis::build(WeightSpec::constant(3), 1);
  Vec z = make_vec({0.36, 0.48, 0.8});
  CHECK(moment_residual(B1, {z, Vec(-z)}).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::VectorXd r = moment_residual(B1, {make_vec({0, 0, 1})});
  CHECK(r[0] == 0.0);
  CHECK(std::abs(r.norm() - std::sqrt(3.0)) < 1e-14);
  CHECK(std::abs(r.cwiseAbs().maxCoeff() - std::sqrt(3.0)) < 1e-14);
}

TEST_CASE("residual-kernel identity and gradient") {
  std::mt19937_64 rng(17);
  auto B = WeightedBasis::build(WeightSpec::product_power({2, 0, 0}), 4);
  KernelEval G(B);
  auto Z = random_nodes(rng, 9);
  const int N = static_cast<int>(Z.size());
  double F = moment_residual(B, Z).squaredNorm();
  double K = 0;
  for (const auto& a : Z)
    for (const auto& b : Z) K += G(a, b);
  CHECK(std::abs(F - K / (N * N)) < 1e-10);

  ResidualPolynomial P(B, Z);
  for (int j = 0; j < N; ++j) {
    Vec v = oracle::random_tangent(rng, Z[j]);
    const double h = 1e-5;
    auto Zp = Z, Zm = Z;
    Zp[j] = exp_map(Z[j], h * v);
    Zm[j] = exp_map(Z[j], -h * v);
    double fd = (moment_residual(B, Zp).squaredNorm() - moment_residual(B, Zm).squaredNorm()) / (2 * h);
    double an = 2.0 / N * P.gradient(Z[j]).dot(v);
    CHECK(std::abs(fd - an) <= 1e-5 * std::max(std::abs(an), 1e-3));
  }
}

TEST_CASE("gradient lower bound on a cell") {
  // P(z_max) - P(x) >= min_R |grad P| * dist(x, boundary) for a convex cell R.
  // Small cells keep the sampled gradient minimum close to the true one.
  std::mt19937_64 rng(23);
  auto B = WeightedBasis::build(WeightSpec::constant(3), 3);
  auto Pt = regular_convex_partition(WeightSpec::constant(3), 400);
  int tested = 0;
  for (int trial = 0; trial < 40; ++trial) {
    ResidualPolynomial P(B, random_nodes(rng, 5));
    const auto& R = Pt.cells[(7 * trial) % Pt.cells.size()];
    std::vector<Vec> pts = R.rays();
    // the maximum sits on the boundary, so sample every edge densely
    const auto& rays = R.rays();
    for (size_t a = 0; a < rays.size(); ++a)
      for (size_t b = a + 1; b < rays.size(); ++b) {
        bool edge = false;
        for (const auto& f : R.facets()) edge |= std::abs(f.c.dot(rays[a])) < 1e-9 && std::abs(f.c.dot(rays[b])) < 1e-9;
        if (!edge) continue;
        for (int k = 1; k < 400; ++k) pts.push_back(arc(rays[a], rays[b]).eval(k / 400.0));
      }
    const size_t boundary = pts.size();
    while (pts.size() < boundary + 3000) {
      double rad = R.circumball.radius * std::sqrt(std::uniform_real_distribution<double>(0, 1)(rng));
      Vec x = exp_map(R.circumball.center, rad * oracle::random_tangent(rng, R.circumball.center));
      if (R.contains(x)) pts.push_back(x);
    }
    double pmax = -INFINITY, gmin = INFINITY, gmax = 0;
    for (const auto& x : pts) {
      pmax = std::max(pmax, P(x));
      double g = P.gradient(x).norm();
      gmin = std::min(gmin, g);
      gmax = std::max(gmax, g);
    }
    if (gmin < 0.5 * gmax) continue;  // near a critical point the sampled minimum is unreliable
    ++tested;
    for (const auto& x : pts) CHECK(pmax - P(x) >= gmin * std::max(0.0, R.depth(x)) - 1e-12);
  }
  CHECK(tested >= 10);
}

TEST_CASE("solver: exact seed, small designs, history") {
  auto w = WeightSpec::constant(3);
  auto B = WeightedBasis::build(w, 3);
  auto S = seed_nodes(regular_convex_partition(w, 6), 3);
  S.nodes = oracle::octahedron();
  auto exact = solve(S, B);
  CHECK(exact.report.iterations == 0);
  CHECK(exact.report.converged);

  RuleOptions opt;
  opt.N = 8;
  opt.solve.target = 1e-10;
  auto rule = build_rule(w, 3, opt);
  CHECK(rule.size() == 8);
  CHECK(rule.report.converged);
  CHECK(rule.report.max_residual <= 1e-10);
  CHECK(verify_rule(rule).pass);
  for (size_t i = 1; i < rule.report.history.size(); ++i) CHECK(rule.report.history[i] <= rule.report.history[i - 1]);
  CHECK(monomial_error({0, 0, 0}, 3, rule.nodes) < 1e-9);
}

TEST_CASE("solver: product weight, independent verification") {
  const std::vector<double> alpha = {2, 0, 0};
  auto w = WeightSpec::product_power(alpha);
  auto rule = build_rule(w, 5);
  CHECK(rule.size() == static_cast<int>(std::ceil(4 * max_inverse_cap(w, 5))));
  CHECK(rule.report.converged);
  auto V = verify_rule(rule);
  CHECK(V.pass);
  CHECK(V.rule_order == 2 * default_rule_order(w, 5));
  CHECK(V.separation_ratio >= 0.1);
  CHECK(monomial_error(alpha, 5, rule.nodes) < 1e-9);
  for (size_t i = 1; i < rule.report.history.size(); ++i) CHECK(rule.report.history[i] <= rule.report.history[i - 1]);

  // one node moved by 1e-3 breaks exactness
  auto bad = rule;
  Vec t = tangent_basis(bad.nodes[0]).col(0);
  bad.nodes[0] = exp_map(bad.nodes[0], 1e-3 * t);
  auto Vb = verify_rule(bad);
  CHECK_FALSE(Vb.pass);
  // first-order prediction: (1/N) * 1e-3 * d phi_k(z_0)[t]
  auto Bv = WeightedBasis::build(w, 5);
  Eigen::VectorXd val;
  Eigen::MatrixXd tg;
  Bv.eval_grad(rule.nodes[0], val, tg);
  double predicted = (tg * t).cwiseAbs().maxCoeff() * 1e-3 / rule.size();
  CHECK(std::abs(Vb.max_residual - predicted) < 0.05 * predicted);
}

TEST_CASE("symmetric solves") {
  auto w = WeightSpec::constant(3);
  RuleOptions opt;
  opt.N = 12;
  opt.symmetry = SymmetryTag::Tau;
  auto rule = build_rule(w, 3, opt);
  REQUIRE(rule.size() == 12);
  CHECK(rule.symmetry == SymmetryTag::Tau);
  for (int i = 0; i < 6; ++i) {
    Vec m = rule.nodes[i];
    m[2] = -m[2];
    double best = 1;
    for (const auto& y : rule.nodes) best = std::min(best, (y - m).norm());
    CHECK(best < 1e-14);
  }
  CHECK(verify_rule(rule).pass);

  auto wz = WeightSpec::product_power({0, 0, 2});
  RuleOptions oz;
  oz.symmetry = SymmetryTag::Z2;
  auto rz = build_rule(wz, 5, oz);
  CHECK(rz.size() % 8 == 0);
  for (const auto& x : rz.nodes)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(x[j]) > 1e-6);
  auto V = verify_rule(rz);
  CHECK(V.pass);
  // the invariant basis is smaller but the full-basis check above passes
  CHECK(WeightedBasis::build(wz, 5, SymmetryTag::Z2).size() < WeightedBasis::build(wz, 5).size());
}

TEST_CASE("other descent modes") {
  auto w = WeightSpec::constant(3);
  for (auto mode : {SolveOptions::Mode::Gradient, SolveOptions::Mode::Paper}) {
    RuleOptions opt;
    opt.N = 16;
    opt.solve.mode = mode;
    opt.solve.max_iter = 40;
    opt.solve.target = 1e-12;
    try {
      auto rule = build_rule(w, 2, opt);
      CHECK(rule.report.mode == (mode == SolveOptions::Mode::Gradient ? "gradient" : "paper"));
      CHECK(rule.report.iterations > 0);
      for (size_t i = 1; i < rule.report.history.size(); ++i)
        CHECK(rule.report.history[i] <= rule.report.history[i - 1]);
      CHECK(rule.report.history.back() < rule.report.history.front());
    } catch (const SeparationCollapse&) {
      FAIL("first-order descent collapsed");
    }
  }
}

TEST_CASE("separation floor and mirrors") {
  auto w = WeightSpec::constant(3);
  RuleOptions opt;
  opt.N = 20;
  opt.restarts = 0;
  opt.solve.separation_floor = 100;
  CHECK_THROWS_AS(build_rule(w, 3, opt), SeparationCollapse);

  auto wu = WeightSpec::product_power({-0.5, 0, 0});
  RuleOptions ou;
  ou.N = 20;
  ou.solve.separation_floor = 100;
  ou.solve.max_iter = 2;
  auto ru = build_rule(wu, 2, ou);
  CHECK_FALSE(ru.report.warnings.empty());

  auto B = WeightedBasis::build(w, 3, SymmetryTag::Z2);
  PartitionOptions po;
  po.symmetry = PartitionOptions::Symmetry::Z2;
  auto S = seed_nodes(regular_convex_partition(w, 16, 0, po), 3);
  S.nodes[0] = make_vec({1, 0, 0});
  CHECK_THROWS_AS(symmetric_solve(S, B, SymmetryTag::Z2), NodeOnMirror);
}

TEST_CASE("minimum distance") {
  std::mt19937_64 rng(31);
  for (int d : {2, 3, 4})
    for (int N : {2, 10, 300}) {
      auto z = random_nodes(rng, N, d);
      CHECK(std::abs(min_pairwise_distance(z) - brute_min_distance(z)) < 1e-14);
    }
  CHECK(min_pairwise_distance({make_vec({0, 0, 1})}) == doctest::Approx(M_PI));
}

TEST_CASE("serialization round trip") {
  auto w = WeightSpec::product_power({0, 0, 2});
  RuleOptions opt;
  opt.N = 24;
  opt.solve.max_iter = 3;
  auto rule = build_rule(w, 3, opt);
  auto back = CubatureRule::from_json(nlohmann::json::parse(rule.to_json().dump()));
  REQUIRE(back.size() == rule.size());
  for (int i = 0; i < rule.size(); ++i)
    for (int j = 0; j < 3; ++j) CHECK(back.nodes[i][j] == rule.nodes[i][j]);
  CHECK(back.degree == 3);
  CHECK(back.weight.describe() == w.describe());
  auto csv = CubatureRule::nodes_from_csv(rule.to_csv());
  REQUIRE(csv.size() == rule.nodes.size());
  for (int i = 0; i < rule.size(); ++i)
    for (int j = 0; j < 3; ++j) CHECK(csv[i][j] == rule.nodes[i][j]);
  CHECK(rule.to_csv().rfind("x1,x2,x3", 0) == 0);
}

TEST_CASE("known designs verify") {
  auto w = WeightSpec::constant(3);
  auto V = verify_nodes(w, 3, oracle::octahedron());
  CHECK(V.pass);
  CHECK(V.max_residual < 1e-14);
  CHECK(verify_nodes(w, 5, oracle::icosahedron()).pass);
  CHECK_FALSE(verify_nodes(w, 6, oracle::icosahedron()).pass);
  auto dup = oracle::octahedron();
  dup.push_back(dup[0]);
  CHECK_FALSE(verify_nodes(w, 1, dup).distinct);
}
