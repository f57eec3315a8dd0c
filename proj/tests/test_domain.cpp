#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "spherequad/domain.hpp"
#include "spherequad/errors.hpp"

using namespace sq;

namespace {

DomainPoint ball_point(double a, double b) { return {Domain::Ball, make_vec({a, b})}; }
DomainPoint simplex_point(double a, double b) { return {Domain::Simplex, make_vec({a, b})}; }

DomainPoint random_ball(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  for (;;) {
    double a = u(rng), b = u(rng);
    if (a * a + b * b < 1) return ball_point(a, b);
  }
}

DomainPoint random_simplex(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  for (;;) {
    double a = u(rng), b = u(rng);
    if (a + b < 1) return simplex_point(a, b);
  }
}

// Integral of g(rho) * (angle of {theta : rho cos(theta) >= t}) * rho over
// [0, 1], i.e. a radial weight g integrated over the half-plane y1 >= t of
// the unit disk. The substitution rho = |t| + (1 - |t|) s^2 removes the
// square-root behaviour of the angle at rho = |t|.
double disk_halfplane(const std::function<double(double)>& g, double t) {
  std::vector<double> x, w;
  oracle::gauss_legendre(80, x, w);
  const double a = std::abs(t);
  auto angle = [&](double rho) {
    if (rho <= a) return t >= 0 ? 0.0 : 2 * M_PI;
    double half = std::acos(a / rho);
    return t >= 0 ? 2 * half : 2 * M_PI - 2 * half;
  };
  double s = 0;
  for (int i = 0; i < 80; ++i) {
    double u = 0.5 * (x[i] + 1);
    double rho = a + (1 - a) * u * u;
    s += 0.5 * w[i] * g(rho) * angle(rho) * rho * 2 * (1 - a) * u;
    double r2 = a * 0.5 * (x[i] + 1);
    s += 0.5 * a * w[i] * g(r2) * angle(r2) * r2;
  }
  return s;
}

CubatureRule tau_rule(int n, int N) {
  RuleOptions opt;
  opt.N = N;
  opt.symmetry = SymmetryTag::Tau;
  return build_rule(lift_weight(DomainWeight::lebesgue(Domain::Ball, 2)), n, opt);
}

}  // namespace

TEST_CASE("domain metrics: examples") {
  CHECK(rho_omega(ball_point(0.3, 0.4), ball_point(0.3, 0.4)) == 0.0);
  CHECK(rho_omega(ball_point(0, 0), ball_point(1, 0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(rho_omega(simplex_point(1, 0), simplex_point(0, 1)) == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK_THROWS_AS(rho_omega(ball_point(0, 0), simplex_point(0.2, 0.2)), DomainMismatch);
  CHECK(boundary_distance(simplex_point(0.25, 0.25)) == doctest::Approx(std::asin(0.5)));
  CHECK(boundary_distance(ball_point(1, 0)) == doctest::Approx(0.0));
}

TEST_CASE("domain metrics: axioms and lifts") {
  std::mt19937_64 rng(1);
  for (int s = 0; s < 2000; ++s) {
    for (bool ball : {true, false}) {
      auto a = ball ? random_ball(rng) : random_simplex(rng);
      auto b = ball ? random_ball(rng) : random_simplex(rng);
      auto c = ball ? random_ball(rng) : random_simplex(rng);
      double ab = rho_omega(a, b), bc = rho_omega(b, c), ac = rho_omega(a, c);
      CHECK(ab >= 0);
      CHECK(std::abs(ab - rho_omega(b, a)) < 1e-15);
      CHECK(ac <= ab + bc + 1e-12);
      CHECK(std::abs(a.lifted().norm() - 1) < 1e-14);
      auto back = DomainPoint::from_sphere(a.domain, a.lifted());
      CHECK((back.coords - a.coords).norm() < 1e-14);
      CHECK(a.inside());
    }
  }
}

TEST_CASE("domain metric compares with the sphere distance of the lifts") {
  std::mt19937_64 rng(2);
  double lo = INFINITY, hi = 0;
  for (int s = 0; s < 10000; ++s) {
    for (bool ball : {true, false}) {
      auto a = ball ? random_ball(rng) : random_simplex(rng);
      auto b = ball ? random_ball(rng) : random_simplex(rng);
      double r = rho_omega(a, b) / geodesic_distance(a.lifted(), b.lifted());
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  CHECK(lo >= 0.25);
  CHECK(hi <= 4.0);
}

TEST_CASE("lifted weights") {
  auto wb = lift_weight(DomainWeight::lebesgue(Domain::Ball, 2));
  CHECK(wb.dim() == 3);
  CHECK(wb.exponents() == std::vector<double>{0, 0, 1});
  auto ws = lift_weight(DomainWeight::lebesgue(Domain::Simplex, 2));
  CHECK(ws.exponents() == std::vector<double>{1, 1, 1});
  auto wr = lift_weight(DomainWeight::ball(2, 0, 1));
  CHECK(wr.kind() == WeightSpec::Kind::BallLift);
  CHECK(wr.radial_power() == 1.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int s = 0; s < 10; ++s) {
    double t = u(rng), th = 2 * M_PI * std::uniform_real_distribution<double>(0, 1)(rng);
    Vec c = make_vec({std::cos(th), std::sin(th), 0});
    // Lebesgue on the disk: the normalized circular segment area
    double seg = (std::acos(t) - t * std::sqrt(1 - t * t)) / M_PI;
    CHECK(std::abs(region_integral(wb, {{c, t}}, 1e-12).value - seg) < 1e-9);
    // (1 - |y|) on the disk, normalized by its mass pi / 3
    double rad = disk_halfplane([](double r) { return 1 - r; }, t) / (M_PI / 3);
    CHECK(std::abs(region_integral(wr, {{c, t}}, 1e-12).value - rad) < 1e-9);
  }
  for (double t : {0.05, 0.3, 0.7}) {
    // {y1 >= t} on the triangle has normalized area (1 - t)^2
    double lifted = 2 * region_integral(ws, {{make_vec({1, 0, 0}), std::sqrt(t)}}, 1e-12).value;
    CHECK(std::abs(lifted - (1 - t) * (1 - t)) < 1e-9);
  }
}

TEST_CASE("change of variables to the sphere") {
  CHECK(std::abs(transfer_constant(Domain::Ball, 2) - M_PI / oracle::abs_moment({0, 0, 1})) < 1e-10);
  CHECK(std::abs(transfer_constant(Domain::Simplex, 2) - 0.5 / oracle::abs_moment({1, 1, 1})) < 1e-10);
  auto R = oracle::s2_product_rule(24);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    auto f = oracle::random_poly(rng, 2, 6);
    double ball = 0, simplex = 0, sb = 0, ss = 0;
    for (const auto& [c, e] : f.terms) {
      ball += c * oracle::ball_monomial(e);
      simplex += c * oracle::simplex_monomial(e);
    }
    for (size_t i = 0; i < R.x.size(); ++i) {
      const Vec& x = R.x[i];
      sb += R.w[i] * f(make_vec({x[0], x[1]})) * std::abs(x[2]);
      ss += R.w[i] * f(make_vec({x[0] * x[0], x[1] * x[1]})) * std::abs(x[0] * x[1] * x[2]);
    }
    CHECK(std::abs(ball - transfer_constant(Domain::Ball, 2) * sb) < 1e-8);
    CHECK(std::abs(simplex - transfer_constant(Domain::Simplex, 2) * ss) < 1e-8);
  }
}

TEST_CASE("domain quadrature against closed-form moments") {
  auto Qb = domain_quadrature(DomainWeight::lebesgue(Domain::Ball, 2), 6);
  auto Qs = domain_quadrature(DomainWeight::jacobi({1, 0, 2}), 6);
  CHECK(std::abs(domain_mass(DomainWeight::lebesgue(Domain::Ball, 2)) - M_PI) < 1e-12);
  CHECK(std::abs(domain_mass(DomainWeight::lebesgue(Domain::Simplex, 2)) - 0.5) < 1e-12);
  for (const auto& e : monomial_exponents(2, 6)) {
    double b = 0, s = 0;
    for (size_t i = 0; i < Qb.nodes.size(); ++i) b += Qb.weights[i] * oracle::monomial(Qb.nodes[i], e);
    for (size_t i = 0; i < Qs.nodes.size(); ++i) s += Qs.weights[i] * oracle::monomial(Qs.nodes[i], e);
    CHECK(std::abs(b - oracle::ball_monomial(e)) < 1e-13);
    CHECK(std::abs(s - oracle::simplex_monomial(e, {1, 0, 2})) < 1e-13);
  }
  CHECK(monomial_exponents(2, 3).size() == 10);
}

TEST_CASE("projected disk rule") {
  auto rule = tau_rule(3, 12);
  REQUIRE(rule.report.converged);
  auto D = project_rule(rule, Domain::Ball);
  CHECK(D.size() == 6);
  CHECK(D.degree == 3);
  CHECK(D.sphere_size == 12);
  auto V = verify_domain_rule(D);
  CHECK(V.pass);
  CHECK(V.interior);
  CHECK(V.min_boundary_distance >= 1e-6);
  CHECK(V.max_residual <= std::max(2 * rule.report.max_residual, 1e-12));
  for (const auto& p : D.nodes) CHECK(p.inside(1e-9));
  // the constant function
  double mass = D.size() * D.node_weight() * domain_mass(D.weight);
  CHECK(std::abs(mass - M_PI) < 1e-14);
  // closed-form moments
  for (const auto& e : monomial_exponents(2, 3)) {
    double s = 0;
    for (const auto& p : D.nodes) s += oracle::monomial(p.coords, e);
    CHECK(std::abs(s / D.size() * M_PI - oracle::ball_monomial(e)) < 1e-8);
  }
  auto back = DomainRule::from_json(nlohmann::json::parse(D.to_json().dump()));
  REQUIRE(back.size() == D.size());
  CHECK((back.nodes[0].coords - D.nodes[0].coords).norm() == 0.0);
  CHECK(back.domain == Domain::Ball);
}

TEST_CASE("projected simplex rule") {
  auto D = build_domain_rule(DomainWeight::lebesgue(Domain::Simplex, 2), 2);
  CHECK(D.sphere_degree == 4);
  CHECK(D.sphere_size == 8 * D.size());
  for (const auto& e : monomial_exponents(2, 2)) {
    double s = 0;
    for (const auto& p : D.nodes) s += oracle::monomial(p.coords, e);
    CHECK(std::abs(s / D.size() * 0.5 - oracle::simplex_monomial(e)) < 1e-8);
  }
  CHECK(verify_domain_rule(D).pass);
}

TEST_CASE("projection errors") {
  auto wb = lift_weight(DomainWeight::lebesgue(Domain::Ball, 2));
  CubatureRule r;
  r.degree = 1;
  r.weight = wb;
  r.nodes = {make_vec({0.6, 0, 0.8}), make_vec({-0.6, 0, 0.8})};
  CHECK_THROWS_AS(project_rule(r, Domain::Ball), SymmetryMissing);
  r.nodes = {make_vec({1, 0, 0}), make_vec({-1, 0, 0})};
  CHECK_THROWS_AS(project_rule(r, Domain::Ball), NodeOnMirror);
  r.nodes = {make_vec({0.6, 0, 0.8}), make_vec({0.6, 0, -0.8})};
  CHECK(project_rule(r, Domain::Ball).size() == 1);
  CHECK_THROWS_AS(project_rule(r, Domain::Simplex), SymmetryMissing);
  r.weight = WeightSpec::constant(3);
  CHECK_THROWS_AS(project_rule(r, Domain::Ball), DomainMismatch);
}
