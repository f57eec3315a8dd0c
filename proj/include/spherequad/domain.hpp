#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spherequad/cubature.hpp"

namespace sq {

enum class Domain { Ball, Simplex };
Domain parse_domain(const std::string& s);
std::string domain_name(Domain d);

// A point of B^d or T^d (d = coords.size(), 1..3).
struct DomainPoint {
  Domain domain = Domain::Ball;
  Vec coords;
  // Canonical preimage on S^d: (x, sqrt(1-|x|^2)) or (sqrt x_1, ..., sqrt(1-|x|)).
  Vec lifted() const;
  // Inverse of the lift on the upper hemisphere / positive orthant.
  static DomainPoint from_sphere(Domain dom, const Vec& x);
  bool inside(double eps = 0) const;
};

// Ball: |x-y| + |sqrt(x_{d+1}) - sqrt(y_{d+1})| with x_{d+1} = sqrt(1-|x|^2).
// Simplex: arccos(sum_j sqrt(x_j y_j)) over the d+1 barycentric coordinates.
double rho_omega(const DomainPoint& a, const DomainPoint& b);
// Lower bound on the rho distance to the boundary (exact on the simplex).
double boundary_distance(const DomainPoint& p);

// Ball: (1-|y|^2)^mu (1-|y|)^p.  Simplex: prod y_j^kappa_j * (1-|y|)^kappa_last.
struct DomainWeight {
  Domain domain = Domain::Ball;
  int dim = 2;
  double mu = 0, p = 0;
  std::vector<double> kappa;  // dim + 1 entries; empty means Lebesgue

  static DomainWeight lebesgue(Domain dom, int dim);
  static DomainWeight ball(int dim, double mu, double p = 0);
  static DomainWeight jacobi(std::vector<double> kappa);
  double eval(const Vec& y) const;
  nlohmann::json to_json() const;
  static DomainWeight from_json(const nlohmann::json& j);
};

// Weight on S^dim whose pushforward under the projection is w dy.
WeightSpec lift_weight(const DomainWeight& w);

// Tensor Gauss-Jacobi rule on the domain for w dy (polar coordinates on the
// ball, collapsed coordinates on the simplex). Weights sum to the total mass.
struct DomainQuadrature {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};
DomainQuadrature domain_quadrature(const DomainWeight& w, int degree);
double domain_mass(const DomainWeight& w);

// c with int_Omega f dy = c int_{S^d} f(phi(x)) Phi(x) dsigma, from f = 1.
double transfer_constant(Domain dom, int dim);

// Exponent tuples with |beta| <= n.
std::vector<std::vector<int>> monomial_exponents(int dim, int n);

struct DomainRule {
  Domain domain = Domain::Ball;
  int degree = 0;
  DomainWeight weight;
  std::vector<DomainPoint> nodes;
  int sphere_degree = 0, sphere_size = 0;
  SymmetryTag sphere_symmetry = SymmetryTag::None;
  SolveReport report;

  int size() const { return static_cast<int>(nodes.size()); }
  double node_weight() const { return 1.0 / nodes.size(); }
  nlohmann::json to_json() const;
  static DomainRule from_json(const nlohmann::json& j);
};

// One domain node per orbit. Needs a tau-invariant (ball) or fully
// reflection-invariant (simplex) rule with no node on the mirrors.
DomainRule project_rule(const CubatureRule& rule, Domain dom, double mirror_tol = 1e-6);

struct DomainVerifyReport {
  double max_residual = 0;           // normalized monomial moments
  double min_boundary_distance = 0;
  double min_separation = 0;         // in rho
  bool interior = false, exact = false, pass = false;
  nlohmann::json to_json() const;
};
DomainVerifyReport verify_domain_rule(const DomainRule& r, double tol = 1e-8);

// Lift, symmetric sphere solve (degree n on the ball, 2n on the simplex), project.
DomainRule build_domain_rule(const DomainWeight& w, int n, const RuleOptions& opt = {});

}  // namespace sq
