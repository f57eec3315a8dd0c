#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spherequad/geom.hpp"
#include "spherequad/weight.hpp"

namespace sq {

// ---------------------------------------------------------------- dilation

// h_alpha(t) = (2/pi) atan(tan(alpha)/|t|), with h_alpha(0) = 1.
double h_alpha(double alpha, double t);
double h_alpha_derivative(double alpha, double t);

// Angle-rescaling map about e_1. Writing x = (cos phi, xi sin phi) with xi on
// S^{d-2}, T_alpha x = (cos(h phi), xi sin(h phi)) with h = h_alpha(xi_1).
// It maps the quarter wedge S(0, pi/2) onto S(0, alpha).
class Dilation {
 public:
  explicit Dilation(double alpha);
  double alpha() const { return alpha_; }
  Vec apply(const Vec& x) const;
  Vec inverse(const Vec& y) const;
  // Density omega with  int_{S(0,alpha)} f = int_{S(0,pi/2)} f(T x) omega(x).
  double jacobian(const Vec& x) const;
  // The linear map E_alpha y = (y_2 cos alpha, y_2 sin alpha, y_3 sin alpha, ...).
  Vec linear_part(const Vec& y) const;

 private:
  double alpha_;
};

// ---------------------------------------------------------------- wedges

// S(alpha, beta): points whose (x_1, x_2) angle lies in [alpha, beta].
struct Wedge {
  double alpha, beta;
  double width() const { return beta - alpha; }
};
bool in_wedge(const Vec& x, const Wedge& W, double eps = 1e-12);
// Half-spaces through the origin that cut out a wedge of width < pi.
std::vector<HalfSpace> wedge_halfspaces(int d, const Wedge& W);

// A point x0 with w(B(x0, pi/2)) = 1/2, by bisection along a great circle.
Vec balancing_pole(const WeightSpec& w, double tol = 1e-9);

// Consecutive wedges of width in [pi/6, pi/2] covering the sphere, each with
// N w(wedge) an integer. Throws HypothesisViolated when some window of width
// pi/6 carries less than one unit of mass.
std::vector<Wedge> wedge_split(const WeightSpec& w, int N, double tol = 1e-9);

// ---------------------------------------------------------------- simplexes

// One piece of a simplex partition of the sphere. `rays` spans the piece; a
// piece that could not be split (a lune of mass 1/N) is kept whole and has
// `simplex` false.
struct SimplexPiece {
  std::vector<Vec> rays;
  bool simplex = true;
  int k = 0;
  double measure = 0;
  double separation = 0;
  std::vector<Transform> chain;
  nlohmann::json provenance = nlohmann::json::object();
};

// Admissible geodesic simplexes with integer masses; needs N / 2^{d-2} integral.
std::vector<SimplexPiece> admissible_simplex_partition(const WeightSpec& w, int N, double tol = 1e-9);

// Geodesic simplexes from a strongly separated class, any N.
std::vector<SimplexPiece> strongly_separated_partition(const WeightSpec& w, int N, double tol = 1e-9);

// The 2^d coordinate orthants (for reflection-invariant weights).
std::vector<SimplexPiece> orthant_partition(const WeightSpec& w, int N, double tol = 1e-9);

// ---------------------------------------------------------------- refinement

struct PartitionOptions {
  enum class Case { Auto, One, Two };
  enum class Simplexes { Auto, Orthant, Admissible, Separated };
  enum class Symmetry { None, Tau, Z2 };
  Case use_case = Case::Auto;
  Simplexes simplexes = Simplexes::Auto;
  Symmetry symmetry = Symmetry::None;
  bool equal_mass = false;
  double kappa = 1.0;            // cell size in units of r
  double tol = 1e-9;             // integrality: |N w(R) - k| <= N tol
  double measure_tol = 1e-12;    // absolute tolerance of every measure
  double final_drift = 1e-6;     // raised to 100 N measure_tol for large N
  double hypothesis_radius = 0;  // 0: 10^{-d}
};

// Cells of the surface simplex conv(S) with integer masses, sized ~ kappa r,
// realized on the sphere by radial projection.
std::vector<ConvexCell> refine_surface_simplex(const WeightSpec& w, const std::vector<Vec>& spanning, int N, int k_total,
                                               double r, const PartitionOptions& opt = {});

struct PartitionDiagnostics {
  double max_circumradius = 0, min_inradius = 0;
  double max_shape_ratio = 0;
  double integrality_residual = 0;  // max_j |N measure_j - k_j|
  double total_measure = 0;
  int simplex_count = 0;
  std::string case_used;
  std::string simplexes_used;
};

struct Partition {
  std::vector<ConvexCell> cells;
  int N = 0;
  double r = 0;
  WeightSpec weight = WeightSpec::constant(3);
  PartitionOptions::Symmetry symmetry = PartitionOptions::Symmetry::None;
  PartitionDiagnostics diag;

  int dim() const { return weight.dim(); }
  // For symmetric partitions `cells` covers one fundamental domain; this
  // returns the full orbit.
  std::vector<ConvexCell> expanded_cells() const;
  // Index of a cell containing x (in expanded numbering), or -1.
  int locate(const Vec& x, double eps = 1e-12) const;
  nlohmann::json to_json() const;
  std::string to_obj(int resolution = 6) const;
};

// Smallest r (to relative accuracy rel) with min_x w(B(x, r)) >= 1/N.
double hypothesis_radius(const WeightSpec& w, int N, double rel = 1e-3);

// Full pipeline. r <= 0 picks the radius from the hypothesis.
Partition regular_convex_partition(const WeightSpec& w, int N, double r = 0, const PartitionOptions& opt = {});

// Case 1: N cells of mass exactly 1/N, by recursion on the dimension.
std::vector<ConvexCell> equal_mass_lunes(const WeightSpec& w, int N, const PartitionOptions& opt = {});

// Recomputes measures and fills inball/circumball, shape and integrality stats.
PartitionDiagnostics diagnose(const Partition& P, bool remeasure = true);

// Coordinate reflections for a symmetry tag: matrices of the group orbit.
std::vector<Eigen::VectorXd> symmetry_signs(int d, PartitionOptions::Symmetry s);

}  // namespace sq
