#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spherequad/config.hpp"
#include "spherequad/errors.hpp"

namespace sq {

// Ambient dimension is at most 4, so small vectors live on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

inline constexpr double kPi = 3.14159265358979323846;

Vec unit_basis(int d, int j);
Vec make_vec(std::initializer_list<double> v);

class UnitVector {
 public:
  UnitVector() = default;
  // Renormalizes; throws ZeroVector for (near) zero input.
  explicit UnitVector(const Vec& v);
  const Vec& coords() const { return v_; }
  int dim() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  operator const Vec&() const { return v_; }

 private:
  Vec v_;
};

// Geodesic distance; 2*atan2(|x-y|, |x+y|) equals arccos(x.y) but keeps
// full relative accuracy near 0 and pi.
double geodesic_distance(const Vec& x, const Vec& y);

class GeodesicArc {
 public:
  GeodesicArc(Vec start, Vec direction, double theta)
      : start_(std::move(start)), dir_(std::move(direction)), theta_(theta) {}
  Vec eval(double t) const;
  const Vec& start() const { return start_; }
  const Vec& direction() const { return dir_; }
  double angle() const { return theta_; }

 private:
  Vec start_, dir_;
  double theta_;
};

GeodesicArc arc(const Vec& x, const Vec& y, const Tolerances& tol = {});

UnitVector radial_project(const Vec& x, const Tolerances& tol = {});

// Tangential part of an ambient gradient at x (x need not be unit).
Vec tangential_gradient(const Vec& ambient_grad, const Vec& x);
Vec tangential_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x);

// Orthonormal basis of the tangent space at unit x, as columns (d x (d-1)).
Mat tangent_basis(const Vec& x);

// exp map: move from x along tangent vector v.
Vec exp_map(const Vec& x, const Vec& v);

class SurfaceSimplex {
 public:
  explicit SurfaceSimplex(std::vector<Vec> vertices, const Tolerances& tol = {});
  const std::vector<Vec>& vertices() const { return verts_; }
  int dim() const { return static_cast<int>(verts_.size()); }
  double a_min() const { return a_min_; }
  const Vec& normal() const { return normal_; }
  // Distance from the origin to H_T (= min over H_T of |x|).
  double offset() const { return offset_; }
  // Barycentric coordinates of a point on H_T.
  Vec barycentric(const Vec& y) const;
  bool contains(const Vec& y, double eps = 1e-10) const;
  Vec point(const Vec& bary) const;

 private:
  std::vector<Vec> verts_;
  Mat V_;  // vertices as columns
  Vec normal_;
  double offset_ = 0, a_min_ = 0;
};

// Minimum-norm point of the convex hull of up to 4 points.
Vec min_norm_point(const std::vector<Vec>& pts);

double surface_to_sphere_jacobian(const SurfaceSimplex& T, const Vec& y, const Tolerances& tol = {});

class GeodesicSimplex {
 public:
  GeodesicSimplex() = default;
  // Validates independence; if `admissible` is set the admissibility
  // conditions are checked as well. `eps` is a separation certificate that
  // is validated when positive.
  GeodesicSimplex(std::vector<Vec> spanning, bool admissible, double eps = 0.0, const Tolerances& tol = {});
  const std::vector<Vec>& spanning() const { return span_; }
  Mat matrix() const;
  bool admissible() const { return admissible_; }
  double certified_separation() const { return eps_; }
  // min_j dist(xi_j, span of the others), Euclidean.
  double separation() const;
  int dim() const { return static_cast<int>(span_.size()); }

  static bool check_admissible(const std::vector<Vec>& s, double tol = 1e-10);
  static double separation_of(const std::vector<Vec>& s);

 private:
  std::vector<Vec> span_;
  bool admissible_ = false;
  double eps_ = 0.0;
};

struct HalfSpace {
  Vec c;        // unit normal
  double tau;   // region is c.x >= tau
};

// One recorded step of how a cell was produced.
struct Transform {
  enum class Kind { Linear, Radial, Rotation, Dilation, ConeExtension };
  Kind kind;
  Eigen::MatrixXd matrix;   // Linear, Rotation
  double alpha = 0;         // Dilation
  int axis = 0;             // ConeExtension: pole axis index
  int poles = 1;            // ConeExtension: +1, -1, or 2 for both (suspension)
};
std::string transform_kind_name(Transform::Kind k);

struct Ball {
  Vec center;
  double radius = 0;
};

// A geodesically convex region of the sphere. `base` holds the planar polytope
// vertices in reference coordinates; `chain` documents the maps applied to it.
// The realized region is the spherical polyhedral cone spanned by `rays`,
// equivalently the intersection of `facets`.
class ConvexCell {
 public:
  ConvexCell() = default;
  ConvexCell(std::vector<Vec> base, std::vector<Transform> chain, std::vector<Vec> rays);
  static ConvexCell from_rays(std::vector<Vec> rays);
  // A region given directly by half-spaces through the origin plus rays.
  static ConvexCell from_rays_and_facets(std::vector<Vec> rays, std::vector<HalfSpace> facets);

  int dim() const { return rays_.empty() ? 0 : static_cast<int>(rays_[0].size()); }
  const std::vector<Vec>& base() const { return base_; }
  const std::vector<Transform>& chain() const { return chain_; }
  const std::vector<Vec>& rays() const { return rays_; }
  const std::vector<HalfSpace>& facets() const { return facets_; }
  bool contains(const Vec& x, double eps = 1e-12) const;
  // Smallest signed facet distance (radians); positive inside.
  double depth(const Vec& x) const;

  double measure = 0.0;
  int k = 0;
  Ball inball, circumball;
  nlohmann::json meta = nlohmann::json::object();

  // Fills inball/circumball from the facet description.
  void compute_balls();
  std::vector<Transform>& mutable_chain() { return chain_; }

 private:
  std::vector<Vec> base_;
  std::vector<Transform> chain_;
  std::vector<Vec> rays_;
  std::vector<HalfSpace> facets_;
};

// Facets (through the origin) of the cone generated by rays. Works for cones
// containing lines. Normals are unit and oriented inward.
std::vector<HalfSpace> cone_facets(const std::vector<Vec>& rays, double eps = 1e-12);

// Largest ball inside the cone intersection of `facets`, as (center, radius).
Ball cone_inball(const std::vector<HalfSpace>& facets, int d);

UnitVector supporting_point(const ConvexCell& R, const Vec& y, const Tolerances& tol = {});

struct IdentityCheck {
  double lhs, rhs;
};

IdentityCheck arc_displacement_identity(const Vec& z, const Vec& xi1, const Vec& xi2, double theta1,
                                        double theta2, double t, const Tolerances& tol = {});

// Polar-decomposition distance identity about a pole z: points
// x_i = z cos(th_i) + eta_i sin(th_i) with eta_i orthogonal to z.
struct PolarDistanceCheck {
  double lhs, rhs;      // sin^2(dist/2) both ways
  double dist;          // dist(x1, x2)
  double lower, upper;  // |th1-th2| and the upper bound
};
PolarDistanceCheck polar_distance_identity(const Vec& z, const Vec& eta1, const Vec& eta2, double theta1,
                                           double theta2, const Tolerances& tol = {});

// For x, y on H_T. `lower`/`upper` are a/(2(a+1))|x-y| and pi/(2a)|x-y| with
// a = dist(0, H_T); `sharp_*` are h/R^2 |x-y| and |x-y|/h, R = max(|x|,|y|).
struct BiLipschitzCheck {
  double lower, value, upper;
  double sharp_lower, sharp_upper;
};
BiLipschitzCheck radial_bilipschitz(const SurfaceSimplex& T, const Vec& x, const Vec& y);

}  // namespace sq
