#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spherequad/geom.hpp"
#include "spherequad/quadrature.hpp"

namespace sq {

// A normalized weight on S^{d-1}. Every supported family has the form
//   w(x) = prod_j |x_j|^{a_j} * G(x_d) / Z,   G(t) = (1 + sqrt(1 - t^2))^{-p},
// where p comes from a radial factor (1-|y|)^p of a lifted ball weight.
class WeightSpec {
 public:
  enum class Kind { Constant, ProductPower, BallLift, SimplexLift };

  static WeightSpec constant(int d);
  static WeightSpec product_power(std::vector<double> alpha);
  // Weight (1-|y|^2)^mu (1-|y|)^p on the ball B^{d-1}, lifted to S^{d-1}.
  static WeightSpec ball_lift(int sphere_dim, double mu = 0.0, double p = 0.0);
  // Jacobi weight prod y_j^{kappa_j} (1-|y|)^{kappa_last} on T^{d-1}, lifted.
  static WeightSpec simplex_lift(std::vector<double> kappa);

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  // Exponents of the singular product after folding in the radial factor.
  const std::vector<double>& exponents() const { return a_; }
  double radial_power() const { return p_; }
  double mu() const { return mu_; }
  const std::vector<double>& kappa() const { return kappa_; }
  // Sphere-side exponents as users specify them (alpha of a product weight).
  std::vector<double> alpha() const;
  double Z() const { return Z_; }
  bool has_singularity() const;
  bool bounded() const { return !has_singularity(); }
  // Invariant under x_j -> -x_j. All supported families are.
  bool reflection_invariant(int /*j*/) const { return true; }

  double smooth_factor(double xd) const;
  double eval_unnormalized(const Vec& x) const;
  double eval(const Vec& x) const;

  nlohmann::json to_json() const;
  static WeightSpec from_json(const nlohmann::json& j);
  // CLI mini-language: constant | product:a1,a2,... | ball-lift:KIND | simplex-lift:KIND
  static WeightSpec parse(const std::string& s, int d);
  std::string describe() const;

  // Doubling metadata, filled by estimate_doubling on request.
  std::optional<double> L_w, s_w;

 private:
  WeightSpec() = default;
  void finalize();

  Kind kind_ = Kind::Constant;
  int d_ = 3;
  std::vector<double> a_;
  double p_ = 0.0, mu_ = 0.0;
  std::vector<double> kappa_;
  double Z_ = 1.0;
};

// Full-sphere rule for w dsigma *including* 1/Z, exact for polynomial degree
// well above 2n when order is ~ n + 20.
SphereRule weighted_sphere_rule(const WeightSpec& w, int order);
int default_rule_order(const WeightSpec& w, int degree);

// Integral of w * f over {x in S^{d-1} : c_i.x >= tau_i for all i}.
// `tol` is absolute on the normalized measure. f == nullptr means f = 1.
MeasureResult region_integral(const WeightSpec& w, const std::vector<HalfSpace>& hs, double tol,
                              const std::function<double(const Vec&)>* f = nullptr);

MeasureResult cap_measure(const WeightSpec& w, const Vec& center, double r, double tol = 1e-9);
MeasureResult cell_measure(const WeightSpec& w, const ConvexCell& R, double tol = 1e-9);
MeasureResult cone_measure(const WeightSpec& w, const std::vector<Vec>& rays, double tol = 1e-9);

struct DoublingEstimate {
  double L, s;
};
DoublingEstimate estimate_doubling(const WeightSpec& w, int samples);

// Candidate centers where small caps are lightest: coordinate-subset points
// plus quasi-uniform points.
std::vector<Vec> special_points(int d);
std::vector<Vec> quasi_uniform_points(int d, int n);

struct CapExtreme {
  Vec x;
  double cap;  // w(B(x, r)) at the minimizer
};
// Minimizes w(B(x, r)) over x by multi-start local search.
CapExtreme min_cap(const WeightSpec& w, double r, int starts = 200);
// max_x 1 / w(B(x, 1/n))
double max_inverse_cap(const WeightSpec& w, int n, double tol = 1e-6);

// Growth exponent d-1 + sum_{a>=0} a - max(a_min, 0) of the minimal rule size
// for product weights.
double product_weight_exponent(const std::vector<double>& alpha);

}  // namespace sq
