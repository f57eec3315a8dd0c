#pragma once

#include <vector>

#include "json.hpp"
#include "spherequad/geom.hpp"
#include "spherequad/weight.hpp"

namespace sq {

enum class SymmetryTag { None, Tau, Z2 };
SymmetryTag parse_symmetry_tag(const std::string& s);
std::string symmetry_tag_name(SymmetryTag s);

// dim of polynomials of degree <= n restricted to S^{d-1}.
int polynomial_space_dim(int d, int n);

// Solid harmonics of degree <= n on R^d (d = 2, 3, 4), built by the Gegenbauer
// recursion over the last coordinate. Ordered by degree; every entry has a
// definite parity in each coordinate. Unnormalized.
Eigen::VectorXd raw_harmonics(int d, int n, const Vec& x);
// Values and ambient gradients (rows).
void raw_harmonics_grad(int d, int n, const Vec& x, Eigen::VectorXd& val, Eigen::MatrixXd& grad);

// Basis of Pi_n (or its invariant subspace) orthonormal in L^2(w dsigma),
// with phi_0 = 1.
class WeightedBasis {
 public:
  static WeightedBasis build(const WeightSpec& w, int n, SymmetryTag sym = SymmetryTag::None, int order = 0);

  int degree() const { return n_; }
  int dim() const { return d_; }
  int size() const { return static_cast<int>(raw_index_.size()); }
  const WeightSpec& weight() const { return w_; }
  SymmetryTag symmetry() const { return sym_; }
  double gram_residual() const { return gram_residual_; }
  double gram_condition() const { return gram_condition_; }
  int rule_order() const { return order_; }

  Eigen::VectorXd eval(const Vec& x) const;
  // Values and tangential gradients (size() x d).
  void eval_grad(const Vec& x, Eigen::VectorXd& val, Eigen::MatrixXd& tgrad) const;
  // Values at many points, one row per point.
  Eigen::MatrixXd eval_many(const std::vector<Vec>& xs) const;

  // max |<phi_i, phi_j>_w - delta_ij| with a fresh rule of the given order.
  double recheck_gram(int order) const;

  // Dense coefficient matrix on the normalized raw harmonics.
  Eigen::MatrixXd coefficients() const;
  nlohmann::json to_json() const;

 private:
  WeightedBasis(const WeightSpec& w) : w_(w) {}
  WeightSpec w_;
  int n_ = 0, d_ = 0, order_ = 0;
  SymmetryTag sym_ = SymmetryTag::None;
  std::vector<int> raw_index_;   // selected raw harmonics
  Eigen::VectorXd raw_scale_;    // uniform-measure normalization
  // phi = C (scale .* psi_selected), C block diagonal over parity classes
  std::vector<std::vector<int>> groups_;
  std::vector<Eigen::MatrixXd> blocks_;
  double gram_residual_ = 0, gram_condition_ = 1;
};

// G(x, y) = sum_{k >= 1} phi_k(x) phi_k(y).
class KernelEval {
 public:
  explicit KernelEval(const WeightedBasis& B) : B_(B) {}
  double operator()(const Vec& x, const Vec& y) const;
  const WeightedBasis& basis() const { return B_; }

 private:
  const WeightedBasis& B_;
};

// lambda_n(w, x) = 1 / sum_k phi_k(x)^2 (full basis only).
double christoffel(const WeightedBasis& B, const Vec& x);

// P(z) = (1/N) sum_j G(z_j, z); its coefficients are the moment residuals.
class ResidualPolynomial {
 public:
  ResidualPolynomial(const WeightedBasis& B, const std::vector<Vec>& nodes);
  const Eigen::VectorXd& coefficients() const { return c_; }
  double operator()(const Vec& z) const;
  Vec gradient(const Vec& z) const;
  double squared_norm() const { return c_.squaredNorm(); }
  double max_coefficient() const { return c_.cwiseAbs().maxCoeff(); }

 private:
  const WeightedBasis& B_;
  Eigen::VectorXd c_;
};

}  // namespace sq
