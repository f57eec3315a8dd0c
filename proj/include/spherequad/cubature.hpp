#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spherequad/harmonics.hpp"
#include "spherequad/partition.hpp"

namespace sq {

struct CubatureSeed {
  Partition partition;
  int degree = 0;
  double delta = 0.25;
  // For symmetric partitions these are orbit representatives inside the
  // fundamental domain.
  std::vector<Vec> nodes;
  std::vector<int> cell;      // cell index of each node
  std::vector<double> r;      // per-cell separation radius actually used
  double shrink = 1.0;        // smallest factor applied to a nominal r_j
  SymmetryTag symmetry = SymmetryTag::None;
  int full_size() const;
};

// Greedy maximin placement of k_j nodes per cell, 2 r_j apart with
// B(x, r_j) inside the cell, first node at the inball center.
CubatureSeed seed_nodes(const Partition& P, int n, double delta = 0.25, unsigned salt = 0);

// Component k = (1/N) sum_j phi_k(z_j); component 0 is set to 0.
Eigen::VectorXd moment_residual(const WeightedBasis& B, const std::vector<Vec>& nodes);

// Geodesic minimum distance over all pairs (grid hashing, O(N)).
double min_pairwise_distance(const std::vector<Vec>& nodes);

std::vector<Vec> symmetry_orbit(const std::vector<Vec>& reps, SymmetryTag g);

struct SolveOptions {
  double target = 1e-9;
  int max_iter = 80;
  enum class Mode { GaussNewton, Gradient, Paper } mode = Mode::GaussNewton;
  double separation_floor = 0.05;  // times N^{-1/(d-1)}
  double epsilon = 0;              // paper mode; 0 picks 0.1 * initial max |grad P|
  double delta = 0.25;             // paper mode step fraction (1 - delta)
};

struct SolveReport {
  int iterations = 0;
  double residual_norm = 0;
  double max_residual = 0;
  double min_distance = 0;
  double separation_ratio = 0;  // min_distance * N^{1/(d-1)}
  bool converged = false;
  std::string mode;
  std::vector<std::string> warnings;
  std::vector<double> history;  // F per accepted iteration
  nlohmann::json to_json() const;
};

struct CubatureRule {
  int degree = 0;
  std::vector<Vec> nodes;
  WeightSpec weight = WeightSpec::constant(3);
  SymmetryTag symmetry = SymmetryTag::None;
  SolveReport report;

  int size() const { return static_cast<int>(nodes.size()); }
  double node_weight() const { return 1.0 / nodes.size(); }
  nlohmann::json to_json() const;
  static CubatureRule from_json(const nlohmann::json& j);
  std::string to_csv() const;
  static std::vector<Vec> nodes_from_csv(const std::string& csv);
};

CubatureRule solve(const CubatureSeed& seed, const WeightedBasis& B, const SolveOptions& opt = {});

// Optimizes orbit representatives against an invariant basis, then expands.
CubatureRule symmetric_solve(const CubatureSeed& seed, const WeightedBasis& B, SymmetryTag g,
                             const SolveOptions& opt = {});

struct VerifyReport {
  double max_residual = 0;
  double min_distance = 0;
  double separation_ratio = 0;
  int rule_order = 0;
  bool distinct = false, exact = false, pass = false;
  nlohmann::json to_json() const;
};
// Residuals on a freshly built basis at doubled quadrature order.
VerifyReport verify_rule(const CubatureRule& rule, double tol = 1e-9);
VerifyReport verify_nodes(const WeightSpec& w, int n, const std::vector<Vec>& nodes, double tol = 1e-9);

struct RuleOptions {
  double K = 4.0;  // N = ceil(K * max_inverse_cap(w, n)) unless N > 0
  int N = 0;
  SymmetryTag symmetry = SymmetryTag::None;
  double delta = 0.25;
  int restarts = 3;
  SolveOptions solve;
  PartitionOptions partition;
};
// partition -> seed -> solve, restarting with a fresh seed on separation collapse.
CubatureRule build_rule(const WeightSpec& w, int n, const RuleOptions& opt = {});

}  // namespace sq
