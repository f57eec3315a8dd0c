#include "spherequad/cubature.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sq {

using nlohmann::json;

namespace {

#ifdef _OPENMP
int thread_count() { return omp_get_max_threads(); }
int thread_id() { return omp_get_thread_num(); }
#else
int thread_count() { return 1; }
int thread_id() { return 0; }
#endif

int group_order(int d, SymmetryTag g) {
  if (g == SymmetryTag::None) return 1;
  return g == SymmetryTag::Tau ? 2 : 1 << d;
}

SymmetryTag tag_of(PartitionOptions::Symmetry s) {
  switch (s) {
    case PartitionOptions::Symmetry::None: return SymmetryTag::None;
    case PartitionOptions::Symmetry::Tau: return SymmetryTag::Tau;
    case PartitionOptions::Symmetry::Z2: return SymmetryTag::Z2;
  }
  return SymmetryTag::None;
}

PartitionOptions::Symmetry partition_symmetry(SymmetryTag s) {
  switch (s) {
    case SymmetryTag::None: return PartitionOptions::Symmetry::None;
    case SymmetryTag::Tau: return PartitionOptions::Symmetry::Tau;
    case SymmetryTag::Z2: return PartitionOptions::Symmetry::Z2;
  }
  return PartitionOptions::Symmetry::None;
}

double radical_inverse(unsigned long i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

// Buckets points by the integer lattice of spacing h.
class PointGrid {
 public:
  PointGrid(int d, double h) : d_(d), h_(h) {}
  void insert(const Vec& x, int id) { cells_[key(x, nullptr)].push_back(id); }
  // Calls f(id) for every stored point in the 3^d neighbouring cells.
  template <class F>
  void neighbours(const Vec& x, F&& f) const {
    int c[4];
    key(x, c);
    int total = 1;
    for (int i = 0; i < d_; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      int q[4];
      int t = code;
      for (int i = 0; i < d_; ++i) {
        q[i] = c[i] + (t % 3) - 1;
        t /= 3;
      }
      auto it = cells_.find(pack(q));
      if (it == cells_.end()) continue;
      for (int id : it->second) f(id);
    }
  }

 private:
  long long pack(const int* q) const {
    long long k = 0;
    for (int i = 0; i < d_; ++i) k = k * 1000003LL + (q[i] + 500000);
    return k;
  }
  long long key(const Vec& x, int* out) const {
    int q[4];
    for (int i = 0; i < d_; ++i) q[i] = static_cast<int>(std::floor(x[i] / h_));
    if (out)
      for (int i = 0; i < d_; ++i) out[i] = q[i];
    return pack(q);
  }
  int d_;
  double h_;
  std::unordered_map<long long, std::vector<int>> cells_;
};

// Candidate point number i in the cap B(c, R), from a low-discrepancy sequence.
Vec cap_candidate(const Vec& c, double R, unsigned long i) {
  const int d = static_cast<int>(c.size());
  double u = radical_inverse(i, 2), v = radical_inverse(i, 3);
  if (d == 2) {
    Vec t = make_vec({-c[1], c[0]});
    double th = (2 * u - 1) * R;
    return std::cos(th) * c + std::sin(th) * t;
  }
  Mat T = tangent_basis(c);
  Vec dir(d - 1);
  if (d == 3) {
    dir << std::cos(2 * kPi * v), std::sin(2 * kPi * v);
  } else {
    double z = 2 * radical_inverse(i, 5) - 1, s = std::sqrt(std::max(0.0, 1 - z * z));
    dir << s * std::cos(2 * kPi * v), s * std::sin(2 * kPi * v), z;
  }
  double th = std::acos(1 - u * (1 - std::cos(R)));
  Vec x = std::cos(th) * c + std::sin(th) * (T * dir);
  return x.normalized();
}

}  // namespace

int CubatureSeed::full_size() const {
  return static_cast<int>(nodes.size()) * group_order(partition.dim(), symmetry);
}

CubatureSeed seed_nodes(const Partition& P, int n, double delta, unsigned salt) {
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)", {{"delta", delta}});
  if (n < 1) throw InvalidArgument("degree must be positive");
  const int d = P.dim();
  CubatureSeed S;
  S.partition = P;
  S.degree = n;
  S.delta = delta;
  S.symmetry = tag_of(P.symmetry);
  unsigned long stream = 1 + 7919UL * salt;
  for (size_t j = 0; j < P.cells.size(); ++j) {
    const ConvexCell& c = P.cells[j];
    const int k = c.k;
    double rj = (delta * delta / n) * std::pow(static_cast<double>(k), -1.0 / (d - 1));
    double nominal = rj;
    const Vec& ctr = c.inball.center;
    if (c.inball.radius < rj) rj = 0.999 * c.inball.radius;
    std::vector<Vec> pts;
    for (int attempt = 0; attempt < 40; ++attempt) {
      pts = {ctr};
      if (k > 1) {
        PointGrid grid(d, 2 * rj);
        grid.insert(ctr, 0);
        unsigned long budget = 64UL * k + 2000;
        for (unsigned long i = 0; i < budget && static_cast<int>(pts.size()) < k; ++i) {
          Vec x = cap_candidate(ctr, c.circumball.radius, stream + i);
          if (c.depth(x) < rj) continue;
          bool ok = true;
          grid.neighbours(x, [&](int id) {
            if (ok && geodesic_distance(x, pts[id]) < 2 * rj) ok = false;
          });
          if (!ok) continue;
          grid.insert(x, static_cast<int>(pts.size()));
          pts.push_back(x);
        }
        stream += budget;
      }
      if (static_cast<int>(pts.size()) == k) break;
      rj *= 0.7;
    }
    if (static_cast<int>(pts.size()) != k)
      throw PackingFailure("could not place the required separated nodes in a cell",
                           {{"cell", j}, {"k", k}, {"placed", pts.size()}, {"r", rj}});
    S.shrink = std::min(S.shrink, rj / nominal);
    S.r.push_back(rj);
    for (auto& x : pts) {
      S.nodes.push_back(x);
      S.cell.push_back(static_cast<int>(j));
    }
  }
  return S;
}

Eigen::VectorXd moment_residual(const WeightedBasis& B, const std::vector<Vec>& nodes) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(B.size());
  if (nodes.empty()) return r;
  // per-thread partials summed in thread order keep results reproducible
  std::vector<Eigen::VectorXd> part(thread_count(), Eigen::VectorXd::Zero(B.size()));
#pragma omp parallel
  {
    Eigen::VectorXd& loc = part[thread_id()];
#pragma omp for schedule(static)
    for (long i = 0; i < static_cast<long>(nodes.size()); ++i) loc += B.eval(nodes[i]);
  }
  for (const auto& p : part) r += p;
  r /= static_cast<double>(nodes.size());
  r[0] = 0;
  return r;
}

double min_pairwise_distance(const std::vector<Vec>& nodes) {
  const size_t N = nodes.size();
  if (N < 2) return kPi;
  const int d = static_cast<int>(nodes[0].size());
  double h = 2.0 / std::pow(static_cast<double>(N), 1.0 / std::max(1, d - 1));
  while (true) {
    PointGrid grid(d, h);
    double best = INFINITY;
    for (size_t i = 0; i < N; ++i) {
      grid.neighbours(nodes[i], [&](int id) { best = std::min(best, (nodes[i] - nodes[id]).norm()); });
      grid.insert(nodes[i], static_cast<int>(i));
    }
    // pairs closer than h always share a neighbourhood
    if (best <= h || h > 2.5) return 2 * std::asin(std::min(1.0, best / 2));
    h *= 2;
  }
}

std::vector<Vec> symmetry_orbit(const std::vector<Vec>& reps, SymmetryTag g) {
  if (reps.empty() || g == SymmetryTag::None) return reps;
  const int d = static_cast<int>(reps[0].size());
  std::vector<Vec> out;
  for (const auto& s : symmetry_signs(d, partition_symmetry(g)))
    for (const auto& x : reps) out.push_back(Vec(s.cwiseProduct(Eigen::VectorXd(x))));
  return out;
}

// ---------------------------------------------------------------- optimizer

namespace {

struct Problem {
  const WeightedBasis& B;
  SymmetryTag fold = SymmetryTag::None;  // keep representatives in the domain
  const CubatureSeed* seed = nullptr;    // cells, for the paper update

  int M() const { return B.size() - 1; }

  Eigen::VectorXd residual(const std::vector<Vec>& Z) const {
    return moment_residual(B, Z).tail(M());
  }

  // r and A = J J^T, J_{k,(j,i)} = (1/N) d phi_k(z_j) / d z_{j,i}.
  void normal_equations(const std::vector<Vec>& Z, Eigen::VectorXd& r, Eigen::MatrixXd& A) const {
    const int m = M(), d = B.dim();
    const long N = static_cast<long>(Z.size());
    r = Eigen::VectorXd::Zero(m);
    A = Eigen::MatrixXd::Zero(m, m);
    const long chunk = 512;
    const int nt = thread_count();
    std::vector<Eigen::VectorXd> rp(nt, Eigen::VectorXd::Zero(m));
    std::vector<Eigen::MatrixXd> Ap(nt, Eigen::MatrixXd::Zero(m, m));
#pragma omp parallel
    {
      Eigen::VectorXd& rl = rp[thread_id()];
      Eigen::MatrixXd& Al = Ap[thread_id()];
      Eigen::MatrixXd J(m, chunk * d);
      Eigen::VectorXd v;
      Eigen::MatrixXd g;
#pragma omp for schedule(static)
      for (long c0 = 0; c0 < N; c0 += chunk) {
        long c1 = std::min(N, c0 + chunk);
        J.setZero();
        for (long j = c0; j < c1; ++j) {
          B.eval_grad(Z[j], v, g);
          rl += v.tail(m);
          J.middleCols((j - c0) * d, d) = g.bottomRows(m);
        }
        Al.selfadjointView<Eigen::Lower>().rankUpdate(J);
      }
    }
    for (int t = 0; t < nt; ++t) {
      r += rp[t];
      A += Ap[t];
    }
    r /= static_cast<double>(N);
    A = A.selfadjointView<Eigen::Lower>();
    A /= static_cast<double>(N) * N;
  }

  // Tangent vectors (1/N) grad_0 P_c(z_j), with P_c = sum_k c_k phi_k.
  std::vector<Vec> pullback(const std::vector<Vec>& Z, const Eigen::VectorXd& c) const {
    const int m = M();
    std::vector<Vec> out(Z.size());
#pragma omp parallel
    {
      Eigen::VectorXd v;
      Eigen::MatrixXd g;
#pragma omp for schedule(static)
      for (long j = 0; j < static_cast<long>(Z.size()); ++j) {
        B.eval_grad(Z[j], v, g);
        out[j] = Vec(g.bottomRows(m).transpose() * c) / static_cast<double>(Z.size());
      }
    }
    return out;
  }

  void apply_fold(Vec& x) const {
    if (fold == SymmetryTag::None) return;
    const int d = static_cast<int>(x.size());
    for (int i = 0; i < d; ++i) {
      if (fold == SymmetryTag::Tau && i != d - 1) continue;
      x[i] = std::abs(x[i]);
      if (x[i] < 1e-6) throw NodeOnMirror("a representative reached a reflection hyperplane", {{"coordinate", i}});
    }
  }

  std::vector<Vec> move(const std::vector<Vec>& Z, const std::vector<Vec>& step, double lam) const {
    std::vector<Vec> out(Z.size());
    for (size_t j = 0; j < Z.size(); ++j) {
      out[j] = exp_map(Z[j], lam * step[j]);
      apply_fold(out[j]);
    }
    return out;
  }

  // Moves each node toward the supporting point of -grad P on its cell.
  std::vector<Vec> paper_move(const std::vector<Vec>& Z, const std::vector<Vec>& g, double eps, double delta,
                              double lam) const {
    std::vector<Vec> out(Z.size());
    for (size_t j = 0; j < Z.size(); ++j) {
      double gn = g[j].norm();
      if (gn == 0) {
        out[j] = Z[j];
        continue;
      }
      const ConvexCell& R = seed->partition.cells[seed->cell[j]];
      Vec z = supporting_point(R, -g[j]);
      double t = (1 - delta) * std::min(1.0, gn / eps) * lam;
      if (geodesic_distance(Z[j], z) < 1e-15) {
        out[j] = Z[j];
      } else {
        out[j] = arc(Z[j], z).eval(t);
      }
      apply_fold(out[j]);
    }
    return out;
  }
};

double separation_ratio(double dist, long N, int d) { return dist * std::pow(static_cast<double>(N), 1.0 / (d - 1)); }

// Drives the invariant residual of Z to zero; returns the report.
SolveReport optimize(std::vector<Vec>& Z, const Problem& P, const SolveOptions& opt, long full_N) {
  const int d = P.B.dim();
  SolveReport rep;
  rep.mode = opt.mode == SolveOptions::Mode::GaussNewton ? "gauss_newton"
             : opt.mode == SolveOptions::Mode::Gradient  ? "gradient"
                                                         : "paper";
  const bool bounded = P.B.weight().bounded();
  const double floor = opt.separation_floor * std::pow(static_cast<double>(full_N), -1.0 / (d - 1));
  auto orbit_of = [&](const std::vector<Vec>& X) { return symmetry_orbit(X, P.fold); };
  auto check_separation = [&](const std::vector<Vec>& X) {
    double md = min_pairwise_distance(orbit_of(X));
    if (md < floor) {
      if (bounded)
        throw SeparationCollapse("nodes came closer than the separation floor", {{"min_distance", md}, {"floor", floor}});
      rep.warnings.push_back("separation below the advisory floor for an unbounded weight");
    }
    return md;
  };

  Eigen::VectorXd r = P.residual(Z);
  double F = r.squaredNorm();
  double mu = 0, eps = opt.epsilon;
  int it = 0;
  check_separation(Z);
  for (; it < opt.max_iter; ++it) {
    if (r.cwiseAbs().maxCoeff() <= opt.target) break;
    std::vector<Vec> trial;
    double Ft = F;
    Eigen::VectorXd rt;
    bool accepted = false;
    if (opt.mode == SolveOptions::Mode::GaussNewton) {
      Eigen::MatrixXd A;
      P.normal_equations(Z, r, A);
      double scale = A.trace() / A.rows();
      if (mu == 0) mu = 1e-12 * scale;
      for (int tries = 0; tries < 12 && !accepted; ++tries) {
        Eigen::MatrixXd Am = A;
        Am.diagonal().array() += mu;
        Eigen::VectorXd y = Am.ldlt().solve(r);
        auto step = P.pullback(Z, -y);
        for (double lam = 1.0; lam > 1e-3; lam *= 0.5) {
          trial = P.move(Z, step, lam);
          rt = P.residual(trial);
          Ft = rt.squaredNorm();
          if (Ft < F) {
            accepted = true;
            mu = lam == 1.0 ? std::max(mu * 0.1, 1e-15 * scale) : mu;
            break;
          }
        }
        if (!accepted) mu = std::max(mu * 100, 1e-8 * scale);
      }
    } else {
      auto g = P.pullback(Z, 2.0 * r);  // gradient of F at each node
      double gg = 0, gmax = 0;
      for (const auto& v : g) {
        gg += v.squaredNorm();
        gmax = std::max(gmax, v.norm());
      }
      if (gg == 0) break;
      if (opt.mode == SolveOptions::Mode::Gradient) {
        std::vector<Vec> step(g.size());
        for (size_t j = 0; j < g.size(); ++j) step[j] = -g[j];
        for (double lam = F / gg; lam > 1e-20; lam *= 0.5) {
          trial = P.move(Z, step, lam);
          rt = P.residual(trial);
          Ft = rt.squaredNorm();
          if (Ft < F) {
            accepted = true;
            break;
          }
        }
      } else {
        if (eps == 0) eps = 0.1 * gmax;
        for (double lam = 1.0; lam > 1e-12; lam *= 0.5) {
          trial = P.paper_move(Z, g, eps, opt.delta, lam);
          rt = P.residual(trial);
          Ft = rt.squaredNorm();
          if (Ft < F) {
            accepted = true;
            break;
          }
        }
      }
    }
    if (!accepted) break;
    Z = std::move(trial);
    r = rt;
    F = Ft;
    rep.history.push_back(F);
    check_separation(Z);
  }
  rep.iterations = static_cast<int>(rep.history.size());
  rep.residual_norm = std::sqrt(F);
  rep.max_residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  rep.converged = rep.max_residual <= opt.target;
  rep.min_distance = min_pairwise_distance(orbit_of(Z));
  rep.separation_ratio = separation_ratio(rep.min_distance, full_N, d);
  return rep;
}

}  // namespace

CubatureRule solve(const CubatureSeed& seed, const WeightedBasis& B, const SolveOptions& opt) {
  if (B.degree() != seed.degree) throw InvalidArgument("seed and basis degrees differ");
  if (B.dim() != seed.partition.dim()) throw InvalidArgument("seed and basis dimensions differ");
  if (B.symmetry() != SymmetryTag::None) throw InvalidArgument("use symmetric_solve with a filtered basis");
  std::vector<Vec> Z = symmetry_orbit(seed.nodes, seed.symmetry);
  Problem P{B};
  CubatureSeed expanded;
  if (opt.mode == SolveOptions::Mode::Paper) {
    if (seed.symmetry != SymmetryTag::None) {
      expanded = seed;
      expanded.partition.cells = seed.partition.expanded_cells();
      expanded.cell.clear();
      const int nc = static_cast<int>(seed.partition.cells.size());
      const int g = group_order(B.dim(), seed.symmetry);
      for (int o = 0; o < g; ++o)
        for (int c : seed.cell) expanded.cell.push_back(o * nc + c);
      P.seed = &expanded;
    } else {
      P.seed = &seed;
    }
  }
  CubatureRule rule;
  rule.report = optimize(Z, P, opt, static_cast<long>(Z.size()));
  rule.degree = B.degree();
  rule.nodes = std::move(Z);
  rule.weight = B.weight();
  return rule;
}

CubatureRule symmetric_solve(const CubatureSeed& seed, const WeightedBasis& B, SymmetryTag g, const SolveOptions& opt) {
  if (g == SymmetryTag::None) return solve(seed, B, opt);
  if (B.symmetry() != g) throw InvalidArgument("basis filter does not match the requested group");
  if (seed.symmetry != g) throw InvalidArgument("seed was not built on a fundamental domain of the group");
  const int d = B.dim();
  for (int j = 0; j < d; ++j)
    if (!B.weight().reflection_invariant(j)) throw SymmetryMissing("weight is not invariant under the group");
  std::vector<Vec> Z = seed.nodes;
  Problem P{B, g, &seed};
  for (auto& x : Z) P.apply_fold(x);
  CubatureRule rule;
  long full = static_cast<long>(Z.size()) * group_order(d, g);
  rule.report = optimize(Z, P, opt, full);
  rule.degree = B.degree();
  rule.nodes = symmetry_orbit(Z, g);
  rule.weight = B.weight();
  rule.symmetry = g;
  return rule;
}

// ---------------------------------------------------------------- verification

VerifyReport verify_nodes(const WeightSpec& w, int n, const std::vector<Vec>& nodes, double tol) {
  VerifyReport v;
  if (nodes.empty()) throw InvalidArgument("rule has no nodes");
  const int d = w.dim();
  v.rule_order = 2 * default_rule_order(w, n);
  WeightedBasis B = WeightedBasis::build(w, n, SymmetryTag::None, v.rule_order);
  Eigen::VectorXd r = moment_residual(B, nodes);
  v.max_residual = r.size() > 1 ? r.tail(r.size() - 1).cwiseAbs().maxCoeff() : 0.0;
  v.min_distance = min_pairwise_distance(nodes);
  v.separation_ratio = separation_ratio(v.min_distance, static_cast<long>(nodes.size()), d);
  v.distinct = v.min_distance > 0;
  v.exact = v.max_residual <= tol;
  v.pass = v.distinct && v.exact;
  return v;
}

VerifyReport verify_rule(const CubatureRule& rule, double tol) { return verify_nodes(rule.weight, rule.degree, rule.nodes, tol); }

json VerifyReport::to_json() const {
  return {{"max_residual", max_residual}, {"min_distance", min_distance}, {"separation_ratio", separation_ratio},
          {"rule_order", rule_order},     {"distinct", distinct},         {"exact", exact},
          {"pass", pass}};
}

json SolveReport::to_json() const {
  return {{"iterations", iterations},       {"residual_norm", residual_norm}, {"max_residual", max_residual},
          {"min_distance", min_distance},   {"separation_ratio", separation_ratio},
          {"converged", converged},         {"mode", mode},
          {"warnings", warnings},           {"history", history}};
}

json CubatureRule::to_json() const {
  json pts = json::array();
  for (const auto& x : nodes) {
    json p = json::array();
    for (int i = 0; i < x.size(); ++i) p.push_back(x[i]);
    pts.push_back(p);
  }
  return {{"degree", degree},
          {"weight", weight.to_json()},
          {"symmetry", symmetry_tag_name(symmetry)},
          {"nodes", pts},
          {"node_weight", nodes.empty() ? 0.0 : node_weight()},
          {"report", report.to_json()}};
}

CubatureRule CubatureRule::from_json(const json& j) {
  CubatureRule r;
  r.degree = j.at("degree").get<int>();
  r.weight = WeightSpec::from_json(j.at("weight"));
  r.symmetry = parse_symmetry_tag(j.value("symmetry", std::string("none")));
  for (const auto& p : j.at("nodes")) {
    Vec x(p.size());
    for (size_t i = 0; i < p.size(); ++i) x[i] = p[i].get<double>();
    r.nodes.push_back(x);
  }
  if (j.contains("report")) {
    const auto& q = j["report"];
    r.report.iterations = q.value("iterations", 0);
    r.report.residual_norm = q.value("residual_norm", 0.0);
    r.report.max_residual = q.value("max_residual", 0.0);
    r.report.min_distance = q.value("min_distance", 0.0);
    r.report.separation_ratio = q.value("separation_ratio", 0.0);
    r.report.converged = q.value("converged", false);
    r.report.mode = q.value("mode", std::string());
  }
  return r;
}

std::string CubatureRule::to_csv() const {
  std::ostringstream os;
  const int d = weight.dim();
  for (int i = 0; i < d; ++i) os << (i ? "," : "") << "x" << i + 1;
  os << "\n";
  char buf[64];
  for (const auto& x : nodes) {
    for (int i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      os << (i ? "," : "") << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::vector<Vec> CubatureRule::nodes_from_csv(const std::string& csv) {
  std::vector<Vec> out;
  std::istringstream is(csv);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (first && (line[0] == 'x' || line[0] == 'X')) {
      first = false;
      continue;
    }
    first = false;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() < 2 || v.size() > 4) throw InvalidArgument("CSV row must have 2 to 4 coordinates", {{"row", line}});
    Vec x(v.size());
    for (size_t i = 0; i < v.size(); ++i) x[i] = v[i];
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------- pipeline

CubatureRule build_rule(const WeightSpec& w, int n, const RuleOptions& opt) {
  const int d = w.dim();
  long N = opt.N > 0 ? opt.N : static_cast<long>(std::ceil(opt.K * max_inverse_cap(w, n)));
  int mult = 1;
  if (opt.symmetry == SymmetryTag::Z2) mult = 1 << d;
  if (opt.symmetry == SymmetryTag::Tau) mult = 1 << std::max(1, d - 2);
  N = (N + mult - 1) / mult * mult;
  PartitionOptions po = opt.partition;
  po.symmetry = partition_symmetry(opt.symmetry);
  Partition P = regular_convex_partition(w, static_cast<int>(N), 0, po);
  WeightedBasis B = WeightedBasis::build(w, n, opt.symmetry);
  for (int attempt = 0;; ++attempt) {
    try {
      CubatureSeed S = seed_nodes(P, n, opt.delta, attempt);
      return opt.symmetry == SymmetryTag::None ? solve(S, B, opt.solve) : symmetric_solve(S, B, opt.symmetry, opt.solve);
    } catch (const SeparationCollapse&) {
      if (attempt >= opt.restarts) throw;
    } catch (const NodeOnMirror&) {
      if (attempt >= opt.restarts) throw;
    }
  }
}

}  // namespace sq
