#include "spherequad/harmonics.hpp"

#include <array>
#include <cmath>
#include <map>

namespace sq {

SymmetryTag parse_symmetry_tag(const std::string& s) {
  if (s == "none" || s.empty()) return SymmetryTag::None;
  if (s == "tau") return SymmetryTag::Tau;
  if (s == "z2") return SymmetryTag::Z2;
  throw InvalidArgument("unknown symmetry tag", {{"symmetry", s}});
}

std::string symmetry_tag_name(SymmetryTag s) {
  switch (s) {
    case SymmetryTag::None: return "none";
    case SymmetryTag::Tau: return "tau";
    case SymmetryTag::Z2: return "z2";
  }
  return "none";
}

int polynomial_space_dim(int d, int n) {
  // sum over l <= n of dim H_l = C(n+d-1, d-1) + C(n+d-2, d-1)
  auto binom = [](int a, int b) {
    if (b < 0 || a < b) return 0L;
    long r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  return static_cast<int>(binom(n + d - 1, d - 1) + binom(n + d - 2, d - 1));
}

namespace {

// Forward-mode value with gradient in up to 4 ambient coordinates.
struct Dual {
  double v = 0;
  std::array<double, 4> g{0, 0, 0, 0};
  Dual() = default;
  Dual(double x) : v(x) {}
};
inline Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (int i = 0; i < 4; ++i) r.g[i] = a.g[i] + b.g[i];
  return r;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < 4; ++i) r.g[i] = a.g[i] - b.g[i];
  return r;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 4; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  return r;
}
inline Dual operator*(double s, const Dual& a) {
  Dual r(s * a.v);
  for (int i = 0; i < 4; ++i) r.g[i] = s * a.g[i];
  return r;
}

// byDeg[l] lists the solid harmonics of degree l in the first d coordinates.
template <class T>
void solid(int d, int n, const T* x, std::vector<std::vector<T>>& byDeg) {
  byDeg.assign(n + 1, {});
  if (d == 2) {
    T c(1.0), s(0.0);
    byDeg[0].push_back(c);
    for (int l = 1; l <= n; ++l) {
      T c2 = c * x[0] - s * x[1];
      T s2 = c * x[1] + s * x[0];
      c = c2, s = s2;
      byDeg[l].push_back(c);
      byDeg[l].push_back(s);
    }
    return;
  }
  std::vector<std::vector<T>> low;
  solid(d - 1, n, x, low);
  T r2(0.0);
  for (int i = 0; i < d; ++i) r2 = r2 + x[i] * x[i];
  const T& t = x[d - 1];
  // |x|^m C_m^lambda(x_d/|x|) by the three-term recurrence
  for (int k = 0; k <= n; ++k) {
    double lam = k + 0.5 * (d - 2);
    T pm2(1.0), pm1 = (2.0 * lam) * t;
    for (int m = 0; m + k <= n; ++m) {
      T p;
      if (m == 0) {
        p = T(1.0);
      } else if (m == 1) {
        p = pm1;
      } else {
        p = (1.0 / m) * ((2.0 * (m + lam - 1)) * (t * pm1) - (m + 2 * lam - 2) * (r2 * pm2));
        pm2 = pm1;
        pm1 = p;
      }
      for (const auto& h : low[k]) byDeg[k + m].push_back(p * h);
    }
  }
}

template <class T>
std::vector<T> flatten(std::vector<std::vector<T>>& byDeg) {
  std::vector<T> out;
  for (auto& v : byDeg)
    for (auto& e : v) out.push_back(e);
  return out;
}

void check_degree(int d, int n) {
  if (d < 2 || d > 4) throw InvalidArgument("ambient dimension must be 2, 3 or 4", {{"d", d}});
  if (n < 0) throw InvalidArgument("degree must be nonnegative", {{"n", n}});
  int cap = d == 2 ? 200 : (d == 3 ? 24 : 12);
  if (n > cap) throw InvalidArgument("degree exceeds the supported cap", {{"n", n}, {"d", d}, {"cap", cap}});
}

}  // namespace

Eigen::VectorXd raw_harmonics(int d, int n, const Vec& x) {
  check_degree(d, n);
  if (x.size() != d) throw InvalidArgument("point dimension does not match", {{"d", d}, {"size", x.size()}});
  std::vector<std::vector<double>> by;
  solid(d, n, x.data(), by);
  auto f = flatten(by);
  return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

void raw_harmonics_grad(int d, int n, const Vec& x, Eigen::VectorXd& val, Eigen::MatrixXd& grad) {
  check_degree(d, n);
  if (x.size() != d) throw InvalidArgument("point dimension does not match", {{"d", d}, {"size", x.size()}});
  std::array<Dual, 4> xd;
  for (int i = 0; i < d; ++i) {
    xd[i] = Dual(x[i]);
    xd[i].g[i] = 1.0;
  }
  std::vector<std::vector<Dual>> by;
  solid(d, n, xd.data(), by);
  auto f = flatten(by);
  val.resize(f.size());
  grad.resize(f.size(), d);
  for (size_t k = 0; k < f.size(); ++k) {
    val[k] = f[k].v;
    for (int i = 0; i < d; ++i) grad(k, i) = f[k].g[i];
  }
}

WeightedBasis WeightedBasis::build(const WeightSpec& w, int n, SymmetryTag sym, int order) {
  const int d = w.dim();
  check_degree(d, n);
  WeightedBasis B(w);
  B.n_ = n;
  B.d_ = d;
  B.sym_ = sym;
  B.order_ = order > 0 ? order : default_rule_order(w, n);

  // Parity of each raw harmonic in each coordinate, read off at a generic point.
  Vec p(d);
  for (int i = 0; i < d; ++i) p[i] = 0.3 + 0.17 * i * i + 0.05 * i;
  p.normalize();
  Eigen::VectorXd base = raw_harmonics(d, n, p);
  const int Mraw = static_cast<int>(base.size());
  std::vector<int> parity(Mraw, 0);
  for (int j = 0; j < d; ++j) {
    Vec q = p;
    q[j] = -q[j];
    Eigen::VectorXd r = raw_harmonics(d, n, q);
    for (int k = 0; k < Mraw; ++k)
      if (r[k] * base[k] < 0) parity[k] |= 1 << j;
  }
  for (int k = 0; k < Mraw; ++k) {
    bool keep = true;
    if (sym == SymmetryTag::Tau) keep = !(parity[k] & (1 << (d - 1)));
    if (sym == SymmetryTag::Z2) keep = parity[k] == 0;
    if (keep) B.raw_index_.push_back(k);
  }
  const int M = static_cast<int>(B.raw_index_.size());

  // Positive-orthant nodes and weights; the product rule is the orthant rule
  // reflected, and parity makes cross-class entries vanish.
  auto orthant_part = [&](const SphereRule& R) {
    size_t q = R.nodes.size() >> d;
    SphereRule o;
    o.nodes.assign(R.nodes.begin(), R.nodes.begin() + q);
    o.weights.assign(R.weights.begin(), R.weights.begin() + q);
    for (auto& x : o.weights) x *= (1 << d);
    return o;
  };
  WeightSpec uni = WeightSpec::constant(d);
  SphereRule U = orthant_part(weighted_sphere_rule(uni, default_rule_order(uni, n)));
  SphereRule R = orthant_part(weighted_sphere_rule(w, B.order_));

  B.raw_scale_ = Eigen::VectorXd::Zero(M);
  for (size_t q = 0; q < U.nodes.size(); ++q) {
    Eigen::VectorXd v = raw_harmonics(d, n, U.nodes[q]);
    for (int k = 0; k < M; ++k) B.raw_scale_[k] += U.weights[q] * v[B.raw_index_[k]] * v[B.raw_index_[k]];
  }
  for (int k = 0; k < M; ++k) B.raw_scale_[k] = 1.0 / std::sqrt(B.raw_scale_[k]);

  std::vector<int> cls(M);
  for (int k = 0; k < M; ++k) cls[k] = parity[B.raw_index_[k]];
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  {
    const size_t Q = R.nodes.size();
    const size_t chunk = 2048;
    for (size_t q0 = 0; q0 < Q; q0 += chunk) {
      size_t q1 = std::min(Q, q0 + chunk);
      Eigen::MatrixXd A(q1 - q0, M);
      for (size_t q = q0; q < q1; ++q) {
        Eigen::VectorXd v = raw_harmonics(d, n, R.nodes[q]);
        double sw = std::sqrt(R.weights[q]);
        for (int k = 0; k < M; ++k) A(q - q0, k) = sw * B.raw_scale_[k] * v[B.raw_index_[k]];
      }
      G.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
    }
    G = G.selfadjointView<Eigen::Lower>();
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (cls[i] != cls[j]) G(i, j) = 0;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  B.gram_condition_ = lmin > 0 ? lmax / lmin : INFINITY;
  if (!(B.gram_condition_ <= 1e12))
    throw IllConditionedGram("weighted Gram matrix is too ill-conditioned",
                             {{"condition", B.gram_condition_}, {"n", n}, {"weight", w.describe()}});

  // Per parity class: C = L^{-1} makes C G C^T = I and keeps phi_0 = 1. A
  // second pass on the (nearly identity) transformed Gram removes most of
  // the round-off.
  std::map<int, std::vector<int>> by_class;
  for (int k = 0; k < M; ++k) by_class[cls[k]].push_back(k);
  B.gram_residual_ = 0;
  for (auto& [c, idx] : by_class) {
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd Gb(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) Gb(i, j) = G(idx[i], idx[j]);
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(m, m), Gc = Gb;
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::LLT<Eigen::MatrixXd> llt(Gc);
      if (llt.info() != Eigen::Success) throw IllConditionedGram("Cholesky factorization of the Gram matrix failed");
      C = llt.matrixL().solve(C);
      Gc = C * Gb * C.transpose();
    }
    B.gram_residual_ = std::max(B.gram_residual_, (Gc - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    B.groups_.push_back(idx);
    B.blocks_.push_back(C);
  }
  return B;
}

Eigen::MatrixXd WeightedBasis::coefficients() const {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(size(), size());
  for (size_t g = 0; g < groups_.size(); ++g)
    for (size_t i = 0; i < groups_[g].size(); ++i)
      for (size_t j = 0; j < groups_[g].size(); ++j) C(groups_[g][i], groups_[g][j]) = blocks_[g](i, j);
  return C;
}

Eigen::VectorXd WeightedBasis::eval(const Vec& x) const {
  Eigen::VectorXd v = raw_harmonics(d_, n_, x);
  Eigen::VectorXd s(raw_index_.size());
  for (size_t k = 0; k < raw_index_.size(); ++k) s[k] = raw_scale_[k] * v[raw_index_[k]];
  Eigen::VectorXd out(s.size());
  for (size_t g = 0; g < groups_.size(); ++g) {
    const auto& idx = groups_[g];
    Eigen::VectorXd sb(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) sb[i] = s[idx[i]];
    Eigen::VectorXd vb = blocks_[g] * sb;
    for (size_t i = 0; i < idx.size(); ++i) out[idx[i]] = vb[i];
  }
  return out;
}

void WeightedBasis::eval_grad(const Vec& x, Eigen::VectorXd& val, Eigen::MatrixXd& tgrad) const {
  Eigen::VectorXd v;
  Eigen::MatrixXd g;
  raw_harmonics_grad(d_, n_, x, v, g);
  const int M = static_cast<int>(raw_index_.size());
  Eigen::VectorXd s(M);
  Eigen::MatrixXd gs(M, d_);
  for (int k = 0; k < M; ++k) {
    s[k] = raw_scale_[k] * v[raw_index_[k]];
    gs.row(k) = raw_scale_[k] * g.row(raw_index_[k]);
  }
  val.resize(M);
  tgrad.resize(M, d_);
  for (size_t b = 0; b < groups_.size(); ++b) {
    const auto& idx = groups_[b];
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd sb(m, d_ + 1);
    for (int i = 0; i < m; ++i) {
      sb(i, 0) = s[idx[i]];
      sb.row(i).tail(d_) = gs.row(idx[i]);
    }
    Eigen::MatrixXd vb = blocks_[b] * sb;
    for (int i = 0; i < m; ++i) {
      val[idx[i]] = vb(i, 0);
      tgrad.row(idx[i]) = vb.row(i).tail(d_);
    }
  }
  Eigen::VectorXd xv = x;
  // project each ambient gradient onto the tangent space at x
  Eigen::VectorXd radial = tgrad * xv;
  tgrad -= radial * xv.transpose();
}

Eigen::MatrixXd WeightedBasis::eval_many(const std::vector<Vec>& xs) const {
  Eigen::MatrixXd out(xs.size(), size());
  for (size_t i = 0; i < xs.size(); ++i) out.row(i) = eval(xs[i]).transpose();
  return out;
}

double WeightedBasis::recheck_gram(int order) const {
  SphereRule R = weighted_sphere_rule(w_, order);
  const int M = size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  const size_t chunk = 2048;
  for (size_t q0 = 0; q0 < R.nodes.size(); q0 += chunk) {
    size_t q1 = std::min(R.nodes.size(), q0 + chunk);
    Eigen::MatrixXd A(q1 - q0, M);
    for (size_t q = q0; q < q1; ++q) A.row(q - q0) = std::sqrt(R.weights[q]) * eval(R.nodes[q]).transpose();
    G.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
  }
  G = G.selfadjointView<Eigen::Lower>();
  return (G - Eigen::MatrixXd::Identity(M, M)).cwiseAbs().maxCoeff();
}

nlohmann::json WeightedBasis::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  Eigen::MatrixXd C = coefficients();
  for (int i = 0; i < C.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (int j = 0; j < C.cols(); ++j) r.push_back(C(i, j));
    rows.push_back(r);
  }
  std::vector<double> sc(raw_scale_.data(), raw_scale_.data() + raw_scale_.size());
  return {{"degree", n_},       {"dim", d_},
          {"weight", w_.to_json()}, {"symmetry", symmetry_tag_name(sym_)},
          {"rule_order", order_}, {"gram_residual", gram_residual_},
          {"raw_index", raw_index_}, {"raw_scale", sc},
          {"coefficients", rows}};
}

double KernelEval::operator()(const Vec& x, const Vec& y) const {
  Eigen::VectorXd a = B_.eval(x), b = B_.eval(y);
  return a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

double christoffel(const WeightedBasis& B, const Vec& x) {
  if (B.symmetry() != SymmetryTag::None) throw InvalidArgument("the Christoffel function needs the full basis");
  return 1.0 / B.eval(x).squaredNorm();
}

ResidualPolynomial::ResidualPolynomial(const WeightedBasis& B, const std::vector<Vec>& nodes) : B_(B) {
  if (nodes.empty()) throw InvalidArgument("residual polynomial needs at least one node");
  c_ = Eigen::VectorXd::Zero(B.size());
  for (const auto& z : nodes) c_ += B.eval(z);
  c_ /= static_cast<double>(nodes.size());
  c_[0] = 0;
}

double ResidualPolynomial::operator()(const Vec& z) const { return c_.dot(B_.eval(z)); }

Vec ResidualPolynomial::gradient(const Vec& z) const {
  Eigen::VectorXd v;
  Eigen::MatrixXd g;
  B_.eval_grad(z, v, g);
  return Vec(g.transpose() * c_);
}

}  // namespace sq
