#include "spherequad/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sq {

Vec unit_basis(int d, int j) {
  Vec e = Vec::Zero(d);
  e[j] = 1.0;
  return e;
}

Vec make_vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

UnitVector::UnitVector(const Vec& v) {
  double n = v.norm();
  if (!(n > 1e-12)) throw ZeroVector("cannot normalize a zero vector", {{"norm", n}});
  v_ = v / n;
}

double geodesic_distance(const Vec& x, const Vec& y) {
  return 2.0 * std::atan2((x - y).norm(), (x + y).norm());
}

Vec GeodesicArc::eval(double t) const {
  return start_ * std::cos(theta_ * t) + dir_ * std::sin(theta_ * t);
}

namespace {

// Any unit vector orthogonal to x.
Vec some_orthogonal(const Vec& x) {
  int d = static_cast<int>(x.size());
  int j = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(x[i]) < std::abs(x[j])) j = i;
  Vec e = unit_basis(d, j);
  Vec v = e - e.dot(x) * x;
  return v / v.norm();
}

}  // namespace

GeodesicArc arc(const Vec& x, const Vec& y, const Tolerances& tol) {
  double theta = geodesic_distance(x, y);
  if (theta >= kPi - tol.antipodal)
    throw AntipodalPoints("arc endpoints are antipodal", {{"distance", theta}});
  if (theta == 0.0) return GeodesicArc(x, some_orthogonal(x), 0.0);
  // y - (x.y)x has norm sin(theta); normalizing it directly is stable for
  // small theta, unlike dividing by sin(theta).
  Vec xi = y - x.dot(y) * x;
  double n = xi.norm();
  if (n == 0.0) return GeodesicArc(x, some_orthogonal(x), 0.0);
  xi /= n;
  xi -= xi.dot(x) * x;
  xi.normalize();
  return GeodesicArc(x, xi, theta);
}

UnitVector radial_project(const Vec& x, const Tolerances& tol) {
  double n = x.norm();
  if (!(n > tol.zero_vector)) throw ZeroVector("radial projection of a zero vector", {{"norm", n}});
  return UnitVector(x);
}

Vec tangential_gradient(const Vec& g, const Vec& x) { return g - (x.dot(g) / x.squaredNorm()) * x; }

Vec tangential_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x) {
  return tangential_gradient(grad(x), x);
}

Mat tangent_basis(const Vec& x) {
  int d = static_cast<int>(x.size());
  Mat B(d, d - 1);
  // Gram-Schmidt of the standard basis against x, dropping the most
  // parallel coordinate direction.
  int skip = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(x[i]) > std::abs(x[skip])) skip = i;
  int col = 0;
  for (int i = 0; i < d; ++i) {
    if (i == skip) continue;
    Vec v = unit_basis(d, i);
    v -= v.dot(x) * x;
    for (int c = 0; c < col; ++c) v -= v.dot(B.col(c)) * B.col(c);
    B.col(col++) = v.normalized();
  }
  return B;
}

Vec exp_map(const Vec& x, const Vec& v) {
  double t = v.norm();
  if (t == 0.0) return x;
  Vec y = x * std::cos(t) + v * (std::sin(t) / t);
  return y / y.norm();
}

// ---------------------------------------------------------------- simplexes

Vec min_norm_point(const std::vector<Vec>& pts) {
  const int m = static_cast<int>(pts.size());
  Vec best;
  double best_n = INFINITY;
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < m; ++i)
      if (mask & (1 << i)) idx.push_back(i);
    const Vec& p0 = pts[idx[0]];
    int k = static_cast<int>(idx.size()) - 1;
    Vec cand = p0;
    bool ok = true;
    if (k > 0) {
      Eigen::MatrixXd D(p0.size(), k);
      for (int c = 0; c < k; ++c) D.col(c) = pts[idx[c + 1]] - p0;
      Eigen::MatrixXd G = D.transpose() * D;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
      if (ldlt.info() != Eigen::Success || std::abs(G.determinant()) < 1e-30) continue;
      Eigen::VectorXd mu = -ldlt.solve(D.transpose() * Eigen::VectorXd(p0));
      double s = mu.sum();
      if (1.0 - s < -1e-14) ok = false;
      for (int c = 0; c < k; ++c)
        if (mu[c] < -1e-14) ok = false;
      cand = p0 + Vec(D * mu);
    }
    if (ok && cand.norm() < best_n) {
      best_n = cand.norm();
      best = cand;
    }
  }
  return best;
}

SurfaceSimplex::SurfaceSimplex(std::vector<Vec> vertices, const Tolerances& tol) : verts_(std::move(vertices)) {
  int d = static_cast<int>(verts_.size());
  if (d < 2 || verts_[0].size() != d) throw InvalidArgument("surface simplex needs d vertices in R^d");
  V_.resize(d, d);
  for (int j = 0; j < d; ++j) V_.col(j) = verts_[j];
  Eigen::MatrixXd Vd = V_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Vd);
  if (svd.singularValues()[d - 1] < tol.independence)
    throw InvalidArgument("surface simplex vertices are linearly dependent");
  Vec n = V_.transpose().fullPivLu().solve(Vec::Ones(d));
  double nn = n.norm();
  normal_ = n / nn;
  offset_ = 1.0 / nn;
  a_min_ = min_norm_point(verts_).norm();
}

Vec SurfaceSimplex::barycentric(const Vec& y) const { return V_.fullPivLu().solve(y); }

Vec SurfaceSimplex::point(const Vec& bary) const { return V_ * bary; }

bool SurfaceSimplex::contains(const Vec& y, double eps) const {
  if (std::abs(normal_.dot(y) - offset_) > eps) return false;
  Vec b = barycentric(y);
  return b.minCoeff() >= -eps;
}

double surface_to_sphere_jacobian(const SurfaceSimplex& T, const Vec& y, const Tolerances& tol) {
  if (!T.contains(y, tol.simplex_membership))
    throw PointOutsideSimplex("point is not in the surface simplex");
  // The density of radial projection is the hyperplane distance over |y|^d;
  // it coincides with a_min when the foot of the perpendicular lies in T.
  return T.offset() / std::pow(y.norm(), T.dim());
}

GeodesicSimplex::GeodesicSimplex(std::vector<Vec> spanning, bool admissible, double eps, const Tolerances& tol)
    : span_(std::move(spanning)), admissible_(admissible), eps_(eps) {
  int d = static_cast<int>(span_.size());
  for (auto& v : span_) v = UnitVector(v).coords();
  Eigen::MatrixXd A(d, d);
  for (int j = 0; j < d; ++j) A.col(j) = span_[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  if (svd.singularValues()[d - 1] <= tol.independence)
    throw InvalidArgument("spanning vectors are not linearly independent",
                          {{"sigma_min", svd.singularValues()[d - 1]}});
  if (admissible_ && !check_admissible(span_, tol.admissibility))
    throw InvalidArgument("spanning set is not admissible");
  if (eps_ > 0 && separation_of(span_) < eps_ - 1e-12)
    throw InvalidArgument("separation certificate does not hold", {{"eps", eps_}});
}

Mat GeodesicSimplex::matrix() const {
  int d = dim();
  Mat A(d, d);
  for (int j = 0; j < d; ++j) A.col(j) = span_[j];
  return A;
}

double GeodesicSimplex::separation() const { return separation_of(span_); }

double GeodesicSimplex::separation_of(const std::vector<Vec>& s) {
  int d = static_cast<int>(s.size());
  double best = INFINITY;
  for (int j = 0; j < d; ++j) {
    if (d == 1) return 1.0;
    Eigen::MatrixXd B(s[j].size(), d - 1);
    int c = 0;
    for (int i = 0; i < d; ++i)
      if (i != j) B.col(c++) = s[i];
    Eigen::VectorXd v = s[j];
    Eigen::VectorXd coef = B.colPivHouseholderQr().solve(v);
    best = std::min(best, (v - B * coef).norm());
  }
  return best;
}

bool GeodesicSimplex::check_admissible(const std::vector<Vec>& s, double tol) {
  int d = static_cast<int>(s.size());
  std::vector<int> p(d);
  std::iota(p.begin(), p.end(), 0);
  do {
    const Vec& x1 = s[p[0]];
    const Vec& x2 = s[p[1]];
    double ang = std::acos(std::clamp(x1.dot(x2), -1.0, 1.0));
    bool ok = ang >= kPi / 6 - tol && ang <= kPi / 2 + tol;
    for (int a = 1; ok && a < d; ++a)
      for (int b = a + 1; ok && b < d; ++b)
        if (std::abs(s[p[a]].dot(s[p[b]])) > tol) ok = false;
    for (int j = 2; ok && j < d; ++j)
      if (std::abs(x1.dot(s[p[j]])) > tol) ok = false;
    if (ok) return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

// ---------------------------------------------------------------- cells

std::string transform_kind_name(Transform::Kind k) {
  switch (k) {
    case Transform::Kind::Linear: return "linear";
    case Transform::Kind::Radial: return "radial";
    case Transform::Kind::Rotation: return "rotation";
    case Transform::Kind::Dilation: return "dilation";
    case Transform::Kind::ConeExtension: return "cone_extension";
  }
  return "unknown";
}

std::vector<HalfSpace> cone_facets(const std::vector<Vec>& rays, double eps) {
  std::vector<HalfSpace> out;
  if (rays.empty()) return out;
  const int d = static_cast<int>(rays[0].size());
  const int m = static_cast<int>(rays.size());
  const int k = d - 1;
  if (m < k) return out;
  std::vector<int> idx(k);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      Eigen::MatrixXd M(k, d);
      for (int i = 0; i < k; ++i) M.row(i) = rays[idx[i]].transpose();
      Vec n;
      if (d == 2) {
        n = make_vec({-M(0, 1), M(0, 0)});
      } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
        if (svd.singularValues()[k - 1] < 1e-10) return;
        n = svd.matrixV().col(d - 1);
      }
      n.normalize();
      bool pos = false, neg = false;
      for (const auto& r : rays) {
        double s = n.dot(r);
        if (s > eps) pos = true;
        if (s < -eps) neg = true;
      }
      if (pos && neg) return;
      if (!pos && !neg) return;
      if (neg) n = -n;
      for (const auto& h : out)
        if ((h.c - n).norm() < 1e-9) return;
      out.push_back({n, 0.0});
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

Ball cone_inball(const std::vector<HalfSpace>& facets, int d) {
  const int m = static_cast<int>(facets.size());
  if (m == 0) return {unit_basis(d, 0), kPi};
  if (m == 1) return {facets[0].c, kPi / 2};
  double best = INFINITY;
  Vec besty;
  std::vector<int> idx;
  std::function<void(int)> rec = [&](int start) {
    if (!idx.empty()) {
      int k = static_cast<int>(idx.size());
      Eigen::MatrixXd Nm(k, d);
      for (int i = 0; i < k; ++i) Nm.row(i) = facets[idx[i]].c.transpose();
      Eigen::MatrixXd G = Nm * Nm.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      if (lu.rank() == k) {
        Eigen::VectorXd lam = lu.solve(Eigen::VectorXd::Ones(k));
        if (lam.minCoeff() >= -1e-12) {
          Vec y = Nm.transpose() * lam;
          bool feas = true;
          for (const auto& h : facets)
            if (h.c.dot(y) < 1.0 - 1e-9) feas = false;
          if (feas && y.norm() < best) {
            best = y.norm();
            besty = y;
          }
        }
      }
    }
    if (static_cast<int>(idx.size()) == d) return;
    for (int i = start; i < m; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
  if (!std::isfinite(best) || best < 1.0) return {unit_basis(d, 0), 0.0};
  return {besty / best, std::asin(1.0 / best)};
}

ConvexCell::ConvexCell(std::vector<Vec> base, std::vector<Transform> chain, std::vector<Vec> rays)
    : base_(std::move(base)), chain_(std::move(chain)), rays_(std::move(rays)) {
  for (auto& r : rays_) r.normalize();
  facets_ = cone_facets(rays_);
  compute_balls();
}

ConvexCell ConvexCell::from_rays(std::vector<Vec> rays) {
  return ConvexCell({}, {}, std::move(rays));
}

ConvexCell ConvexCell::from_rays_and_facets(std::vector<Vec> rays, std::vector<HalfSpace> facets) {
  ConvexCell c;
  c.rays_ = std::move(rays);
  c.facets_ = std::move(facets);
  c.compute_balls();
  return c;
}

bool ConvexCell::contains(const Vec& x, double eps) const {
  for (const auto& h : facets_)
    if (h.c.dot(x) < h.tau - eps) return false;
  return true;
}

double ConvexCell::depth(const Vec& x) const {
  double m = kPi;
  for (const auto& h : facets_) m = std::min(m, std::asin(std::clamp(h.c.dot(x), -1.0, 1.0)));
  return m;
}

void ConvexCell::compute_balls() {
  int d = rays_.empty() ? (facets_.empty() ? 0 : static_cast<int>(facets_[0].c.size())) : dim();
  if (d == 0) return;
  inball = cone_inball(facets_, d);
  circumball.center = inball.center;
  double R = 0;
  for (const auto& r : rays_) R = std::max(R, geodesic_distance(inball.center, r));
  circumball.radius = rays_.empty() ? kPi : R;
}

UnitVector supporting_point(const ConvexCell& R, const Vec& y, const Tolerances& tol) {
  if (y.norm() < tol.zero_vector) throw DegenerateDirection("direction is (near) zero");
  const auto& F = R.facets();
  const int d = static_cast<int>(y.size());
  const int m = static_cast<int>(F.size());
  double best = -INFINITY;
  Vec bestx;
  auto consider = [&](const Vec& x) {
    if (!R.contains(x, 1e-11)) return;
    double v = y.dot(x);
    if (v > best) {
      best = v;
      bestx = x;
    }
  };
  for (const auto& r : R.rays()) {
    consider(r / r.norm());
  }
  std::vector<int> idx;
  std::function<void(int)> rec = [&](int start) {
    // maximize y.x over unit x in the subspace orthogonal to the chosen normals
    Vec p = y;
    if (!idx.empty()) {
      int k = static_cast<int>(idx.size());
      Eigen::MatrixXd Nm(k, d);
      for (int i = 0; i < k; ++i) Nm.row(i) = F[idx[i]].c.transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Nm, Eigen::ComputeFullV);
      int rank = 0;
      for (int i = 0; i < k; ++i)
        if (svd.singularValues()[i] > 1e-10) ++rank;
      Eigen::MatrixXd Q = svd.matrixV().rightCols(d - rank);
      p = Q * (Q.transpose() * Eigen::VectorXd(y));
    }
    if (p.norm() > 1e-14) consider(p / p.norm());
    if (static_cast<int>(idx.size()) == d - 1) return;
    for (int i = start; i < m; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
  if (!std::isfinite(best)) throw DegenerateDirection("no feasible supporting point found");
  return UnitVector(bestx);
}

// ---------------------------------------------------------------- identities

IdentityCheck arc_displacement_identity(const Vec& z, const Vec& xi1, const Vec& xi2, double th1, double th2,
                                        double t, const Tolerances& tol) {
  if (std::abs(xi1.dot(z)) > tol.orthogonality || std::abs(xi2.dot(z)) > tol.orthogonality)
    throw OrthogonalityViolated("directions must be orthogonal to the base point",
                                {{"xi1.z", xi1.dot(z)}, {"xi2.z", xi2.dot(z)}});
  Vec g1 = z * std::cos(th1 * t) + xi1 * std::sin(th1 * t);
  Vec g2 = z * std::cos(th2 * t) + xi2 * std::sin(th2 * t);
  double lhs = (g1 - g2).squaredNorm();
  double s = std::sin((th1 - th2) * t / 2.0);
  double rhs = 4.0 * s * s + std::sin(th1 * t) * std::sin(th2 * t) * (xi1 - xi2).squaredNorm();
  return {lhs, rhs};
}

PolarDistanceCheck polar_distance_identity(const Vec& z, const Vec& eta1, const Vec& eta2, double th1, double th2,
                                           const Tolerances& tol) {
  if (std::abs(eta1.dot(z)) > tol.orthogonality || std::abs(eta2.dot(z)) > tol.orthogonality)
    throw OrthogonalityViolated("directions must be orthogonal to the pole");
  Vec x1 = z * std::cos(th1) + eta1 * std::sin(th1);
  Vec x2 = z * std::cos(th2) + eta2 * std::sin(th2);
  double dist = geodesic_distance(x1, x2);
  double de = geodesic_distance(eta1, eta2);
  double sl = std::sin(dist / 2), sd = std::sin((th1 - th2) / 2), se = std::sin(de / 2);
  PolarDistanceCheck r;
  r.lhs = sl * sl;
  r.rhs = sd * sd + std::sin(th1) * std::sin(th2) * se * se;
  r.dist = dist;
  r.lower = std::abs(th1 - th2);
  r.upper = (kPi / 2) * std::abs(th1 - th2) + (kPi / 2) * std::sqrt(std::sin(th1) * std::sin(th2)) * de;
  return r;
}

BiLipschitzCheck radial_bilipschitz(const SurfaceSimplex& T, const Vec& x, const Vec& y) {
  double a = T.offset();
  double e = (x - y).norm();
  double R = std::max(x.norm(), y.norm());
  BiLipschitzCheck c;
  c.lower = a / (2 * (a + 1)) * e;
  c.value = geodesic_distance(x / x.norm(), y / y.norm());
  c.upper = kPi / (2 * a) * e;
  // The image of the segment is the arc between the endpoints, and on H_T the
  // stretch of g at z lies in [h/|z|^2, 1/|z|].
  c.sharp_lower = a / (R * R) * e;
  c.sharp_upper = e / a;
  return c;
}

}  // namespace sq
