#include "spherequad/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace sq {

using nlohmann::json;

// ---------------------------------------------------------------- dilation

double h_alpha(double alpha, double t) {
  if (t == 0.0) return 1.0;
  return (2.0 / kPi) * std::atan(std::tan(alpha) / std::abs(t));
}

double h_alpha_derivative(double alpha, double t) {
  if (t == 0.0) return 0.0;
  double ta = std::tan(alpha);
  double v = -(2.0 / kPi) * ta / (t * t + ta * ta);
  return t > 0 ? v : -v;
}

Dilation::Dilation(double alpha) : alpha_(alpha) {
  if (!(alpha > 0 && alpha < kPi / 2)) throw InvalidArgument("dilation angle must lie in (0, pi/2)", {{"alpha", alpha}});
}

namespace {

// x = (cos phi, xi sin phi); returns phi and xi (xi undefined at the poles).
void polar_about_e1(const Vec& x, double& phi, Vec& xi) {
  Vec bar = x.tail(x.size() - 1);
  double s = bar.norm();
  phi = std::atan2(s, x[0]);
  xi = s > 0 ? Vec(bar / s) : Vec(Vec::Zero(x.size() - 1));
}

Vec from_polar(double phi, const Vec& xi) {
  Vec y(xi.size() + 1);
  y[0] = std::cos(phi);
  y.tail(xi.size()) = xi * std::sin(phi);
  return y;
}

}  // namespace

Vec Dilation::apply(const Vec& x) const {
  double phi;
  Vec xi;
  polar_about_e1(x, phi, xi);
  if (xi.isZero()) {
    if (x[0] > 0) return unit_basis(static_cast<int>(x.size()), 0);
    throw AntipodalToPole("the dilation is undefined at -e1");
  }
  return from_polar(h_alpha(alpha_, xi[0]) * phi, xi);
}

Vec Dilation::inverse(const Vec& y) const {
  double psi;
  Vec xi;
  polar_about_e1(y, psi, xi);
  if (xi.isZero()) {
    if (y[0] > 0) return unit_basis(static_cast<int>(y.size()), 0);
    throw AntipodalToPole("the dilation is undefined at -e1");
  }
  double phi = psi / h_alpha(alpha_, xi[0]);
  if (phi >= kPi) throw InvalidArgument("point is outside the image of the dilation");
  return from_polar(phi, xi);
}

double Dilation::jacobian(const Vec& x) const {
  const int d = static_cast<int>(x.size());
  double s2 = 1.0 - x[0] * x[0];
  if (s2 <= 1e-24) throw PoleSingularity("dilation density is singular at the poles");
  Vec t = apply(x);
  double ratio = (1.0 - t[0] * t[0]) / s2;
  return std::pow(ratio, 0.5 * (d - 2)) * h_alpha(alpha_, x[1] / std::sqrt(s2));
}

Vec Dilation::linear_part(const Vec& y) const {
  Vec e(y.size());
  e[0] = y[1] * std::cos(alpha_);
  e[1] = y[1] * std::sin(alpha_);
  for (int j = 2; j < y.size(); ++j) e[j] = y[j] * std::sin(alpha_);
  return e;
}

// ---------------------------------------------------------------- wedges

namespace {

// cos and sin, exact at multiples of pi/2. Weights singular on coordinate
// planes give slivers of width 1e-16 a mass near 1e-8, so those planes must
// be hit exactly.
void cos_sin(double a, double& c, double& s) {
  double q = std::round(a / (kPi / 2));
  if (std::abs(a - q * (kPi / 2)) < 1e-13) {
    int m = static_cast<int>(std::fmod(std::fmod(q, 4.0) + 4.0, 4.0));
    const double C[4] = {1, 0, -1, 0}, S[4] = {0, 1, 0, -1};
    c = C[m];
    s = S[m];
    return;
  }
  c = std::cos(a);
  s = std::sin(a);
}

Vec plane_dir(int d, int i, int j, double a) {
  Vec v = Vec::Zero(d);
  cos_sin(a, v[i], v[j]);
  return v;
}

// Points whose angle in the (x_i, x_j) plane lies in [a, b], b - a <= pi.
std::vector<HalfSpace> plane_wedge(int d, int i, int j, double a, double b) {
  if (b - a > kPi + 1e-12) throw InvalidArgument("wedge wider than pi is not convex", {{"width", b - a}});
  Vec na = Vec::Zero(d), nb = Vec::Zero(d);
  double ca, sa, cb, sb;
  cos_sin(a, ca, sa);
  cos_sin(b, cb, sb);
  na[i] = -sa;
  na[j] = ca;
  nb[i] = sb;
  nb[j] = -cb;
  if (std::abs(b - a - kPi) < 1e-12) return {{na, 0.0}};
  return {{na, 0.0}, {nb, 0.0}};
}

Mat plane_rotation(int d, int i, int j, double a) {
  Mat R = Mat::Identity(d, d);
  double c, s;
  cos_sin(a, c, s);
  R(i, i) = c;
  R(i, j) = -s;
  R(j, i) = s;
  R(j, j) = c;
  return R;
}

// Rotation taking e_last to p.
Mat rotation_to(const Vec& p) {
  const int k = static_cast<int>(p.size());
  Vec e = unit_basis(k, k - 1);
  Vec v = e - p;
  if (v.norm() < 1e-15) return Mat::Identity(k, k);
  Mat H = Mat::Identity(k, k) - 2.0 * v * v.transpose() / v.squaredNorm();
  Mat D = Mat::Identity(k, k);
  D(0, 0) = -1;
  return H * D;
}

std::vector<Vec> map_rays(const Mat& M, const std::vector<Vec>& rays) {
  std::vector<Vec> out;
  out.reserve(rays.size());
  for (const auto& r : rays) {
    Vec y = M * r;
    for (int i = 0; i < y.size(); ++i)
      if (std::abs(y[i]) < 1e-14) y[i] = 0;
    out.push_back(y);
  }
  return out;
}

// Monotone root finding by the Illinois variant of regula falsi.
double solve_increasing(const std::function<double(double)>& g, double a, double b, double ga, double gb,
                        double target, double ftol) {
  if (std::abs(ga - target) <= ftol) return a;
  if (std::abs(gb - target) <= ftol) return b;
  int side = 0;
  double best = 0.5 * (a + b), bestf = INFINITY;
  for (int it = 0; it < 200; ++it) {
    double fa = ga - target, fb = gb - target;
    double t = (fb - fa) != 0 ? b - fb * (b - a) / (fb - fa) : 0.5 * (a + b);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    double gt = g(t);
    double ft = gt - target;
    if (std::abs(ft) < bestf) {
      bestf = std::abs(ft);
      best = t;
    }
    if (std::abs(ft) <= ftol || b - a < 1e-15 * std::max(1.0, std::abs(b))) return t;
    if (ft < 0) {
      a = t;
      ga = gt;
      if (side == -1) gb = target + 0.5 * (gb - target);
      side = -1;
    } else {
      b = t;
      gb = gt;
      if (side == 1) ga = target + 0.5 * (ga - target);
      side = 1;
    }
  }
  return best;
}

struct Cut {
  double s, t;
  int k;
  double mass;
};

struct CutRule {
  double lo, hi, close_max, min_last;
  double max_width = INFINITY;
  bool strict = false;
  double itol = 1e-9;  // integer snapping, count units
  double ftol = 1e-9;  // root-finding target, count units
};

// Splits [a, b] into consecutive pieces with integer masses summing to U.
// mass(s, t) is the mass of [s, t] in units of 1/N. Pieces other than the
// last have length in [lo, hi] when some integer is reachable there; the
// last piece takes whatever is left.
std::vector<Cut> cut_sequence(const std::function<double(double, double)>& mass, double a, double b, int U,
                              const CutRule& R) {
  std::vector<Cut> out;
  double s = a;
  int rem = U;
  // a remainder of exactly close_max is cut once more, so that a uniform
  // mass splits into equal pieces
  while (rem > 1 && b - s > R.close_max * (1 - 1e-12)) {
    std::function<double(double)> g = [&](double t) { return mass(s, t); };
    double far = std::min(b - R.min_last, s + R.max_width);
    double tlo = s + R.lo, thi = std::min(s + R.hi, far);
    if (thi <= tlo) break;
    double mlo = g(tlo), mhi = g(thi);
    int kmin = std::max(1, static_cast<int>(std::ceil(mlo - R.itol)));
    int kmax = std::min(rem - 1, static_cast<int>(std::floor(mhi + R.itol)));
    double t, ta, tb, ga, gb;
    int k;
    if (kmin <= kmax) {
      k = std::clamp(static_cast<int>(std::lround(0.5 * (mlo + mhi))), kmin, kmax);
      ta = tlo, tb = thi, ga = mlo, gb = mhi;
    } else {
      if (R.strict)
        throw HypothesisViolated("no integer mass is reachable inside the splitting window",
                                 {{"start", s}, {"mass_low", mlo}, {"mass_high", mhi}, {"remaining", rem}});
      double mfar = far > thi ? g(far) : mhi;
      if (kmin <= rem - 1 && mfar >= kmin - R.itol) {
        k = kmin;
        ta = thi, tb = far, ga = mhi, gb = mfar;
      } else if (std::min(static_cast<int>(std::floor(mlo + R.itol)), rem - 1) >= 1) {
        k = std::min(static_cast<int>(std::floor(mlo + R.itol)), rem - 1);
        ta = s, tb = tlo, ga = 0.0, gb = mlo;
      } else {
        break;
      }
    }
    t = solve_increasing(g, ta, tb, ga, gb, k, R.ftol);
    out.push_back({s, t, k, g(t)});
    s = t;
    rem -= k;
  }
  if (b - s > R.max_width * (1 + 1e-12))
    throw HypothesisViolated("remaining piece is too wide to be convex", {{"width", b - s}, {"remaining", rem}});
  out.push_back({s, b, rem, mass(s, b)});
  return out;
}

CutRule wedge_rule(double N, double tol) {
  CutRule R{kPi / 6, kPi / 3, kPi / 2, kPi / 6};
  R.max_width = kPi / 2;
  R.strict = true;
  R.itol = 0.01 * N * tol;
  R.ftol = std::max(1e-11, 0.01 * N * tol);
  return R;
}

double measure_units(const WeightSpec& w, const std::vector<HalfSpace>& hs, int N, double mtol) {
  return N * region_integral(w, hs, mtol).value;
}

double cone_units(const WeightSpec& w, const std::vector<Vec>& rays, int N, double mtol) {
  return N * cone_measure(w, rays, mtol).value;
}

constexpr double kMeasureTol = 1e-12;

}  // namespace

bool in_wedge(const Vec& x, const Wedge& W, double eps) {
  double r = std::hypot(x[0], x[1]);
  if (r < eps) return true;
  double th = std::atan2(x[1], x[0]) - W.alpha;
  th = std::fmod(th, 2 * kPi);
  if (th < 0) th += 2 * kPi;
  double slack = eps / r;
  return th <= W.width() + slack || th >= 2 * kPi - slack;
}

std::vector<HalfSpace> wedge_halfspaces(int d, const Wedge& W) { return plane_wedge(d, 0, 1, W.alpha, W.beta); }

Vec balancing_pole(const WeightSpec& w, double tol) {
  const int d = w.dim();
  auto f = [&](const Vec& x) { return cap_measure(w, x, kPi / 2, 0.01 * tol).value - 0.5; };
  Vec e = unit_basis(d, d - 1), u = unit_basis(d, 0);
  auto path = [&](double t) -> Vec { return std::cos(kPi * t) * e + std::sin(kPi * t) * u; };
  double f0 = f(e);
  if (std::abs(f0) <= tol) return e;
  // f(path(1)) = -f0, so a sign change exists on [0, 1].
  double a = 0, b = 1;
  for (int it = 0; it < 200; ++it) {
    double m = 0.5 * (a + b);
    double fm = f(path(m));
    if (std::abs(fm) <= tol) return path(m);
    if ((fm > 0) == (f0 > 0))
      a = m;
    else
      b = m;
  }
  return path(0.5 * (a + b));
}

std::vector<Wedge> wedge_split(const WeightSpec& w, int N, double tol) {
  const int d = w.dim();
  if (N < 1) throw InvalidArgument("N must be positive");
  auto mass = [&](double s, double t) { return measure_units(w, plane_wedge(d, 0, 1, s, t), N, kMeasureTol); };
  auto cuts = cut_sequence(mass, 0.0, 2 * kPi, N, wedge_rule(N, tol));
  std::vector<Wedge> out;
  for (const auto& c : cuts) out.push_back({c.s, c.t});
  return out;
}

// ---------------------------------------------------------------- simplexes

namespace {

struct RawPiece {
  std::vector<Vec> rays;
  int k;
};

using RayMass = std::function<double(const std::vector<Vec>&)>;

std::vector<RawPiece> admissible_hemisphere(int k, const RayMass& M, int U, const CutRule& rule, bool mirror);

// Admissible simplexes covering S^{k-1}; M gives count units of a cone.
std::vector<RawPiece> admissible_sphere(int k, const RayMass& M, int U, const CutRule& rule, bool mirror) {
  if (U % 2 != 0) throw InvalidArgument("hemisphere split needs an even number of units", {{"units", U}});
  auto hemi_rays = [&](const Mat& Q) {
    std::vector<Vec> r;
    for (int j = 0; j < k - 1; ++j) {
      r.push_back(Q * unit_basis(k, j));
      r.push_back(-(Q * unit_basis(k, j)));
    }
    r.push_back(Q * unit_basis(k, k - 1));
    return r;
  };
  auto f = [&](const Vec& p) { return M(hemi_rays(rotation_to(p))) - 0.5 * U; };
  Vec p = unit_basis(k, k - 1);
  double f0 = f(p);
  if (std::abs(f0) > rule.itol) {
    mirror = false;
    Vec e = p, u = unit_basis(k, 0);
    double a = 0, b = 1;
    for (int it = 0; it < 100 && std::abs(f(p)) > rule.itol; ++it) {
      double m = 0.5 * (a + b);
      p = std::cos(kPi * m) * e + std::sin(kPi * m) * u;
      if ((f(p) > 0) == (f0 > 0))
        a = m;
      else
        b = m;
    }
  }
  Mat Q = rotation_to(p);
  std::vector<RawPiece> out;
  std::vector<RawPiece> upper;
  for (int sg : {1, -1}) {
    Mat D = Mat::Identity(k, k);
    D(k - 1, k - 1) = sg;
    Mat S = Q * D;
    std::vector<RawPiece> local;
    if (sg == -1 && mirror) {
      local = upper;
    } else {
      RayMass Ms = [&](const std::vector<Vec>& r) { return M(map_rays(S, r)); };
      local = admissible_hemisphere(k, Ms, U / 2, rule, mirror);
      if (sg == 1) upper = local;
    }
    for (auto& pc : local) out.push_back({map_rays(S, pc.rays), pc.k});
  }
  return out;
}

// Admissible simplexes covering {x_k >= 0} in R^k.
std::vector<RawPiece> admissible_hemisphere(int k, const RayMass& M, int U, const CutRule& rule, bool mirror) {
  Vec pole = unit_basis(k, k - 1);
  if (k == 3) {
    auto mass = [&](double s, double t) { return M({plane_dir(3, 0, 1, s), plane_dir(3, 0, 1, t), pole}); };
    auto cuts = cut_sequence(mass, 0.0, 2 * kPi, U, rule);
    std::vector<RawPiece> out;
    for (const auto& c : cuts) out.push_back({{plane_dir(3, 0, 1, c.s), plane_dir(3, 0, 1, c.t), pole}, c.k});
    return out;
  }
  auto lift = [&](const std::vector<Vec>& r) {
    std::vector<Vec> o;
    for (const auto& x : r) {
      Vec y = Vec::Zero(k);
      y.head(k - 1) = x;
      o.push_back(y);
    }
    o.push_back(pole);
    return o;
  };
  RayMass Mlow = [&](const std::vector<Vec>& r) { return M(lift(r)); };
  auto sub = admissible_sphere(k - 1, Mlow, U, rule, mirror);
  std::vector<RawPiece> out;
  for (auto& pc : sub) out.push_back({lift(pc.rays), pc.k});
  return out;
}

bool fully_reflection_invariant(const WeightSpec& w) {
  for (int j = 0; j < w.dim(); ++j)
    if (!w.reflection_invariant(j)) return false;
  return true;
}

SimplexPiece make_piece(const WeightSpec& w, std::vector<Vec> rays, int k, int N, const std::string& source) {
  SimplexPiece p;
  for (auto& r : rays) r.normalize();
  p.rays = std::move(rays);
  p.k = k;
  p.measure = cone_measure(w, p.rays, kMeasureTol).value;
  p.simplex = static_cast<int>(p.rays.size()) == w.dim();
  if (p.simplex) p.separation = GeodesicSimplex::separation_of(p.rays);
  p.provenance = {{"source", source}, {"N", N}};
  return p;
}

}  // namespace

std::vector<SimplexPiece> admissible_simplex_partition(const WeightSpec& w, int N, double tol) {
  const int d = w.dim();
  if (d < 3) throw InvalidArgument("admissible simplexes need d >= 3");
  if (N % (1 << (d - 2)) != 0)
    throw InvalidArgument("N must be divisible by 2^(d-2)", {{"N", N}, {"d", d}});
  RayMass M = [&](const std::vector<Vec>& r) { return cone_units(w, r, N, kMeasureTol); };
  auto raw = admissible_sphere(d, M, N, wedge_rule(N, tol), fully_reflection_invariant(w));
  std::vector<SimplexPiece> out;
  for (auto& p : raw) out.push_back(make_piece(w, p.rays, p.k, N, "admissible"));
  return out;
}

std::vector<SimplexPiece> orthant_partition(const WeightSpec& w, int N, double /*tol*/) {
  const int d = w.dim();
  if (!fully_reflection_invariant(w)) throw SymmetryMissing("orthant partition needs a reflection-invariant weight");
  if (N % (1 << d) != 0) throw InvalidArgument("N must be divisible by 2^d", {{"N", N}, {"d", d}});
  std::vector<SimplexPiece> out;
  for (const auto& s : symmetry_signs(d, PartitionOptions::Symmetry::Z2)) {
    std::vector<Vec> rays;
    for (int j = 0; j < d; ++j) rays.push_back(s[j] * unit_basis(d, j));
    SimplexPiece p;
    p.rays = rays;
    p.k = N >> d;
    p.measure = 1.0 / (1 << d);
    p.separation = 1.0;
    p.provenance = {{"source", "orthant"}, {"N", N}};
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SimplexPiece> strongly_separated_partition(const WeightSpec& w, int N, double tol) {
  const int d = w.dim();
  if (d != 3 && d != 4) throw InvalidArgument("strongly separated partitions are built for d = 3 and d = 4");
  auto wedges = wedge_split(w, N, tol);
  std::vector<SimplexPiece> out;
  for (const auto& W : wedges) {
    const double beta = W.width();
    Mat Rz = plane_rotation(d, 0, 1, W.alpha);
    // built directly at the wedge angles so that edges on coordinate planes
    // stay exactly on them
    Vec e1 = plane_dir(d, 0, 1, W.alpha);
    Vec far = plane_dir(d, 0, 1, W.beta);
    int k0 = static_cast<int>(std::lround(measure_units(w, wedge_halfspaces(d, W), N, kMeasureTol)));
    std::vector<Transform> chain;
    Transform td;
    td.kind = Transform::Kind::Dilation;
    td.alpha = beta;
    Transform tr;
    tr.kind = Transform::Kind::Rotation;
    tr.matrix = Rz;
    chain = {td, tr};
    auto add = [&](std::vector<Vec> local, int k) {
      SimplexPiece p = make_piece(w, local, k, N, "separated");
      p.chain = chain;
      p.provenance["wedge"] = {W.alpha, W.beta};
      out.push_back(std::move(p));
    };
    if (k0 <= 1) {
      std::vector<Vec> lune = {e1, far};
      for (int j = 2; j < d; ++j) {
        lune.push_back(unit_basis(d, j));
        lune.push_back(-unit_basis(d, j));
      }
      add(lune, k0);
      continue;
    }
    if (d == 3) {
      // split the lune by a point on its far meridian: the image under T_beta
      // of (0, sin th, cos th)
      Vec e3 = unit_basis(3, 2);
      double cb, sb;
      cos_sin(beta, cb, sb);
      auto zeta = [&](double th) {
        Vec z = std::sin(th) * far + std::cos(th) * sb * e3;
        return Vec(z.normalized());
      };
      std::function<double(double)> m = [&](double th) { return cone_units(w, {e1, e3, zeta(th)}, N, kMeasureTol); };
      double a = kPi / 6, b = 5 * kPi / 6;
      double ma = m(a), mb = m(b);
      int kmin = std::max(1, static_cast<int>(std::ceil(ma - 1e-9))), kmax = std::min(k0 - 1, static_cast<int>(std::floor(mb + 1e-9)));
      if (kmin > kmax) {
        a = 1e-3, b = kPi - 1e-3;
        ma = m(a), mb = m(b);
        kmin = std::max(1, static_cast<int>(std::ceil(ma - 1e-9)));
        kmax = std::min(k0 - 1, static_cast<int>(std::floor(mb + 1e-9)));
        if (kmin > kmax) throw HypothesisViolated("lune cannot be split into integer masses", {{"wedge", {W.alpha, W.beta}}});
      }
      int k = std::clamp(static_cast<int>(std::lround(0.5 * (ma + mb))), kmin, kmax);
      double th = solve_increasing(m, a, b, ma, mb, k, std::max(1e-11, 0.01 * N * tol));
      Vec z = zeta(th);
      add({e1, e3, z}, k);
      add({e1, -e3, z}, k0 - k);
    } else {
      Vec e2b = far;
      auto eta = [](double g) { return plane_dir(4, 2, 3, g); };
      auto mass = [&](double s, double t) { return cone_units(w, {e1, e2b, eta(s), eta(t)}, N, kMeasureTol); };
      CutRule R = wedge_rule(N, tol);
      R.strict = false;
      R.max_width = kPi - 1e-6;
      for (const auto& c : cut_sequence(mass, 0.0, 2 * kPi, k0, R)) add({e1, e2b, eta(c.s), eta(c.t)}, c.k);
    }
  }
  return out;
}

// ---------------------------------------------------------------- refinement

namespace {

// One truncation q -> O + u (q - O), u in [u0, u1].
struct Level {
  Vec O;
  double u0, u1;
};

std::vector<Vec> dedupe(std::vector<Vec> pts) {
  std::vector<Vec> out;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).norm() < 1e-14) dup = true;
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vec> lift_points(const std::vector<Vec>& pts, const std::vector<Level>& levels) {
  std::vector<Vec> cur = pts;
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    std::vector<Vec> nxt;
    for (const auto& q : cur) {
      nxt.push_back(it->O + it->u0 * (q - it->O));
      nxt.push_back(it->O + it->u1 * (q - it->O));
    }
    cur = dedupe(std::move(nxt));
  }
  return cur;
}

double dist_to_affine(const Vec& O, const std::vector<Vec>& F) {
  if (F.size() == 1) return (O - F[0]).norm();
  Eigen::MatrixXd B(O.size(), F.size() - 1);
  for (size_t i = 1; i < F.size(); ++i) B.col(i - 1) = F[i] - F[0];
  Eigen::VectorXd v = O - F[0];
  Eigen::VectorXd c = B.colPivHouseholderQr().solve(v);
  return (v - B * c).norm();
}

// Volume proxy of a simplex face (Gram determinant).
double face_size(const std::vector<Vec>& F) {
  if (F.size() <= 1) return 0;
  Eigen::MatrixXd B(F[0].size(), F.size() - 1);
  for (size_t i = 1; i < F.size(); ++i) B.col(i - 1) = F[i] - F[0];
  return std::sqrt(std::max(0.0, (B.transpose() * B).determinant()));
}

struct Refiner {
  const WeightSpec& w;
  int N;
  double h;  // target cell size on the sphere
  const PartitionOptions& opt;
  Mat A, Ainv;
  std::vector<ConvexCell> out;

  double units(const std::vector<Vec>& pts) const {
    std::vector<Vec> rays;
    for (const auto& p : pts) rays.push_back(p.normalized());
    return cone_units(w, rays, N, opt.measure_tol);
  }

  void emit(const std::vector<Vec>& pts, int k, double mass) {
    std::vector<Vec> base, rays;
    for (const auto& p : pts) {
      base.push_back(Ainv * p);
      rays.push_back(p.normalized());
    }
    Transform lin;
    lin.kind = Transform::Kind::Linear;
    lin.matrix = A;
    Transform rad;
    rad.kind = Transform::Kind::Radial;
    ConvexCell c(std::move(base), {lin, rad}, std::move(rays));
    c.k = k;
    c.measure = mass / N;
    out.push_back(std::move(c));
  }

  CutRule rule(double rho) const {
    CutRule R{rho, 3 * rho, 4 * rho, 2 * rho};
    R.itol = 0.01 * N * opt.tol;
    R.ftol = std::max(1e-11, 0.01 * N * opt.tol);
    return R;
  }

  void run(const std::vector<Vec>& P, const std::vector<Level>& levels, int k, double scale, double known_mass) {
    const int m = static_cast<int>(P.size()) - 1;
    if (k <= 1 || m == 0) {
      emit(lift_points(P, levels), k, known_mass);
      return;
    }
    int apex = 0;
    if (m >= 2) {
      double best = -1;
      for (int i = 0; i <= m; ++i) {
        std::vector<Vec> F;
        for (int j = 0; j <= m; ++j)
          if (j != i) F.push_back(P[j]);
        double s = face_size(F);
        if (s > best) best = s, apex = i;
      }
    }
    const Vec O = P[apex];
    std::vector<Vec> F;
    for (int j = 0; j <= m; ++j)
      if (j != apex) F.push_back(P[j]);
    Vec cen = Vec::Zero(P[0].size());
    for (const auto& p : P) cen += p;
    cen /= P.size();
    double rnorm = 0;
    for (const auto& q : lift_points({cen}, levels)) rnorm = std::max(rnorm, q.norm());
    double H = dist_to_affine(O, F) * scale;
    double rho = h * rnorm / H;

    auto frustum = [&](double u0, double u1) {
      std::vector<Vec> pts;
      for (const auto& q : F) {
        pts.push_back(O + u0 * (q - O));
        pts.push_back(O + u1 * (q - O));
      }
      return dedupe(std::move(pts));
    };
    auto mass = [&](double u0, double u1) { return units(lift_points(frustum(u0, u1), levels)); };
    auto cuts = cut_sequence(mass, 0.0, 1.0, k, rule(rho));
    for (const auto& c : cuts) {
      if (m == 1) {
        if (opt.equal_mass && c.k > 1) {
          split_equal(frustum(c.s, c.t), levels, c.k);
        } else {
          emit(lift_points(frustum(c.s, c.t), levels), c.k, c.mass);
        }
        continue;
      }
      auto sub = levels;
      sub.push_back({O, c.s, c.t});
      run(F, sub, c.k, scale * c.t, c.mass);
    }
  }

  // Cuts a segment region into k pieces of one unit each.
  void split_equal(const std::vector<Vec>& seg, const std::vector<Level>& levels, int k) {
    const Vec a = seg[0], b = seg[1];
    auto pt = [&](double t) { return Vec(a + t * (b - a)); };
    auto mass = [&](double s, double t) { return units(lift_points({pt(s), pt(t)}, levels)); };
    double s = 0;
    double ftol = std::max(1e-11, 0.01 * N * opt.tol);
    for (int i = 0; i < k - 1; ++i) {
      std::function<double(double)> g = [&](double t) { return mass(s, t); };
      double t = solve_increasing(g, s, 1.0, 0.0, g(1.0), 1.0, ftol);
      emit(lift_points({pt(s), pt(t)}, levels), 1, g(t));
      s = t;
    }
    emit(lift_points({pt(s), pt(1.0)}, levels), 1, mass(s, 1.0));
  }
};

}  // namespace

std::vector<ConvexCell> refine_surface_simplex(const WeightSpec& w, const std::vector<Vec>& spanning, int N,
                                               int k_total, double r, const PartitionOptions& opt) {
  const int d = w.dim();
  if (static_cast<int>(spanning.size()) != d) throw InvalidArgument("a surface simplex needs d spanning vectors");
  Refiner R{w, N, opt.kappa * r, opt, Mat(d, d), Mat(d, d), {}};
  for (int j = 0; j < d; ++j) R.A.col(j) = spanning[j].normalized();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(R.A);
  if (!lu.isInvertible()) throw InvalidArgument("spanning vectors are linearly dependent");
  R.Ainv = lu.inverse();
  std::vector<Vec> P;
  for (int j = 0; j < d; ++j) P.push_back(R.A.col(j));
  R.run(P, {}, k_total, 1.0, k_total);
  return std::move(R.out);
}

// ---------------------------------------------------------------- pipeline

std::vector<Eigen::VectorXd> symmetry_signs(int d, PartitionOptions::Symmetry s) {
  std::vector<Eigen::VectorXd> out;
  if (s == PartitionOptions::Symmetry::None) {
    out.push_back(Eigen::VectorXd::Ones(d));
  } else if (s == PartitionOptions::Symmetry::Tau) {
    out.push_back(Eigen::VectorXd::Ones(d));
    Eigen::VectorXd t = Eigen::VectorXd::Ones(d);
    t[d - 1] = -1;
    out.push_back(t);
  } else {
    for (int code = 0; code < (1 << d); ++code) {
      Eigen::VectorXd t(d);
      for (int j = 0; j < d; ++j) t[j] = (code >> j) & 1 ? -1.0 : 1.0;
      out.push_back(t);
    }
  }
  return out;
}

namespace {

ConvexCell reflect_cell(const ConvexCell& c, const Eigen::VectorXd& s) {
  std::vector<Vec> rays;
  for (const auto& r : c.rays()) rays.push_back(Vec(s.cwiseProduct(Eigen::VectorXd(r))));
  auto chain = c.chain();
  if (!s.isOnes()) {
    Transform t;
    t.kind = Transform::Kind::Linear;
    t.matrix = s.asDiagonal();
    chain.push_back(t);
  }
  ConvexCell out = c.facets().empty() ? ConvexCell::from_rays_and_facets(rays, {})
                                      : ConvexCell(c.base(), std::move(chain), std::move(rays));
  out.k = c.k;
  out.measure = c.measure;
  out.meta = c.meta;
  return out;
}

ConvexCell whole_sphere(int d) {
  std::vector<Vec> rays;
  for (int j = 0; j < d; ++j) {
    rays.push_back(unit_basis(d, j));
    rays.push_back(-unit_basis(d, j));
  }
  ConvexCell c = ConvexCell::from_rays_and_facets(rays, {});
  c.k = 1;
  c.measure = 1.0;
  return c;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json transform_json(const Transform& t) {
  json j = {{"kind", transform_kind_name(t.kind)}};
  if (t.kind == Transform::Kind::Linear || t.kind == Transform::Kind::Rotation) {
    json m = json::array();
    for (int i = 0; i < t.matrix.rows(); ++i) m.push_back(vec_json(t.matrix.row(i).transpose()));
    j["matrix"] = m;
  }
  if (t.kind == Transform::Kind::Dilation) j["alpha"] = t.alpha;
  if (t.kind == Transform::Kind::ConeExtension) {
    j["axis"] = t.axis;
    j["poles"] = t.poles;
  }
  return j;
}

const char* symmetry_name(PartitionOptions::Symmetry s) {
  switch (s) {
    case PartitionOptions::Symmetry::None: return "none";
    case PartitionOptions::Symmetry::Tau: return "tau";
    case PartitionOptions::Symmetry::Z2: return "z2";
  }
  return "none";
}

// Arcs on the circle (d = 2) sized ~ kappa r.
std::vector<ConvexCell> circle_cells(const WeightSpec& w, int N, double r, const PartitionOptions& opt) {
  auto mass = [&](double s, double t) { return measure_units(w, plane_wedge(2, 0, 1, s, t), N, opt.measure_tol); };
  double h = std::min(opt.kappa * r, kPi / 8);
  CutRule R{h, 3 * h, 4 * h, 2 * h};
  R.max_width = kPi - 1e-9;
  R.itol = 0.01 * N * opt.tol;
  R.ftol = std::max(1e-11, 0.01 * N * opt.tol);
  std::vector<ConvexCell> out;
  for (const auto& c : cut_sequence(mass, 0.0, 2 * kPi, N, R)) {
    if (opt.equal_mass && c.k > 1) {
      double s = c.s;
      for (int i = 0; i < c.k; ++i) {
        double t = c.t;
        if (i < c.k - 1) {
          std::function<double(double)> g = [&](double x) { return mass(s, x); };
          t = solve_increasing(g, s, c.t, 0.0, g(c.t), 1.0, R.ftol);
        }
        ConvexCell cell = ConvexCell::from_rays({plane_dir(2, 0, 1, s), plane_dir(2, 0, 1, t)});
        cell.k = 1;
        cell.measure = mass(s, t) / N;
        out.push_back(std::move(cell));
        s = t;
      }
      continue;
    }
    ConvexCell cell = ConvexCell::from_rays({plane_dir(2, 0, 1, c.s), plane_dir(2, 0, 1, c.t)});
    cell.k = c.k;
    cell.measure = c.mass / N;
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<ConvexCell> refine_pieces(const WeightSpec& w, const std::vector<SimplexPiece>& pieces, int N, double r,
                                      const PartitionOptions& opt) {
  std::vector<ConvexCell> out;
  for (size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    if (!p.simplex || p.k <= 1) {
      ConvexCell c = ConvexCell::from_rays(p.rays);
      c.k = p.k;
      c.measure = p.measure;
      c.meta = {{"piece", i}};
      out.push_back(std::move(c));
      continue;
    }
    auto cells = refine_surface_simplex(w, p.rays, N, p.k, r, opt);
    for (auto& c : cells) {
      c.meta = {{"piece", i}};
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

std::vector<ConvexCell> Partition::expanded_cells() const {
  if (symmetry == PartitionOptions::Symmetry::None) return cells;
  std::vector<ConvexCell> out;
  for (const auto& s : symmetry_signs(dim(), symmetry))
    for (const auto& c : cells) out.push_back(reflect_cell(c, s));
  return out;
}

int Partition::locate(const Vec& x, double eps) const {
  auto all = expanded_cells();
  for (size_t i = 0; i < all.size(); ++i)
    if (all[i].contains(x, eps)) return static_cast<int>(i);
  return -1;
}

json Partition::to_json() const {
  json cs = json::array();
  for (const auto& c : cells) {
    json base = json::array(), rays = json::array(), chain = json::array();
    for (const auto& b : c.base()) base.push_back(vec_json(b));
    for (const auto& r : c.rays()) rays.push_back(vec_json(r));
    for (const auto& t : c.chain()) chain.push_back(transform_json(t));
    cs.push_back({{"base", base},
                  {"chain", chain},
                  {"rays", rays},
                  {"k", c.k},
                  {"measure", c.measure},
                  {"inball", {{"center", vec_json(c.inball.center)}, {"radius", c.inball.radius}}},
                  {"circumball", {{"center", vec_json(c.circumball.center)}, {"radius", c.circumball.radius}}},
                  {"meta", c.meta}});
  }
  return {{"N", N},
          {"dim", dim()},
          {"r", r},
          {"weight", weight.to_json()},
          {"symmetry", symmetry_name(symmetry)},
          {"diagnostics",
           {{"max_circumradius", diag.max_circumradius},
            {"min_inradius", diag.min_inradius},
            {"max_shape_ratio", diag.max_shape_ratio},
            {"integrality_residual", diag.integrality_residual},
            {"total_measure", diag.total_measure},
            {"simplex_count", diag.simplex_count},
            {"case", diag.case_used},
            {"simplexes", diag.simplexes_used}}},
          {"cells", cs}};
}

std::string Partition::to_obj(int resolution) const {
  if (dim() != 3) throw InvalidArgument("OBJ export is available for S^2 partitions only");
  resolution = std::max(1, resolution);
  std::ostringstream os;
  os.precision(17);
  long nv = 0;
  auto all = expanded_cells();
  for (size_t ci = 0; ci < all.size(); ++ci) {
    const auto& c = all[ci];
    os << "o cell_" << ci << "\n";
    Vec ctr = c.inball.center;
    Mat T = tangent_basis(ctr);
    std::vector<std::pair<double, Vec>> ring;
    for (const auto& r : c.rays()) {
      Vec v = T.transpose() * r;
      ring.push_back({std::atan2(v[1], v[0]), r});
    }
    std::sort(ring.begin(), ring.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i < ring.size(); ++i) {
      const Vec& A = ctr;
      const Vec& B = ring[i].second;
      const Vec& C = ring[(i + 1) % ring.size()].second;
      // barycentric grid on the flat triangle, projected to the sphere
      std::map<std::pair<int, int>, long> id;
      for (int a = 0; a <= resolution; ++a)
        for (int b = 0; a + b <= resolution; ++b) {
          double u = double(a) / resolution, v = double(b) / resolution;
          Vec p = ((1 - u - v) * A + u * B + v * C).normalized();
          os << "v " << p[0] << " " << p[1] << " " << p[2] << "\n";
          id[{a, b}] = ++nv;
        }
      for (int a = 0; a < resolution; ++a)
        for (int b = 0; a + b < resolution; ++b) {
          os << "f " << id[{a, b}] << " " << id[{a + 1, b}] << " " << id[{a, b + 1}] << "\n";
          if (a + b + 1 < resolution)
            os << "f " << id[{a + 1, b}] << " " << id[{a + 1, b + 1}] << " " << id[{a, b + 1}] << "\n";
        }
    }
  }
  return os.str();
}

double hypothesis_radius(const WeightSpec& w, int N, double rel) {
  if (N <= 1) return kPi;
  const int d = w.dim();
  const double target = 1.0 / N;
  std::function<double(double)> cap;
  if (w.kind() == WeightSpec::Kind::Constant)
    cap = [&](double r) { return cap_measure(w, unit_basis(d, d - 1), r, 1e-14).value; };
  else
    cap = [&](double r) { return min_cap(w, r, 60).cap; };
  // g is close to linear in log r, so secant steps in log r converge fast.
  auto g = [&](double lr) { return std::log(std::max(cap(std::exp(lr)), 1e-300)) - std::log(target); };
  double b = std::log(kPi / 2), gb = g(b);
  double a = b, ga = gb;
  if (gb < 0) {
    a = b, ga = gb;
    b = std::log(kPi), gb = -std::log(target);
  } else {
    do {
      b = a, gb = ga;
      a -= std::log(4.0);
      ga = g(a);
    } while (ga >= 0 && a > std::log(1e-8));
  }
  int side = 0;
  for (int it = 0; it < 60 && b - a > rel; ++it) {
    double t = b - gb * (b - a) / (gb - ga);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    double gt = g(t);
    if (gt < 0) {
      a = t, ga = gt;
      if (side == -1) gb *= 0.5;
      side = -1;
    } else {
      b = t, gb = gt;
      if (side == 1) ga *= 0.5;
      side = 1;
    }
    if (std::abs(gt) < 0.1 * rel) {
      b = t;
      break;
    }
  }
  return std::exp(b);
}

std::vector<ConvexCell> equal_mass_lunes(const WeightSpec& w, int N, const PartitionOptions& opt) {
  const int d = w.dim();
  if (N == 1) return {whole_sphere(d)};
  // Cells are wedges in the (x_{d-1}, x_d) angle: the lower-dimensional
  // factors of the induction each consist of a single cell.
  const int i = d - 2, j = d - 1;
  auto mass = [&](double s, double t) { return measure_units(w, plane_wedge(d, i, j, s, t), N, opt.measure_tol); };
  double ftol = std::max(1e-11, 0.01 * N * opt.tol);
  auto cell_of = [&](double s, double t, double m) {
    std::vector<Vec> rays;
    for (int q = 0; q < i; ++q) {
      rays.push_back(unit_basis(d, q));
      rays.push_back(-unit_basis(d, q));
    }
    rays.push_back(plane_dir(d, i, j, s));
    rays.push_back(plane_dir(d, i, j, t));
    ConvexCell c = ConvexCell::from_rays_and_facets(rays, plane_wedge(d, i, j, s, t));
    c.k = 1;
    c.measure = m / N;
    return c;
  };
  std::vector<ConvexCell> out;
  double s = 0;
  for (int q = 0; q < N - 1; ++q) {
    double far = std::min(s + kPi, 2 * kPi);
    std::function<double(double)> g = [&](double t) { return mass(s, t); };
    double gf = g(far);
    if (gf < 1.0 - ftol) throw HypothesisViolated("an equal-mass lune would be wider than pi", {{"start", s}});
    double t = solve_increasing(g, s, far, 0.0, gf, 1.0, ftol);
    out.push_back(cell_of(s, t, g(t)));
    s = t;
  }
  if (2 * kPi - s > kPi + 1e-12) throw HypothesisViolated("the last equal-mass lune is wider than pi");
  out.push_back(cell_of(s, 2 * kPi, mass(s, 2 * kPi)));
  return out;
}

PartitionDiagnostics diagnose(const Partition& P, bool remeasure) {
  PartitionDiagnostics D = P.diag;
  const int orbit = static_cast<int>(symmetry_signs(P.dim(), P.symmetry).size());
  D.max_circumradius = 0;
  D.min_inradius = INFINITY;
  D.max_shape_ratio = 0;
  D.integrality_residual = 0;
  D.total_measure = 0;
  for (const auto& c : P.cells) {
    double m = remeasure && !c.facets().empty() ? cell_measure(P.weight, c, kMeasureTol).value : c.measure;
    D.total_measure += orbit * m;
    D.integrality_residual = std::max(D.integrality_residual, std::abs(P.N * m - c.k));
    D.max_circumradius = std::max(D.max_circumradius, c.circumball.radius);
    D.min_inradius = std::min(D.min_inradius, c.inball.radius);
    if (c.inball.radius > 0) D.max_shape_ratio = std::max(D.max_shape_ratio, c.circumball.radius / c.inball.radius);
    else D.max_shape_ratio = INFINITY;
  }
  return D;
}

Partition regular_convex_partition(const WeightSpec& w, int N, double r, const PartitionOptions& opt) {
  using S = PartitionOptions::Symmetry;
  using Simp = PartitionOptions::Simplexes;
  const int d = w.dim();
  if (N < 1) throw InvalidArgument("N must be positive", {{"N", N}});
  Partition P;
  P.N = N;
  P.weight = w;
  if (N == 1) {
    P.cells = {whole_sphere(d)};
    P.r = kPi;
    P.diag = diagnose(P, false);
    P.diag.case_used = "trivial";
    return P;
  }
  if (r <= 0) {
    r = hypothesis_radius(w, N);
  } else {
    double m = min_cap(w, r, 60).cap;
    if (m < (1.0 / N) * (1 - 1e-6))
      throw HypothesisViolated("caps of radius r are lighter than 1/N", {{"r", r}, {"min_cap", m}, {"N", N}});
  }
  P.r = r;
  P.symmetry = opt.symmetry;
  if (opt.symmetry != S::None && !fully_reflection_invariant(w))
    throw SymmetryMissing("the weight is not invariant under the requested reflections");

  auto finish = [&](const std::string& case_used, const std::string& simp) {
    P.diag = diagnose(P, true);
    P.diag.case_used = case_used;
    P.diag.simplexes_used = simp;
    int sum = 0;
    int orbit = static_cast<int>(symmetry_signs(d, P.symmetry).size());
    for (const auto& c : P.cells) sum += c.k;
    if (sum * orbit != N) throw IntegralityDrift("multiplicities do not sum to N", {{"sum", sum * orbit}, {"N", N}});
    // remeasuring alone is uncertain by N * measure_tol in count units
    double bound = std::max(opt.final_drift, 100.0 * N * opt.measure_tol);
    if (P.diag.integrality_residual > bound || std::abs(P.diag.total_measure - 1) > opt.final_drift)
      throw IntegralityDrift("accumulated integrality drift exceeds the final bound",
                             {{"residual", P.diag.integrality_residual}, {"total", P.diag.total_measure}});
    return P;
  };

  if (d == 2) {
    if (opt.symmetry != S::None) throw InvalidArgument("symmetric modes need d >= 3");
    P.cells = circle_cells(w, N, r, opt);
    return finish("two", "arcs");
  }

  if (opt.use_case == PartitionOptions::Case::One) {
    if (opt.symmetry != S::None) throw InvalidArgument("equal-mass lunes have no symmetric mode");
    P.cells = equal_mass_lunes(w, N, opt);
    return finish("one", "lunes");
  }

  const int group = 1 << d;
  if (opt.symmetry == S::Z2) {
    if (N % group != 0) throw InvalidArgument("Z2 symmetric mode needs N divisible by 2^d", {{"N", N}});
    std::vector<Vec> rays;
    for (int j = 0; j < d; ++j) rays.push_back(unit_basis(d, j));
    SimplexPiece p;
    p.rays = rays;
    p.k = N / group;
    p.measure = 1.0 / group;
    P.cells = refine_pieces(w, {p}, N, r, opt);
    return finish("two", "orthant");
  }
  if (opt.symmetry == S::Tau) {
    if (N % 2 != 0) throw InvalidArgument("tau symmetric mode needs even N", {{"N", N}});
    std::vector<SimplexPiece> pieces;
    if (N % group == 0) {
      for (auto& p : orthant_partition(w, N, opt.tol))
        if (p.rays[d - 1][d - 1] > 0) pieces.push_back(p);
    } else {
      if ((N / 2) % (1 << (d - 3)) != 0) throw InvalidArgument("tau symmetric mode needs N divisible by 2^(d-2)");
      RayMass M = [&](const std::vector<Vec>& rr) { return cone_units(w, rr, N, kMeasureTol); };
      for (auto& raw : admissible_hemisphere(d, M, N / 2, wedge_rule(N, opt.tol), true))
        pieces.push_back(make_piece(w, raw.rays, raw.k, N, "admissible"));
    }
    P.cells = refine_pieces(w, pieces, N, r, opt);
    return finish("two", N % group == 0 ? "orthant" : "admissible");
  }

  // Full sphere: build one fundamental domain where the weight allows it and
  // reflect.
  std::vector<Simp> order;
  if (opt.simplexes == Simp::Auto) {
    if (N % group == 0 && fully_reflection_invariant(w)) order.push_back(Simp::Orthant);
    if (N % (1 << (d - 2)) == 0) order.push_back(Simp::Admissible);
    order.push_back(Simp::Separated);
  } else {
    order.push_back(opt.simplexes);
  }
  for (Simp s : order) {
    try {
      if (s == Simp::Orthant) {
        PartitionOptions o = opt;
        o.symmetry = S::Z2;
        Partition Q = regular_convex_partition(w, N, r, o);
        P.cells = Q.expanded_cells();
        P.symmetry = S::None;
        return finish("two", "orthant");
      }
      if (s == Simp::Admissible) {
        auto pieces = fully_reflection_invariant(w) ? std::vector<SimplexPiece>{} : admissible_simplex_partition(w, N, opt.tol);
        if (pieces.empty()) {
          PartitionOptions o = opt;
          o.symmetry = S::Tau;
          Partition Q = regular_convex_partition(w, N, r, o);
          P.cells = Q.expanded_cells();
          P.symmetry = S::None;
          return finish("two", "admissible");
        }
        P.cells = refine_pieces(w, pieces, N, r, opt);
        return finish("two", "admissible");
      }
      auto pieces = strongly_separated_partition(w, N, opt.tol);
      P.cells = refine_pieces(w, pieces, N, r, opt);
      return finish("two", "separated");
    } catch (const HypothesisViolated&) {
      if (opt.simplexes != Simp::Auto) throw;
    }
  }
  if (opt.use_case == PartitionOptions::Case::Two) throw HypothesisViolated("no simplex partition satisfies the mass windows");
  P.cells = equal_mass_lunes(w, N, opt);
  return finish("one", "lunes");
}

}  // namespace sq
