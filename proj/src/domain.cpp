#include "spherequad/domain.hpp"

#include <cmath>
#include <unordered_map>

#include "spherequad/quadrature.hpp"

namespace sq {

using nlohmann::json;

Domain parse_domain(const std::string& s) {
  if (s == "ball") return Domain::Ball;
  if (s == "simplex") return Domain::Simplex;
  throw InvalidArgument("unknown domain", {{"domain", s}});
}

std::string domain_name(Domain d) { return d == Domain::Ball ? "ball" : "simplex"; }

// ---------------------------------------------------------------- points and metric

Vec DomainPoint::lifted() const {
  const int d = static_cast<int>(coords.size());
  Vec x(d + 1);
  if (domain == Domain::Ball) {
    x.head(d) = coords;
    x[d] = std::sqrt(std::max(0.0, 1.0 - coords.squaredNorm()));
  } else {
    for (int j = 0; j < d; ++j) x[j] = std::sqrt(std::max(0.0, coords[j]));
    x[d] = std::sqrt(std::max(0.0, 1.0 - coords.sum()));
  }
  return x;
}

DomainPoint DomainPoint::from_sphere(Domain dom, const Vec& x) {
  const int d = static_cast<int>(x.size()) - 1;
  DomainPoint p;
  p.domain = dom;
  p.coords = Vec(d);
  for (int j = 0; j < d; ++j) p.coords[j] = dom == Domain::Ball ? x[j] : x[j] * x[j];
  return p;
}

bool DomainPoint::inside(double eps) const {
  if (domain == Domain::Ball) return coords.norm() <= 1 - eps;
  for (int j = 0; j < coords.size(); ++j)
    if (coords[j] < eps) return false;
  return coords.sum() <= 1 - eps;
}

double rho_omega(const DomainPoint& a, const DomainPoint& b) {
  if (a.domain != b.domain || a.coords.size() != b.coords.size())
    throw DomainMismatch("points belong to different domains");
  Vec la = a.lifted(), lb = b.lifted();
  const int d = static_cast<int>(a.coords.size());
  if (a.domain == Domain::Ball)
    return (a.coords - b.coords).norm() + std::abs(std::sqrt(la[d]) - std::sqrt(lb[d]));
  return std::acos(std::clamp(la.dot(lb), -1.0, 1.0));
}

double boundary_distance(const DomainPoint& p) {
  Vec l = p.lifted();
  const int d = static_cast<int>(p.coords.size());
  if (p.domain == Domain::Ball) return std::sqrt(l[d]);
  // nearest point of the face x_j = 0 is at angle arcsin(sqrt x_j)
  return std::asin(std::min(1.0, l.cwiseAbs().minCoeff()));
}

// ---------------------------------------------------------------- weights

DomainWeight DomainWeight::lebesgue(Domain dom, int dim) {
  if (dim < 1 || dim > 3) throw InvalidArgument("domain dimension must be 1, 2 or 3", {{"dim", dim}});
  DomainWeight w;
  w.domain = dom;
  w.dim = dim;
  return w;
}

DomainWeight DomainWeight::ball(int dim, double mu, double p) {
  DomainWeight w = lebesgue(Domain::Ball, dim);
  if (!(mu > -1.0) || !(p > -1.0)) throw InvalidArgument("ball weight exponents not integrable", {{"mu", mu}, {"p", p}});
  w.mu = mu;
  w.p = p;
  return w;
}

DomainWeight DomainWeight::jacobi(std::vector<double> kappa) {
  DomainWeight w = lebesgue(Domain::Simplex, static_cast<int>(kappa.size()) - 1);
  for (double k : kappa)
    if (!(k > -1.0)) throw InvalidArgument("simplex Jacobi exponents must exceed -1");
  w.kappa = std::move(kappa);
  return w;
}

double DomainWeight::eval(const Vec& y) const {
  if (domain == Domain::Ball) {
    double r2 = y.squaredNorm();
    double v = 1;
    if (mu != 0) v *= std::pow(std::max(0.0, 1 - r2), mu);
    if (p != 0) v *= std::pow(std::max(0.0, 1 - std::sqrt(r2)), p);
    return v;
  }
  if (kappa.empty()) return 1;
  double v = std::pow(std::max(0.0, 1 - y.sum()), kappa[dim]);
  for (int j = 0; j < dim; ++j) v *= std::pow(std::max(0.0, y[j]), kappa[j]);
  return v;
}

json DomainWeight::to_json() const {
  json j = {{"domain", domain_name(domain)}, {"dim", dim}};
  if (domain == Domain::Ball) {
    j["mu"] = mu;
    j["p"] = p;
  } else {
    j["kappa"] = kappa;
  }
  return j;
}

DomainWeight DomainWeight::from_json(const json& j) {
  Domain dom = parse_domain(j.at("domain").get<std::string>());
  int dim = j.at("dim").get<int>();
  if (dom == Domain::Ball) return ball(dim, j.value("mu", 0.0), j.value("p", 0.0));
  auto k = j.value("kappa", std::vector<double>{});
  if (k.empty()) return lebesgue(dom, dim);
  return jacobi(k);
}

WeightSpec lift_weight(const DomainWeight& w) {
  if (w.domain == Domain::Ball) return WeightSpec::ball_lift(w.dim + 1, w.mu, w.p);
  std::vector<double> k = w.kappa.empty() ? std::vector<double>(w.dim + 1, 0.0) : w.kappa;
  return WeightSpec::simplex_lift(k);
}

// ---------------------------------------------------------------- domain quadrature

namespace {

// Gauss-Jacobi on [0,1] for t^a (1-t)^b.
void unit_jacobi(int n, double a, double b, std::vector<double>& t, std::vector<double>& wt) {
  const Rule1D& R = gauss_jacobi(n, b, a);
  double s = std::pow(2.0, -a - b - 1);
  t.resize(R.x.size());
  wt.resize(R.x.size());
  for (size_t i = 0; i < R.x.size(); ++i) {
    t[i] = 0.5 * (R.x[i] + 1);
    wt[i] = R.w[i] * s;
  }
}

}  // namespace

DomainQuadrature domain_quadrature(const DomainWeight& w, int degree) {
  const int d = w.dim;
  const int n = degree / 2 + 12;
  DomainQuadrature Q;
  if (w.domain == Domain::Ball) {
    std::vector<double> rt, rw;
    // r^{d-1} (1-r^2)^mu (1-r)^p = r^{d-1} (1-r)^{mu+p} (1+r)^mu
    unit_jacobi(n + (w.mu != std::floor(w.mu) ? 20 : 0), d - 1.0, w.mu + w.p, rt, rw);
    std::vector<Vec> dirs;
    std::vector<double> dw;
    if (d == 1) {
      dirs = {make_vec({1.0}), make_vec({-1.0})};
      dw = {1.0, 1.0};
    } else {
      SphereRule S = sphere_product_rule(std::vector<double>(d, 0.0), degree + 16);
      double sum = 0;
      for (double x : S.weights) sum += x;
      double area = sphere_abs_moment(std::vector<double>(d, 0.0));
      dirs = S.nodes;
      for (double x : S.weights) dw.push_back(x * area / sum);
    }
    for (size_t i = 0; i < rt.size(); ++i) {
      double f = w.mu != 0 ? std::pow(1 + rt[i], w.mu) : 1.0;
      for (size_t k = 0; k < dirs.size(); ++k) {
        Q.nodes.push_back(Vec(rt[i] * dirs[k]));
        Q.weights.push_back(rw[i] * f * dw[k]);
      }
    }
    return Q;
  }
  // y_i = t_i prod_{j<i} (1 - t_j); each t_i carries a Beta weight
  std::vector<double> k = w.kappa.empty() ? std::vector<double>(d + 1, 0.0) : w.kappa;
  std::vector<std::vector<double>> ts(d), ws(d);
  for (int i = 0; i < d; ++i) {
    double b = (d - 1 - i) + k[d];
    for (int l = i + 1; l < d; ++l) b += k[l];
    unit_jacobi(n, k[i], b, ts[i], ws[i]);
  }
  std::vector<int> idx(d, 0);
  while (true) {
    Vec y(d);
    double wt = 1, rest = 1;
    for (int i = 0; i < d; ++i) {
      y[i] = ts[i][idx[i]] * rest;
      rest *= 1 - ts[i][idx[i]];
      wt *= ws[i][idx[i]];
    }
    Q.nodes.push_back(y);
    Q.weights.push_back(wt);
    int i = 0;
    while (i < d && ++idx[i] == static_cast<int>(ts[i].size())) idx[i++] = 0;
    if (i == d) break;
  }
  return Q;
}

double domain_mass(const DomainWeight& w) {
  double s = 0;
  for (double x : domain_quadrature(w, 0).weights) s += x;
  return s;
}

double transfer_constant(Domain dom, int dim) {
  std::vector<double> b(dim + 1, dom == Domain::Ball ? 0.0 : 1.0);
  b[dim] = 1.0;
  return domain_mass(DomainWeight::lebesgue(dom, dim)) / sphere_abs_moment(b);
}

std::vector<std::vector<int>> monomial_exponents(int dim, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(dim, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == dim) {
      out.push_back(e);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      e[i] = a;
      rec(i + 1, left - a);
    }
    e[i] = 0;
  };
  rec(0, n);
  return out;
}

// ---------------------------------------------------------------- rules

namespace {

// Checks that the node set is closed under the sign flips of `g`.
void require_invariant(const std::vector<Vec>& nodes, SymmetryTag g) {
  const int d = static_cast<int>(nodes[0].size());
  const double h = 1e-7;
  auto key = [&](const Vec& x) {
    long long k = 0;
    for (int i = 0; i < d; ++i) k = k * 2000003LL + static_cast<long long>(std::floor(x[i] / h));
    return k;
  };
  std::unordered_map<long long, std::vector<int>> grid;
  for (size_t i = 0; i < nodes.size(); ++i) grid[key(nodes[i])].push_back(static_cast<int>(i));
  auto present = [&](const Vec& y) {
    int total = 1;
    for (int i = 0; i < d; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      Vec z = y;
      int t = code;
      for (int i = 0; i < d; ++i, t /= 3) z[i] += (t % 3 - 1) * h;
      auto it = grid.find(key(z));
      if (it == grid.end()) continue;
      for (int id : it->second)
        if ((nodes[id] - y).norm() < 1e-9) return true;
    }
    return false;
  };
  auto signs = symmetry_signs(d, g == SymmetryTag::Tau ? PartitionOptions::Symmetry::Tau : PartitionOptions::Symmetry::Z2);
  for (const auto& x : nodes)
    for (const auto& s : signs)
      if (!present(Vec(s.cwiseProduct(Eigen::VectorXd(x)))))
        throw SymmetryMissing("the sphere rule is not invariant under the required reflections");
}

}  // namespace

DomainRule project_rule(const CubatureRule& rule, Domain dom, double mirror_tol) {
  if (rule.nodes.empty()) throw InvalidArgument("rule has no nodes");
  const int ds = rule.weight.dim(), dim = ds - 1;
  if (dim < 1) throw InvalidArgument("projection needs a sphere of dimension at least 1");
  SymmetryTag need = dom == Domain::Ball ? SymmetryTag::Tau : SymmetryTag::Z2;
  require_invariant(rule.nodes, need);
  DomainRule out;
  out.domain = dom;
  out.sphere_degree = rule.degree;
  out.sphere_size = rule.size();
  out.sphere_symmetry = rule.symmetry;
  out.report = rule.report;
  out.degree = dom == Domain::Ball ? rule.degree : rule.degree / 2;
  const WeightSpec& w = rule.weight;
  if (dom == Domain::Ball && w.kind() == WeightSpec::Kind::BallLift)
    out.weight = DomainWeight::ball(dim, w.mu(), w.radial_power());
  else if (dom == Domain::Simplex && w.kind() == WeightSpec::Kind::SimplexLift)
    out.weight = DomainWeight::jacobi(w.kappa());
  else
    throw DomainMismatch("the rule's weight is not lifted from this domain", {{"weight", w.describe()}});
  for (const auto& x : rule.nodes) {
    if (dom == Domain::Ball) {
      if (std::abs(x[dim]) < mirror_tol) throw NodeOnMirror("a node lies on the equator", {{"x_last", x[dim]}});
      if (x[dim] > 0) out.nodes.push_back(DomainPoint::from_sphere(dom, x));
    } else {
      bool rep = true;
      for (int j = 0; j <= dim; ++j) {
        if (std::abs(x[j]) < mirror_tol) throw NodeOnMirror("a node lies on a coordinate plane", {{"coordinate", j}});
        rep = rep && x[j] > 0;
      }
      if (rep) out.nodes.push_back(DomainPoint::from_sphere(dom, x));
    }
  }
  const int orbit = dom == Domain::Ball ? 2 : 1 << ds;
  if (out.size() * orbit != rule.size())
    throw SymmetryMissing("orbit count does not match the rule size", {{"representatives", out.size()}, {"N", rule.size()}});
  return out;
}

DomainVerifyReport verify_domain_rule(const DomainRule& r, double tol) {
  if (r.nodes.empty()) throw InvalidArgument("rule has no nodes");
  DomainVerifyReport v;
  const int dim = r.weight.dim;
  DomainQuadrature Q = domain_quadrature(r.weight, r.degree);
  double mass = 0;
  for (double x : Q.weights) mass += x;
  for (const auto& e : monomial_exponents(dim, r.degree)) {
    auto mono = [&](const Vec& y) {
      double p = 1;
      for (int i = 0; i < dim; ++i) p *= std::pow(y[i], e[i]);
      return p;
    };
    double exact = 0, mean = 0;
    for (size_t q = 0; q < Q.nodes.size(); ++q) exact += Q.weights[q] * mono(Q.nodes[q]);
    exact /= mass;
    for (const auto& p : r.nodes) mean += mono(p.coords);
    mean /= r.size();
    v.max_residual = std::max(v.max_residual, std::abs(mean - exact));
  }
  v.min_boundary_distance = INFINITY;
  for (const auto& p : r.nodes) v.min_boundary_distance = std::min(v.min_boundary_distance, boundary_distance(p));
  v.min_separation = INFINITY;
  for (int i = 0; i < r.size(); ++i)
    for (int j = i + 1; j < r.size(); ++j) v.min_separation = std::min(v.min_separation, rho_omega(r.nodes[i], r.nodes[j]));
  v.interior = v.min_boundary_distance >= 1e-6;
  v.exact = v.max_residual <= tol;
  v.pass = v.interior && v.exact && v.min_separation > 0;
  return v;
}

json DomainVerifyReport::to_json() const {
  return {{"max_residual", max_residual}, {"min_boundary_distance", min_boundary_distance},
          {"min_separation", min_separation}, {"interior", interior}, {"exact", exact}, {"pass", pass}};
}

json DomainRule::to_json() const {
  json pts = json::array();
  for (const auto& p : nodes) {
    json q = json::array();
    for (int i = 0; i < p.coords.size(); ++i) q.push_back(p.coords[i]);
    pts.push_back(q);
  }
  return {{"domain", domain_name(domain)},
          {"degree", degree},
          {"weight", weight.to_json()},
          {"nodes", pts},
          {"node_weight", nodes.empty() ? 0.0 : node_weight()},
          {"source", {{"degree", sphere_degree}, {"N", sphere_size}, {"symmetry", symmetry_tag_name(sphere_symmetry)}}},
          {"report", report.to_json()}};
}

DomainRule DomainRule::from_json(const json& j) {
  DomainRule r;
  r.domain = parse_domain(j.at("domain").get<std::string>());
  r.degree = j.at("degree").get<int>();
  r.weight = DomainWeight::from_json(j.at("weight"));
  for (const auto& q : j.at("nodes")) {
    DomainPoint p;
    p.domain = r.domain;
    p.coords = Vec(q.size());
    for (size_t i = 0; i < q.size(); ++i) p.coords[i] = q[i].get<double>();
    r.nodes.push_back(p);
  }
  if (j.contains("source")) {
    r.sphere_degree = j["source"].value("degree", 0);
    r.sphere_size = j["source"].value("N", 0);
    r.sphere_symmetry = parse_symmetry_tag(j["source"].value("symmetry", std::string("none")));
  }
  return r;
}

DomainRule build_domain_rule(const DomainWeight& w, int n, const RuleOptions& opt) {
  if (n < 1) throw InvalidArgument("degree must be positive");
  RuleOptions o = opt;
  o.symmetry = w.domain == Domain::Ball ? SymmetryTag::Tau : SymmetryTag::Z2;
  int sphere_degree = w.domain == Domain::Ball ? n : 2 * n;
  CubatureRule rule = build_rule(lift_weight(w), sphere_degree, o);
  DomainRule out = project_rule(rule, w.domain);
  out.degree = n;
  return out;
}

}  // namespace sq
