#include "spherequad/weight.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sq {

// ---------------------------------------------------------------- WeightSpec

WeightSpec WeightSpec::constant(int d) {
  if (d < 2 || d > 4) throw InvalidArgument("ambient dimension must be 2, 3 or 4");
  WeightSpec w;
  w.kind_ = Kind::Constant;
  w.d_ = d;
  w.a_.assign(d, 0.0);
  w.finalize();
  return w;
}

WeightSpec WeightSpec::product_power(std::vector<double> alpha) {
  int d = static_cast<int>(alpha.size());
  if (d < 2 || d > 4) throw InvalidArgument("ambient dimension must be 2, 3 or 4");
  for (double a : alpha)
    if (!(a > -1.0)) throw InvalidArgument("product exponents must exceed -1", {{"alpha", alpha}});
  WeightSpec w;
  w.kind_ = Kind::ProductPower;
  w.d_ = d;
  w.a_ = std::move(alpha);
  w.finalize();
  return w;
}

WeightSpec WeightSpec::ball_lift(int sphere_dim, double mu, double p) {
  if (sphere_dim < 2 || sphere_dim > 4) throw InvalidArgument("ambient dimension must be 2, 3 or 4");
  if (!(mu > -1.0) || !(p > -1.0) || !(2 * mu + p > -2.0))
    throw InvalidArgument("ball weight exponents not integrable", {{"mu", mu}, {"p", p}});
  WeightSpec w;
  w.kind_ = Kind::BallLift;
  w.d_ = sphere_dim;
  w.mu_ = mu;
  w.p_ = p;
  w.a_.assign(sphere_dim, 0.0);
  // (1-|y|^2)^mu = |x_d|^{2mu}; the surface factor contributes |x_d|;
  // (1-|y|)^p = |x_d|^{2p} (1+sqrt(1-x_d^2))^{-p}.
  w.a_[sphere_dim - 1] = 2 * mu + 1 + 2 * p;
  w.finalize();
  return w;
}

WeightSpec WeightSpec::simplex_lift(std::vector<double> kappa) {
  int d = static_cast<int>(kappa.size());
  if (d < 2 || d > 4) throw InvalidArgument("ambient dimension must be 2, 3 or 4");
  for (double k : kappa)
    if (!(k > -1.0)) throw InvalidArgument("simplex Jacobi exponents must exceed -1");
  WeightSpec w;
  w.kind_ = Kind::SimplexLift;
  w.d_ = d;
  w.kappa_ = kappa;
  w.a_.resize(d);
  for (int j = 0; j < d; ++j) w.a_[j] = 2 * kappa[j] + 1;
  w.finalize();
  return w;
}

std::vector<double> WeightSpec::alpha() const { return a_; }

bool WeightSpec::has_singularity() const {
  for (double a : a_)
    if (a < 0) return true;
  return false;
}

double WeightSpec::smooth_factor(double xd) const {
  if (p_ == 0.0) return 1.0;
  double c = std::sqrt(std::max(0.0, 1.0 - xd * xd));
  return std::pow(1.0 + c, -p_);
}

double WeightSpec::eval_unnormalized(const Vec& x) const {
  double v = smooth_factor(x[d_ - 1]);
  for (int j = 0; j < d_; ++j) {
    if (a_[j] == 0.0) continue;
    double ax = std::abs(x[j]);
    if (ax == 0.0) {
      if (a_[j] < 0) throw SingularPoint("weight is infinite on a coordinate plane", {{"coordinate", j}});
      return 0.0;
    }
    v *= std::pow(ax, a_[j]);
  }
  return v;
}

double WeightSpec::eval(const Vec& x) const { return eval_unnormalized(x) / Z_; }

void WeightSpec::finalize() {
  // Normalization from the tensor rule; increase the order until stable.
  double prev = NAN;
  for (int m = 16; m <= 160; m += 12) {
    SphereRule r = sphere_product_rule(a_, m);
    double z = 0;
    for (size_t i = 0; i < r.nodes.size(); ++i) z += r.weights[i] * smooth_factor(r.nodes[i][d_ - 1]);
    if (std::isfinite(prev) && std::abs(z - prev) <= 1e-11 * z) {
      Z_ = z;
      return;
    }
    prev = z;
  }
  Z_ = prev;
}

nlohmann::json WeightSpec::to_json() const {
  nlohmann::json j;
  j["ambient_dim"] = d_;
  switch (kind_) {
    case Kind::Constant: j["kind"] = "constant"; break;
    case Kind::ProductPower:
      j["kind"] = "product_power";
      j["alpha"] = a_;
      break;
    case Kind::BallLift:
      j["kind"] = "ball_lift";
      j["inner"] = {{"kind", "jacobi"}, {"mu", mu_}, {"radial", p_}};
      break;
    case Kind::SimplexLift:
      j["kind"] = "simplex_lift";
      j["inner"] = {{"kind", "jacobi"}, {"kappa", kappa_}};
      break;
  }
  if (L_w) j["doubling"] = {{"L_w", *L_w}, {"s_w", *s_w}};
  return j;
}

WeightSpec WeightSpec::from_json(const nlohmann::json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int d = j.value("ambient_dim", 3);
  WeightSpec w = [&] {
    if (kind == "constant") return constant(d);
    if (kind == "product_power") return product_power(j.at("alpha").get<std::vector<double>>());
    if (kind == "ball_lift") {
      const auto& in = j.at("inner");
      return ball_lift(d, in.value("mu", 0.0), in.value("radial", 0.0));
    }
    if (kind == "simplex_lift") {
      const auto& in = j.at("inner");
      if (in.contains("kappa")) return simplex_lift(in.at("kappa").get<std::vector<double>>());
      return simplex_lift(std::vector<double>(d, 0.0));
    }
    throw InvalidArgument("unknown weight kind", {{"kind", kind}});
  }();
  if (j.contains("doubling")) {
    w.L_w = j["doubling"].at("L_w").get<double>();
    w.s_w = j["doubling"].at("s_w").get<double>();
  }
  return w;
}

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed number in weight spec", {{"token", tok}});
    }
  }
  return out;
}

}  // namespace

WeightSpec WeightSpec::parse(const std::string& s, int d) {
  if (s == "constant") return constant(d);
  auto colon = s.find(':');
  std::string head = s.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "product") {
    auto a = parse_list(rest);
    if (static_cast<int>(a.size()) != d)
      throw InvalidArgument("product weight needs one exponent per coordinate", {{"dim", d}});
    return product_power(a);
  }
  if (head == "ball-lift") {
    if (rest.empty() || rest == "lebesgue") return ball_lift(d);
    auto c2 = rest.find(':');
    std::string sub = rest.substr(0, c2);
    std::string arg = c2 == std::string::npos ? "" : rest.substr(c2 + 1);
    if (sub == "jacobi") return ball_lift(d, parse_list(arg).at(0), 0.0);
    if (sub == "radial") return ball_lift(d, 0.0, parse_list(arg).at(0));
    throw InvalidArgument("unknown ball-lift weight", {{"spec", s}});
  }
  if (head == "simplex-lift") {
    if (rest.empty() || rest == "lebesgue") return simplex_lift(std::vector<double>(d, 0.0));
    auto c2 = rest.find(':');
    std::string sub = rest.substr(0, c2);
    if (sub == "jacobi") {
      auto k = parse_list(rest.substr(c2 + 1));
      if (static_cast<int>(k.size()) != d)
        throw InvalidArgument("simplex Jacobi weight needs d exponents", {{"dim", d}});
      return simplex_lift(k);
    }
    throw InvalidArgument("unknown simplex-lift weight", {{"spec", s}});
  }
  throw InvalidArgument("unknown weight spec", {{"spec", s}});
}

std::string WeightSpec::describe() const { return to_json().dump(); }

// ---------------------------------------------------------------- rules

SphereRule weighted_sphere_rule(const WeightSpec& w, int order) {
  SphereRule r = sphere_product_rule(w.exponents(), order);
  const int d = w.dim();
  for (size_t i = 0; i < r.nodes.size(); ++i) r.weights[i] *= w.smooth_factor(r.nodes[i][d - 1]) / w.Z();
  return r;
}

int default_rule_order(const WeightSpec& w, int degree) {
  int extra = w.radial_power() != 0.0 ? 28 : 20;
  return degree + extra;
}

// ---------------------------------------------------------------- regions

namespace {

struct Interval {
  double lo, hi;
};

std::vector<Interval> intersect(const std::vector<Interval>& A, const std::vector<Interval>& B) {
  std::vector<Interval> out;
  for (const auto& a : A)
    for (const auto& b : B) {
      double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
      if (hi > lo) out.push_back({lo, hi});
    }
  std::sort(out.begin(), out.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  return out;
}

class RegionIntegrator {
 public:
  RegionIntegrator(const WeightSpec& w, const std::function<double(const Vec&)>* f) : w_(w), f_(f) {
    d_ = w.dim();
    x_ = Vec::Zero(d_);
    prefix_.assign(d_ + 1, 0.0);
    for (int k = 1; k <= d_; ++k) prefix_[k] = prefix_[k - 1] + w.exponents()[k - 1];
  }

  double run(const std::vector<HalfSpace>& hs, double tol) {
    std::vector<HalfSpace> norm;
    for (const auto& h : hs) {
      double n = h.c.norm();
      if (n == 0) {
        if (h.tau > 0) return 0;
        continue;
      }
      norm.push_back({h.c / n, h.tau / n});
    }
    return level(d_, norm, 1.0, tol);
  }

  long evaluations = 0;
  double error = 0;

 private:
  const WeightSpec& w_;
  const std::function<double(const Vec&)>* f_;
  int d_;
  Vec x_;
  std::vector<double> prefix_;
  double smooth_ = 1.0;

  double a(int k) const { return w_.exponents()[k - 1]; }

  // Integrand multiplier at a completed point.
  double leaf_value() {
    ++evaluations;
    double v = smooth_;
    if (f_) v *= (*f_)(x_);
    return v;
  }

  // Nested: I_k(hs) over S^{k-1}; points are scaled by `scale` into x_.
  double level(int k, const std::vector<HalfSpace>& hs, double scale, double tol) {
    if (k == 2) return circle(hs, scale, tol);
    return shell(k, hs, scale, tol);
  }

  // Constraints on S^{k-2} induced at latitude psi.
  bool restrict(const std::vector<HalfSpace>& hs, int k, double s, double c, std::vector<HalfSpace>& out) const {
    out.clear();
    for (const auto& h : hs) {
      Vec cb = h.c.head(k - 1);
      double rho = cb.norm();
      double rhs = h.tau - h.c[k - 1] * s;
      if (rho < 1e-14 || c <= 0) {
        if (rhs > 1e-15) return false;
        continue;
      }
      double t = rhs / (rho * c);
      if (t <= -1.0) continue;
      if (t > 1.0) return false;
      out.push_back({cb / rho, t});
    }
    return true;
  }

  std::vector<double> breakpoints(int k, const std::vector<HalfSpace>& hs) const {
    std::vector<HalfSpace> H = hs;
    for (int j = 0; j < k - 1; ++j)
      if (a(j + 1) != 0.0) H.push_back({unit_basis(k, j), 0.0});
    std::vector<double> bp = {-kPi / 2, 0.0, kPi / 2};
    const int m = static_cast<int>(H.size());
    std::vector<int> idx;
    auto add_value = [&](double v) {
      if (v > -1.0 && v < 1.0) bp.push_back(std::asin(v));
    };
    std::function<void(int)> rec = [&](int start) {
      if (!idx.empty()) {
        int r = static_cast<int>(idx.size());
        Eigen::MatrixXd M(r, k);
        Eigen::VectorXd t(r);
        for (int i = 0; i < r; ++i) {
          M.row(i) = H[idx[i]].c.transpose();
          t[i] = H[idx[i]].tau;
        }
        Eigen::MatrixXd G = M * M.transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        if (lu.rank() == r) {
          Eigen::VectorXd p = M.transpose() * lu.solve(t);
          double pn2 = p.squaredNorm();
          if (pn2 <= 1.0 + 1e-14) {
            double R = std::sqrt(std::max(0.0, 1.0 - pn2));
            Eigen::VectorXd ek = Eigen::VectorXd::Zero(k);
            ek[k - 1] = 1.0;
            Eigen::VectorXd perp = ek - M.transpose() * lu.solve(M * ek);
            double nk = perp.norm();
            add_value(p[k - 1] + R * nk);
            add_value(p[k - 1] - R * nk);
          }
        }
      }
      if (static_cast<int>(idx.size()) == k - 1) return;
      for (int i = start; i < m; ++i) {
        idx.push_back(i);
        rec(i + 1);
        idx.pop_back();
      }
    };
    rec(0);
    std::sort(bp.begin(), bp.end());
    std::vector<double> out;
    for (double v : bp)
      if (out.empty() || v - out.back() > 1e-14) out.push_back(v);
    return out;
  }

  double shell(int k, const std::vector<HalfSpace>& hs, double scale, double tol) {
    auto bp = breakpoints(k, hs);
    const int nseg = static_cast<int>(bp.size()) - 1;
    const double B = k - 2 + prefix_[k - 1];
    const double ak = a(k);
    const double inner_tol = tol * 0.05;
    std::vector<HalfSpace> sub;
    double total = 0;
    for (int sgi = 0; sgi < nseg; ++sgi) {
      double lo = bp[sgi], hi = bp[sgi + 1];
      double mid = 0.5 * (lo + hi);
      if (!restrict(hs, k, std::sin(mid), std::cos(mid), sub)) continue;
      auto integrand = [&](double psi, double da, double db) -> double {
        double s, c;
        if (lo == 0.0 && da < 0.5)
          s = std::sin(da);
        else if (hi == 0.0 && db < 0.5)
          s = -std::sin(db);
        else
          s = std::sin(psi);
        if (lo == -kPi / 2 && da < 0.5)
          c = std::sin(da);
        else if (hi == kPi / 2 && db < 0.5)
          c = std::sin(db);
        else
          c = std::cos(psi);
        if (c <= 0) return 0.0;
        std::vector<HalfSpace> local;
        if (!restrict(hs, k, s, c, local)) return 0.0;
        double wt = 1.0;
        if (ak != 0.0) {
          if (s == 0.0) return 0.0;
          wt *= std::pow(std::abs(s), ak);
        }
        if (B != 0.0) wt *= std::pow(c, B);
        x_[k - 1] = scale * s;
        if (k == d_) smooth_ = w_.smooth_factor(s);
        double inner = level(k - 1, local, scale * c, inner_tol);
        return wt * inner;
      };
      TanhSinhOptions opt;
      opt.abs_tol = tol / std::max(1, nseg);
      opt.rel_tol = 1e-14;
      MeasureResult r = tanh_sinh(integrand, lo, hi, opt);
      total += r.value;
      if (k == d_) error += r.error_bound;
    }
    return total;
  }

  double circle(const std::vector<HalfSpace>& hs, double scale, double tol) {
    const double two_pi = 2 * kPi;
    std::vector<Interval> cur = {{0.0, two_pi}};
    for (const auto& h : hs) {
      if (h.tau <= -1.0) continue;
      if (h.tau > 1.0) return 0.0;
      double beta = std::atan2(h.c[1], h.c[0]);
      double hw = std::acos(std::clamp(h.tau, -1.0, 1.0));
      if (hw >= kPi) continue;
      double lo = std::fmod(beta - hw, two_pi);
      if (lo < 0) lo += two_pi;
      double hi = lo + 2 * hw;
      std::vector<Interval> arcs;
      if (hi <= two_pi) {
        arcs.push_back({lo, hi});
      } else {
        arcs.push_back({lo, two_pi});
        arcs.push_back({0.0, hi - two_pi});
      }
      cur = intersect(cur, arcs);
      if (cur.empty()) return 0.0;
    }
    const double a1 = a(1), a2 = a(2);
    const double q = kPi / 2;
    double total = 0;
    for (const auto& iv : cur) {
      for (int quad = 0; quad < 4; ++quad) {
        double qlo = quad * q, qhi = (quad + 1) * q;
        double lo = std::max(iv.lo, qlo), hi = std::min(iv.hi, qhi);
        if (!(hi > lo)) continue;
        double rlo = lo - qlo, rhi = hi - qlo;
        if (rlo < 1e-15) rlo = 0.0;
        if (q - rhi < 1e-15) rhi = q;
        // In quadrant `quad`, with theta in [0, pi/2]: the coordinate vanishing
        // at theta = 0 carries exponent e0, the other e1.
        double e0 = (quad % 2 == 0) ? a2 : a1;
        double e1 = (quad % 2 == 0) ? a1 : a2;
        total += quadrant_piece(quad, rlo, rhi, e0, e1, scale, tol);
      }
    }
    return total;
  }

  // Integral over theta in [lo, hi] within one quadrant.
  double quadrant_piece(int quad, double lo, double hi, double e0, double e1, double scale, double tol) {
    const double q = kPi / 2;
    auto make = [&](double L, double H) {
      return [this, L, H, quad, e0, e1, scale, q](double th, double da, double db) -> double {
        double th_lo = L + da;          // distance from theta = 0
        double th_hi = (q - H) + db;    // distance from theta = pi/2
        double st = th_lo < q / 2 ? std::sin(th_lo) : std::cos(th_hi);
        double ct = th_hi < q / 2 ? std::sin(th_hi) : std::cos(th_lo);
        (void)th;
        double wt = 1.0;
        if (e0 != 0.0) {
          if (st <= 0) return 0.0;
          wt *= std::pow(st, e0);
        }
        if (e1 != 0.0) {
          if (ct <= 0) return 0.0;
          wt *= std::pow(ct, e1);
        }
        if (f_) {
          double cphi, sphi;
          switch (quad) {
            case 0: cphi = ct; sphi = st; break;
            case 1: cphi = -st; sphi = ct; break;
            case 2: cphi = -ct; sphi = -st; break;
            default: cphi = st; sphi = -ct; break;
          }
          x_[0] = scale * cphi;
          x_[1] = scale * sphi;
        }
        return wt * leaf_value();
      };
    };
    TanhSinhOptions opt;
    opt.abs_tol = tol * 0.25;
    opt.rel_tol = 1e-14;
    auto integ = [&](double L, double H) { return tanh_sinh(make(L, H), L, H, opt).value; };
    bool sing0 = e0 != 0.0 && std::floor(e0) != e0;
    bool sing1 = e1 != 0.0 && std::floor(e1) != e1;
    double len = hi - lo;
    // Singular point just outside the interval: integrate from the singularity
    // and subtract.
    if (sing0 && lo > 0 && lo < 0.25 * len) {
      if (sing1 && hi < q && q - hi < 0.25 * len) return integ(0, q) - integ(0, lo) - integ(hi, q);
      return integ(0, hi) - integ(0, lo);
    }
    if (sing1 && hi < q && q - hi < 0.25 * len) return integ(lo, q) - integ(hi, q);
    return integ(lo, hi);
  }
};

}  // namespace

MeasureResult region_integral(const WeightSpec& w, const std::vector<HalfSpace>& hs, double tol,
                              const std::function<double(const Vec&)>* f) {
  RegionIntegrator ri(w, f);
  double v = ri.run(hs, tol * w.Z());
  MeasureResult r;
  r.value = v / w.Z();
  r.error_bound = ri.error / w.Z();
  r.evaluations = ri.evaluations;
  // Requests below round-off are clamped to a relative floor.
  if (r.error_bound > std::max(tol, 1e-13 * std::abs(r.value)))
    throw QuadratureFailure("region integral missed its tolerance",
                            {{"error_bound", r.error_bound}, {"tol", tol}});
  return r;
}

MeasureResult cap_measure(const WeightSpec& w, const Vec& center, double r, double tol) {
  if (!(r > 0)) throw InvalidArgument("cap radius must be positive");
  if (r >= kPi) return region_integral(w, {}, tol);
  return region_integral(w, {{center, std::cos(r)}}, tol);
}

MeasureResult cell_measure(const WeightSpec& w, const ConvexCell& R, double tol) {
  return region_integral(w, R.facets(), tol);
}

MeasureResult cone_measure(const WeightSpec& w, const std::vector<Vec>& rays, double tol) {
  return region_integral(w, cone_facets(rays), tol);
}

// ---------------------------------------------------------------- sampling

std::vector<Vec> special_points(int d) {
  std::vector<Vec> out;
  int n3 = 1;
  for (int j = 0; j < d; ++j) n3 *= 3;
  for (int code = 0; code < n3; ++code) {
    Vec v(d);
    int c = code;
    for (int j = 0; j < d; ++j) {
      v[j] = (c % 3) - 1.0;
      c /= 3;
    }
    if (v.norm() == 0) continue;
    out.push_back(v / v.norm());
  }
  return out;
}

namespace {
double radical_inverse(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}
}  // namespace

std::vector<Vec> quasi_uniform_points(int d, int n) {
  std::vector<Vec> out;
  out.reserve(n);
  if (d == 2) {
    for (int i = 0; i < n; ++i) {
      double t = 2 * kPi * (i + 0.5) / n;
      out.push_back(make_vec({std::cos(t), std::sin(t)}));
    }
  } else if (d == 3) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double rr = std::sqrt(std::max(0.0, 1 - z * z));
      double t = golden * i + 0.1;
      out.push_back(make_vec({rr * std::cos(t), rr * std::sin(t), z}));
    }
  } else {
    for (int i = 0; i < n; ++i) {
      double u1 = (i + 0.5) / n, u2 = radical_inverse(i + 1, 2), u3 = radical_inverse(i + 1, 3);
      double a = std::sqrt(u1), b = std::sqrt(1 - u1);
      out.push_back(make_vec({a * std::cos(2 * kPi * u2), a * std::sin(2 * kPi * u2), b * std::cos(2 * kPi * u3),
                              b * std::sin(2 * kPi * u3)}));
    }
  }
  return out;
}

// ---------------------------------------------------------------- doubling

DoublingEstimate estimate_doubling(const WeightSpec& w, int samples) {
  if (samples < 100) throw InvalidArgument("need at least 100 samples");
  const int d = w.dim();
  auto pts = quasi_uniform_points(d, samples);
  for (const auto& p : special_points(d)) pts.push_back(p);
  double L = 1.0;
  const double rmin = 0.01, rmax = kPi / 4;
  int i = 0;
  for (const auto& x : pts) {
    double u = radical_inverse(++i, 2);
    double r = rmin * std::pow(rmax / rmin, u);
    double small = cap_measure(w, x, r, 1e-12).value;
    if (small <= 0) continue;
    double big = cap_measure(w, x, 2 * r, 1e-12).value;
    L = std::max(L, big / small);
  }
  return {L, std::max(std::log2(L), static_cast<double>(d - 1))};
}

namespace {

// Nelder-Mead on tangent coordinates around x0.
CapExtreme refine_min_cap(const WeightSpec& w, const Vec& x0, double r, double tol, double step) {
  const int d = w.dim();
  const int k = d - 1;
  Mat T = tangent_basis(x0);
  auto point = [&](const Eigen::VectorXd& v) { return exp_map(x0, Vec(T * v)); };
  auto F = [&](const Eigen::VectorXd& v) { return cap_measure(w, point(v), r, tol).value; };
  std::vector<Eigen::VectorXd> S(k + 1, Eigen::VectorXd::Zero(k));
  for (int i = 0; i < k; ++i) S[i + 1][i] = step;
  std::vector<double> fv(k + 1);
  for (int i = 0; i <= k; ++i) fv[i] = F(S[i]);
  for (int it = 0; it < 20 * k; ++it) {
    std::vector<int> ord(k + 1);
    for (int i = 0; i <= k; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> S2;
    std::vector<double> f2;
    for (int i : ord) {
      S2.push_back(S[i]);
      f2.push_back(fv[i]);
    }
    S = S2;
    fv = f2;
    if ((S[k] - S[0]).norm() < 1e-4 * step || fv[k] - fv[0] <= 1e-9 * std::abs(fv[0])) break;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) c += S[i];
    c /= k;
    Eigen::VectorXd xr = c + (c - S[k]);
    double fr = F(xr);
    if (fr < fv[0]) {
      Eigen::VectorXd xe = c + 2 * (c - S[k]);
      double fe = F(xe);
      if (fe < fr) {
        S[k] = xe;
        fv[k] = fe;
      } else {
        S[k] = xr;
        fv[k] = fr;
      }
    } else if (fr < fv[k - 1]) {
      S[k] = xr;
      fv[k] = fr;
    } else {
      Eigen::VectorXd xc = c + 0.5 * (S[k] - c);
      double fc = F(xc);
      if (fc < fv[k]) {
        S[k] = xc;
        fv[k] = fc;
      } else {
        for (int i = 1; i <= k; ++i) {
          S[i] = S[0] + 0.5 * (S[i] - S[0]);
          fv[i] = F(S[i]);
        }
      }
    }
  }
  int best = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {point(S[best]), fv[best]};  // caller re-measures at full accuracy
}

}  // namespace

CapExtreme min_cap(const WeightSpec& w, double r, int starts) {
  const int d = w.dim();
  if (w.kind() == WeightSpec::Kind::Constant) {
    double v = cap_measure(w, unit_basis(d, 0), r, 1e-14).value;
    return {unit_basis(d, 0), v};
  }
  // Every supported weight is invariant under coordinate reflections, so the
  // search runs over the closed positive orthant only.
  std::vector<Vec> pts;
  for (const auto& p : special_points(d))
    if (p.minCoeff() >= 0) pts.push_back(p);
  for (auto p : quasi_uniform_points(d, starts)) pts.push_back(p.cwiseAbs());
  const int n = static_cast<int>(pts.size());
  double scale = cap_measure(w, unit_basis(d, d - 1), r, 1e-9).value;
  // Coarse screening, then tight refinement of the best few.
  std::vector<double> vals(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) vals[i] = cap_measure(w, pts[i], r, std::max(1e-16, 1e-6 * scale)).value;
  std::vector<int> ord(n);
  for (int i = 0; i < n; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return vals[a] < vals[b]; });
  const int top = std::min(3, n);
  double vmin = std::max(vals[ord[0]], 1e-300);
  double rtol = std::max(1e-17, 1e-10 * vmin);
  std::vector<CapExtreme> cand(top);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < top; ++t) {
    const Vec& x0 = pts[ord[t]];
    CapExtreme c{x0, cap_measure(w, x0, r, rtol).value};
    CapExtreme rc = refine_min_cap(w, x0, r, 100 * rtol, std::min(0.2, r));
    rc.cap = cap_measure(w, rc.x, r, rtol).value;
    cand[t] = rc.cap < c.cap ? rc : c;
  }
  CapExtreme best = cand[0];
  for (const auto& c : cand)
    if (c.cap < best.cap) best = c;
  return best;
}

double max_inverse_cap(const WeightSpec& w, int n, double /*tol*/) {
  if (n < 1) throw InvalidArgument("degree must be positive");
  return 1.0 / min_cap(w, 1.0 / n).cap;
}

double product_weight_exponent(const std::vector<double>& alpha) {
  double s = static_cast<double>(alpha.size()) - 1;
  double amin = *std::min_element(alpha.begin(), alpha.end());
  for (double a : alpha)
    if (a >= 0) s += a;
  return s - std::max(amin, 0.0);
}

}  // namespace sq
