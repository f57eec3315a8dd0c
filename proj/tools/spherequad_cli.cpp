#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "spherequad/config.hpp"
#include "spherequad/cubature.hpp"
#include "spherequad/domain.hpp"
#include "spherequad/harmonics.hpp"
#include "spherequad/partition.hpp"

using namespace sq;
using nlohmann::json;

namespace {

constexpr int kExitError = 2, kExitNoConvergence = 3, kExitVerifyFailed = 4;

struct Config {
  std::string tol_profile = "default";
  std::string weight = "constant";
  int dim = 3;
  int degree = 3;
  int N = 0;
  double K = 4.0;
  double r = 0;
  double kappa = 1.0;
  double delta = 0.25;
  unsigned seed = 0;
  std::string symmetry = "none";
  std::string use_case = "auto";
  std::string simplexes = "auto";
  std::string mode = "gauss-newton";
  std::string domain;
  bool equal_mass = false;
  int max_iter = 80;
  int restarts = 3;
  double tol = 0;  // verification tolerance; 0 takes the profile's residual
  std::string out, csv, obj, table, report, rule;
  int n_min = 2, n_max = 8, samples = 200;
  bool solve_scaling = true;
  long max_N = 200000;
};

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// temp file + rename, so readers never see a partial file
void write_atomic(const std::string& path, const std::string& content) {
  if (path.empty()) return;
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open output file", {{"path", path}});
    f << content;
    if (!f) throw InvalidArgument("failed writing output file", {{"path", path}});
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot read input file", {{"path", path}});
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Tolerances tolerances(const Config& c) { return profile_tolerances(parse_tol_profile(c.tol_profile)); }

PartitionOptions partition_options(const Config& c) {
  Tolerances t = tolerances(c);
  PartitionOptions o;
  o.tol = t.integrality;
  o.measure_tol = 1e-3 * t.measure;
  o.final_drift = t.final_drift;
  o.kappa = c.kappa;
  o.equal_mass = c.equal_mass;
  if (c.use_case == "one") o.use_case = PartitionOptions::Case::One;
  else if (c.use_case == "two") o.use_case = PartitionOptions::Case::Two;
  else if (c.use_case != "auto") throw InvalidArgument("unknown case", {{"case", c.use_case}});
  if (c.simplexes == "orthant") o.simplexes = PartitionOptions::Simplexes::Orthant;
  else if (c.simplexes == "admissible") o.simplexes = PartitionOptions::Simplexes::Admissible;
  else if (c.simplexes == "separated") o.simplexes = PartitionOptions::Simplexes::Separated;
  else if (c.simplexes != "auto") throw InvalidArgument("unknown simplex family", {{"simplexes", c.simplexes}});
  SymmetryTag s = parse_symmetry_tag(c.symmetry);
  o.symmetry = s == SymmetryTag::Tau  ? PartitionOptions::Symmetry::Tau
               : s == SymmetryTag::Z2 ? PartitionOptions::Symmetry::Z2
                                      : PartitionOptions::Symmetry::None;
  return o;
}

RuleOptions rule_options(const Config& c) {
  Tolerances t = tolerances(c);
  RuleOptions o;
  o.K = c.K;
  o.N = c.N;
  o.delta = c.delta;
  o.restarts = c.restarts;
  o.symmetry = parse_symmetry_tag(c.symmetry);
  o.partition = partition_options(c);
  o.partition.symmetry = PartitionOptions::Symmetry::None;
  o.solve.target = t.residual;
  o.solve.max_iter = c.max_iter;
  o.solve.delta = c.delta;
  if (c.mode == "gauss-newton") o.solve.mode = SolveOptions::Mode::GaussNewton;
  else if (c.mode == "gradient") o.solve.mode = SolveOptions::Mode::Gradient;
  else if (c.mode == "paper") o.solve.mode = SolveOptions::Mode::Paper;
  else throw InvalidArgument("unknown solver mode", {{"mode", c.mode}});
  return o;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- commands

int cmd_partition(const Config& c) {
  WeightSpec w = WeightSpec::parse(c.weight, c.dim);
  if (c.N < 1) throw InvalidArgument("--N must be positive", {{"N", c.N}});
  PartitionOptions o = partition_options(c);
  Partition P = regular_convex_partition(w, c.N, c.r, o);
  write_atomic(c.out, P.to_json().dump(1) + "\n");
  if (!c.obj.empty()) write_atomic(c.obj, P.to_obj());
  if (!c.table.empty()) {
    std::ostringstream t;
    t << "cell,k,measure,inradius,circumradius,shape_ratio\n";
    for (size_t j = 0; j < P.cells.size(); ++j) {
      const auto& z = P.cells[j];
      t << j << "," << z.k << "," << g17(z.measure) << "," << g17(z.inball.radius) << "," << g17(z.circumball.radius) << ","
        << g17(z.circumball.radius / z.inball.radius) << "\n";
    }
    write_atomic(c.table, t.str());
  }
  int sum = 0;
  for (const auto& z : P.cells) sum += z.k;
  int orbit = static_cast<int>(symmetry_signs(P.dim(), P.symmetry).size());
  json s = {{"cells", P.cells.size() * orbit},
            {"sum_k", sum * orbit},
            {"N", P.N},
            {"r", P.r},
            {"integrality_drift", P.diag.integrality_residual},
            {"total_measure", P.diag.total_measure},
            {"max_circumradius", P.diag.max_circumradius},
            {"min_inradius", P.diag.min_inradius},
            {"max_shape_ratio", P.diag.max_shape_ratio},
            {"case", P.diag.case_used},
            {"simplexes", P.diag.simplexes_used}};
  std::cout << s.dump() << "\n";
  return 0;
}

int cmd_cubature_domain(const Config& c) {
  Domain dom = parse_domain(c.domain);
  const int ddim = c.dim - 1;
  DomainWeight dw = DomainWeight::lebesgue(dom, ddim);
  if (c.weight != "constant") {
    WeightSpec w = WeightSpec::parse(c.weight, c.dim);
    if (dom == Domain::Ball && w.kind() == WeightSpec::Kind::BallLift) dw = DomainWeight::ball(ddim, w.mu(), w.radial_power());
    else if (dom == Domain::Simplex && w.kind() == WeightSpec::Kind::SimplexLift) dw = DomainWeight::jacobi(w.kappa());
    else throw DomainMismatch("--weight must be a lift from the chosen domain", {{"weight", c.weight}});
  }
  RuleOptions o = rule_options(c);
  DomainRule R = build_domain_rule(dw, c.degree, o);
  DomainVerifyReport V = verify_domain_rule(R, std::max(10 * o.solve.target, 1e-8));
  json j = R.to_json();
  j["verification"] = V.to_json();
  write_atomic(c.out, j.dump(1) + "\n");
  if (!c.csv.empty()) {
    std::ostringstream t;
    for (int i = 0; i < ddim; ++i) t << (i ? "," : "") << "y" << i + 1;
    t << "\n";
    for (const auto& p : R.nodes) {
      for (int i = 0; i < ddim; ++i) t << (i ? "," : "") << g17(p.coords[i]);
      t << "\n";
    }
    write_atomic(c.csv, t.str());
  }
  std::cout << json({{"domain", c.domain}, {"degree", R.degree}, {"N", R.size()}, {"verification", V.to_json()}}).dump() << "\n";
  if (!R.report.converged) return kExitNoConvergence;
  return V.pass ? 0 : kExitVerifyFailed;
}

int cmd_cubature(const Config& c) {
  if (!c.domain.empty()) return cmd_cubature_domain(c);
  WeightSpec w = WeightSpec::parse(c.weight, c.dim);
  RuleOptions o = rule_options(c);
  CubatureRule R = build_rule(w, c.degree, o);
  VerifyReport V = verify_rule(R, o.solve.target);
  json j = R.to_json();
  j["verification"] = V.to_json();
  write_atomic(c.out, j.dump(1) + "\n");
  write_atomic(c.csv, R.to_csv());
  write_atomic(c.report, R.report.to_json().dump(1) + "\n");
  std::cout << json({{"N", R.size()}, {"degree", R.degree}, {"report", R.report.to_json()}, {"verification", V.to_json()}}).dump()
            << "\n";
  if (!R.report.converged) {
    std::cerr << Error("no_convergence", "solver stopped above the residual target; best iterate written",
                       {{"max_residual", R.report.max_residual}})
                     .to_json()
                     .dump()
              << "\n";
    return kExitNoConvergence;
  }
  return 0;
}

int cmd_verify(const Config& c) {
  if (c.rule.empty()) throw InvalidArgument("--rule is required");
  std::string text = read_file(c.rule);
  double tol = c.tol > 0 ? c.tol : tolerances(c).residual;
  json out;
  bool pass;
  bool is_json = text.find_first_not_of(" \t\r\n") != std::string::npos && text[text.find_first_not_of(" \t\r\n")] == '{';
  if (is_json) {
    json j = json::parse(text);
    if (j.contains("domain")) {
      DomainRule R = DomainRule::from_json(j);
      DomainVerifyReport V = verify_domain_rule(R, c.tol > 0 ? c.tol : 1e-8);
      out = V.to_json();
      out["N"] = R.size();
      pass = V.pass;
    } else {
      CubatureRule R = CubatureRule::from_json(j);
      VerifyReport V = verify_rule(R, tol);
      out = V.to_json();
      out["N"] = R.size();
      pass = V.pass;
    }
  } else {
    auto nodes = CubatureRule::nodes_from_csv(text);
    if (nodes.empty()) throw InvalidArgument("rule file has no nodes");
    WeightSpec w = WeightSpec::parse(c.weight, static_cast<int>(nodes[0].size()));
    VerifyReport V = verify_nodes(w, c.degree, nodes, tol);
    out = V.to_json();
    out["N"] = nodes.size();
    pass = V.pass;
  }
  write_atomic(c.report, out.dump(1) + "\n");
  std::cout << out.dump() << "\n";
  return pass ? 0 : kExitVerifyFailed;
}

int cmd_scaling(const Config& c) {
  WeightSpec w = WeightSpec::parse(c.weight, c.dim);
  if (c.n_min < 1 || c.n_max < c.n_min) throw InvalidArgument("bad degree range");
  RuleOptions base = rule_options(c);
  std::ostringstream t;
  t << "n,M_n,N_success,ratio\n";
  std::vector<double> ln, lm, ratios;
  for (int n = c.n_min; n <= c.n_max; ++n) {
    double M = max_inverse_cap(w, n);
    ln.push_back(std::log(n));
    lm.push_back(std::log(M));
    std::string ns = "", rs = "";
    if (c.solve_scaling) {
      // geometric grid in factors of sqrt 2, from the node count where the
      // free coordinates first outnumber the moment conditions
      const double unknowns = (polynomial_space_dim(w.dim(), n) - 1) / double(w.dim() - 1);
      for (int j = static_cast<int>(std::floor(2 * std::log2(unknowns / M))); j <= 8; ++j) {
        long N = static_cast<long>(std::ceil(M * std::pow(2.0, 0.5 * j)));
        if (N < unknowns) continue;
        if (N > c.max_N) break;
        RuleOptions o = base;
        o.N = static_cast<int>(N);
        try {
          CubatureRule R = build_rule(w, n, o);
          if (R.report.converged && verify_rule(R, o.solve.target).pass) {
            ns = std::to_string(R.size());
            rs = g17(R.size() / M);
            ratios.push_back(R.size() / M);
            break;
          }
        } catch (const Error&) {
        }
      }
      if (ns.empty()) ns = "incomplete";
    }
    t << n << "," << g17(M) << "," << ns << "," << rs << "\n";
  }
  write_atomic(c.out, t.str());
  json s = {{"slope", ln.size() > 1 ? slope(ln, lm) : 0.0}, {"rows", ln.size()}};
  if (w.kind() == WeightSpec::Kind::ProductPower || w.kind() == WeightSpec::Kind::Constant)
    s["predicted_slope"] = product_weight_exponent(w.alpha());
  if (!ratios.empty()) {
    s["ratio_min"] = *std::min_element(ratios.begin(), ratios.end());
    s["ratio_max"] = *std::max_element(ratios.begin(), ratios.end());
  }
  if (c.out.empty()) std::cout << t.str();
  std::cout << s.dump() << "\n";
  return 0;
}

int cmd_christoffel(const Config& c) {
  WeightSpec w = WeightSpec::parse(c.weight, c.dim);
  WeightedBasis B = WeightedBasis::build(w, c.degree);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> g(0, 1);
  std::ostringstream t;
  for (int i = 0; i < c.dim; ++i) t << "x" << i + 1 << ",";
  t << "lambda,cap,ratio\n";
  double lo = INFINITY, hi = 0;
  for (int s = 0; s < c.samples; ++s) {
    Vec x(c.dim);
    for (int i = 0; i < c.dim; ++i) x[i] = g(rng);
    x.normalize();
    double lam = christoffel(B, x);
    double cap = cap_measure(w, x, 1.0 / c.degree, 1e-12).value;
    double ratio = lam / cap;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    for (int i = 0; i < c.dim; ++i) t << g17(x[i]) << ",";
    t << g17(lam) << "," << g17(cap) << "," << g17(ratio) << "\n";
  }
  write_atomic(c.out, t.str());
  if (c.out.empty()) std::cout << t.str();
  std::cout << json({{"ratio_min", lo}, {"ratio_max", hi}, {"band", hi / lo}, {"samples", c.samples}}).dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* th = std::getenv("SPHEREQUAD_THREADS")) {
#ifdef _OPENMP
    int n = std::atoi(th);
    if (n > 0) omp_set_num_threads(n);
#else
    (void)th;
#endif
  }
  Config c;
  CLI::App app{"Weighted equal-weight cubature on spheres, balls and simplexes"};
  app.require_subcommand(1);
  app.add_option("--tol-profile", c.tol_profile, "fast | default | strict")->check(CLI::IsMember({"fast", "default", "strict"}));

  auto common = [&](CLI::App* s) {
    s->add_option("--weight", c.weight, "constant | product:a1,.. | ball-lift:.. | simplex-lift:..");
    s->add_option("--dim", c.dim, "ambient dimension d of S^{d-1}")->check(CLI::Range(2, 4));
    s->add_option("--seed", c.seed, "seed for randomized steps");
    s->add_option("--out", c.out, "output file");
  };

  auto* part = app.add_subcommand("partition", "weight-regular convex partition");
  common(part);
  part->add_option("--N", c.N, "number of mass units")->required();
  part->add_option("--r", c.r, "cell radius (0 picks it from the cap hypothesis)");
  part->add_option("--kappa", c.kappa, "cell size in units of r");
  part->add_option("--case", c.use_case, "auto | one | two");
  part->add_option("--simplexes", c.simplexes, "auto | orthant | admissible | separated");
  part->add_option("--symmetry", c.symmetry, "none | tau | z2");
  part->add_flag("--equal-mass", c.equal_mass, "every cell has mass 1/N");
  part->add_option("--obj", c.obj, "OBJ mesh output (S^2 only)");
  part->add_option("--table", c.table, "per-cell diagnostics CSV");

  auto* cub = app.add_subcommand("cubature", "equal-weight cubature rule");
  common(cub);
  cub->add_option("--degree", c.degree, "polynomial degree n")->check(CLI::PositiveNumber);
  cub->add_option("--K", c.K, "N = ceil(K * max_x 1/w(B(x,1/n)))");
  cub->add_option("--N", c.N, "explicit node count");
  cub->add_option("--symmetry", c.symmetry, "none | tau | z2");
  cub->add_option("--delta", c.delta, "seed separation parameter in (0,1)");
  cub->add_option("--mode", c.mode, "gauss-newton | gradient | paper");
  cub->add_option("--max-iter", c.max_iter);
  cub->add_option("--restarts", c.restarts);
  cub->add_option("--domain", c.domain, "ball | simplex: project a symmetric rule");
  cub->add_option("--csv", c.csv, "node CSV output");
  cub->add_option("--report", c.report, "solve report JSON");

  auto* ver = app.add_subcommand("verify", "independent re-verification of a rule file");
  common(ver);
  ver->add_option("--rule", c.rule, "rule JSON or node CSV")->required();
  ver->add_option("--degree", c.degree, "degree (CSV input)");
  ver->add_option("--tol", c.tol, "residual tolerance");
  ver->add_option("--report", c.report, "report JSON output");

  auto* sc = app.add_subcommand("scaling", "M_n and minimal successful N over a degree range");
  common(sc);
  sc->add_option("--n-min", c.n_min);
  sc->add_option("--n-max", c.n_max);
  sc->add_option("--max-N", c.max_N, "largest N tried");
  sc->add_option("--symmetry", c.symmetry, "none | tau | z2");
  bool no_solve = false;
  sc->add_flag("--no-solve", no_solve, "only tabulate M_n");

  auto* ch = app.add_subcommand("christoffel", "Christoffel function against cap measures");
  common(ch);
  ch->add_option("--degree", c.degree)->check(CLI::PositiveNumber);
  ch->add_option("--samples", c.samples);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Error("invalid_argument", e.what(), json::object()).to_json().dump() << "\n";
    return kExitError;
  }
  c.solve_scaling = !no_solve;

  try {
    if (*part) return cmd_partition(c);
    if (*cub) return cmd_cubature(c);
    if (*ver) return cmd_verify(c);
    if (*sc) return cmd_scaling(c);
    if (*ch) return cmd_christoffel(c);
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return kExitError;
  } catch (const json::exception& e) {
    std::cerr << Error("invalid_argument", e.what(), json::object()).to_json().dump() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << Error("internal", e.what(), json::object()).to_json().dump() << "\n";
    return kExitError;
  }
  return kExitError;
}
