#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
  json last() const {
    // the summary is the final line of stdout
    std::string s = out;
    while (!s.empty() && s.back() == '\n') s.pop_back();
    auto p = s.rfind('\n');
    return json::parse(p == std::string::npos ? s : s.substr(p + 1));
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path workdir() {
  static fs::path d = [] {
    fs::path p = fs::temp_directory_path() / ("spherequad_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return d;
}

Run run(const std::string& args) {
  const char* bin = std::getenv("SPHEREQUAD_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "SPHEREQUAD_CLI must point at the CLI binary");
  fs::path o = workdir() / "stdout", e = workdir() / "stderr";
  std::string cmd = std::string(bin) + " " + args + " > " + o.string() + " 2> " + e.string();
  int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(o), slurp(e)};
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("partition command") {
  auto r = run("partition --weight constant --dim 3 --N 64 --out " + path("p.json") + " --obj " + path("p.obj") +
               " --table " + path("p.csv"));
  REQUIRE(r.code == 0);
  auto s = r.last();
  CHECK(s["sum_k"] == 64);
  CHECK(s["cells"].get<int>() <= 64);
  CHECK(s["integrality_drift"].get<double>() <= 1e-7);
  auto j = json::parse(slurp(path("p.json")));
  CHECK(j["N"] == 64);
  CHECK(slurp(path("p.obj")).find("\nf ") != std::string::npos);
  CHECK(slurp(path("p.csv")).rfind("cell,k,measure", 0) == 0);

  auto e = run("partition --weight product:2,0,0 --N 128 --equal-mass");
  REQUIRE(e.code == 0);
  CHECK(e.last()["cells"] == 128);
  CHECK(e.last()["sum_k"] == 128);

  auto bad = run("partition --weight constant --N 100 --r 1e-4");
  CHECK(bad.code == 2);
  auto err = json::parse(bad.err);
  CHECK(err["error"] == "hypothesis_violated");
  CHECK(err["detail"].is_string());
  CHECK(err["context"].is_object());
}

TEST_CASE("cubature and verify commands") {
  auto r = run("cubature --weight constant --dim 3 --degree 5 --K 4 --out " + path("r.json") + " --csv " + path("r.csv") +
               " --report " + path("rep.json"));
  REQUIRE(r.code == 0);
  auto s = r.last();
  CHECK(s["report"]["converged"] == true);
  CHECK(s["verification"]["max_residual"].get<double>() <= 1e-9);
  CHECK(json::parse(slurp(path("rep.json"))).contains("iterations"));

  CHECK(run("verify --rule " + path("r.json")).code == 0);
  CHECK(run("verify --rule " + path("r.csv") + " --degree 5").code == 0);

  // move the first node by about 1e-2
  std::istringstream in(slurp(path("r.csv")));
  std::string header, first, rest, line;
  std::getline(in, header);
  std::getline(in, first);
  while (std::getline(in, line)) rest += line + "\n";
  double x, y, z;
  char c;
  std::istringstream(first) >> x >> c >> y >> c >> z;
  sq::Vec p = sq::make_vec({x + 1e-2, y, z}).normalized();
  std::ofstream(path("bad.csv")) << header << "\n"
                                 << std::setprecision(17) << p[0] << "," << p[1] << "," << p[2] << "\n"
                                 << rest;
  auto v = run("verify --rule " + path("bad.csv") + " --degree 5");
  CHECK(v.code == 4);
  CHECK(v.last()["pass"] == false);

  auto pw = run("cubature --weight product:2,0,0 --degree 5");
  REQUIRE(pw.code == 0);
  CHECK(pw.last()["report"]["converged"] == true);
}

TEST_CASE("verify a classical 5-design") {
  std::ofstream f(path("ico.csv"));
  f << "x1,x2,x3\n" << std::setprecision(17);
  for (const auto& v : oracle::icosahedron()) f << v[0] << "," << v[1] << "," << v[2] << "\n";
  f.close();
  auto r = run("verify --rule " + path("ico.csv") + " --degree 5 --weight constant");
  CHECK(r.code == 0);
  CHECK(r.last()["max_residual"].get<double>() < 1e-12);
  CHECK(run("verify --rule " + path("ico.csv") + " --degree 6").code == 4);
}

TEST_CASE("domain rules from the command line") {
  auto r = run("cubature --domain ball --degree 4 --out " + path("disk.json"));
  REQUIRE(r.code == 0);
  CHECK(r.last()["verification"]["pass"] == true);
  CHECK(run("verify --rule " + path("disk.json")).code == 0);
  CHECK(run("cubature --domain simplex --degree 2 --weight constant").code == 0);
  CHECK(run("cubature --domain ball --degree 2 --weight product:1,0,0").code == 2);
}

TEST_CASE("non-convergence still writes the best iterate") {
  auto r = run("cubature --weight constant --degree 4 --N 40 --max-iter 0 --out " + path("nc.json"));
  CHECK(r.code == 3);
  CHECK(json::parse(slurp(path("nc.json")))["nodes"].size() == 40);
}

TEST_CASE("christoffel and scaling commands") {
  auto c = run("christoffel --weight constant --degree 5 --samples 40 --seed 3");
  REQUIRE(c.code == 0);
  CHECK(c.last()["band"].get<double>() < 1.01);
  auto z = run("christoffel --weight product:0,0,2 --degree 5 --samples 60");
  REQUIRE(z.code == 0);
  CHECK(z.last()["band"].get<double>() <= 50);

  auto s = run("scaling --weight constant --n-min 2 --n-max 6 --no-solve --out " + path("sc.csv"));
  REQUIRE(s.code == 0);
  CHECK(s.last()["rows"] == 5);
  CHECK(s.last()["predicted_slope"].get<double>() == doctest::Approx(2.0));
  CHECK(slurp(path("sc.csv")).rfind("n,M_n,N_success,ratio", 0) == 0);
}

TEST_CASE("determinism and tolerance profiles") {
  for (int i = 0; i < 2; ++i) {
    REQUIRE(run("partition --weight product:0,0,2 --N 32 --out " + path("d" + std::to_string(i) + ".json")).code == 0);
    REQUIRE(run("cubature --weight constant --degree 3 --N 20 --seed 5 --out " + path("c" + std::to_string(i) + ".json")).code == 0);
  }
  CHECK(slurp(path("d0.json")) == slurp(path("d1.json")));
  CHECK(slurp(path("c0.json")) == slurp(path("c1.json")));

  CHECK(run("--tol-profile strict partition --N 16").code == 0);
  CHECK(run("--tol-profile fast cubature --degree 2 --N 12").code == 0);
  auto bad = run("--tol-profile sloppy partition --N 16");
  CHECK(bad.code == 2);
  CHECK(json::parse(bad.err)["error"] == "invalid_argument");
  CHECK(run("partition").code == 2);
}
