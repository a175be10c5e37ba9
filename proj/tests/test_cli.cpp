#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "liediff/field_io.hpp"

using namespace lie_diffuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lie_diffuse_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> csv_column(const fs::path& p, std::size_t col) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) std::getline(ss, cell, ',');
    out.push_back(cell);
  }
  return out;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(LIE_DIFFUSE_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

int run(const json& j, const std::string& out, bool allow = false) {
  RunConfig c = parse_config(j, ".");
  c.out = out;
  std::ostringstream log;
  return run_command(c, RunOptions{allow}, log);
}

}  // namespace

TEST_CASE("minimal config is completed with defaults") {
  const RunConfig c = parse_config(json{{"group", "su2"}, {"operator", "-laplace^1/2"}, {"u0", "xi 1 0 0"}}, ".");
  CHECK(c.command == "evolve");
  CHECK(c.two_L == 16);
  CHECK(c.dt == 1e-3);
  CHECK(c.scheme == liediff::Scheme::Auto);
  CHECK(c.s == 0.0);
  CHECK(c.T == 1.0);
  CHECK(c.forcing.empty());
}

TEST_CASE("overrides take precedence over the file") {
  Overrides o;
  o.two_L = 4;
  o.dt = 0.01;
  o.scheme = "rk4";
  o.seed = 9;
  o.command = "check";
  const RunConfig c = parse_config(json{{"group", "su2"}, {"operator", "-laplace"}, {"dt", 0.1}}, ".", o);
  CHECK(c.two_L == 4);
  CHECK(c.dt == 0.01);
  CHECK(c.scheme == liediff::Scheme::RK4);
  CHECK(c.seed == 9);
  CHECK(c.command == "check");
}

TEST_CASE("config errors") {
  auto message = [](const json& j) -> std::string {
    try {
      parse_config(j, ".");
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  const json base = {{"group", "su2"}, {"operator", "-laplace"}, {"u0", "delta"}};
  json j = base;
  j["colour"] = "blue";
  CHECK(message(j).find("colour") != std::string::npos);
  j = base;
  j["check"] = {{"two_ell", 4}};
  CHECK(message(j).find("two_ell") != std::string::npos);
  j = base;
  j["operator"] = "laplace^-1";
  CHECK(message(j).find("out of range") != std::string::npos);
  j = base;
  j["dt"] = 0.0;
  CHECK(message(j).find("dt") != std::string::npos);
  j = base;
  j["two_L"] = -1;
  CHECK(!message(j).empty());
  j = base;
  j["u0"] = {{"file", "no/such/file.json"}};
  CHECK(message(j).find("does not exist") != std::string::npos);
  j = base;
  j.erase("group");
  CHECK(message(j).find("group") != std::string::npos);
  j = base;
  j.erase("u0");
  CHECK(message(j).find("u0") != std::string::npos);
  j = base;
  j["scheme"] = "euler";
  CHECK(!message(j).empty());
  j = base;
  j["operator"] = "X1";
  j["group"] = "torus";
  CHECK(!message(j).empty());
  j = base;
  j["forcing"] = {{"shape", "delta"}, {"profile", "sawtooth"}};
  CHECK(message(j).find("sawtooth") != std::string::npos);
  j = {{"group", "su2"}, {"command", "reduce"}, {"time_order", 2}, {"coefficients", {"-laplace"}},
       {"data", {"delta", "zero"}}};
  CHECK(message(j).find("coefficients") != std::string::npos);
  CHECK(message(base).empty());
}

TEST_CASE("field specs") {
  RunConfig c = parse_config(json{{"group", "su2"}, {"operator", "-laplace"}, {"u0", "delta"}, {"two_L", 4}}, ".");
  const auto d = make_field("delta", c);
  CHECK(std::abs(liediff::plancherel_norm(d) - 1.0) < 1e-14);
  const auto xi = make_field("xi 1/2 0 1", c);
  CHECK(xi.at(liediff::RepIndex::su2(1))(1, 0) != 0.0);
  CHECK(make_field("xi 1 2 2", c).at(liediff::RepIndex::su2(2)).norm() > 0.0);
  CHECK_THROWS_AS(make_field("xi 3 0 0", c), ConfigError);
  CHECK_THROWS_AS(make_field("xi 0.3 0 0", c), ConfigError);
  CHECK_THROWS_AS(make_field("xi 1 3 0", c), ConfigError);
  CHECK_THROWS_AS(make_field("gaussian", c), ConfigError);
  const auto r1 = make_field("random 3", c), r2 = make_field("random 3", c), r3 = make_field("random 4", c);
  CHECK((r1 - r2).max_abs() == 0.0);
  CHECK((r1 - r3).max_abs() > 0.0);
  CHECK(make_field("zero", c).max_abs() == 0.0);

  RunConfig t = parse_config(json{{"group", "torus"}, {"operator", "-laplace"}, {"u0", "xi -2"}, {"two_L", 4}}, ".");
  CHECK(make_field("xi -2", t).at(liediff::RepIndex::torus(-2))(0, 0) == 1.0);
  CHECK_THROWS_AS(make_field("xi 5", t), ConfigError);
}

TEST_CASE("field files relative to the config") {
  const fs::path dir = scratch("files");
  RunConfig c = parse_config(json{{"group", "su2"}, {"operator", "-laplace"}, {"u0", "delta"}, {"two_L", 3}}, ".");
  const auto F = make_field("random 5", c);
  liediff::write_spectral_file(F, (dir / "u0.json").string());
  std::ofstream(dir / "run.json") << json{{"group", "su2"}, {"operator", "-laplace"}, {"u0", {{"file", "u0.json"}}},
                                         {"two_L", 3}}
                                         .dump();
  const RunConfig rc = parse_config_file((dir / "run.json").string());
  CHECK((make_field(*rc.u0, rc) - F).max_abs() < 1e-15);
}

TEST_CASE("check command") {
  const fs::path dir = scratch("check");
  json drift = {{"group", "su2"}, {"command", "check"}, {"operator", "-1*laplace^1/2 + 1*iX3"}, {"two_L", 8}};
  CHECK(run(drift, (dir / "drift").string()) == kOk);
  const json r = json::parse(slurp(dir / "drift" / "report.json"));
  CHECK(r["classification"]["case"] == "CaseII");
  CHECK(r["status"] == "verified");

  json back = {{"group", "su2"}, {"command", "check"}, {"operator", "laplace"}, {"two_L", 8}};
  CHECK(run(back, (dir / "back").string()) == kCheckerFailure);
  const json b = json::parse(slurp(dir / "back" / "report.json"));
  CHECK(b["status"] == "failed");
  CHECK(b["classification"]["positivity"]["witness"]["two_ell"] == 1);
  CHECK(b["classification"]["positivity"]["witness"]["eig"] == -0.75);
  CHECK(run(back, (dir / "back2").string(), true) == kOk);
}

TEST_CASE("evolve command on the boundary drift problem") {
  const fs::path dir = scratch("evolve");
  json j = {{"group", "su2"}, {"operator", "-1*laplace^1/2 + 1*iX3"}, {"u0", "random 2"}, {"two_L", 6},
            {"dt", 0.01}, {"snapshots", {0.0, 0.5}}};
  CHECK(run(j, dir.string()) == kOk);
  const auto l2 = csv_column(dir / "trajectory.csv", 1);
  REQUIRE(l2.size() == 101);
  for (std::size_t n = 1; n < l2.size(); ++n) CHECK(std::stod(l2[n]) <= std::stod(l2[n - 1]));
  CHECK(slurp(dir / "trajectory.csv").rfind("# lie-diffuse v1\nt,l2_norm,hs_norm,identity_residual\n", 0) == 0);
  CHECK(fs::exists(dir / "snapshots" / "step_000050.json"));
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r["evolution"]["l2_nonincreasing"] == true);
  CHECK(r["evolution"]["scheme"] == "exact");
  CHECK(r["energy_estimate"]["C"].get<double>() <= 1.0 + 1e-8);

  json bad = j;
  bad["operator"] = "laplace";
  CHECK(run(bad, (dir / "bad").string()) == kCheckerFailure);
  json xdep = j;
  xdep["operator"] = "-bump*laplace";
  xdep["scheme"] = "exact";
  CHECK(run(xdep, (dir / "xdep").string()) == kConfigError);
}

TEST_CASE("reduce command") {
  const fs::path dir = scratch("reduce");
  json j = {{"group", "su2"},       {"command", "reduce"}, {"two_L", 4},
            {"time_order", 2},      {"coefficients", {"-laplace", "0*id"}},
            {"data", {"xi 1 0 1", "zero"}}, {"dt", 1e-3}, {"scheme", "cn"}};
  CHECK(run(j, dir.string()) == kOk);
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r["equivalence"]["equivalent"] == true);
  CHECK(r["equivalence"]["max_scaled_error"].get<double>() <= 1e-6);
  CHECK(r["reduction"]["last_row_growth_two_L_20"][0].get<double>() < 1.0);

  json loose = j;
  loose["dt"] = 0.1;
  CHECK(run(loose, (dir / "loose").string()) == kCheckerFailure);
  json order = j;
  order["coefficients"] = {"-laplace", "laplace"};
  CHECK(run(order, (dir / "order").string()) == kConfigError);
}

TEST_CASE("transform self-test") {
  const fs::path dir = scratch("selftest");
  CHECK(run_binary("--command transform-selftest --two-L 6 --out " + dir.string()) == kOk);
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r["selftest"]["passed"] == true);
  CHECK(run_binary("--command evolve --out " + dir.string()) == kConfigError);
  CHECK(run_binary("--config /no/such/config.json") == kConfigError);
  CHECK(run_binary("--scheme euler --command transform-selftest") == kConfigError);
}

TEST_CASE("golden runs are deterministic and match the stored outputs") {
  const std::pair<const char*, int> cases[] = {{"heat", kOk}, {"drift", kOk}, {"backward_heat", kCheckerFailure}};
  for (const auto& [name, code] : cases) {
    CAPTURE(name);
    const fs::path cfg = fs::path(GOLDEN_DIR) / name / "config.json";
    const fs::path a = scratch(std::string(name) + "_a"), b = scratch(std::string(name) + "_b");
    CHECK(run_binary("--config " + cfg.string() + " --out " + a.string()) == code);
    CHECK(run_binary("--config " + cfg.string() + " --out " + b.string()) == code);
    const auto fa = files_under(a), fb = files_under(b);
    const auto fg = files_under(fs::path(GOLDEN_DIR) / name / "expected");
    CHECK(fa == fb);
    CHECK(fa == fg);
    for (const auto& f : fa) {
      CAPTURE(f.string());
      CHECK(slurp(a / f) == slurp(b / f));
      CHECK(slurp(a / f) == slurp(fs::path(GOLDEN_DIR) / name / "expected" / f));
    }
  }
}
