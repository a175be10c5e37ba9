#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"

int main(int argc, char** argv) {
  using namespace lie_diffuse;
  CLI::App app{"lie-diffuse: diffusion problems on compact Lie groups"};
  std::string config;
  Overrides o;
  RunOptions run;
  std::string command, out, scheme;
  std::uint64_t seed = 0;
  int two_L = 0;
  double dt = 0.0;
  auto* c_config = app.add_option("--config", config, "JSON run configuration");
  auto* c_command = app.add_option("--command", command, "check | evolve | reduce | transform-selftest")
                        ->check(CLI::IsMember({"check", "evolve", "reduce", "transform-selftest"}));
  auto* c_out = app.add_option("--out", out, "output directory");
  auto* c_seed = app.add_option("--seed", seed, "seed of 'random' field specs");
  app.add_flag("--allow-unverified", run.allow_unverified, "run even when the hypotheses are not verified");
  auto* c_two_L = app.add_option("--two-L", two_L, "solution bandlimit");
  auto* c_dt = app.add_option("--dt", dt, "time step");
  auto* c_scheme = app.add_option("--scheme", scheme, "auto | exact | cn | rk4")
                       ->check(CLI::IsMember({"auto", "exact", "cn", "rk4"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (*c_command) o.command = command;
  if (*c_out) o.out = out;
  if (*c_seed) o.seed = seed;
  if (*c_two_L) o.two_L = two_L;
  if (*c_dt) o.dt = dt;
  if (*c_scheme) o.scheme = scheme;

  RunConfig cfg;
  try {
    if (*c_config) {
      cfg = parse_config_file(config, o);
    } else if (o.command && *o.command == "transform-selftest") {
      cfg = default_config(o);
    } else {
      std::cerr << "lie-diffuse: --config is required for this command\n";
      return kConfigError;
    }
  } catch (const liediff::Error& e) {
    std::cerr << "lie-diffuse: config error: " << e.what() << "\n";
    return kConfigError;
  }
  return run_command(cfg, run, std::cerr);
}
