// Batch front end of lie-diffuse: JSON run configurations and commands.
//
// Configuration keys (all optional unless marked):
//   command          "check" | "evolve" | "reduce" | "transform-selftest"
//   group            "su2" | "torus" (required)
//   two_L            solution bandlimit, default 16
//   operator         generator K, operator grammar (check, evolve)
//   u0               field spec (evolve)
//   forcing          {"shape": field spec, "profile": name, "scale": x} or a list of them
//   T, dt, scheme    default 1, 1e-3, "auto"
//   s, norm          Sobolev index and weight kind of hs_norm, default 0, "elliptic"
//   check            {"two_L", "time_samples", "x_two_L", "min_weight", "kind"}
//   time_order       m >= 2 (reduce)
//   coefficients     [a_m, ..., a_1] operator strings (reduce)
//   data             [g_1, ..., g_m] field specs (reduce)
//   gamma            weight kind of Gamma, default "elliptic" (reduce)
//   equivalence_tol  default 1e-6 (reduce)
//   snapshots        times at which spectral snapshots are written
//   seed             default seed of "random" field specs, default 0
//   out              output directory, default "out"
//
// Field specs: "zero", "delta", "xi l i j" (SU(2), l integer or half-integer,
// 0-based row and column), "xi k" (torus), "random" or "random N" (seeded),
// {"file": path} (spectral JSON, relative to the config file).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "liediff/evolve.hpp"
#include "liediff/reduce.hpp"
#include "liediff/wellposed.hpp"

namespace lie_diffuse {

enum ExitCode { kOk = 0, kConfigError = 2, kCheckerFailure = 3, kSolverFailure = 4 };

class ConfigError : public liediff::Error {
 public:
  using liediff::Error::Error;
};

struct Overrides {
  std::optional<std::string> command;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> two_L;
  std::optional<double> dt;
  std::optional<std::string> scheme;
};

struct ForcingSpec {
  nlohmann::json shape;
  std::string profile = "const";
  double scale = 1.0;
};

struct RunConfig {
  std::string command = "evolve";
  liediff::Group group = liediff::Group::SU2;
  int two_L = 16;
  std::optional<std::string> op;
  std::optional<nlohmann::json> u0;
  std::vector<ForcingSpec> forcing;
  double T = 1.0;
  double dt = 1e-3;
  liediff::Scheme scheme = liediff::Scheme::Auto;
  double s = 0.0;
  liediff::WeightKind norm = liediff::WeightKind::Elliptic;
  liediff::ScanOptions check;
  liediff::WeightKind check_kind = liediff::WeightKind::Elliptic;
  int time_order = 0;
  std::vector<std::string> coefficients;
  std::vector<nlohmann::json> data;
  liediff::WeightKind gamma = liediff::WeightKind::Elliptic;
  double equivalence_tol = 1e-6;
  std::vector<double> snapshots;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string base_dir = ".";

  /// Normalized echo of the configuration (no paths).
  nlohmann::json to_json() const;
};

RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir, const Overrides& o = {});
RunConfig parse_config_file(const std::string& path, const Overrides& o = {});
/// Configuration from flags alone (transform-selftest).
RunConfig default_config(const Overrides& o = {});

/// Field described by a field spec at the configured group and bandlimit.
liediff::SpectralField make_field(const nlohmann::json& spec, const RunConfig& cfg);
liediff::Forcing make_forcing(const RunConfig& cfg);

struct RunOptions {
  bool allow_unverified = false;
};

/// Runs cfg.command, writes artifacts under cfg.out and returns the exit code.
/// check and evolve return kCheckerFailure when the symbol of -K fails the
/// positivity check (unless allow_unverified); problems that are positive but
/// fall outside Case I and Case II are reported and still run.
/// Messages for the user go to `log`.
int run_command(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

}  // namespace lie_diffuse
