#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "cli.hpp"
#include "liediff/field_io.hpp"

namespace lie_diffuse {

using nlohmann::json;
using namespace liediff;
namespace fs = std::filesystem;

namespace {

constexpr int kReportFormat = 1;
constexpr int kTableRows = 11;
constexpr double kSelftestTol = 1e-10;

// 12 significant digits keep reports stable across builds
void round_numbers(json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      j = nullptr;
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    j = std::strtod(buf, nullptr);
  } else if (j.is_structured()) {
    for (auto& v : j) round_numbers(v);
  }
}

json header(const RunConfig& cfg) {
  return {{"tool", "lie-diffuse"}, {"format", kReportFormat}, {"command", cfg.command}, {"config", cfg.to_json()}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + p.string() + "' failed");
}

void write_report(const fs::path& dir, json report) {
  round_numbers(report);
  write_text(dir / "report.json", report.dump(2) + "\n");
}

std::vector<std::size_t> table_indices(std::size_t n_times) {
  std::vector<std::size_t> idx;
  const std::size_t last = n_times - 1;
  for (int r = 0; r < kTableRows; ++r) {
    const std::size_t k = (last * static_cast<std::size_t>(r) + (kTableRows - 1) / 2) / (kTableRows - 1);
    if (idx.empty() || idx.back() != k) idx.push_back(k);
  }
  return idx;
}

Classification run_checker(const Symbol& K, const RunConfig& cfg) {
  return classify_problem(K, cfg.check, cfg.check_kind);
}

void log_unverified(const Classification& c, std::ostream& log) {
  log << "lie-diffuse: hypotheses not verified: " << c.reason;
  const auto& w = c.positivity.witness;
  if (w) {
    log << " (witness";
    if (w->rep.group == Group::SU2)
      log << " two_ell=" << w->rep.two_ell;
    else
      log << " k=" << w->rep.k;
    log << " t=" << w->t << " eig=" << w->eig << ")";
  }
  log << "\n";
}

// "verified": Case I or II; "unverified": positive but outside both cases;
// "failed": the symbol of -K is not positive.
std::string status_of(const Classification& c) {
  if (c.kind != ProblemCase::Unverified) return "verified";
  return c.positivity.passed() ? "unverified" : "failed";
}

int cmd_check(const RunConfig& cfg, const RunOptions& opt, const fs::path& dir, std::ostream& log) {
  const Symbol K = make_symbol(*cfg.op, cfg.group, cfg.two_L);
  const Classification c = run_checker(K, cfg);
  json r = header(cfg);
  r["classification"] = c.to_json();
  r["status"] = status_of(c);
  write_report(dir, r);
  if (c.kind == ProblemCase::Unverified) log_unverified(c, log);
  return c.positivity.passed() || opt.allow_unverified ? kOk : kCheckerFailure;
}

int cmd_evolve(const RunConfig& cfg, const RunOptions& opt, const fs::path& dir, std::ostream& log) {
  const Symbol K = make_symbol(*cfg.op, cfg.group, cfg.two_L);
  if (cfg.scheme == Scheme::Exact && !K.x_independent())
    throw ConfigError("scheme 'exact' needs an x-independent operator");
  const Classification c = run_checker(K, cfg);
  json r = header(cfg);
  r["classification"] = c.to_json();
  if (c.kind == ProblemCase::Unverified) log_unverified(c, log);
  if (!c.positivity.passed() && !opt.allow_unverified) {
    r["status"] = "refused";
    write_report(dir, r);
    return kCheckerFailure;
  }

  EvolutionProblem p{K, make_field(*cfg.u0, cfg), make_forcing(cfg), cfg.T, cfg.s, cfg.norm};
  EvolutionResult res;
  try {
    res = evolve(p, cfg.scheme, cfg.dt);
  } catch (const SolverError& e) {
    r["status"] = "solver-failure";
    r["error"] = {{"message", e.what()}, {"residual", e.residual()}};
    write_report(dir, r);
    log << "lie-diffuse: " << e.what() << "\n";
    return kSolverFailure;
  }
  const EnergyReport& e = res.report;
  for (double v : e.l2_norms)
    if (!std::isfinite(v)) {
      r["status"] = "solver-failure";
      r["error"] = {{"message", "non-finite solution"}};
      write_report(dir, r);
      log << "lie-diffuse: non-finite solution\n";
      return kSolverFailure;
    }

  std::string csv = "# lie-diffuse v1\nt,l2_norm,hs_norm,identity_residual\n";
  char line[128];
  for (std::size_t n = 0; n < e.times.size(); ++n) {
    const double res_n = n < e.identity_residuals.size() ? e.identity_residuals[n] : 0.0;
    std::snprintf(line, sizeof line, "%.10e,%.12e,%.12e,%.6e\n", e.times[n], e.l2_norms[n], e.hs_norms[n], res_n);
    csv += line;
  }
  write_text(dir / "trajectory.csv", csv);

  bool nonincreasing = true;
  for (std::size_t n = 1; n < e.l2_norms.size(); ++n)
    nonincreasing = nonincreasing && e.l2_norms[n] <= e.l2_norms[n - 1] + 1e-10 * e.l2_norms[0];
  double max_res = 0.0;
  for (double v : e.identity_residuals) max_res = std::max(max_res, v);

  const double reg_index = cfg.s + 0.5 * K.cls().order;
  json table = json::array();
  for (std::size_t n : table_indices(res.times.size()))
    table.push_back({{"t", res.times[n]}, {"norm", sobolev_norm(res.states[n], reg_index, cfg.norm)}});

  json snaps = json::array();
  if (!cfg.snapshots.empty()) {
    fs::create_directories(dir / "snapshots");
    for (double t : cfg.snapshots) {
      const auto n = std::min(static_cast<std::size_t>(std::lround(t / res.dt)), res.states.size() - 1);
      char name[64];
      std::snprintf(name, sizeof name, "step_%06zu.json", n);
      write_text(dir / "snapshots" / name, spectral_to_json(res.states[n]).dump() + "\n");
      snaps.push_back({{"t", res.times[n]}, {"file", std::string("snapshots/") + name}});
    }
  }

  r["status"] = "ok";
  r["hypotheses"] = status_of(c);
  r["evolution"] = {{"scheme", to_string(res.scheme)},
                    {"dt", res.dt},
                    {"steps", res.times.size() - 1},
                    {"rk4_substeps", res.substeps},
                    {"warnings", res.warnings},
                    {"l2_initial", e.l2_norms.front()},
                    {"l2_final", e.l2_norms.back()},
                    {"l2_nonincreasing", nonincreasing},
                    {"max_identity_residual", max_res}};
  r["energy_estimate"] = {{"s", cfg.s},
                          {"norm", to_string(cfg.norm)},
                          {"C", e.fit.C},
                          {"C_prime", e.fit.C_prime},
                          {"forcing_integral", e.fit.forcing_integral},
                          {"satisfied", e.fit.satisfied}};
  r["regularity"] = {{"index", reg_index}, {"table", table}};
  r["snapshots"] = snaps;
  write_report(dir, r);
  for (const auto& w : res.warnings) log << "lie-diffuse: warning: " << w << "\n";
  return kOk;
}

int cmd_reduce(const RunConfig& cfg, const RunOptions&, const fs::path& dir, std::ostream& log) {
  HigherOrderProblem p;
  p.m = cfg.time_order;
  for (std::size_t j = 0; j < cfg.coefficients.size(); ++j)
    p.coefficients.push_back({make_symbol(cfg.coefficients[j], cfg.group, cfg.two_L), static_cast<double>(p.m - static_cast<int>(j))});
  for (const auto& d : cfg.data) p.data.push_back(make_field(d, cfg));
  p.f = make_forcing(cfg);
  p.T = cfg.T;
  p.gamma_kind = cfg.gamma;

  std::optional<FirstOrderSystem> sys;
  try {
    sys.emplace(p);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  json r = header(cfg);
  BlockTrajectory traj;
  try {
    traj = solve_reduced(*sys, cfg.scheme, cfg.dt);
  } catch (const SolverError& e) {
    r["status"] = "solver-failure";
    r["error"] = {{"message", e.what()}, {"residual", e.residual()}};
    write_report(dir, r);
    log << "lie-diffuse: " << e.what() << "\n";
    return kSolverFailure;
  }
  const std::vector<SpectralField> u = extract_u(*sys, traj);

  bool have_reference = sys->x_independent() && sys->t_independent() && p.f.t_independent();
  json table = json::array();
  double max_err = 0.0;
  for (std::size_t n : table_indices(u.size())) {
    const double un = std::sqrt(plancherel_norm(u[n]));
    if (!std::isfinite(un)) {
      r["status"] = "solver-failure";
      r["error"] = {{"message", "non-finite solution"}};
      write_report(dir, r);
      return kSolverFailure;
    }
    json row = {{"t", traj.times[n]}, {"u_l2", un}};
    if (have_reference) {
      const SpectralField ref = direct_solution(p, traj.times[n]);
      row["reference_l2"] = std::sqrt(plancherel_norm(ref));
      row["error_l2"] = std::sqrt(plancherel_norm(u[n] - ref));
    }
    table.push_back(row);
  }
  // errors relative to the largest reference norm along the table
  if (have_reference) {
    double scale = 0.0;
    for (const auto& row : table) scale = std::max(scale, row["reference_l2"].get<double>());
    for (auto& row : table) {
      const double err = scale > 0.0 ? row["error_l2"].get<double>() / scale : row["error_l2"].get<double>();
      row["scaled_error"] = err;
      max_err = std::max(max_err, err);
    }
  }

  json growth = last_row_growth(*sys, 20);
  r["reduction"] = {{"m", p.m},
                    {"gamma", to_string(p.gamma_kind)},
                    {"scheme", to_string(traj.scheme)},
                    {"dt", traj.dt},
                    {"steps", traj.times.size() - 1},
                    {"last_row_growth_two_L_20", growth},
                    {"table", table}};
  if (!have_reference) {
    r["status"] = "ok";
    r["equivalence"] = {{"reference", nullptr}, {"note", "closed-form per-mode reference needs invariant data"}};
    write_report(dir, r);
    return kOk;
  }
  const bool equivalent = max_err <= cfg.equivalence_tol;
  r["equivalence"] = {{"reference", "per-mode companion exponential"},
                      {"max_scaled_error", max_err},
                      {"tolerance", cfg.equivalence_tol},
                      {"equivalent", equivalent}};
  r["status"] = equivalent ? "ok" : "not-equivalent";
  write_report(dir, r);
  if (!equivalent) {
    log << "lie-diffuse: reduced solution deviates from the reference by " << max_err << "\n";
    return kCheckerFailure;
  }
  return kOk;
}

int cmd_selftest(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const Group g = cfg.group;
  const int band = cfg.two_L;
  const GridPtr grid = quadrature_grid(g, band);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double plancherel = 0.0, round_trip = 0.0;
  constexpr int kFields = 5;
  for (int n = 0; n < kFields; ++n) {
    SpectralField F(g, band);
    for (std::size_t i = 0; i < F.size(); ++i)
      for (Eigen::Index a = 0; a < F[i].rows(); ++a)
        for (Eigen::Index b = 0; b < F[i].cols(); ++b) F[i](a, b) = cplx(u(rng), u(rng));
    const GridField f = fourier_inverse(F, grid);
    const double p = plancherel_norm(F);
    plancherel = std::max(plancherel, std::abs(l2_inner(f, f).real() - p) / p);
    round_trip = std::max(round_trip, std::sqrt(plancherel_norm(fourier_forward(f, band) - F) / p));
  }

  const int obound = std::min(band, 4);
  const GridPtr ogrid = quadrature_grid(g, obound);
  std::vector<std::pair<RepIndex, std::pair<int, int>>> entries;
  std::vector<GridField> samples;
  for (const auto& rep : dual_enumerate(g, obound))
    for (int a = 0; a < rep.dim(); ++a)
      for (int b = 0; b < rep.dim(); ++b) {
        entries.push_back({rep, {a, b}});
        samples.push_back(fourier_inverse(matrix_coefficient_field(g, obound, rep, a, b), ogrid));
      }
  double ortho = 0.0;
  for (std::size_t p = 0; p < entries.size(); ++p)
    for (std::size_t q = 0; q < entries.size(); ++q) {
      const double want = p == q ? 1.0 / entries[p].first.dim() : 0.0;
      ortho = std::max(ortho, std::abs(l2_inner(samples[p], samples[q]) - want));
    }

  const bool ok = plancherel <= kSelftestTol && round_trip <= kSelftestTol && ortho <= kSelftestTol;
  json r = header(cfg);
  r["selftest"] = {{"fields", kFields},
                   {"plancherel_max_relative_error", plancherel},
                   {"round_trip_max_relative_error", round_trip},
                   {"orthogonality_band", obound},
                   {"orthogonality_entries", entries.size()},
                   {"orthogonality_max_error", ortho},
                   {"tolerance", kSelftestTol},
                   {"passed", ok}};
  r["status"] = ok ? "ok" : "failed";
  write_report(dir, r);
  if (!ok) log << "lie-diffuse: transform self-test failed\n";
  return ok ? kOk : kCheckerFailure;
}

}  // namespace

int run_command(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  try {
    const fs::path dir(cfg.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out + "': " + ec.message());
    if (cfg.command == "check") return cmd_check(cfg, opt, dir, log);
    if (cfg.command == "evolve") return cmd_evolve(cfg, opt, dir, log);
    if (cfg.command == "reduce") return cmd_reduce(cfg, opt, dir, log);
    if (cfg.command == "transform-selftest") return cmd_selftest(cfg, dir, log);
    throw ConfigError("unknown command '" + cfg.command + "'");
  } catch (const SolverError& e) {
    log << "lie-diffuse: solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const Error& e) {
    log << "lie-diffuse: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    log << "lie-diffuse: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace lie_diffuse
