// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "liediff/evolve.hpp"
#include "liediff/reduce.hpp"
#include "liediff/wellposed.hpp"
#include "oracles.hpp"

using namespace liediff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SpectralField unit_random(Group g, int band, std::mt19937_64& rng, int max_rep = -1) {
  SpectralField F = oracle::random_field(g, band, rng, max_rep);
  F *= 1.0 / std::sqrt(plancherel_norm(F));
  return F;
}

double rel_err(const SpectralField& a, const SpectralField& b) {
  return std::sqrt(plancherel_norm(a - b) / std::max(plancherel_norm(b), 1e-300));
}

// ---------------------------------------------------------------------------

Outcome fourier_self_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const GridPtr grid = quadrature_grid(Group::SU2, 8);
  double plancherel = 0.0, round_trip = 0.0;
  for (int n = 0; n < 50; ++n) {
    const SpectralField F = oracle::random_field(Group::SU2, 8, rng);
    const GridField f = fourier_inverse(F, grid);
    const double p = plancherel_norm(F);
    plancherel = std::max(plancherel, std::abs(l2_inner(f, f).real() - p) / p);
    round_trip = std::max(round_trip, std::sqrt(plancherel_norm(fourier_forward(f, 8) - F) / p));
  }
  const GridPtr og = quadrature_grid(Group::SU2, 4);
  std::vector<std::pair<RepIndex, std::pair<int, int>>> idx;
  std::vector<GridField> samples;
  for (const auto& rep : dual_enumerate(Group::SU2, 4))
    for (int a = 0; a < rep.dim(); ++a)
      for (int b = 0; b < rep.dim(); ++b) {
        idx.push_back({rep, {a, b}});
        samples.push_back(GridField::sample(og, [&](const Angles& x) { return representation_matrix(rep, x)(a, b); }));
      }
  double ortho = 0.0;
  for (std::size_t p = 0; p < idx.size(); ++p)
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const double want = p == q ? 1.0 / idx[p].first.dim() : 0.0;
      ortho = std::max(ortho, std::abs(l2_inner(samples[p], samples[q]) - want));
    }
  const double secs = seconds_since(t0);
  return {plancherel <= 1e-10 && round_trip <= 1e-10 && ortho <= 1e-10 && secs < 5.0,
          fmt("Plancherel %.1e, round trip %.1e, orthogonality %.1e (%zu x %zu table), %.2f s", plancherel,
              round_trip, ortho, idx.size(), idx.size(), secs)};
}

Outcome spectrum_reproduction() {
  const Symbol L = make_symbol("-laplace", Group::SU2, 8);
  const GridPtr grid = quadrature_grid(Group::SU2, 8);
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& rep : dual_enumerate(Group::SU2, 8))
    for (int a = 0; a < rep.dim(); ++a)
      for (int b = 0; b < rep.dim(); ++b) {
        const GridField f = GridField::sample(grid, [&](const Angles& x) { return representation_matrix(rep, x)(a, b); });
        const GridField Af = quantize_apply(L, 0.0, f);
        const double lam = laplace_eigenvalue(rep);
        double num = 0.0, den = 0.0;
        for (std::size_t n = 0; n < f.values.size(); ++n) {
          num += std::norm(Af.values[n] + lam * f.values[n]);
          den += std::norm(f.values[n]);
        }
        worst = std::max(worst, std::sqrt(num / den) / std::max(lam, 1.0));
        ++count;
      }
  double sub = 0.0;
  for (int two_l = 0; two_l <= 8; ++two_l) {
    const CMatrix A1 = oracle::lie_algebra_matrix(two_l, 1), A2 = oracle::lie_algebra_matrix(two_l, 2);
    const CMatrix want = -(A1 * A1 + A2 * A2);
    const CMatrix got = sublaplace_symbol(RepIndex::su2(two_l));
    sub = std::max(sub, (got - want).norm() / std::max(got.norm(), 1.0));
  }
  return {worst <= 1e-8 && sub <= 1e-8,
          fmt("-L on %zu coefficients: relative error %.1e; sub-Laplacian symbol vs derivative oracle %.1e", count,
              worst, sub)};
}

Outcome fractional_heat_decay() {
  std::mt19937_64 rng(103);
  const SpectralField u0 = unit_random(Group::SU2, 8, rng);
  const std::pair<double, const char*> cases[] = {{0.5, "-laplace^1/4"}, {1.0, "-laplace^1/2"}, {2.0, "-laplace"}};
  bool ok = true;
  std::string detail;
  for (const auto& [m, text] : cases) {
    const Symbol K = make_symbol(text, Group::SU2, 8);
    SpectralField exact = u0;
    for (std::size_t i = 0; i < u0.size(); ++i)
      exact[i] *= std::exp(-std::pow(laplace_eigenvalue(u0.rep(i)), 0.5 * m));
    const EvolutionProblem p{K, u0, Forcing::none(), 1.0};
    const auto ex = evolve(p, Scheme::Exact, 0.01).states.back();
    double mode = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i)
      mode = std::max(mode, (ex[i] - exact[i]).norm() / std::max(exact[i].norm(), 1e-300));
    std::vector<double> e_rk, e_cn;
    for (double dt : {0.02, 0.01, 0.005}) {
      e_rk.push_back(rel_err(evolve(p, Scheme::RK4, dt).states.back(), exact));
      e_cn.push_back(rel_err(evolve(p, Scheme::CrankNicolson, dt).states.back(), exact));
    }
    const double o_rk = std::min(std::log2(e_rk[0] / e_rk[1]), std::log2(e_rk[1] / e_rk[2]));
    const double o_cn = std::min(std::log2(e_cn[0] / e_cn[1]), std::log2(e_cn[1] / e_cn[2]));
    ok = ok && mode <= 1e-10 && o_rk >= 3.7 && o_cn >= 1.9;
    detail += fmt("%sm=%g: exact %.1e, RK4 order %.2f, CN order %.2f", detail.empty() ? "" : "; ", m, mode, o_rk, o_cn);
  }
  return {ok, detail};
}

Outcome energy_identity() {
  std::mt19937_64 rng(104);
  const SpectralField u0 = unit_random(Group::SU2, 4, rng);
  auto max_res = [&](const char* text, double dt) {
    const auto r = evolve({make_symbol(text, Group::SU2, 4), u0, Forcing::none(), 1.0}, Scheme::Exact, dt);
    return *std::max_element(r.report.identity_residuals.begin(), r.report.identity_residuals.end());
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, text] : {std::pair{"heat", "-laplace"}, std::pair{"drift", "-1*laplace^1/2 + 1*iX3"}}) {
    const double r1 = max_res(text, 0.01), r2 = max_res(text, 0.005);
    const double q = r1 / r2;
    ok = ok && q >= 3.5 && q <= 4.5;
    detail += fmt("%s%s: residual %.2e -> %.2e, factor %.3f", detail.empty() ? "" : "; ", name, r1, r2, q);
  }
  return {ok, detail};
}

Outcome energy_estimate() {
  std::mt19937_64 rng(105);
  const SpectralField u0 = unit_random(Group::SU2, 8, rng);
  double worst_c = 0.0;
  for (const char* text : {"-bessel^1/4", "-bessel^1/2", "-bessel^1"})
    for (double s : {-1.0, 0.0, 1.0, 2.0}) {
      const EvolutionProblem p{make_symbol(text, Group::SU2, 8), u0, Forcing::none(), 1.0, s};
      worst_c = std::max(worst_c, evolve(p, Scheme::Exact, 0.01).report.fit.C);
    }
  // manufactured solution v(t) = (1 + t) w for K = -(1 + L)^{1/2}
  const SpectralField w = unit_random(Group::SU2, 4, rng);
  double C[2], Cp[2], manuf = 0.0;
  int k = 0;
  for (int band : {8, 16}) {
    const Symbol K = make_symbol("-bessel^1/2", Group::SU2, band);
    const SpectralField wb = w.with_band(band);
    const SpectralField Kw = invariant_apply(K, wb);
    Forcing f;
    f.parts.push_back({wb - Kw, TimeProfile{}});
    f.parts.push_back({(-1.0) * Kw, TimeProfile::named("linear")});
    const auto r = evolve({K, wb, f, 1.0, 1.0}, Scheme::Exact, 0.01);
    manuf = std::max(manuf, rel_err(r.states.back(), 2.0 * wb));
    C[k] = r.report.fit.C;
    Cp[k] = r.report.fit.C_prime;
    ++k;
  }
  const bool finite = std::isfinite(C[0]) && std::isfinite(Cp[0]) && std::isfinite(C[1]) && std::isfinite(Cp[1]);
  const double dC = std::abs(C[1] - C[0]) / std::max(std::abs(C[0]), 1e-300);
  const double dCp = std::abs(Cp[1] - Cp[0]) / std::max(std::abs(Cp[0]), 1e-300);
  return {worst_c <= 1.0 + 1e-8 && finite && Cp[0] > 0.0 && dC <= 0.05 && dCp <= 0.05,
          fmt("f = 0: max C = %.12f over m in {1/2,1,2}, s in {-1,0,1,2}; manufactured f (s = 1): "
              "(C, C') = (%.4g, %.4g) at two_L 8, (%.4g, %.4g) at 16, change %.1e / %.1e, solution error %.1e",
              worst_c, C[0], Cp[0], C[1], Cp[1], dC, dCp, manuf)};
}

Outcome drift_criterion() {
  int disagree = 0, points = 0;
  for (int ia = 0; ia <= 4; ++ia)
    for (int ib = 0; ib <= 4; ++ib) {
      const double a = -2.0 + 0.5 * ia, a3 = 0.5 * ib;
      Coefficient ca, cb;
      ca.scale = a;
      cb.scale = a3;
      const bool closed = su2_drift_criterion(ca, cb, 1.0).holds;
      const Symbol K = make_symbol(fmt("%g*laplace^1/2 + %g*iX3", a, a3), Group::SU2, 4);
      double lo = std::numeric_limits<double>::infinity();
      for (int two_ell = 0; two_ell <= 100; ++two_ell) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(-K(0.0, RepIndex::su2(two_ell))), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
      }
      disagree += closed != (lo >= -1e-10);
      ++points;
    }
  int frac_disagree = 0, frac_points = 0;
  for (double m : {0.25, 0.5, 0.75})
    for (int ia = 0; ia <= 4; ++ia)
      for (int ib = 0; ib <= 4; ++ib) {
        const double a = -2.0 + 0.5 * ia, a3 = 0.5 * ib;
        const Symbol K = make_symbol(fmt("%g*laplace^%g + %g*iX3", a, 0.5 * m, a3), Group::SU2, 4);
        const EllipticityReport r = positivity_check(K);
        Coefficient ca, cb;
        ca.scale = a;
        cb.scale = a3;
        const bool closed = su2_drift_criterion(ca, cb, m).holds;
        frac_disagree += (r.passed() != (a3 == 0.0)) + (closed != (a3 == 0.0));
        ++frac_points;
      }
  return {disagree == 0 && frac_disagree == 0,
          fmt("m = 1: %d disagreements over %d grid points (brute force two_ell <= 100); "
              "m in {1/4,1/2,3/4}: %d mismatches with 'positive iff a3 = 0' over %d points",
              disagree, points, frac_disagree, frac_points)};
}

Outcome garding_window() {
  const GardingBound half = garding_order_bound(1.0, 0.0, 2);
  bool exact = half.valid && half.value == 0.5;
  const double rhos[] = {0.2, 0.4, 0.6, 0.8, 1.0}, deltas[] = {0.0, 0.05, 0.1, 0.15, 0.2};
  const int kappas[] = {1, 2, 3, 4};
  for (double r : rhos)
    for (double d : deltas)
      if (d < r) {
        const GardingBound g = garding_order_bound(r, d, 1);
        exact = exact && g.valid && g.value == r - d;
      }
  int violations = 0, points = 0;
  for (int ir = 0; ir < 5; ++ir)
    for (int id = 0; id < 5; ++id)
      for (int ik = 0; ik < 4; ++ik) {
        ++points;
        const GardingBound g = garding_order_bound(rhos[ir], deltas[id], kappas[ik]);
        const double formula = rhos[ir] / kappas[ik] - (2.0 - 1.0 / kappas[ik]) * deltas[id];
        if (std::abs(g.value - formula) > 1e-15) ++violations;
        if (g.valid != (deltas[id] < rhos[ir] / (2.0 * kappas[ik] - 1.0))) ++violations;
        if (ir + 1 < 5) {
          const GardingBound n = garding_order_bound(rhos[ir + 1], deltas[id], kappas[ik]);
          if (!(n.value > g.value) || (g.valid && !n.valid)) ++violations;
        }
        if (id + 1 < 5) {
          const GardingBound n = garding_order_bound(rhos[ir], deltas[id + 1], kappas[ik]);
          if (!(n.value < g.value) || (n.valid && !g.valid)) ++violations;
        }
        if (ik + 1 < 4) {
          const GardingBound n = garding_order_bound(rhos[ir], deltas[id], kappas[ik + 1]);
          if (!(n.value < g.value) || (n.valid && !g.valid)) ++violations;
        }
      }
  return {exact && violations == 0,
          fmt("(1,0,2) -> %g; kappa = 1 gives rho - delta exactly: %s; %d monotonicity violations over %d points",
              half.value, exact ? "yes" : "no", violations, points)};
}

Outcome contraction_conservation() {
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const char* powers[] = {"1/4", "1/2", "3/4", "1"};
  const char* profiles[] = {"", "pulse*", "decay*"};
  int positive = 0, tried = 0, nonmonotone = 0;
  double worst_rise = 0.0;
  while (positive < 20 && tried < 200) {
    ++tried;
    const std::string text =
        fmt("-%.3f*%slaplace^%s + %.3f*iX3 + %.3f*X1 - %.3f*X2 - %.3f*id", 0.2 + 1.8 * U(rng), profiles[rng() % 3],
            powers[rng() % 4], 2.0 * U(rng) - 1.0, U(rng), U(rng), 0.3 * U(rng));
    const Symbol K = make_symbol(text, Group::SU2, 6);
    if (!positivity_check(K).passed()) continue;
    ++positive;
    const SpectralField u0 = unit_random(Group::SU2, 6, rng);
    const auto r = evolve({K, u0, Forcing::none(), 1.0}, Scheme::Auto, 0.01);
    const auto& n = r.report.l2_norms;
    bool mono = true;
    for (std::size_t k = 1; k < n.size(); ++k) {
      worst_rise = std::max(worst_rise, n[k] - n[k - 1]);
      mono = mono && n[k] <= n[k - 1] + 1e-10;
    }
    nonmonotone += !mono;
  }
  const bool part_a = positive == 20 && nonmonotone == 0;

  // K = i a3 X3 alone, taken literally
  const SpectralField u0 = unit_random(Group::SU2, 6, rng);
  auto drift = [&](const char* text) {
    const auto r = evolve({make_symbol(text, Group::SU2, 6), u0, Forcing::none(), 1.0}, Scheme::Exact, 0.01);
    double d = 0.0;
    for (double v : r.report.l2_norms) d = std::max(d, std::abs(v - r.report.l2_norms[0]));
    return d;
  };
  const double literal = drift("0.7*iX3");
  const double skew = drift("0.7*X3");
  const bool part_b = literal <= 1e-10;
  return {part_a && part_b,
          fmt("(a) %d positive problems (%d drawn): %d with rising L2 norm, largest rise %.1e; "
              "(b) K = 0.7*iX3: max |norm change| %.3e over T = 1 %s; for reference K = 0.7*X3: %.1e",
              positive, tried, nonmonotone, worst_rise, literal, part_b ? "(conserved)" : "(not conserved)", skew)};
}

SpectralField second_order_oracle(const std::vector<Symbol>& a, const SpectralField& g1, const SpectralField& g2,
                                  double t) {
  SpectralField out = g1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const RepIndex& rep = out.rep(i);
    const CMatrix A2 = a[0](0.0, rep), A1 = a[1](0.0, rep);
    for (int r = 0; r < rep.dim(); ++r) {
      const cplx mu = A2(r, r), nu = A1(r, r);
      const cplx disc = std::sqrt(nu * nu + 4.0 * mu);
      const cplx rp = 0.5 * (nu + disc), rm = 0.5 * (nu - disc);
      for (int c = 0; c < rep.dim(); ++c) {
        const cplx x = g1[i](r, c), v = g2[i](r, c);
        out[i](r, c) = std::abs(disc) < 1e-12
                           ? std::exp(rp * t) * (x + (v - rp * x) * t)
                           : ((v - rm * x) * std::exp(rp * t) + (rp * x - v) * std::exp(rm * t)) / disc;
      }
    }
  }
  return out;
}

Outcome reduction_equivalence() {
  std::mt19937_64 rng(109);
  const std::pair<const char*, const char*> problems[] = {
      {"-laplace", "0*id"}, {"-laplace - 0.5*id", "-0.3*id + 0.2*iX3"}, {"-sublaplace", "-0.2*id"}};
  double worst = 0.0, worst_cn = 0.0;
  for (const auto& [a2, a1] : problems) {
    HigherOrderProblem p;
    p.m = 2;
    p.coefficients = {{make_symbol(a2, Group::SU2, 4), 2.0}, {make_symbol(a1, Group::SU2, 4), 1.0}};
    p.data = {unit_random(Group::SU2, 4, rng), unit_random(Group::SU2, 4, rng)};
    const std::vector<Symbol> a{p.coefficients[0].op, p.coefficients[1].op};
    const FirstOrderSystem sys = reduce_to_first_order(p);
    for (Scheme s : {Scheme::Exact, Scheme::CrankNicolson}) {
      const BlockTrajectory traj = solve_reduced(sys, s, 1e-3);
      const auto u = extract_u(sys, traj);
      double e = 0.0;
      for (std::size_t n = 0; n < u.size(); n += 50)
        e = std::max(e, (u[n] - second_order_oracle(a, p.data[0], p.data[1], traj.times[n])).max_abs());
      e = std::max(e, (u.back() - second_order_oracle(a, p.data[0], p.data[1], 1.0)).max_abs());
      (s == Scheme::Exact ? worst : worst_cn) = std::max(s == Scheme::Exact ? worst : worst_cn, e);
    }
  }
  return {worst <= 1e-6,
          fmt("3 problems, unit-norm random data, two_L 4, dt 1e-3: max coefficient error %.1e (exact stepper), "
              "%.1e (Crank-Nicolson)",
              worst, worst_cn)};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(LIE_DIFFUSE_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome cli_golden() {
  const fs::path tmp = fs::temp_directory_path() / ("lie_diffuse_acceptance_" + std::to_string(::getpid()));
  const std::pair<const char*, int> cases[] = {{"heat", 0}, {"drift", 0}, {"backward_heat", 3}};
  int mismatches = 0, files = 0;
  std::string codes;
  for (const auto& [name, want] : cases) {
    const fs::path cfg = fs::path(GOLDEN_DIR) / name / "config.json";
    const fs::path gold = fs::path(GOLDEN_DIR) / name / "expected";
    const fs::path a = tmp / name / "a", b = tmp / name / "b";
    fs::remove_all(a);
    fs::remove_all(b);
    const int ca = run_binary("--config " + cfg.string() + " --out " + a.string());
    const int cb = run_binary("--config " + cfg.string() + " --out " + b.string());
    codes += fmt("%s%s=%d", codes.empty() ? "" : ", ", name, ca);
    mismatches += (ca != want) + (cb != want);
    const auto fa = files_under(a), fb = files_under(b), fg = files_under(gold);
    if (fa != fb || fa != fg || fa.empty()) ++mismatches;
    for (const auto& f : fa) {
      ++files;
      const std::string sa = slurp(a / f);
      mismatches += (sa != slurp(b / f)) + (sa != slurp(gold / f));
    }
  }
  fs::remove_all(tmp);
  return {mismatches == 0,
          fmt("exit codes %s; %d output files byte-identical across two runs and with the golden copies: %s", codes.c_str(),
              files, mismatches == 0 ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Fourier self-consistency", fourier_self_consistency},
      {"spectrum reproduction", spectrum_reproduction},
      {"fractional heat decay", fractional_heat_decay},
      {"energy identity", energy_identity},
      {"energy estimate", energy_estimate},
      {"SU(2) drift criterion", drift_criterion},
      {"sharp Garding order window", garding_window},
      {"contraction/conservation dichotomy", contraction_conservation},
      {"reduction equivalence", reduction_equivalence},
      {"CLI determinism and exit codes", cli_golden},
  };
  int failed = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%2d] %s  %s: %s  (%.1f s)\n", k, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", k - failed, k);
  return failed == 0 ? 0 : 1;
}
