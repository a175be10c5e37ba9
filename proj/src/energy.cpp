#include <algorithm>
#include <cmath>

#include "liediff/evolve.hpp"

namespace liediff {

Forcing Forcing::profiled(SpectralField shape, TimeProfile p) {
  Forcing f;
  f.parts.push_back(Part{std::move(shape), std::move(p)});
  return f;
}

bool Forcing::t_independent() const {
  return std::all_of(parts.begin(), parts.end(), [](const Part& p) { return p.profile.constant(); });
}

void Forcing::add_to(double t, SpectralField& out) const {
  for (const auto& p : parts) out.axpy(p.profile.eval(t), p.shape);
}

SpectralField Forcing::at(double t, Group g, int band) const {
  SpectralField out(g, band);
  add_to(t, out);
  return out;
}

double sobolev_norm(const SpectralField& F, double s, WeightKind kind) {
  if (s == 0.0) return std::sqrt(plancherel_norm(F));
  double acc = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const RepIndex& r = F.rep(i);
    acc += r.dim() * (bessel_weight(r, s, kind).diagonal().asDiagonal() * F[i]).squaredNorm();
  }
  return std::sqrt(acc);
}

std::vector<double> energy_identity_residual(const std::vector<double>& times,
                                             const std::vector<SpectralField>& states, const Symbol& K,
                                             const Forcing& f) {
  const std::size_t n = states.size();
  if (n < 3 || times.size() != n) throw Error("energy identity needs at least three states with matching times");
  const double dt = times[1] - times[0];
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * dt) throw Error("energy identity needs a uniform time grid");

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = plancherel_norm(states[i]);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dy;
    if (i == 0)
      dy = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    else if (i == n - 1)
      dy = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    else
      dy = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    const SpectralField& v = states[i];
    double rhs = 2.0 * spectral_inner(apply_spectral(K, times[i], v), v).real();
    if (!f.zero()) rhs += 2.0 * spectral_inner(f.at(times[i], v.group(), v.band()), v).real();
    out[i] = std::abs(dy - rhs);
  }
  return out;
}

double forcing_energy(const Forcing& f, double T, double s, WeightKind kind) {
  if (f.zero()) return 0.0;
  const Group g = f.parts.front().shape.group();
  const int band = f.parts.front().shape.band();
  if (f.t_independent()) {
    const double nrm = sobolev_norm(f.at(0.0, g, band), s, kind);
    return T * nrm * nrm;
  }
  std::vector<double> x, w;
  gauss_legendre(64, x, w);
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = 0.5 * T * (x[k] + 1.0);
    const double nrm = sobolev_norm(f.at(t, g, band), s, kind);
    acc += w[k] * nrm * nrm;
  }
  return 0.5 * T * acc;
}

EnergyFit energy_estimate_check(const std::vector<double>& times, const std::vector<SpectralField>& states,
                                const SpectralField& u0, const Forcing& f, double T, double s, WeightKind kind) {
  (void)times;
  EnergyFit fit;
  const double u = std::pow(sobolev_norm(u0, s, kind), 2);
  const double I = forcing_energy(f, T, s, kind);
  fit.forcing_integral = I;
  std::vector<double> y;
  y.reserve(states.size());
  for (const auto& v : states) y.push_back(std::pow(sobolev_norm(v, s, kind), 2));
  const double ymax = y.empty() ? 0.0 : *std::max_element(y.begin(), y.end());

  if (I == 0.0) {
    if (u == 0.0) {
      fit.satisfied = ymax == 0.0;
      return fit;
    }
    fit.C = ymax / u;
    fit.satisfied = std::isfinite(fit.C);
    return fit;
  }
  if (u == 0.0) {
    fit.C_prime = std::max(0.0, ymax / I);
    fit.satisfied = std::isfinite(fit.C_prime);
    return fit;
  }

  auto c_prime = [&](double C) {
    double m = 0.0;
    for (double yt : y) m = std::max(m, (yt - C * u) / I);
    return m;
  };
  const double cmax = ymax / u;
  double best_c = 0.0, best_cp = c_prime(0.0), best = best_cp;
  constexpr int kGrid = 400;
  for (int k = 0; k <= kGrid; ++k) {
    const double C = cmax * std::pow(10.0, -8.0 * (1.0 - static_cast<double>(k) / kGrid));
    const double cp = c_prime(C);
    if (C + cp < best) best = C + cp, best_c = C, best_cp = cp;
  }
  fit.C = best_c;
  fit.C_prime = best_cp;
  fit.satisfied = std::isfinite(best);
  return fit;
}

EvolutionResult evolve(const EvolutionProblem& p, Scheme scheme, double dt, const StepperOptions& opt) {
  if (p.u0.group() != p.K.group()) throw Error("initial data and operator belong to different groups");
  ScalarGenerator gen(p.K, p.f, p.u0.band());
  BlockTrajectory traj = evolve_blocks(gen, BlockState{p.u0}, p.T, scheme, dt, opt);

  EvolutionResult out;
  out.times = traj.times;
  out.scheme = traj.scheme;
  out.dt = traj.dt;
  out.substeps = traj.substeps;
  out.warnings = traj.warnings;
  out.states.reserve(traj.states.size());
  for (auto& s : traj.states) out.states.push_back(std::move(s[0]));

  EnergyReport& r = out.report;
  r.times = out.times;
  for (const auto& v : out.states) {
    r.l2_norms.push_back(std::sqrt(plancherel_norm(v)));
    r.hs_norms.push_back(sobolev_norm(v, p.s, p.norm));
  }
  if (out.states.size() >= 3) r.identity_residuals = energy_identity_residual(out.times, out.states, p.K, p.f);
  r.fit = energy_estimate_check(out.times, out.states, p.u0, p.f, p.T, p.s, p.norm);
  return out;
}

}  // namespace liediff
