#include "liediff/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "liediff/wellposed.hpp"

namespace liediff {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Auto: return "auto";
    case Scheme::Exact: return "exact";
    case Scheme::CrankNicolson: return "cn";
    case Scheme::RK4: return "rk4";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "auto") return Scheme::Auto;
  if (s == "exact") return Scheme::Exact;
  if (s == "cn") return Scheme::CrankNicolson;
  if (s == "rk4") return Scheme::RK4;
  throw Error("unknown scheme '" + s + "' (expected auto, exact, cn or rk4)");
}

namespace {

using Vec = Eigen::VectorXcd;

std::size_t state_size(const BlockState& v) {
  std::size_t n = 0;
  for (const auto& f : v)
    for (std::size_t i = 0; i < f.size(); ++i) n += f[i].size();
  return n;
}

Vec flatten(const BlockState& v) {
  Vec out(state_size(v));
  std::size_t k = 0;
  for (const auto& f : v)
    for (std::size_t i = 0; i < f.size(); ++i) {
      Eigen::Map<const Vec> m(f[i].data(), f[i].size());
      out.segment(k, m.size()) = m;
      k += m.size();
    }
  return out;
}

void unflatten(const Vec& x, BlockState& v) {
  std::size_t k = 0;
  for (auto& f : v)
    for (std::size_t i = 0; i < f.size(); ++i) {
      Eigen::Map<Vec> m(f[i].data(), f[i].size());
      m = x.segment(k, m.size());
      k += m.size();
    }
}

CMatrix stack(const BlockState& v, std::size_t i) {
  const Eigen::Index d = v[0][i].rows();
  CMatrix out(d * v.size(), d);
  for (std::size_t b = 0; b < v.size(); ++b) out.block(b * d, 0, d, d) = v[b][i];
  return out;
}

void unstack(const CMatrix& m, BlockState& v, std::size_t i) {
  const Eigen::Index d = v[0][i].rows();
  for (std::size_t b = 0; b < v.size(); ++b) v[b][i] = m.block(b * d, 0, d, d);
}

void axpy(BlockState& y, cplx a, const BlockState& x) {
  for (std::size_t b = 0; b < y.size(); ++b) y[b].axpy(a, x[b]);
}

// (e^z - 1) / z without cancellation
cplx phi1(cplx z) {
  if (std::abs(z) < 1e-3) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
  const double x = z.real(), y = z.imag();
  const double s = std::sin(0.5 * y);
  const cplx em1(std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y));
  return em1 / z;
}

}  // namespace

// ---------------------------------------------------------------------------

BlockState Generator::zero_state() const {
  return BlockState(blocks(), SpectralField(group(), band()));
}

double Generator::spectral_bound(double T) const {
  if (x_independent()) {
    const std::vector<double> times = t_independent() ? std::vector<double>{0.0} : scan_times(T, 9);
    double rho = 0.0;
    for (const auto& rep : dual_enumerate(group(), band()))
      for (double t : times) {
        const CMatrix A = block_symbol(t, rep);
        if (diagonal()) {
          rho = std::max(rho, A.diagonal().cwiseAbs().maxCoeff());
        } else {
          Eigen::ComplexEigenSolver<CMatrix> es(A, false);
          rho = std::max(rho, es.eigenvalues().cwiseAbs().maxCoeff());
        }
      }
    return rho;
  }
  // power iteration on A(t) at a few times, with a safety factor
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  BlockState v = zero_state(), w = zero_state();
  Vec x(state_size(v));
  for (auto& c : x) c = cplx(n(rng), n(rng));
  double rho = 0.0;
  for (double t : scan_times(T, 3)) {
    Vec y = x.normalized();
    for (int it = 0; it < 40; ++it) {
      unflatten(y, v);
      apply(t, v, w);
      Vec z = flatten(w);
      const double r = z.norm();
      rho = std::max(rho, r);
      if (r == 0.0) break;
      y = z / r;
    }
  }
  return 1.25 * rho;
}

// ---------------------------------------------------------------------------

ScalarGenerator::ScalarGenerator(Symbol K, Forcing f, int band) : K_(std::move(K)), f_(std::move(f)), band_(band) {
  for (const auto& p : f_.parts)
    if (p.shape.group() != K_.group() || p.shape.band() != band_)
      throw Error("forcing shape does not match the solution bandlimit");
  if (K_.has_terms() && !K_.x_independent()) {
    const int cb = K_.coefficient_band();
    const GridPtr g = cached_grid(K_.group(), std::max(2, cb < 0 ? band_ : cb));
    const auto w = g->weights();
    for (std::size_t k = 0; k < K_.terms().size(); ++k) {
      if (K_.terms()[k].coef.spatial.constant()) {
        mean_coef_.push_back(1.0);
        continue;
      }
      const auto& a = K_.coefficient_samples(k, g);
      double m = 0.0;
      for (std::size_t n = 0; n < a.size(); ++n) m += w[n] * a[n];
      mean_coef_.push_back(m);
    }
  }
}

std::optional<CMatrix> ScalarGenerator::preconditioner_symbol(double t, const RepIndex& rep) const {
  if (x_independent()) return K_(t, rep);
  if (!K_.has_terms()) return std::nullopt;
  CMatrix acc = CMatrix::Zero(rep.dim(), rep.dim());
  for (std::size_t k = 0; k < K_.terms().size(); ++k) {
    const auto& term = K_.terms()[k];
    const double a = term.coef.at(t) * mean_coef_[k];
    if (a == 0.0) continue;
    acc += a * (K_.cached_band() >= band_ ? K_.base_matrix(k, rep) : term.base.symbol(rep));
  }
  return acc;
}

void ScalarGenerator::apply(double t, const BlockState& v, BlockState& out) const {
  out[0] = apply_spectral(K_, t, v[0]);
}

void ScalarGenerator::forcing(double t, BlockState& out) const { out[0] = f_.at(t, group(), band_); }

double ScalarGenerator::spectral_bound(double T) const {
  if (x_independent() || !K_.has_terms()) return Generator::spectral_bound(T);
  const std::vector<double> times = t_independent() ? std::vector<double>{0.0} : scan_times(T, 9);
  const int cb = K_.coefficient_band();
  const GridPtr g = cached_grid(K_.group(), std::max(4, cb < 0 ? band_ : 2 * cb));
  double bound = 0.0;
  for (std::size_t k = 0; k < K_.terms().size(); ++k) {
    const auto& term = K_.terms()[k];
    double amax = 0.0;
    for (double t : times) amax = std::max(amax, std::abs(term.coef.at(t)));
    if (!term.coef.spatial.constant()) {
      double xmax = 0.0;
      for (double a : K_.coefficient_samples(k, g)) xmax = std::max(xmax, std::abs(a));
      amax *= xmax;
    }
    double bmax = 0.0;
    for (const auto& rep : dual_enumerate(group(), band_)) {
      const CMatrix B = term.base.symbol(rep);
      if (term.base.diagonal())
        bmax = std::max(bmax, B.diagonal().cwiseAbs().maxCoeff());
      else
        bmax = std::max(bmax, Eigen::JacobiSVD<CMatrix>(B).singularValues()(0));
    }
    bound += amax * bmax;
  }
  return bound;
}

// ---------------------------------------------------------------------------

struct Stepper::Cache {
  bool valid = false;
  // exact: propagator and dt * phi1 per representation (diagonal: column vectors)
  std::vector<CMatrix> E, P;
  // CN, invariant path
  std::vector<CMatrix> plus, minus_diag;
  std::vector<Eigen::PartialPivLU<CMatrix>> lu;
  // CN, iterative path: preconditioner factorizations at a given time
  double precond_t = -1.0;
  bool have_precond = false;
  std::vector<Eigen::PartialPivLU<CMatrix>> precond;
  std::vector<RepIndex> reps;
};

Scheme resolve_scheme(Scheme requested, const Generator& gen) {
  if (requested == Scheme::Auto)
    return gen.x_independent() && gen.t_independent() ? Scheme::Exact : Scheme::CrankNicolson;
  if (requested == Scheme::Exact && !gen.x_independent())
    throw Error("the exact scheme needs an x-independent generator");
  return requested;
}

Stepper::Stepper(const Generator& gen, Scheme scheme, double dt, double T, StepperOptions opt)
    : gen_(gen), scheme_(resolve_scheme(scheme, gen)), dt_(dt), opt_(opt), cache_(new Cache) {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  cache_->reps = dual_enumerate(gen.group(), gen.band());
  if (scheme_ == Scheme::RK4 && opt_.rk4_stability > 0.0) {
    const double rho = gen.spectral_bound(T);
    if (rho * dt > opt_.rk4_stability) {
      substeps_ = static_cast<int>(std::ceil(rho * dt / opt_.rk4_stability));
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "rk4: dt = %.6g exceeds the stability limit %.6g (spectral bound %.6g); using %d substeps", dt,
                    opt_.rk4_stability / rho, rho, substeps_);
      warnings_.emplace_back(buf);
    }
  }
}

Stepper::~Stepper() { delete cache_; }

void Stepper::step(double t, BlockState& v) {
  if (v.size() != gen_.blocks()) throw Error("state has the wrong number of blocks");
  switch (scheme_) {
    case Scheme::Exact: step_exact(t, v); break;
    case Scheme::CrankNicolson: step_cn(t, v); break;
    case Scheme::RK4: {
      const double h = dt_ / substeps_;
      for (int k = 0; k < substeps_; ++k) step_rk4(t + k * h, h, v);
      break;
    }
    case Scheme::Auto: throw Error("unresolved scheme");
  }
}

void Stepper::step_exact(double t, BlockState& v) {
  Cache& c = *cache_;
  const double tm = t + 0.5 * dt_;
  const bool need_p = gen_.has_forcing();
  if (!c.valid || !gen_.t_independent()) {
    c.E.assign(c.reps.size(), CMatrix());
    c.P.assign(c.reps.size(), CMatrix());
    for (std::size_t i = 0; i < c.reps.size(); ++i) {
      const CMatrix A = gen_.block_symbol(tm, c.reps[i]);
      const Eigen::Index n = A.rows();
      if (gen_.diagonal()) {
        c.E[i].resize(n, 1);
        c.P[i].resize(n, 1);
        for (Eigen::Index a = 0; a < n; ++a) {
          const cplx z = dt_ * A(a, a);
          c.E[i](a) = std::exp(z);
          c.P[i](a) = dt_ * phi1(z);
        }
      } else if (need_p) {
        CMatrix M = CMatrix::Zero(2 * n, 2 * n);
        M.topLeftCorner(n, n) = dt_ * A;
        M.topRightCorner(n, n) = dt_ * CMatrix::Identity(n, n);
        const CMatrix X = M.exp();
        c.E[i] = X.topLeftCorner(n, n);
        c.P[i] = X.topRightCorner(n, n);
      } else {
        c.E[i] = CMatrix(dt_ * A).exp();
      }
    }
    c.valid = true;
  }
  BlockState F;
  if (need_p) {
    F = gen_.zero_state();
    gen_.forcing(tm, F);
  }
  for (std::size_t i = 0; i < c.reps.size(); ++i) {
    CMatrix V = stack(v, i);
    if (gen_.diagonal()) {
      CMatrix out = c.E[i].col(0).asDiagonal() * V;
      if (need_p) out += c.P[i].col(0).asDiagonal() * stack(F, i);
      V = out;
    } else {
      CMatrix out = c.E[i] * V;
      if (need_p) out += c.P[i] * stack(F, i);
      V = out;
    }
    unstack(V, v, i);
  }
}

namespace {

// Restarted GMRES with right preconditioning.
template <class Op, class Prec>
Vec gmres(const Op& op, const Prec& prec, const Vec& b, Vec x, double tol, int restart, int max_iter,
          double* residual) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    *residual = 0.0;
    return Vec::Zero(b.size());
  }
  int total = 0;
  while (true) {
    Vec r = b - op(x);
    double beta = r.norm();
    *residual = beta / bnorm;
    if (*residual <= tol || total >= max_iter) return x;
    const int m = restart;
    CMatrix V(b.size(), m + 1);
    CMatrix H = CMatrix::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    Vec g = Vec::Zero(m + 1);
    g(0) = beta;
    V.col(0) = r / beta;
    int j = 0;
    for (; j < m; ++j) {
      Vec w = op(prec(V.col(j)));
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      const double hn = w.norm();
      H(j + 1, j) = hn;
      if (hn > 0.0) V.col(j + 1) = w / hn;
      for (int i = 0; i < j; ++i) {
        const cplx tmp = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = tmp;
      }
      const cplx a = H(j, j), bb = H(j + 1, j);
      const double den = std::sqrt(std::norm(a) + std::norm(bb));
      cs[j] = den == 0.0 ? 1.0 : a / den;
      sn[j] = den == 0.0 ? 0.0 : bb / den;
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn[j] * g(j);
      g(j) = std::conj(cs[j]) * g(j);
      ++total;
      if (std::abs(g(j + 1)) <= tol * bnorm || hn == 0.0 || total >= max_iter) {
        ++j;
        break;
      }
    }
    const Vec y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += prec(V.leftCols(j) * y);
  }
}

}  // namespace

void Stepper::step_cn(double t, BlockState& v) {
  Cache& c = *cache_;
  const double tm = t + 0.5 * dt_;
  const double h = 0.5 * dt_;
  BlockState F;
  if (gen_.has_forcing()) {
    F = gen_.zero_state();
    gen_.forcing(tm, F);
  }

  if (gen_.x_independent()) {
    if (!c.valid || !gen_.t_independent()) {
      c.plus.assign(c.reps.size(), CMatrix());
      c.minus_diag.assign(c.reps.size(), CMatrix());
      c.lu.clear();
      c.lu.resize(c.reps.size());
      for (std::size_t i = 0; i < c.reps.size(); ++i) {
        const CMatrix A = gen_.block_symbol(tm, c.reps[i]);
        const Eigen::Index n = A.rows();
        if (gen_.diagonal()) {
          c.plus[i] = (Vec::Ones(n) + h * A.diagonal());
          c.minus_diag[i] = (Vec::Ones(n) - h * A.diagonal());
        } else {
          c.plus[i] = CMatrix::Identity(n, n) + h * A;
          c.lu[i].compute(CMatrix::Identity(n, n) - h * A);
        }
      }
      c.valid = true;
    }
    for (std::size_t i = 0; i < c.reps.size(); ++i) {
      CMatrix V = stack(v, i);
      CMatrix rhs;
      if (gen_.diagonal()) {
        rhs = c.plus[i].col(0).asDiagonal() * V;
        if (!F.empty()) rhs += dt_ * stack(F, i);
        V = c.minus_diag[i].col(0).cwiseInverse().asDiagonal() * rhs;
      } else {
        rhs = c.plus[i] * V;
        if (!F.empty()) rhs += dt_ * stack(F, i);
        V = c.lu[i].solve(rhs);
      }
      unstack(V, v, i);
    }
    return;
  }

  // x-dependent: matrix-free (I - h A(tm)) x = (I + h A(tm)) v + dt F(tm)
  if (c.precond_t != tm) {
    c.precond_t = tm;
    c.have_precond = true;
    c.precond.clear();
    c.precond.resize(c.reps.size());
    for (std::size_t i = 0; i < c.reps.size(); ++i) {
      const auto P = gen_.preconditioner_symbol(tm, c.reps[i]);
      if (!P) {
        c.have_precond = false;
        break;
      }
      c.precond[i].compute(CMatrix::Identity(P->rows(), P->cols()) - h * *P);
    }
  }
  BlockState tmp = gen_.zero_state(), av = gen_.zero_state();
  gen_.apply(tm, v, av);
  BlockState rhs = v;
  axpy(rhs, h, av);
  if (!F.empty()) axpy(rhs, dt_, F);

  auto op = [&](const Vec& x) {
    unflatten(x, tmp);
    gen_.apply(tm, tmp, av);
    return Vec(x - h * flatten(av));
  };
  auto prec = [&](const Vec& x) {
    if (!c.have_precond) return x;
    unflatten(x, tmp);
    for (std::size_t i = 0; i < c.reps.size(); ++i) unstack(c.precond[i].solve(stack(tmp, i)), tmp, i);
    return flatten(tmp);
  };
  double res = 0.0;
  const Vec x = gmres(op, prec, flatten(rhs), flatten(v), opt_.gmres_tol, opt_.gmres_restart, opt_.gmres_max_iter, &res);
  if (res > opt_.gmres_tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "crank-nicolson: iterative solve did not converge at t = %.6g (residual %.3e)", t,
                  res);
    throw SolverError(buf, res);
  }
  unflatten(x, v);
}

void Stepper::step_rk4(double t, double h, BlockState& v) {
  const bool forced = gen_.has_forcing();
  BlockState k1 = gen_.zero_state(), k2 = k1, k3 = k1, k4 = k1, F = k1, tmp = v;
  auto rhs = [&](double tt, const BlockState& x, BlockState& out) {
    gen_.apply(tt, x, out);
    if (forced) {
      gen_.forcing(tt, F);
      axpy(out, 1.0, F);
    }
  };
  rhs(t, v, k1);
  tmp = v;
  axpy(tmp, 0.5 * h, k1);
  rhs(t + 0.5 * h, tmp, k2);
  tmp = v;
  axpy(tmp, 0.5 * h, k2);
  rhs(t + 0.5 * h, tmp, k3);
  tmp = v;
  axpy(tmp, h, k3);
  rhs(t + h, tmp, k4);
  axpy(v, h / 6.0, k1);
  axpy(v, h / 3.0, k2);
  axpy(v, h / 3.0, k3);
  axpy(v, h / 6.0, k4);
}

// ---------------------------------------------------------------------------

int step_count(double T, double dt) {
  if (!(T > 0.0)) throw Error("horizon T must be positive");
  if (!(dt > 0.0)) throw Error("time step must be positive");
  if (dt > T) throw Error("time step exceeds the horizon");
  return std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
}

BlockTrajectory evolve_blocks(const Generator& gen, BlockState v0, double T, Scheme scheme, double dt,
                              const StepperOptions& opt) {
  const int N = step_count(T, dt);
  const double h = T / N;
  Stepper stepper(gen, scheme, h, T, opt);
  BlockTrajectory out;
  out.scheme = stepper.scheme();
  out.dt = h;
  out.substeps = stepper.substeps();
  out.warnings = stepper.warnings();
  out.times.reserve(N + 1);
  out.states.reserve(N + 1);
  out.times.push_back(0.0);
  out.states.push_back(v0);
  for (int n = 0; n < N; ++n) {
    stepper.step(n * h, v0);
    out.times.push_back(n + 1 == N ? T : (n + 1) * h);
    out.states.push_back(v0);
  }
  return out;
}

namespace {

SpectralField single_step(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt,
                          Scheme scheme) {
  ScalarGenerator gen(K, f, v.band());
  StepperOptions opt;
  opt.rk4_stability = 0.0;
  Stepper s(gen, scheme, dt, t + dt, opt);
  BlockState state{v};
  s.step(t, state);
  return state[0];
}

}  // namespace

SpectralField step_exact_invariant(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt) {
  if (!K.x_independent()) throw Error("step_exact_invariant needs an x-independent symbol");
  return single_step(v, K, f, t, dt, Scheme::Exact);
}

SpectralField step_rk4(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt) {
  return single_step(v, K, f, t, dt, Scheme::RK4);
}

SpectralField step_crank_nicolson(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt) {
  return single_step(v, K, f, t, dt, Scheme::CrankNicolson);
}

}  // namespace liediff
