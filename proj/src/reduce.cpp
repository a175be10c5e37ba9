#include "liediff/reduce.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace liediff {

namespace {

void validate(const HigherOrderProblem& p) {
  if (p.m < 2) throw Error("time order must be at least 2");
  const auto m = static_cast<std::size_t>(p.m);
  if (p.coefficients.size() != m) throw Error("expected " + std::to_string(m) + " coefficient operators");
  if (p.data.size() != m) throw Error("expected " + std::to_string(m) + " initial data fields");
  if (!(p.T > 0.0)) throw Error("horizon T must be positive");
  const Group g = p.data[0].group();
  const int band = p.data[0].band();
  for (const auto& d : p.data)
    if (d.group() != g || d.band() != band) throw Error("initial data fields must share group and bandlimit");
  for (std::size_t j = 0; j < m; ++j) {
    const auto& c = p.coefficients[j];
    const double want = static_cast<double>(p.m) - static_cast<double>(j);
    const std::string name = "a_" + std::to_string(p.m - static_cast<int>(j));
    if (c.declared_order != want)
      throw Error(name + " must be declared of order " + std::to_string(p.m - static_cast<int>(j)));
    if (c.op.group() != g) throw Error(name + " acts on a different group");
    if (c.op.cls().order > c.declared_order + 1e-12)
      throw Error(name + " has order " + std::to_string(c.op.cls().order) + " above its declared order");
  }
  for (const auto& part : p.f.parts)
    if (part.shape.group() != g || part.shape.band() != band) throw Error("forcing shape does not match the data");
}

}  // namespace

SpectralField gamma_apply(const SpectralField& F, double p, WeightKind kind) {
  if (p == 0.0) return F;
  SpectralField out = F;
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = bessel_weight(F.rep(i), p, kind).diagonal().asDiagonal() * F[i];
  return out;
}

FirstOrderSystem::FirstOrderSystem(HigherOrderProblem p) : p_(std::move(p)) {
  validate(p_);
  group_ = p_.data[0].group();
  band_ = p_.data[0].band();
  for (const auto& c : p_.coefficients) {
    x_independent_ = x_independent_ && c.op.x_independent();
    t_independent_ = t_independent_ && c.op.t_independent();
  }
  if (!x_independent_)
    for (const auto& c : p_.coefficients) precond_.emplace_back(c.op, Forcing::none(), band_);
}

BlockState FirstOrderSystem::initial_state() const {
  BlockState out;
  for (int j = 1; j <= p_.m; ++j)
    out.push_back(gamma_apply(p_.data[static_cast<std::size_t>(j - 1)], p_.m - j, p_.gamma_kind));
  return out;
}

CMatrix FirstOrderSystem::last_row_block(int k, double t, const Angles* x, const RepIndex& rep) const {
  if (k < 1 || k > p_.m) throw Error("last-row block index out of range");
  const CMatrix A = a(p_.m - k + 1)(t, x, rep);
  return A * bessel_weight(rep, k - p_.m, p_.gamma_kind).diagonal().asDiagonal();
}

CMatrix FirstOrderSystem::block_symbol(double t, const RepIndex& rep) const {
  const int d = rep.dim(), m = p_.m;
  CMatrix K = CMatrix::Zero(m * d, m * d);
  const CMatrix G = bessel_weight(rep, 1.0, p_.gamma_kind);
  for (int j = 0; j + 1 < m; ++j) K.block(j * d, (j + 1) * d, d, d) = G;
  for (int k = 1; k <= m; ++k) K.block((m - 1) * d, (k - 1) * d, d, d) = last_row_block(k, t, nullptr, rep);
  return K;
}

std::optional<CMatrix> FirstOrderSystem::preconditioner_symbol(double t, const RepIndex& rep) const {
  if (x_independent_) return block_symbol(t, rep);
  const int d = rep.dim(), m = p_.m;
  CMatrix K = CMatrix::Zero(m * d, m * d);
  const CMatrix G = bessel_weight(rep, 1.0, p_.gamma_kind);
  for (int j = 0; j + 1 < m; ++j) K.block(j * d, (j + 1) * d, d, d) = G;
  for (int k = 1; k <= m; ++k) {
    const auto A = precond_[static_cast<std::size_t>(k - 1)].preconditioner_symbol(t, rep);
    if (A) K.block((m - 1) * d, (k - 1) * d, d, d) = *A * bessel_weight(rep, k - m, p_.gamma_kind).diagonal().asDiagonal();
  }
  return K;
}

void FirstOrderSystem::apply(double t, const BlockState& v, BlockState& out) const {
  const auto m = static_cast<std::size_t>(p_.m);
  for (std::size_t j = 0; j + 1 < m; ++j) out[j] = gamma_apply(v[j + 1], 1.0, p_.gamma_kind);
  SpectralField last(group_, band_);
  for (int k = 1; k <= p_.m; ++k) {
    const Symbol& A = a(p_.m - k + 1);
    const SpectralField w = gamma_apply(v[static_cast<std::size_t>(k - 1)], k - p_.m, p_.gamma_kind);
    last.axpy(1.0, A.x_independent() ? invariant_apply(A, w, t) : apply_spectral(A, t, w));
  }
  out[m - 1] = std::move(last);
}

void FirstOrderSystem::forcing(double t, BlockState& out) const {
  for (auto& b : out) b = SpectralField(group_, band_);
  out.back() = p_.f.at(t, group_, band_);
}

FirstOrderSystem reduce_to_first_order(const HigherOrderProblem& p) { return FirstOrderSystem(p); }

BlockTrajectory solve_reduced(const FirstOrderSystem& sys, Scheme scheme, double dt, const StepperOptions& opt) {
  return evolve_blocks(sys, sys.initial_state(), sys.horizon(), scheme, dt, opt);
}

std::vector<SpectralField> extract_u(const FirstOrderSystem& sys, const BlockTrajectory& traj) {
  std::vector<SpectralField> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) out.push_back(gamma_apply(s.at(0), -(sys.m() - 1), sys.gamma_kind()));
  return out;
}

SpectralField direct_solution(const HigherOrderProblem& p, double t) {
  validate(p);
  for (const auto& c : p.coefficients)
    if (!c.op.x_independent() || !c.op.t_independent())
      throw Error("direct solution needs x- and t-independent coefficients");
  if (!p.f.t_independent()) throw Error("direct solution needs t-independent forcing");
  const int m = p.m;
  const Group g = p.data[0].group();
  const int band = p.data[0].band();
  const SpectralField F = p.f.at(0.0, g, band);
  SpectralField out(g, band);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const RepIndex& rep = out.rep(i);
    const int d = rep.dim();
    // state (U, U', ..., U^{(m-1)}, F) with F constant
    CMatrix C = CMatrix::Zero((m + 1) * d, (m + 1) * d);
    for (int j = 0; j + 1 < m; ++j) C.block(j * d, (j + 1) * d, d, d).setIdentity();
    for (int j = 0; j < m; ++j)
      C.block((m - 1) * d, j * d, d, d) = p.coefficients[static_cast<std::size_t>(j)].op(0.0, rep);
    C.block((m - 1) * d, m * d, d, d).setIdentity();
    CMatrix X((m + 1) * d, d);
    for (int j = 0; j < m; ++j) X.block(j * d, 0, d, d) = p.data[static_cast<std::size_t>(j)][i];
    X.block(m * d, 0, d, d) = F[i];
    const CMatrix E = (t * C).exp();
    out[i] = (E * X).block(0, 0, d, d);
  }
  return out;
}

std::vector<double> last_row_growth(const FirstOrderSystem& sys, int two_L, double t) {
  std::vector<Angles> nodes;
  if (!sys.x_independent()) {
    const GridPtr grid = cached_grid(sys.group(), 2);
    for (std::size_t n = 0; n < grid->node_count(); ++n) nodes.push_back(grid->node(n));
  }
  std::vector<double> out(static_cast<std::size_t>(sys.m()), 0.0);
  for (const auto& rep : dual_enumerate(sys.group(), two_L)) {
    const double w = bessel_weight(rep, 1.0, WeightKind::Elliptic)(0, 0).real();
    for (int k = 1; k <= sys.m(); ++k) {
      auto ratio = [&](const Angles* x) {
        const CMatrix B = sys.last_row_block(k, t, x, rep);
        return Eigen::JacobiSVD<CMatrix>(B).singularValues()(0) / w;
      };
      double& r = out[static_cast<std::size_t>(k - 1)];
      if (nodes.empty())
        r = std::max(r, ratio(nullptr));
      else
        for (const auto& x : nodes) r = std::max(r, ratio(&x));
    }
  }
  return out;
}

}  // namespace liediff
