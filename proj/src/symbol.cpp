#include "liediff/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace liediff {

std::string to_string(WeightKind k) { return k == WeightKind::Elliptic ? "elliptic" : "subelliptic"; }

WeightKind weight_kind_from_string(const std::string& s) {
  if (s == "elliptic") return WeightKind::Elliptic;
  if (s == "subelliptic") return WeightKind::Subelliptic;
  throw Error("unknown norm kind '" + s + "' (expected elliptic or subelliptic)");
}

std::string to_string(VectorField v) {
  switch (v) {
    case VectorField::X1: return "X1";
    case VectorField::X2: return "X2";
    case VectorField::X3: return "X3";
    case VectorField::iX3: return "iX3";
    case VectorField::D0: return "d0";
    case VectorField::DPlus: return "d+";
    case VectorField::DMinus: return "d-";
  }
  return "?";
}

CMatrix laplace_symbol(const RepIndex& rep) {
  return laplace_eigenvalue(rep) * CMatrix::Identity(rep.dim(), rep.dim());
}

CMatrix sublaplace_symbol(const RepIndex& rep) {
  if (rep.group != Group::SU2) throw Error("sub-Laplacian symbol is defined on SU(2) only");
  const int d = rep.dim();
  const double lam = laplace_eigenvalue(rep);
  CMatrix m = CMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a) m(a, a) = lam - rep.weight(a) * rep.weight(a);
  return m;
}

CMatrix vector_field_symbol(VectorField which, const RepIndex& rep) {
  if (rep.group != Group::SU2) throw Error("vector field symbols are defined on SU(2) only");
  const int d = rep.dim();
  const double l = rep.ell();
  const cplx i(0.0, 1.0);
  CMatrix jz = CMatrix::Zero(d, d), jp = CMatrix::Zero(d, d), jm = CMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a) {
    const double j = rep.weight(a);
    jz(a, a) = j;
    if (a + 1 < d) jp(a + 1, a) = std::sqrt((l - j) * (l + j + 1));
    if (a > 0) jm(a - 1, a) = std::sqrt((l + j) * (l - j + 1));
  }
  switch (which) {
    case VectorField::iX3:
    case VectorField::D0: return jz;
    case VectorField::DPlus: return jp;
    case VectorField::DMinus: return jm;
    case VectorField::X1: return -0.5 * i * (jm + jp);
    case VectorField::X2: return 0.5 * (jm - jp);
    case VectorField::X3: return -i * jz;
  }
  throw Error("unknown vector field");
}

CMatrix bessel_weight(const RepIndex& rep, double s, WeightKind kind) {
  const int d = rep.dim();
  CMatrix m = CMatrix::Zero(d, d);
  if (kind == WeightKind::Elliptic || rep.group == Group::Torus1) {
    const double w = std::pow(1.0 + laplace_eigenvalue(rep), 0.5 * s);
    for (int a = 0; a < d; ++a) m(a, a) = w;
    return m;
  }
  const CMatrix nu2 = sublaplace_symbol(rep);
  for (int a = 0; a < d; ++a) m(a, a) = std::pow(1.0 + nu2(a, a).real(), 0.5 * s);
  return m;
}

CMatrix fractional_power(const CMatrix& M, double p) {
  if (M.rows() != M.cols()) throw Error("fractional_power needs a square matrix");
  if (p < 0.0) throw Error("fractional_power needs a non-negative exponent");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("fractional_power needs a Hermitian matrix");
  constexpr double clamp = 1e-12;
  auto power = [p](double x) {
    if (x < -clamp) throw Error("fractional_power: negative eigenvalue " + std::to_string(x));
    x = std::max(x, 0.0);
    return p == 0.0 ? 1.0 : std::pow(x, p);
  };
  const int n = static_cast<int>(M.rows());
  CMatrix off = M;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    CMatrix out = CMatrix::Zero(n, n);
    for (int a = 0; a < n; ++a) out(a, a) = power(M(a, a).real());
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M + M.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues();
  for (int a = 0; a < n; ++a) ev(a) = power(ev(a));
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------

CMatrix BaseOperator::symbol(const RepIndex& rep) const {
  switch (kind) {
    case BaseKind::Identity: return CMatrix::Identity(rep.dim(), rep.dim());
    case BaseKind::LaplaceFrac: return fractional_power(laplace_symbol(rep), 0.5 * order);
    case BaseKind::SubLaplaceFrac: return fractional_power(sublaplace_symbol(rep), 0.5 * order);
    case BaseKind::BesselFrac: return bessel_weight(rep, order, WeightKind::Elliptic);
    case BaseKind::SubBesselFrac: return bessel_weight(rep, order, WeightKind::Subelliptic);
    case BaseKind::VectorField: return vector_field_symbol(field, rep);
  }
  throw Error("unknown base operator");
}

bool BaseOperator::hermitian() const {
  if (kind != BaseKind::VectorField) return true;
  return field == VectorField::iX3 || field == VectorField::D0;
}

bool BaseOperator::diagonal() const {
  if (kind != BaseKind::VectorField) return true;
  return field == VectorField::iX3 || field == VectorField::D0 || field == VectorField::X3;
}

std::string BaseOperator::to_string() const {
  auto frac = [](const char* name, double order) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s^%g", name, 0.5 * order);
    return std::string(buf);
  };
  switch (kind) {
    case BaseKind::Identity: return "id";
    case BaseKind::LaplaceFrac: return frac("laplace", order);
    case BaseKind::SubLaplaceFrac: return frac("sublaplace", order);
    case BaseKind::BesselFrac: return frac("bessel", order);
    case BaseKind::SubBesselFrac: return frac("subbessel", order);
    case BaseKind::VectorField: return liediff::to_string(field);
  }
  return "?";
}

// ---------------------------------------------------------------------------

Symbol::Symbol(Group group, Evaluator eval, SymbolClass cls, Flags flags)
    : group_(group), eval_(std::move(eval)), cls_(cls), flags_(flags) {}

CMatrix Symbol::operator()(double t, const Angles* x, const RepIndex& rep) const {
  if (rep.group != group_) throw Error("symbol evaluated at a representation of another group");
  if (x == nullptr && !flags_.x_independent)
    throw Error("x-dependent symbol evaluated without a point");
  if (!eval_) return CMatrix::Zero(rep.dim(), rep.dim());
  return eval_(t, x, rep);
}

const CMatrix& Symbol::base_matrix(std::size_t i, const RepIndex& rep) const {
  const bool inside = group_ == Group::SU2 ? rep.two_ell <= cache_band_ : std::abs(rep.k) <= cache_band_;
  if (!inside) throw Error("representation beyond the symbol's cached bandlimit");
  return (*base_cache_)[i][rep.position(cache_band_)];
}

int Symbol::coefficient_band() const {
  int b = 0;
  for (const auto& t : terms_) {
    if (t.coef.spatial.band < 0) return -1;
    b = std::max(b, t.coef.spatial.band);
  }
  return b;
}

const std::vector<double>& Symbol::coefficient_samples(std::size_t i, const GridPtr& grid) const {
  std::lock_guard lock(sample_cache_->mu);
  auto it = sample_cache_->samples.find(grid.get());
  if (it == sample_cache_->samples.end()) {
    std::vector<std::vector<double>> s(terms_.size());
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      if (terms_[k].coef.spatial.constant()) continue;
      s[k].resize(grid->node_count());
      for (std::size_t n = 0; n < grid->node_count(); ++n) s[k][n] = terms_[k].coef.spatial.eval(grid->node(n));
    }
    sample_cache_->keep_alive.push_back(grid);
    it = sample_cache_->samples.emplace(grid.get(), std::move(s)).first;
  }
  return it->second[i];
}

Symbol Symbol::scaled(double c) const {
  Symbol out = *this;
  if (!from_spec_) {
    auto inner = eval_;
    out.eval_ = [inner, c](double t, const Angles* x, const RepIndex& r) -> CMatrix {
      return c * inner(t, x, r);
    };
    return out;
  }
  for (auto& t : out.terms_) t.coef.scale *= c;
  OperatorSpec spec{out.terms_, ""};
  Symbol rebuilt = build_operator_symbol(spec, group_, cache_band_);
  rebuilt.cls_ = cls_;
  rebuilt.sample_cache_ = sample_cache_;
  return rebuilt;
}

namespace {

int term_order_kappa(const BaseOperator& b) { return b.subelliptic() ? 2 : 1; }

double term_order(const BaseOperator& b) {
  switch (b.kind) {
    case BaseKind::Identity: return 0.0;
    case BaseKind::VectorField: return 1.0;
    default: return b.order;
  }
}

}  // namespace

Symbol build_operator_symbol(const OperatorSpec& spec, Group group, int band) {
  if (band < 0) throw Error("symbol bandlimit must be non-negative");
  for (const auto& t : spec.terms) {
    const bool su2_only = t.base.kind == BaseKind::VectorField || t.base.kind == BaseKind::SubLaplaceFrac;
    if (su2_only && group != Group::SU2)
      throw Error("operator term '" + t.base.to_string() + "' is only defined on SU(2)");
    if ((t.base.kind == BaseKind::LaplaceFrac || t.base.kind == BaseKind::SubLaplaceFrac) && t.base.order < 0.0)
      throw Error("fractional exponent of '" + t.base.to_string() + "' must be non-negative");
  }

  Symbol s;
  s.group_ = group;
  s.from_spec_ = true;
  s.terms_ = spec.terms;
  s.cache_band_ = band;

  auto cache = std::make_shared<std::vector<std::vector<CMatrix>>>();
  const auto reps = dual_enumerate(group, band);
  for (const auto& t : spec.terms) {
    std::vector<CMatrix> per_rep;
    per_rep.reserve(reps.size());
    for (const auto& r : reps) per_rep.push_back(t.base.symbol(r));
    cache->push_back(std::move(per_rep));
  }
  s.base_cache_ = cache;

  SymbolClass cls;
  cls.order = spec.terms.empty() ? 0.0 : -1e300;
  for (const auto& t : spec.terms) {
    cls.order = std::max(cls.order, term_order(t.base));
    cls.kappa = std::max(cls.kappa, term_order_kappa(t.base));
  }
  s.cls_ = cls;

  s.flags_.x_independent = std::all_of(spec.terms.begin(), spec.terms.end(),
                                       [](const Term& t) { return t.coef.spatial.constant(); });
  s.flags_.t_independent = std::all_of(spec.terms.begin(), spec.terms.end(),
                                       [](const Term& t) { return t.coef.profile.constant(); });
  s.flags_.hermitian = std::all_of(spec.terms.begin(), spec.terms.end(),
                                   [](const Term& t) { return t.base.hermitian(); });
  s.diagonal_ = std::all_of(spec.terms.begin(), spec.terms.end(),
                            [](const Term& t) { return t.base.diagonal(); });

  const std::vector<Term> terms = spec.terms;
  s.eval_ = [terms, cache, band](double t, const Angles* x, const RepIndex& rep) -> CMatrix {
    const bool inside = rep.group == Group::SU2 ? rep.two_ell <= band : std::abs(rep.k) <= band;
    CMatrix acc = CMatrix::Zero(rep.dim(), rep.dim());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double a = x ? terms[i].coef.at(t, *x) : terms[i].coef.at(t);
      if (a == 0.0) continue;
      if (inside)
        acc += a * (*cache)[i][rep.position(band)];
      else
        acc += a * terms[i].base.symbol(rep);
    }
    return acc;
  };
  return s;
}

Symbol make_symbol(std::string_view text, Group group, int band) {
  return build_operator_symbol(parse_operator(text, group), group, band);
}

// ---------------------------------------------------------------------------

GridPtr cached_grid(Group group, int band) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, GridPtr> grids;
  std::lock_guard lock(mu);
  auto key = std::pair{static_cast<int>(group), band};
  auto it = grids.find(key);
  if (it != grids.end()) return it->second;
  auto g = quadrature_grid(group, band);
  grids.emplace(key, g);
  return g;
}

SpectralField invariant_apply(const Symbol& sym, const SpectralField& F, double t) {
  if (!sym.x_independent()) throw Error("invariant_apply needs an x-independent symbol");
  if (sym.group() != F.group()) throw Error("symbol and field belong to different groups");
  SpectralField out(F.group(), F.band());
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = sym(t, F.rep(i)) * F[i];
  return out;
}

namespace {

// Pointwise quantization sum at every node of `grid`, general symbols.
GridField quantize_general(const Symbol& sym, double t, const SpectralField& F, const GridPtr& grid) {
  GridField out(grid);
  for (std::size_t n = 0; n < grid->node_count(); ++n) {
    const Angles x = grid->node(n);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const RepIndex& r = F.rep(i);
      const CMatrix xi = representation_matrix(r, x);
      acc += static_cast<double>(r.dim()) * (xi * sym(t, &x, r) * F[i]).trace();
    }
    out.values[n] = acc;
  }
  return out;
}

// Invariant part (spatially constant terms) applied spectrally.
SpectralField constant_terms_apply(const Symbol& sym, double t, const SpectralField& F) {
  SpectralField out(F.group(), F.band());
  const auto& terms = sym.terms();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (!terms[k].coef.spatial.constant()) continue;
    const double a = terms[k].coef.at(t);
    if (a == 0.0) continue;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const RepIndex& r = F.rep(i);
      const CMatrix base = sym.cached_band() >= F.band() ? sym.base_matrix(k, r) : terms[k].base.symbol(r);
      out[i] += a * base * F[i];
    }
  }
  return out;
}

SpectralField base_apply(const Symbol& sym, std::size_t k, const SpectralField& F) {
  SpectralField out(F.group(), F.band());
  for (std::size_t i = 0; i < F.size(); ++i) {
    const RepIndex& r = F.rep(i);
    const CMatrix base = sym.cached_band() >= F.band() ? sym.base_matrix(k, r) : sym.terms()[k].base.symbol(r);
    out[i] = base * F[i];
  }
  return out;
}

// sum over x-dependent terms of a_k(x, t) (B_k F)(x) on the nodes of grid.
void accumulate_varying_terms(const Symbol& sym, double t, const SpectralField& F, const GridPtr& grid,
                              GridField& acc) {
  const auto& terms = sym.terms();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].coef.spatial.constant()) continue;
    const double scale = terms[k].coef.scale * terms[k].coef.profile.eval(t);
    if (scale == 0.0) continue;
    const GridField bf = fourier_inverse(base_apply(sym, k, F), grid);
    const auto& a = sym.coefficient_samples(k, grid);
    for (std::size_t n = 0; n < acc.values.size(); ++n) acc.values[n] += scale * a[n] * bf.values[n];
  }
}

}  // namespace

GridField quantize_apply(const Symbol& sym, double t, const GridField& f) {
  if (sym.group() != f.grid->group()) throw Error("symbol and field belong to different groups");
  const SpectralField F = fourier_forward(f, f.grid->band());
  if (sym.x_independent()) return fourier_inverse(invariant_apply(sym, F, t), f.grid);
  if (!sym.has_terms()) return quantize_general(sym, t, F, f.grid);
  GridField acc = fourier_inverse(constant_terms_apply(sym, t, F), f.grid);
  accumulate_varying_terms(sym, t, F, f.grid, acc);
  return acc;
}

SpectralField apply_spectral(const Symbol& sym, double t, const SpectralField& F) {
  if (sym.group() != F.group()) throw Error("symbol and field belong to different groups");
  if (sym.x_independent()) return invariant_apply(sym, F, t);
  const int band = F.band();
  int product_band = std::max(2 * band, 1);
  if (sym.has_terms()) {
    const int cb = sym.coefficient_band();
    product_band = std::max(product_band, band + (cb < 0 ? band : cb));
  }
  const GridPtr grid = cached_grid(F.group(), product_band);
  if (!sym.has_terms()) return fourier_forward(quantize_general(sym, t, F, grid), band);
  GridField acc(grid);
  accumulate_varying_terms(sym, t, F, grid, acc);
  SpectralField out = fourier_forward(acc, band);
  out += constant_terms_apply(sym, t, F);
  return out;
}

}  // namespace liediff
