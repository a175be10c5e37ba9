#include "liediff/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace liediff {

std::string to_string(Group g) { return g == Group::SU2 ? "su2" : "torus"; }

Group group_from_string(const std::string& name) {
  if (name == "su2" || name == "SU2") return Group::SU2;
  if (name == "torus" || name == "T1" || name == "torus1") return Group::Torus1;
  throw Error("unknown group '" + name + "'");
}

RepIndex RepIndex::su2(int two_ell) {
  if (two_ell < 0) throw Error("two_ell must be non-negative");
  return RepIndex{Group::SU2, two_ell, 0};
}

RepIndex RepIndex::torus(int k) { return RepIndex{Group::Torus1, 0, k}; }

std::size_t RepIndex::position(int band) const {
  return group == Group::SU2 ? static_cast<std::size_t>(two_ell)
                             : static_cast<std::size_t>(k + band);
}

double laplace_eigenvalue(const RepIndex& rep) {
  if (rep.group == Group::SU2) return rep.ell() * (rep.ell() + 1.0);
  return static_cast<double>(rep.k) * rep.k;
}

std::vector<RepIndex> dual_enumerate(Group group, int band) {
  if (band < 0) throw Error("bandlimit must be non-negative");
  std::vector<RepIndex> out;
  if (group == Group::SU2) {
    for (int t = 0; t <= band; ++t) out.push_back(RepIndex::su2(t));
  } else {
    for (int k = -band; k <= band; ++k) out.push_back(RepIndex::torus(k));
  }
  return out;
}

CMatrix representation_matrix(const RepIndex& rep, const Angles& x) {
  if (rep.group == Group::SU2) return wigner_matrix(rep, x);
  CMatrix m(1, 1);
  m(0, 0) = std::polar(1.0, rep.k * x.phi);
  return m;
}

// ---------------------------------------------------------------------------

GridField::GridField(GridPtr g) : grid(std::move(g)), values(grid->node_count()) {}

GridField::GridField(GridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid->node_count())
    throw Error("grid field length does not match node count");
}

SpectralField::SpectralField(Group group, int band)
    : group_(group), band_(band), reps_(dual_enumerate(group, band)) {
  coeffs_.reserve(reps_.size());
  for (const auto& r : reps_) coeffs_.push_back(CMatrix::Zero(r.dim(), r.dim()));
}

CMatrix& SpectralField::at(const RepIndex& r) {
  return const_cast<CMatrix&>(std::as_const(*this).at(r));
}

const CMatrix& SpectralField::at(const RepIndex& r) const {
  if (r.group != group_) throw Error("representation from a different group");
  const bool inside = group_ == Group::SU2 ? r.two_ell <= band_ : std::abs(r.k) <= band_;
  if (!inside) throw Error("representation outside the bandlimit");
  return coeffs_[r.position(band_)];
}

SpectralField SpectralField::with_band(int band) const {
  SpectralField out(group_, band);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& r = out.rep(i);
    const bool inside = group_ == Group::SU2 ? r.two_ell <= band_ : std::abs(r.k) <= band_;
    if (inside) out[i] = at(r);
  }
  return out;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (!same_shape(o)) throw Error("spectral field shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] += o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (!same_shape(o)) throw Error("spectral field shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] -= o.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(cplx c) {
  for (auto& m : coeffs_) m *= c;
  return *this;
}

SpectralField& SpectralField::axpy(cplx c, const SpectralField& o) {
  if (!same_shape(o)) throw Error("spectral field shape mismatch");
  for (std::size_t i = 0; i < size(); ++i) coeffs_[i] += c * o.coeffs_[i];
  return *this;
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (const auto& c : coeffs_)
    if (c.size() > 0) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

cplx spectral_inner(const SpectralField& F, const SpectralField& G) {
  if (!F.same_shape(G)) throw Error("spectral field shape mismatch");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i)
    acc += static_cast<double>(F.rep(i).dim()) * (F[i].cwiseProduct(G[i].conjugate())).sum();
  return acc;
}

double plancherel_norm(const SpectralField& F) {
  double acc = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i)
    acc += F.rep(i).dim() * F[i].squaredNorm();
  return acc;
}

SpectralField matrix_coefficient_field(Group group, int band, const RepIndex& rep, int row,
                                       int col) {
  SpectralField F(group, band);
  const int d = rep.dim();
  if (row < 0 || col < 0 || row >= d || col >= d) throw Error("matrix coefficient index out of range");
  F.at(rep)(col, row) = 1.0 / d;
  return F;
}

}  // namespace liediff
