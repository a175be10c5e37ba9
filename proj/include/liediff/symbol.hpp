// Matrix-valued symbols and their quantization.
//
// A symbol a(t, x, xi) acts on a field through
//     A f(x) = sum_xi d_xi Tr[xi(x) a(t, x, xi) f^(xi)].
// Symbols are stored for K as it appears in v_t = K(t) v + f.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "liediff/harmonic.hpp"

namespace liediff {

enum class WeightKind { Elliptic, Subelliptic };

std::string to_string(WeightKind k);
WeightKind weight_kind_from_string(const std::string& s);

/// Left-invariant first-order operators on SU(2). The ladder fields are the
/// complexified d0 = i X3, d+ and d-; with this choice
/// [d0, d+] = d+, [d-, d0] = d-, [d+, d-] = 2 d0.
enum class VectorField { X1, X2, X3, iX3, D0, DPlus, DMinus };

std::string to_string(VectorField v);

// ---------------------------------------------------------------------------
// Invariant symbols

/// l(l+1) I (SU(2)) or k^2 (torus).
CMatrix laplace_symbol(const RepIndex& rep);

/// Symbol of -X1^2 - X2^2: diag(l(l+1) - j^2). SU(2) only.
CMatrix sublaplace_symbol(const RepIndex& rep);

/// dxi(V) for a left-invariant vector field. SU(2) only.
CMatrix vector_field_symbol(VectorField which, const RepIndex& rep);

/// (1 + lambda)^{s/2} I (elliptic) or diag((1 + nu_jj^2)^{s/2}) (subelliptic).
/// On the torus both kinds coincide.
CMatrix bessel_weight(const RepIndex& rep, double s, WeightKind kind);

/// M^p for Hermitian positive semidefinite M; diagonal inputs are handled
/// entrywise. Eigenvalues in [-1e-12, 0) are clamped to zero.
CMatrix fractional_power(const CMatrix& M, double p);

// ---------------------------------------------------------------------------
// Operator specifications

enum class BaseKind { LaplaceFrac, SubLaplaceFrac, BesselFrac, SubBesselFrac, VectorField, Identity };

struct BaseOperator {
  BaseKind kind = BaseKind::Identity;
  double order = 0.0;  // m for L^{m/2}, s for (1+L)^{s/2}; 1 for vector fields
  VectorField field = VectorField::X3;

  CMatrix symbol(const RepIndex& rep) const;
  bool hermitian() const;
  bool diagonal() const;
  bool subelliptic() const { return kind == BaseKind::SubLaplaceFrac || kind == BaseKind::SubBesselFrac; }
  std::string to_string() const;
};

/// Real scalar function of the group variable. `band` is the bandlimit of the
/// function (-1 when unknown); constant fields have band 0.
struct SpatialField {
  std::string name = "const";
  std::function<double(const Angles&)> eval = [](const Angles&) { return 1.0; };
  int band = 0;
  bool constant() const { return name == "const"; }

  static SpatialField named(const std::string& name, Group group);
  /// Field given by samples: evaluated anywhere through its Fourier series.
  static SpatialField from_samples(const std::string& name, const GridField& samples);
};

struct TimeProfile {
  std::string name = "const";
  std::function<double(double)> eval = [](double) { return 1.0; };
  bool constant() const { return name == "const"; }

  static TimeProfile named(const std::string& name);
};

struct Coefficient {
  double scale = 1.0;
  SpatialField spatial;
  TimeProfile profile;

  double at(double t, const Angles& x) const { return scale * spatial.eval(x) * profile.eval(t); }
  /// Value for a spatially constant coefficient.
  double at(double t) const { return scale * profile.eval(t); }
};

struct Term {
  Coefficient coef;
  BaseOperator base;
};

struct OperatorSpec {
  std::vector<Term> terms;
  std::string text;
};

/// Parses the operator grammar: a signed sum of terms, each a '*'-separated
/// product of numbers, at most one spatial field, at most one time profile and
/// at most one base operator (default "id"). Bases:
///   laplace^p, sublaplace^p      L^p with p >= 0 (default p = 1)
///   bessel^p, subbessel^p        (1 + L)^p, any real p (default p = 1)
///   X1 X2 X3 iX3 d0 d+ d- id
/// Exponents may be written as fractions, e.g. laplace^1/2.
OperatorSpec parse_operator(std::string_view text, Group group);

// ---------------------------------------------------------------------------
// Symbols

struct SymbolClass {
  double order = 0.0;
  double rho = 1.0;
  double delta = 0.0;
  int kappa = 1;
};

class Symbol {
 public:
  /// x == nullptr means "invariant" evaluation, allowed for x-independent symbols.
  using Evaluator = std::function<CMatrix(double t, const Angles* x, const RepIndex& rep)>;

  struct Flags {
    bool x_independent = false;
    bool t_independent = false;
    bool hermitian = false;
  };

  Symbol() = default;
  /// General (user-defined) symbol.
  Symbol(Group group, Evaluator eval, SymbolClass cls, Flags flags);

  CMatrix operator()(double t, const Angles* x, const RepIndex& rep) const;
  CMatrix operator()(double t, const RepIndex& rep) const { return (*this)(t, nullptr, rep); }

  Group group() const { return group_; }
  const SymbolClass& cls() const { return cls_; }
  SymbolClass& cls() { return cls_; }
  bool x_independent() const { return flags_.x_independent; }
  bool t_independent() const { return flags_.t_independent; }
  bool hermitian() const { return flags_.hermitian; }
  /// Every evaluated matrix is diagonal.
  bool diagonal() const { return diagonal_; }

  /// Coefficient-times-invariant terms when built from an OperatorSpec.
  bool has_terms() const { return !terms_.empty() || from_spec_; }
  const std::vector<Term>& terms() const { return terms_; }
  /// Precomputed invariant matrix of term `i` at `rep`.
  const CMatrix& base_matrix(std::size_t i, const RepIndex& rep) const;
  int cached_band() const { return cache_band_; }
  /// Largest bandlimit among spatial coefficients (-1 if some are unknown).
  int coefficient_band() const;

  /// Spatial coefficient of term `i` sampled on `grid` (cached).
  const std::vector<double>& coefficient_samples(std::size_t i, const GridPtr& grid) const;

  Symbol scaled(double c) const;

  friend Symbol build_operator_symbol(const OperatorSpec& spec, Group group, int band);

 private:
  Group group_ = Group::SU2;
  Evaluator eval_;
  SymbolClass cls_;
  Flags flags_;
  bool diagonal_ = false;
  bool from_spec_ = false;

  std::vector<Term> terms_;
  int cache_band_ = -1;
  std::shared_ptr<const std::vector<std::vector<CMatrix>>> base_cache_;  // [term][rep position]

  struct SampleCache {
    std::mutex mu;
    std::map<const GridSpec*, std::vector<std::vector<double>>> samples;
    std::vector<GridPtr> keep_alive;
  };
  std::shared_ptr<SampleCache> sample_cache_ = std::make_shared<SampleCache>();
};

/// Symbol of sum_terms a_term(x, t) sigma_base(xi); base matrices are cached
/// for every representation up to `band`.
Symbol build_operator_symbol(const OperatorSpec& spec, Group group, int band);

/// Convenience: parse then build.
Symbol make_symbol(std::string_view text, Group group, int band);

/// Coefficientwise F(xi) -> a(t, xi) F(xi). Requires an x-independent symbol.
SpectralField invariant_apply(const Symbol& sym, const SpectralField& F, double t = 0.0);

/// Quantization on a grid: A f at the grid nodes, with f^ = fourier_forward(f).
GridField quantize_apply(const Symbol& sym, double t, const GridField& f);

/// K(t) applied to spectral data, projected back to the same bandlimit.
/// x-dependent coefficient products are formed on a grid of at least twice
/// the bandlimit before projection.
SpectralField apply_spectral(const Symbol& sym, double t, const SpectralField& F);

/// Shared quadrature grids, one per (group, band).
GridPtr cached_grid(Group group, int band);

}  // namespace liediff
