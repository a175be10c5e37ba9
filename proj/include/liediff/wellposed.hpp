// Checks of the structural hypotheses on K(t): strong ellipticity, symbol
// positivity, the sharp Garding order window and the SU(2) drift criterion.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "liediff/symbol.hpp"

namespace liediff {

/// (M + M*) / 2.
CMatrix hermitian_part(const CMatrix& M);

struct ScanOptions {
  int two_L = 100;         // dual scan bandlimit (two_ell or |k|)
  int time_samples = 17;   // Chebyshev nodes on [0, T]
  double T = 1.0;
  int x_two_L = 4;         // quadrature grid for x-dependent symbols
  double min_weight = 0.0; // low-frequency exclusion: skip <xi> < min_weight
  double tolerance = 1e-10;
};

/// Chebyshev nodes of the first kind mapped to [0, T], increasing.
std::vector<double> scan_times(double T, int n);

struct Witness {
  double t = 0.0;
  std::size_t x_node = 0;
  RepIndex rep;
  int slot = -1;  // diagonal position when the symbol is diagonal
  double eig = 0.0;
};

enum class Verdict { StronglyElliptic, Positive, Failed };
std::string to_string(Verdict v);

struct EllipticityReport {
  Verdict verdict = Verdict::Failed;
  double C = 0.0;
  /// Lowest failing representation (most negative value there), if any.
  std::optional<Witness> witness;
  /// Global minimum over the scan.
  Witness minimum;
  int scanned_two_L = 0;
  int time_samples = 0;
  std::size_t spatial_nodes = 0;
  /// true when a tail argument covers the representations beyond the scan.
  bool conclusive = false;
  std::string note;

  bool passed() const { return verdict != Verdict::Failed; }
  nlohmann::json to_json() const;
};

/// Positive iff min eig hermitian_part(-sigma_K) >= -tolerance over the scan.
/// For spatially constant combinations of a fractional Laplacian, iX3, the
/// identity and skew vector fields the representations beyond the scan are
/// decided in closed form.
EllipticityReport positivity_check(const Symbol& sym, const ScanOptions& opt = {});

/// Largest C with hermitian_part(-sigma_K) >= C W^m over the scan, W the
/// elliptic or subelliptic weight and m the declared order.
EllipticityReport strong_ellipticity_constant(const Symbol& sym, const ScanOptions& opt = {},
                                              WeightKind kind = WeightKind::Elliptic);

struct GardingBound {
  double value = 0.0;
  bool valid = false;
};

/// rho/kappa - (2 - 1/kappa) delta, valid iff delta < rho / (2 kappa - 1).
GardingBound garding_order_bound(double rho, double delta, int kappa);

struct DriftCriterion {
  bool holds = false;
  double worst = 0.0;  // max |a3| + a (m = 1) or the violated quantity (m < 1)
  double t = 0.0;
  std::size_t x_node = 0;
  std::string reason;
};

/// Closed-form criterion for a L^{m/2} + a3 iX3 on SU(2), 0 <= m <= 1.
DriftCriterion su2_drift_criterion(const Coefficient& a, const Coefficient& a3, double m,
                                   const ScanOptions& opt = {});

enum class ProblemCase { CaseI, CaseII, Unverified };
std::string to_string(ProblemCase c);

struct Classification {
  ProblemCase kind = ProblemCase::Unverified;
  double C = 0.0;
  double varkappa = 0.0;
  bool garding_valid = false;
  double m = 0.0;
  std::string reason;
  EllipticityReport positivity;
  EllipticityReport ellipticity;
  std::optional<EllipticityReport> ellipticity_excluded;

  nlohmann::json to_json() const;
};

Classification classify_problem(const Symbol& sym, const ScanOptions& opt = {},
                                WeightKind kind = WeightKind::Elliptic);

}  // namespace liediff
