// Order-m Cauchy problems
//     d^m u/dt^m = sum_{j<m} a_{m-j}(x, t, D) d^j u/dt^j + f,   d^j u(0) = g_{j+1},
// rewritten as a first-order block system in u_j = d^{j-1}/dt^{j-1} Gamma^{m-j} u,
// Gamma = (1 + L)^{1/2}.
#pragma once

#include <optional>
#include <vector>

#include "liediff/evolve.hpp"

namespace liediff {

/// a_{m-j}(x, t, D) with its declared order m - j.
struct CoefficientOperator {
  Symbol op;
  double declared_order = 0.0;
};

struct HigherOrderProblem {
  int m = 2;
  /// coefficients[j] = a_{m-j}, j = 0..m-1.
  std::vector<CoefficientOperator> coefficients;
  /// data[j] = g_{j+1} = d^j u(0).
  std::vector<SpectralField> data;
  Forcing f;
  double T = 1.0;
  /// Kind of Bessel weight used for Gamma.
  WeightKind gamma_kind = WeightKind::Elliptic;
};

/// Companion system dU/dt = K(t) U + (0, ..., 0, f): Gamma on the
/// superdiagonal, b_k = a_{m-k+1} Gamma^{k-m} on the last row.
class FirstOrderSystem : public Generator {
 public:
  explicit FirstOrderSystem(HigherOrderProblem p);

  int m() const { return p_.m; }
  double horizon() const { return p_.T; }
  WeightKind gamma_kind() const { return p_.gamma_kind; }
  const HigherOrderProblem& problem() const { return p_; }

  /// u_j(0) = Gamma^{m-j} g_j.
  BlockState initial_state() const;
  /// Symbol of b_k at (t, x, rep), k = 1..m.
  CMatrix last_row_block(int k, double t, const Angles* x, const RepIndex& rep) const;

  Group group() const override { return group_; }
  int band() const override { return band_; }
  std::size_t blocks() const override { return static_cast<std::size_t>(p_.m); }
  bool x_independent() const override { return x_independent_; }
  bool t_independent() const override { return t_independent_; }
  CMatrix block_symbol(double t, const RepIndex& rep) const override;
  std::optional<CMatrix> preconditioner_symbol(double t, const RepIndex& rep) const override;
  void apply(double t, const BlockState& v, BlockState& out) const override;
  bool has_forcing() const override { return !p_.f.zero(); }
  bool forcing_t_independent() const override { return p_.f.t_independent(); }
  void forcing(double t, BlockState& out) const override;

 private:
  const Symbol& a(int k) const { return p_.coefficients[static_cast<std::size_t>(p_.m - k)].op; }

  HigherOrderProblem p_;
  Group group_;
  int band_;
  bool x_independent_ = true;
  bool t_independent_ = true;
  std::vector<ScalarGenerator> precond_;  // one per coefficient, for mean-coefficient symbols
};

/// Gamma^p F (Gamma^p = bessel_weight(., p, kind)).
SpectralField gamma_apply(const SpectralField& F, double p, WeightKind kind);

FirstOrderSystem reduce_to_first_order(const HigherOrderProblem& p);

BlockTrajectory solve_reduced(const FirstOrderSystem& sys, Scheme scheme, double dt, const StepperOptions& opt = {});

/// u = Gamma^{-(m-1)} u_1 along the trajectory.
std::vector<SpectralField> extract_u(const FirstOrderSystem& sys, const BlockTrajectory& traj);

/// Per-mode solution of the original order-m problem at time t through the
/// exponential of its unscaled companion matrix. Needs x- and t-independent
/// coefficients and t-independent forcing.
SpectralField direct_solution(const HigherOrderProblem& p, double t);

/// max over reps with two_ell <= two_L (and grid nodes for x-dependent
/// coefficients) of ||b_k(t, x, xi)|| / <xi>, for k = 1..m.
std::vector<double> last_row_growth(const FirstOrderSystem& sys, int two_L, double t = 0.0);

}  // namespace liediff
