// Time integration of v_t = K(t) v + f in spectral form, Sobolev norms and the
// energy identity / energy estimate diagnostics.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "liediff/symbol.hpp"

namespace liediff {

enum class Scheme { Auto, Exact, CrankNicolson, RK4 };
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Raised when a time step cannot be completed (iterative solve stalls).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// f(t) = sum_k profile_k(t) shape_k.
struct Forcing {
  struct Part {
    SpectralField shape;
    TimeProfile profile;
  };
  std::vector<Part> parts;

  static Forcing none() { return {}; }
  static Forcing constant(SpectralField shape) { return profiled(std::move(shape), TimeProfile{}); }
  static Forcing profiled(SpectralField shape, TimeProfile p);

  bool zero() const { return parts.empty(); }
  bool t_independent() const;
  /// out += f(t); shapes must match out.
  void add_to(double t, SpectralField& out) const;
  SpectralField at(double t, Group g, int band) const;
};

/// sqrt(sum d ||W F||^2) with W = bessel_weight(., s, kind).
double sobolev_norm(const SpectralField& F, double s, WeightKind kind);

// ---------------------------------------------------------------------------
// Generators on block states

using BlockState = std::vector<SpectralField>;

/// Linear generator of dV/dt = A(t) V + F(t) on a stack of spectral fields.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual Group group() const = 0;
  virtual int band() const = 0;
  virtual std::size_t blocks() const = 0;
  virtual bool x_independent() const = 0;
  virtual bool t_independent() const = 0;
  /// Block symbols are diagonal (single block only).
  virtual bool diagonal() const { return false; }

  /// (blocks * d) square matrix acting on the stacked coefficients at `rep`.
  /// Only for x-independent generators.
  virtual CMatrix block_symbol(double t, const RepIndex& rep) const = 0;
  /// Invariant approximation used to precondition implicit solves.
  virtual std::optional<CMatrix> preconditioner_symbol(double, const RepIndex&) const { return std::nullopt; }

  /// out = A(t) v.
  virtual void apply(double t, const BlockState& v, BlockState& out) const = 0;

  virtual bool has_forcing() const = 0;
  virtual bool forcing_t_independent() const = 0;
  /// out = F(t).
  virtual void forcing(double t, BlockState& out) const = 0;

  /// Upper bound for the spectral radius of A(t), t in [0, T].
  virtual double spectral_bound(double T) const;

  BlockState zero_state() const;
};

/// v_t = K(t) v + f for a single spectral field.
class ScalarGenerator : public Generator {
 public:
  ScalarGenerator(Symbol K, Forcing f, int band);

  Group group() const override { return K_.group(); }
  int band() const override { return band_; }
  std::size_t blocks() const override { return 1; }
  bool x_independent() const override { return K_.x_independent(); }
  bool t_independent() const override { return K_.t_independent(); }
  bool diagonal() const override { return K_.diagonal(); }
  CMatrix block_symbol(double t, const RepIndex& rep) const override { return K_(t, rep); }
  std::optional<CMatrix> preconditioner_symbol(double t, const RepIndex& rep) const override;
  void apply(double t, const BlockState& v, BlockState& out) const override;
  bool has_forcing() const override { return !f_.zero(); }
  bool forcing_t_independent() const override { return f_.t_independent(); }
  void forcing(double t, BlockState& out) const override;
  double spectral_bound(double T) const override;

  const Symbol& symbol() const { return K_; }

 private:
  Symbol K_;
  Forcing f_;
  int band_;
  std::vector<double> mean_coef_;  // grid mean of each term's spatial coefficient
};

struct StepperOptions {
  double gmres_tol = 1e-12;
  int gmres_restart = 60;
  int gmres_max_iter = 600;
  double rk4_stability = 2.7;
};

/// One scheme applied to one generator with a fixed step; caches per-mode
/// propagators and factorizations when the generator is t-independent.
class Stepper {
 public:
  Stepper(const Generator& gen, Scheme scheme, double dt, double T, StepperOptions opt = {});
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  /// Advances v from t to t + dt.
  void step(double t, BlockState& v);

  Scheme scheme() const { return scheme_; }
  /// RK4 substeps per step forced by the stability cap.
  int substeps() const { return substeps_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Cache;
  void step_exact(double t, BlockState& v);
  void step_cn(double t, BlockState& v);
  void step_rk4(double t, double h, BlockState& v);

  const Generator& gen_;
  Scheme scheme_;
  double dt_;
  StepperOptions opt_;
  int substeps_ = 1;
  std::vector<std::string> warnings_;
  Cache* cache_;
};

/// Scheme chosen by Scheme::Auto: exact when K is x- and t-independent,
/// Crank-Nicolson otherwise.
Scheme resolve_scheme(Scheme requested, const Generator& gen);

/// Single steps for a scalar problem (no caching across calls).
SpectralField step_exact_invariant(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt);
SpectralField step_rk4(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt);
SpectralField step_crank_nicolson(const SpectralField& v, const Symbol& K, const Forcing& f, double t, double dt);

/// Uniform time grid: N = ceil(T / dt - 1e-9) steps of T / N.
int step_count(double T, double dt);

struct BlockTrajectory {
  std::vector<double> times;
  std::vector<BlockState> states;
  Scheme scheme = Scheme::Auto;
  double dt = 0.0;
  int substeps = 1;
  std::vector<std::string> warnings;
};

BlockTrajectory evolve_blocks(const Generator& gen, BlockState v0, double T, Scheme scheme, double dt,
                              const StepperOptions& opt = {});

// ---------------------------------------------------------------------------
// Scalar problems and energy diagnostics

struct EvolutionProblem {
  Symbol K;
  SpectralField u0;
  Forcing f;
  double T = 1.0;
  double s = 0.0;
  WeightKind norm = WeightKind::Elliptic;
};

struct EnergyFit {
  double C = 0.0;
  double C_prime = 0.0;
  bool satisfied = false;
  double forcing_integral = 0.0;  // int_0^T ||f||_{H^s}^2
};

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> l2_norms;
  std::vector<double> hs_norms;
  std::vector<double> identity_residuals;
  EnergyFit fit;
};

struct EvolutionResult {
  std::vector<double> times;
  std::vector<SpectralField> states;
  Scheme scheme = Scheme::Auto;
  double dt = 0.0;
  int substeps = 1;
  std::vector<std::string> warnings;
  EnergyReport report;
};

EvolutionResult evolve(const EvolutionProblem& problem, Scheme scheme, double dt, const StepperOptions& opt = {});

/// |d/dt ||v||^2 - 2 Re(K v, v) - 2 Re(f, v)| at every stored time; centered
/// differences inside, second-order one-sided differences at both ends.
std::vector<double> energy_identity_residual(const std::vector<double>& times,
                                             const std::vector<SpectralField>& states, const Symbol& K,
                                             const Forcing& f);

/// int_0^T ||f(t)||_{H^s}^2 dt by Gauss-Legendre quadrature.
double forcing_energy(const Forcing& f, double T, double s, WeightKind kind);

/// Fitted constants of ||v(t)||^2 <= C ||u0||^2 + C' int_0^T ||f||^2 over the
/// trajectory (all norms H^s of the given kind).
EnergyFit energy_estimate_check(const std::vector<double>& times, const std::vector<SpectralField>& states,
                                const SpectralField& u0, const Forcing& f, double T, double s, WeightKind kind);

}  // namespace liediff
