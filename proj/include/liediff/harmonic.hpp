// Representation theory and Fourier analysis on SU(2) and the circle.
//
// Conventions used throughout the library:
//
//  * SU(2) elements are parametrized by z-y-z Euler angles,
//        x(phi, theta, psi) = exp(phi X3) exp(theta X2) exp(psi X3),
//    with phi in [0, 2pi), theta in [0, pi], psi in [0, 4pi).
//  * The spin-l representation acts by dxi(X_k) = -i J_k, where J_k are the
//    angular momentum matrices in the weight basis j = -l, ..., l (increasing
//    order along rows and columns). Hence
//        xi^l(x)_{ab} = exp(-i j_a phi) d^l_{j_a j_b}(theta) exp(-i j_b psi).
//  * The Haar measure is normalized to total mass one:
//        dx = sin(theta) dphi dtheta dpsi / (16 pi^2).
//  * On the circle, characters are e^{i k theta} with measure dtheta / 2pi.
//
// Bandlimits are stored as a single integer `band`: two_L for SU(2) (so that
// half-integer l are exact) and L for the torus.
#pragma once

#include <complex>
#include <compare>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace liediff {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Group { SU2, Torus1 };

std::string to_string(Group g);
Group group_from_string(const std::string& name);

struct RepIndex {
  Group group = Group::SU2;
  int two_ell = 0;  // SU(2) only
  int k = 0;        // torus only

  static RepIndex su2(int two_ell);
  static RepIndex torus(int k);

  int dim() const { return group == Group::SU2 ? two_ell + 1 : 1; }
  double ell() const { return 0.5 * two_ell; }
  /// Weight of row/column `idx` (SU(2)): j = idx - l.
  double weight(int idx) const { return idx - 0.5 * two_ell; }
  /// Position in the ordered dual for a given band.
  std::size_t position(int band) const;

  auto operator<=>(const RepIndex&) const = default;
};

/// Eigenvalue of the positive Laplace-Beltrami operator: l(l+1) or k^2.
double laplace_eigenvalue(const RepIndex& rep);

/// Representations up to the bandlimit, in increasing order.
std::vector<RepIndex> dual_enumerate(Group group, int band);

struct Angles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
};

// ---------------------------------------------------------------------------
// Wigner functions

/// Wigner small-d matrix d^l(theta) in the weight basis, computed by the
/// three-term recursion in l seeded at l = max(|j|, |j'|).
RMatrix wigner_d(int two_ell, double theta);

/// All d^l(theta) for two_ell = 0..two_L (index = two_ell).
std::vector<RMatrix> wigner_d_all(int two_L, double theta);

/// xi^l evaluated at the Euler angles. Throws for non-SU(2) representations.
CMatrix wigner_matrix(const RepIndex& rep, const Angles& x);

/// Matrix coefficient xi(x) for either group (torus: 1x1 character e^{ik phi}).
CMatrix representation_matrix(const RepIndex& rep, const Angles& x);

// ---------------------------------------------------------------------------
// Quadrature

/// Tensor-product Haar quadrature. SU(2): uniform phi and psi, Gauss-Legendre
/// in cos(theta). Torus: uniform nodes in phi. Nodes are ordered with psi
/// fastest, then theta, then phi.
class GridSpec {
 public:
  GridSpec(Group group, int band);

  Group group() const { return group_; }
  int band() const { return band_; }
  std::size_t node_count() const { return weights_.size(); }
  std::size_t n_phi() const { return phi_.size(); }
  std::size_t n_theta() const { return theta_.size(); }
  std::size_t n_psi() const { return psi_.size(); }

  std::span<const double> phi() const { return phi_; }
  std::span<const double> theta() const { return theta_; }
  std::span<const double> psi() const { return psi_; }
  std::span<const double> theta_weights() const { return w_theta_; }
  std::span<const double> weights() const { return weights_; }

  Angles node(std::size_t i) const;
  std::size_t node_index(std::size_t a, std::size_t b, std::size_t c) const {
    return (a * theta_.size() + b) * psi_.size() + c;
  }

  /// d^l(theta_b) for every theta node and two_ell <= band: [b][two_ell].
  const std::vector<std::vector<RMatrix>>& d_tables() const { return d_tables_; }

 private:
  Group group_;
  int band_;
  std::vector<double> phi_, theta_, psi_;
  std::vector<double> w_theta_;
  std::vector<double> weights_;
  std::vector<std::vector<RMatrix>> d_tables_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

GridPtr quadrature_grid(Group group, int band);

// ---------------------------------------------------------------------------
// Fields

struct GridField {
  GridPtr grid;
  std::vector<cplx> values;

  GridField() = default;
  explicit GridField(GridPtr g);
  GridField(GridPtr g, std::vector<cplx> v);

  template <class F>
  static GridField sample(GridPtr g, F&& f) {
    GridField out(g);
    for (std::size_t i = 0; i < g->node_count(); ++i) out.values[i] = f(g->node(i));
    return out;
  }
};

class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(Group group, int band);

  Group group() const { return group_; }
  int band() const { return band_; }
  std::size_t size() const { return coeffs_.size(); }
  const std::vector<RepIndex>& reps() const { return reps_; }
  const RepIndex& rep(std::size_t i) const { return reps_[i]; }

  CMatrix& operator[](std::size_t i) { return coeffs_[i]; }
  const CMatrix& operator[](std::size_t i) const { return coeffs_[i]; }
  CMatrix& at(const RepIndex& r);
  const CMatrix& at(const RepIndex& r) const;

  /// Copy with a different bandlimit (zero padded or truncated).
  SpectralField with_band(int band) const;

  bool same_shape(const SpectralField& o) const {
    return group_ == o.group_ && band_ == o.band_;
  }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(cplx c);
  /// this += c * o
  SpectralField& axpy(cplx c, const SpectralField& o);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(cplx c, SpectralField a) { return a *= c; }

  double max_abs() const;

 private:
  Group group_ = Group::SU2;
  int band_ = 0;
  std::vector<RepIndex> reps_;
  std::vector<CMatrix> coeffs_;
};

// ---------------------------------------------------------------------------
// Transforms and Plancherel

/// f^(xi) = int f(x) xi(x)^* dx, by quadrature, for all reps up to `band`.
SpectralField fourier_forward(const GridField& f, int band);
/// f(x) = sum_xi d_xi Tr[xi(x) F(xi)] on the nodes of `grid`.
GridField fourier_inverse(const SpectralField& F, GridPtr grid);
/// Pointwise Fourier series evaluation at arbitrary angles.
cplx fourier_evaluate(const SpectralField& F, const Angles& x);

/// int f conj(g) dx
cplx l2_inner(const GridField& f, const GridField& g);
/// sum_xi d_xi Tr[F(xi) G(xi)^*]
cplx spectral_inner(const SpectralField& F, const SpectralField& G);
/// Squared L^2 norm from spectral data: sum_xi d_xi ||F(xi)||_HS^2.
double plancherel_norm(const SpectralField& F);

/// Field whose only nonzero coefficient reproduces xi^rep_{row,col}(x).
SpectralField matrix_coefficient_field(Group group, int band, const RepIndex& rep,
                                       int row, int col);

}  // namespace liediff
