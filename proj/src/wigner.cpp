#include <cmath>
#include <cstdlib>

#include "liediff/harmonic.hpp"

namespace liediff {
namespace {

// Closed form sum for d^l_{m'm}; at l = max(|m|, |m'|) only one term survives.
// Arguments are doubled (two_l = 2l etc.).
double wigner_d_seed(int two_l, int two_mp, int two_m, double theta) {
  const int lpmp = (two_l + two_mp) / 2, lmmp = (two_l - two_mp) / 2;
  const int lpm = (two_l + two_m) / 2, lmm = (two_l - two_m) / 2;
  const int mp_m = (two_mp - two_m) / 2;
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  const double log_pref = 0.5 * (std::lgamma(lpmp + 1.0) + std::lgamma(lmmp + 1.0) +
                                 std::lgamma(lpm + 1.0) + std::lgamma(lmm + 1.0));
  double sum = 0.0;
  for (int k = std::max(0, -mp_m); k <= std::min(lpm, lmmp); ++k) {
    const double log_den = std::lgamma(lpm - k + 1.0) + std::lgamma(k + 1.0) +
                           std::lgamma(mp_m + k + 1.0) + std::lgamma(lmmp - k + 1.0);
    const double sign = ((mp_m + k) % 2 == 0) ? 1.0 : -1.0;
    // cos^(2l + m - m' - 2k) sin^(m' - m + 2k)
    const int ec = two_l - mp_m - 2 * k;
    const int es = mp_m + 2 * k;
    sum += sign * std::exp(log_pref - log_den) * std::pow(c, ec) * std::pow(s, es);
  }
  return sum;
}

}  // namespace

std::vector<RMatrix> wigner_d_all(int two_L, double theta) {
  if (two_L < 0) throw Error("bandlimit must be non-negative");
  std::vector<RMatrix> out;
  out.reserve(two_L + 1);
  for (int t = 0; t <= two_L; ++t) out.push_back(RMatrix::Zero(t + 1, t + 1));

  const double c = std::cos(theta);
  for (int two_mp = -two_L; two_mp <= two_L; ++two_mp) {
    for (int two_m = -two_L; two_m <= two_L; ++two_m) {
      if (((two_mp - two_m) % 2) != 0) continue;
      const int two_l0 = std::max(std::abs(two_mp), std::abs(two_m));
      const double M = 0.5 * two_mp, Mp = 0.5 * two_m;
      double prev = 0.0;
      double cur = wigner_d_seed(two_l0, two_mp, two_m, theta);
      for (int two_l = two_l0;; two_l += 2) {
        out[two_l]((two_mp + two_l) / 2, (two_m + two_l) / 2) = cur;
        if (two_l + 2 > two_L) break;
        const double J = 0.5 * two_l;
        double next;
        if (two_l == 0) {
          next = c;
        } else {
          const double num1 = (2 * J + 1) * (J * (J + 1) * c - M * Mp);
          const double num2 =
              (J + 1) * std::sqrt(std::max(0.0, (J * J - M * M) * (J * J - Mp * Mp)));
          const double den =
              J * std::sqrt(((J + 1) * (J + 1) - M * M) * ((J + 1) * (J + 1) - Mp * Mp));
          next = (num1 * cur - num2 * prev) / den;
        }
        prev = cur;
        cur = next;
      }
    }
  }
  return out;
}

RMatrix wigner_d(int two_ell, double theta) {
  return std::move(wigner_d_all(two_ell, theta)[two_ell]);
}

CMatrix wigner_matrix(const RepIndex& rep, const Angles& x) {
  if (rep.group != Group::SU2) throw Error("wigner_matrix requires an SU(2) representation");
  const int d = rep.dim();
  const RMatrix dl = wigner_d(rep.two_ell, x.theta);
  CMatrix m(d, d);
  for (int a = 0; a < d; ++a) {
    const cplx pa = std::polar(1.0, -rep.weight(a) * x.phi);
    for (int b = 0; b < d; ++b) m(a, b) = pa * dl(a, b) * std::polar(1.0, -rep.weight(b) * x.psi);
  }
  return m;
}

}  // namespace liediff
