#include <cmath>

#include "liediff/harmonic.hpp"

namespace liediff {
namespace {

// e^{i sign (k/2) angle} for k = -band..band, laid out [node][k + band].
std::vector<cplx> half_phase_table(std::span<const double> angles, int band, double sign) {
  const std::size_t q = 2 * static_cast<std::size_t>(band) + 1;
  std::vector<cplx> t(angles.size() * q);
  for (std::size_t a = 0; a < angles.size(); ++a)
    for (int k = -band; k <= band; ++k) t[a * q + (k + band)] = std::polar(1.0, sign * 0.5 * k * angles[a]);
  return t;
}

SpectralField forward_torus(const GridField& f, int band) {
  const GridSpec& g = *f.grid;
  SpectralField out(Group::Torus1, band);
  for (int k = -band; k <= band; ++k) {
    cplx acc = 0.0;
    for (std::size_t a = 0; a < g.n_phi(); ++a)
      acc += g.weights()[a] * f.values[a] * std::polar(1.0, -k * g.phi()[a]);
    out.at(RepIndex::torus(k))(0, 0) = acc;
  }
  return out;
}

SpectralField forward_su2(const GridField& f, int band) {
  const GridSpec& g = *f.grid;
  const std::size_t np = g.n_phi(), nt = g.n_theta(), ns = g.n_psi();
  const std::size_t q = 2 * static_cast<std::size_t>(band) + 1;
  const auto ph_psi = half_phase_table(g.psi(), band, +1.0);
  const auto ph_phi = half_phase_table(g.phi(), band, +1.0);

  // sum over psi: g1[(a * nt + b) * q + k]
  std::vector<cplx> g1(np * nt * q, cplx{});
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = 0; b < nt; ++b) {
      cplx* row = &g1[(a * nt + b) * q];
      const cplx* fv = &f.values[g.node_index(a, b, 0)];
      for (std::size_t c = 0; c < ns; ++c) {
        const cplx* ph = &ph_psi[c * q];
        for (std::size_t k = 0; k < q; ++k) row[k] += fv[c] * ph[k];
      }
    }
  // sum over phi: g2[(b * q + kp) * q + k], kp indexes the column weight
  std::vector<cplx> g2(nt * q * q, cplx{});
  for (std::size_t a = 0; a < np; ++a) {
    const cplx* ph = &ph_phi[a * q];
    for (std::size_t b = 0; b < nt; ++b) {
      const cplx* row = &g1[(a * nt + b) * q];
      for (std::size_t kp = 0; kp < q; ++kp) {
        cplx* dst = &g2[(b * q + kp) * q];
        for (std::size_t k = (kp % 2); k < q; k += 2) dst[k] += ph[kp] * row[k];
      }
    }
  }

  const double w_uniform = 1.0 / (static_cast<double>(np) * ns);
  SpectralField out(Group::SU2, band);
  for (int two_ell = 0; two_ell <= band; ++two_ell) {
    CMatrix& M = out[two_ell];
    const int d = two_ell + 1;
    for (int ra = 0; ra < d; ++ra) {
      const std::size_t ka = (2 * ra - two_ell) + band;  // row weight -> psi
      for (int cb = 0; cb < d; ++cb) {
        const std::size_t kb = (2 * cb - two_ell) + band;  // column weight -> phi
        cplx acc = 0.0;
        for (std::size_t b = 0; b < nt; ++b)
          acc += g.theta_weights()[b] * g.d_tables()[b][two_ell](cb, ra) * g2[(b * q + kb) * q + ka];
        M(ra, cb) = w_uniform * acc;
      }
    }
  }
  return out;
}

}  // namespace

SpectralField fourier_forward(const GridField& f, int band) {
  if (!f.grid) throw Error("grid field without grid");
  if (band < 0 || band > f.grid->band())
    throw Error("requested bandlimit " + std::to_string(band) + " exceeds grid bandlimit " +
                std::to_string(f.grid->band()));
  if (f.values.size() != f.grid->node_count()) throw Error("grid field length mismatch");
  return f.grid->group() == Group::SU2 ? forward_su2(f, band) : forward_torus(f, band);
}

GridField fourier_inverse(const SpectralField& F, GridPtr grid) {
  if (F.group() != grid->group()) throw Error("group mismatch in inverse transform");
  if (F.band() > grid->band())
    throw Error("spectral bandlimit exceeds grid bandlimit in inverse transform");
  GridField out(grid);
  const GridSpec& g = *grid;
  const int band = F.band();

  if (g.group() == Group::Torus1) {
    for (std::size_t a = 0; a < g.n_phi(); ++a) {
      cplx acc = 0.0;
      for (int k = -band; k <= band; ++k)
        acc += F.at(RepIndex::torus(k))(0, 0) * std::polar(1.0, k * g.phi()[a]);
      out.values[a] = acc;
    }
    return out;
  }

  const std::size_t np = g.n_phi(), nt = g.n_theta(), ns = g.n_psi();
  const std::size_t q = 2 * static_cast<std::size_t>(band) + 1;
  // h[(b * q + ka) * q + kb] = sum_l d_l d^l_{ma mb}(theta_b) F^l_{ba}
  std::vector<cplx> h(nt * q * q, cplx{});
  for (int two_ell = 0; two_ell <= band; ++two_ell) {
    const int d = two_ell + 1;
    const CMatrix& M = F[two_ell];
    for (std::size_t b = 0; b < nt; ++b) {
      const RMatrix& dl = g.d_tables()[b][two_ell];
      for (int ra = 0; ra < d; ++ra) {
        const std::size_t ka = (2 * ra - two_ell) + band;
        for (int cb = 0; cb < d; ++cb) {
          const std::size_t kb = (2 * cb - two_ell) + band;
          h[(b * q + ka) * q + kb] += static_cast<double>(d) * dl(ra, cb) * M(cb, ra);
        }
      }
    }
  }
  const auto ph_phi = half_phase_table(g.phi(), band, -1.0);
  const auto ph_psi = half_phase_table(g.psi(), band, -1.0);
  std::vector<cplx> p(q);
  for (std::size_t a = 0; a < np; ++a) {
    const cplx* pa = &ph_phi[a * q];
    for (std::size_t b = 0; b < nt; ++b) {
      std::fill(p.begin(), p.end(), cplx{});
      for (std::size_t ka = 0; ka < q; ++ka) {
        const cplx* src = &h[(b * q + ka) * q];
        for (std::size_t kb = (ka % 2); kb < q; kb += 2) p[kb] += pa[ka] * src[kb];
      }
      for (std::size_t c = 0; c < ns; ++c) {
        const cplx* pc = &ph_psi[c * q];
        cplx acc = 0.0;
        for (std::size_t kb = 0; kb < q; ++kb) acc += p[kb] * pc[kb];
        out.values[g.node_index(a, b, c)] = acc;
      }
    }
  }
  return out;
}

cplx fourier_evaluate(const SpectralField& F, const Angles& x) {
  cplx acc = 0.0;
  if (F.group() == Group::Torus1) {
    for (std::size_t i = 0; i < F.size(); ++i) acc += F[i](0, 0) * std::polar(1.0, F.rep(i).k * x.phi);
    return acc;
  }
  const auto d_all = wigner_d_all(F.band(), x.theta);
  for (std::size_t i = 0; i < F.size(); ++i) {
    const RepIndex& r = F.rep(i);
    const int d = r.dim();
    for (int ra = 0; ra < d; ++ra)
      for (int cb = 0; cb < d; ++cb) {
        const cplx xi = std::polar(1.0, -r.weight(ra) * x.phi) * d_all[r.two_ell](ra, cb) *
                        std::polar(1.0, -r.weight(cb) * x.psi);
        acc += static_cast<double>(d) * xi * F[i](cb, ra);
      }
  }
  return acc;
}

cplx l2_inner(const GridField& f, const GridField& g) {
  if (f.grid != g.grid && (f.grid->group() != g.grid->group() || f.grid->band() != g.grid->band()))
    throw Error("inner product of fields on different grids");
  const auto w = f.grid->weights();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.values[i] * std::conj(g.values[i]);
  return acc;
}

}  // namespace liediff
