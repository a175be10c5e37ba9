#include "liediff/wellposed.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numbers>

namespace liediff {

CMatrix hermitian_part(const CMatrix& M) {
  if (M.rows() != M.cols()) throw Error("hermitian_part needs a square matrix");
  return 0.5 * (M + M.adjoint());
}

std::vector<double> scan_times(double T, int n) {
  if (n < 1) throw Error("time sample count must be positive");
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k)
    out[k] = 0.5 * T * (1.0 - std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n)));
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::StronglyElliptic: return "strongly_elliptic";
    case Verdict::Positive: return "positive";
    case Verdict::Failed: return "failed";
  }
  return "?";
}

std::string to_string(ProblemCase c) {
  switch (c) {
    case ProblemCase::CaseI: return "CaseI";
    case ProblemCase::CaseII: return "CaseII";
    case ProblemCase::Unverified: return "Unverified";
  }
  return "?";
}

namespace {

nlohmann::json witness_json(const Witness& w) {
  nlohmann::json j;
  j["t"] = w.t;
  j["x_node"] = w.x_node;
  if (w.rep.group == Group::SU2)
    j["two_ell"] = w.rep.two_ell;
  else
    j["k"] = w.rep.k;
  if (w.slot >= 0) j["slot"] = w.slot;
  j["eig"] = w.eig;
  return j;
}

}  // namespace

nlohmann::json EllipticityReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = to_string(verdict);
  j["C"] = C;
  j["witness"] = witness ? witness_json(*witness) : nlohmann::json(nullptr);
  j["minimum"] = witness_json(minimum);
  j["scanned"] = {{"two_L", scanned_two_L}, {"time_samples", time_samples}, {"spatial_nodes", spatial_nodes}};
  j["conclusive"] = conclusive;
  if (!note.empty()) j["note"] = note;
  return j;
}

nlohmann::json Classification::to_json() const {
  nlohmann::json j;
  j["case"] = to_string(kind);
  j["m"] = m;
  if (kind == ProblemCase::CaseI) j["C"] = C;
  j["varkappa"] = varkappa;
  j["garding_valid"] = garding_valid;
  if (!reason.empty()) j["reason"] = reason;
  j["positivity"] = positivity.to_json();
  j["ellipticity"] = ellipticity.to_json();
  if (ellipticity_excluded) j["ellipticity_low_frequency_excluded"] = ellipticity_excluded->to_json();
  return j;
}

namespace {

struct ScanPoint {
  double t;
  std::size_t node;
  const Angles* x;
};

struct RepMin {
  bool scanned = false;
  Witness w;
};

double min_eig(const CMatrix& H, bool diagonal, int* slot) {
  if (diagonal) {
    int arg = 0;
    double m = H(0, 0).real();
    for (int a = 1; a < H.rows(); ++a)
      if (H(a, a).real() < m) m = H(a, a).real(), arg = a;
    *slot = arg;
    return m;
  }
  *slot = -1;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::vector<RepIndex> scan_reps(Group g, int band) {
  // SU(2): increasing two_ell. Torus: k = 0, -1, 1, -2, 2, ... (increasing |k|).
  if (g == Group::SU2) return dual_enumerate(g, band);
  std::vector<RepIndex> out{RepIndex::torus(0)};
  for (int k = 1; k <= band; ++k) {
    out.push_back(RepIndex::torus(-k));
    out.push_back(RepIndex::torus(k));
  }
  return out;
}

// Minimum of value(rep, H(t, x, rep)) per representation, H = hermitian_part(-sigma).
template <class Value>
std::vector<RepMin> scan(const Symbol& sym, const ScanOptions& opt, const std::vector<RepIndex>& reps,
                         Value value, std::size_t* spatial_nodes, int* time_samples) {
  const std::vector<double> times = sym.t_independent() ? std::vector<double>{0.0} : scan_times(opt.T, opt.time_samples);
  std::vector<Angles> nodes;
  if (!sym.x_independent()) {
    const GridPtr g = cached_grid(sym.group(), opt.x_two_L);
    for (std::size_t n = 0; n < g->node_count(); ++n) nodes.push_back(g->node(n));
  }
  *spatial_nodes = nodes.empty() ? 1 : nodes.size();
  *time_samples = static_cast<int>(times.size());

  std::vector<RepMin> out(reps.size());
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const RepIndex& rep = reps[r];
    std::vector<CMatrix> bases;
    std::vector<double> node_coef;
    if (sym.has_terms())
      for (const auto& term : sym.terms()) bases.push_back(term.base.symbol(rep));
    auto evaluate = [&](double t, const Angles* x) -> CMatrix {
      if (!sym.has_terms()) return sym(t, x, rep);
      CMatrix acc = CMatrix::Zero(rep.dim(), rep.dim());
      for (std::size_t k = 0; k < bases.size(); ++k) {
        const auto& c = sym.terms()[k].coef;
        const double a = x ? c.at(t, *x) : c.at(t);
        if (a != 0.0) acc += a * bases[k];
      }
      return acc;
    };
    const std::size_t n_nodes = nodes.empty() ? 1 : nodes.size();
    for (std::size_t n = 0; n < n_nodes; ++n) {
      const Angles* x = nodes.empty() ? nullptr : &nodes[n];
      for (double t : times) {
        int slot = -1;
        const double v = value(rep, hermitian_part(-evaluate(t, x)), &slot);
        if (!out[r].scanned || v < out[r].w.eig) {
          out[r].scanned = true;
          out[r].w = Witness{t, n, rep, slot, v};
        }
      }
    }
  }
  return out;
}

// Closed-form handling of h(l) = A g(l) - B l - c beyond the scan, where
// -sigma = -sum a_lap L^q - a3 diag(j) - c I + skew terms.
struct Family {
  bool ok = false;
  double q = 0.0;
  std::vector<const Term*> lap, ix3, id;
};

Family detect_family(const Symbol& sym) {
  Family f;
  if (!sym.has_terms() || !sym.x_independent()) return f;
  bool have_q = false;
  for (const auto& t : sym.terms()) {
    switch (t.base.kind) {
      case BaseKind::LaplaceFrac:
        if (have_q && t.base.order != 2.0 * f.q) return f;
        have_q = true;
        f.q = 0.5 * t.base.order;
        f.lap.push_back(&t);
        break;
      case BaseKind::Identity: f.id.push_back(&t); break;
      case BaseKind::VectorField:
        if (t.base.field == VectorField::iX3 || t.base.field == VectorField::D0)
          f.ix3.push_back(&t);
        else if (t.base.field == VectorField::DPlus || t.base.field == VectorField::DMinus)
          return f;
        break;
      default: return f;
    }
  }
  f.ok = true;
  return f;
}

struct TailResult {
  bool conclusive = false;
  std::optional<Witness> failure;
  std::string note;
};

struct Tail {
  Group group;
  double q, A, B, c, tol;

  double ell(long long n) const { return group == Group::SU2 ? 0.5 * n : static_cast<double>(n); }
  double g(double l) const {
    if (q == 0.0) return 1.0;
    return group == Group::SU2 ? std::pow(l * l + l, q) : std::pow(l, 2.0 * q);
  }
  double h(long long n) const {
    const double l = ell(n);
    return A * g(l) - B * l - c;
  }

  // smallest n >= n0 with h(n) < -tol, given the failures form a ray in [n0, inf)
  std::optional<long long> ray_search(long long n0) const {
    if (h(n0) < -tol) return n0;
    long long lo = n0, step = 1, hi = n0 + 1;
    while (h(hi) >= -tol) {
      lo = hi;
      if (step > (1LL << 52)) return std::nullopt;
      step *= 2;
      hi = n0 + step;
    }
    while (hi - lo > 1) {
      const long long mid = lo + (hi - lo) / 2;
      (h(mid) < -tol ? hi : lo) = mid;
    }
    return hi;
  }

  // exact scan of h over [n0, n1]
  std::optional<long long> linear_search(long long n0, long long n1) const {
    for (long long n = n0; n <= n1; ++n)
      if (h(n) < -tol) return n;
    return std::nullopt;
  }
};

constexpr long long kMaxExactTail = 20'000'000;

// Decides representations n > n_scan for one time sample.
TailResult tail_decide(const Tail& T, long long n_scan) {
  TailResult res;
  const long long n0 = n_scan + 1;
  auto fail_at = [&](std::optional<long long> n) {
    res.conclusive = true;
    if (!n) return;
    if (*n > INT_MAX) {
      res.conclusive = false;
      res.note = "failure beyond integer range";
      return;
    }
    Witness w;
    w.rep = T.group == Group::SU2 ? RepIndex::su2(static_cast<int>(*n)) : RepIndex::torus(static_cast<int>(*n));
    w.eig = T.h(*n);
    res.failure = w;
  };

  const bool concave = T.q <= 0.5 && T.A >= 0.0;
  const bool nonincreasing = T.A <= 0.0 || T.q == 0.0;
  if (concave || nonincreasing) {
    // slope of h at infinity
    double slope;
    if (T.q == 0.0 || T.A == 0.0)
      slope = -T.B;
    else if (T.q < 0.5)
      slope = T.A > 0.0 ? -T.B : -std::numeric_limits<double>::infinity();
    else if (T.q == 0.5)
      slope = T.A - T.B;
    else
      slope = -std::numeric_limits<double>::infinity();  // A < 0, q > 1/2
    if (slope >= 0.0) {
      // concave with non-negative limiting slope: nondecreasing on the tail
      fail_at(T.h(n0) < -T.tol ? std::optional<long long>(n0) : std::nullopt);
      return res;
    }
    const auto n = T.ray_search(n0);
    if (!n) {
      res.note = "tail failure search exhausted";
      return res;
    }
    fail_at(n);
    return res;
  }

  // A > 0, q > 1/2: h >= b(l) = A l^{2q} - B l - c, convex on l > 0
  const double p = 2.0 * T.q;
  auto b = [&](double l) { return T.A * std::pow(l, p) - T.B * l - T.c; };
  const double l0 = T.ell(n0);
  const double lmin = std::max(l0, T.B > 0.0 ? std::pow(T.B / (T.A * p), 1.0 / (p - 1.0)) : 0.0);
  if (b(lmin) >= 0.0) {
    fail_at(std::nullopt);
    return res;
  }
  double lo = lmin, hi = std::max(2.0 * lmin, 1.0);
  while (b(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (b(mid) < 0.0 ? lo : hi) = mid;
  }
  const long long n1 = static_cast<long long>(std::ceil(T.group == Group::SU2 ? 2.0 * hi : hi));
  if (n1 - n0 > kMaxExactTail) {
    res.note = "tail interval too long for an exact scan";
    return res;
  }
  fail_at(T.linear_search(n0, n1));
  return res;
}

}  // namespace

EllipticityReport positivity_check(const Symbol& sym, const ScanOptions& opt) {
  EllipticityReport rep;
  rep.scanned_two_L = opt.two_L;
  const auto reps = scan_reps(sym.group(), opt.two_L);
  const bool diag = sym.diagonal();
  const auto mins = scan(
      sym, opt, reps, [&](const RepIndex&, const CMatrix& H, int* slot) { return min_eig(H, diag, slot); },
      &rep.spatial_nodes, &rep.time_samples);

  rep.minimum = mins.front().w;
  for (const auto& m : mins) {
    if (m.w.eig < rep.minimum.eig) rep.minimum = m.w;
    if (!rep.witness && m.w.eig < -opt.tolerance) rep.witness = m.w;
  }

  const Family fam = detect_family(sym);
  if (fam.ok) {
    rep.conclusive = true;
    const std::vector<double> times =
        sym.t_independent() ? std::vector<double>{0.0} : scan_times(opt.T, opt.time_samples);
    std::optional<Witness> tail_fail;
    for (double t : times) {
      Tail T{sym.group(), fam.q, 0.0, 0.0, 0.0, opt.tolerance};
      for (auto* term : fam.lap) T.A -= term->coef.at(t);
      double a3 = 0.0;
      for (auto* term : fam.ix3) a3 += term->coef.at(t);
      T.B = std::abs(a3);
      for (auto* term : fam.id) T.c += term->coef.at(t);
      const TailResult tr = tail_decide(T, opt.two_L);
      if (!tr.conclusive) {
        rep.conclusive = false;
        rep.note = tr.note;
      }
      if (tr.failure) {
        Witness w = *tr.failure;
        w.t = t;
        const bool better = !tail_fail || w.rep.two_ell + std::abs(w.rep.k) < tail_fail->rep.two_ell + std::abs(tail_fail->rep.k) ||
                            (w.rep == tail_fail->rep && w.eig < tail_fail->eig);
        if (better) tail_fail = w;
      }
    }
    if (!rep.witness && tail_fail) {
      rep.witness = tail_fail;
      rep.note = "failure beyond the scanned bandlimit";
    }
  } else {
    rep.note = "scan-limited";
  }

  rep.verdict = rep.witness ? Verdict::Failed : Verdict::Positive;
  rep.C = 0.0;
  return rep;
}

EllipticityReport strong_ellipticity_constant(const Symbol& sym, const ScanOptions& opt, WeightKind kind) {
  EllipticityReport rep;
  rep.scanned_two_L = opt.two_L;
  std::vector<RepIndex> reps;
  for (const auto& r : scan_reps(sym.group(), opt.two_L))
    if (std::sqrt(1.0 + laplace_eigenvalue(r)) >= opt.min_weight) reps.push_back(r);
  if (reps.empty()) throw Error("low-frequency exclusion removes every scanned representation");
  const double m = sym.cls().order;
  const bool diag = sym.diagonal();
  const auto mins = scan(
      sym, opt, reps,
      [&](const RepIndex& r, const CMatrix& H, int* slot) {
        const CMatrix w = bessel_weight(r, -0.5 * m, kind);
        return min_eig(w * H * w, diag, slot);
      },
      &rep.spatial_nodes, &rep.time_samples);

  rep.minimum = mins.front().w;
  for (const auto& mm : mins) {
    if (mm.w.eig < rep.minimum.eig) rep.minimum = mm.w;
    if (!rep.witness && mm.w.eig <= opt.tolerance) rep.witness = mm.w;
  }
  rep.C = std::max(0.0, rep.minimum.eig);
  rep.verdict = rep.C > opt.tolerance ? Verdict::StronglyElliptic : Verdict::Failed;
  rep.conclusive = false;
  rep.note = "scan-limited";
  if (opt.min_weight > 0.0) rep.note += "; representations with <xi> below min_weight excluded";
  return rep;
}

GardingBound garding_order_bound(double rho, double delta, int kappa) {
  if (!(rho > 0.0 && rho <= 1.0)) throw Error("rho must lie in (0, 1]");
  if (!(delta >= 0.0)) throw Error("delta must be non-negative");
  if (kappa < 1) throw Error("kappa must be a positive integer");
  GardingBound g;
  g.value = rho / kappa - (2.0 - 1.0 / kappa) * delta;
  g.valid = delta < rho / (2.0 * kappa - 1.0);
  return g;
}

DriftCriterion su2_drift_criterion(const Coefficient& a, const Coefficient& a3, double m, const ScanOptions& opt) {
  if (!(m >= 0.0 && m <= 1.0)) throw Error("drift criterion needs 0 <= m <= 1");
  const bool t_const = a.profile.constant() && a3.profile.constant();
  const bool x_const = a.spatial.constant() && a3.spatial.constant();
  const std::vector<double> times = t_const ? std::vector<double>{0.0} : scan_times(opt.T, opt.time_samples);
  std::vector<Angles> nodes{Angles{}};
  if (!x_const) {
    const GridPtr g = cached_grid(Group::SU2, opt.x_two_L);
    nodes.clear();
    for (std::size_t n = 0; n < g->node_count(); ++n) nodes.push_back(g->node(n));
  }

  DriftCriterion out;
  bool first = true;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (double t : times) {
      const double av = a.at(t, nodes[n]), a3v = a3.at(t, nodes[n]);
      double v;
      if (m == 1.0) {
        v = std::abs(a3v) + av;
      } else {
        v = std::max(std::abs(a3v) > 1e-14 ? std::abs(a3v) : 0.0, av);
      }
      if (first || v > out.worst) {
        out.worst = v;
        out.t = t;
        out.x_node = n;
        first = false;
      }
    }
  }
  if (m == 1.0) {
    out.holds = out.worst <= 0.0;
    if (!out.holds) out.reason = "|a3| + a > 0";
  } else {
    double max_a3 = 0.0, max_a = -std::numeric_limits<double>::infinity();
    for (const auto& x : nodes)
      for (double t : times) {
        max_a3 = std::max(max_a3, std::abs(a3.at(t, x)));
        max_a = std::max(max_a, a.at(t, x));
      }
    out.holds = max_a3 <= 1e-14 && max_a <= 0.0;
    if (max_a3 > 1e-14)
      out.reason = "a3 is not identically zero";
    else if (max_a > 0.0)
      out.reason = "a > 0";
  }
  return out;
}

Classification classify_problem(const Symbol& sym, const ScanOptions& opt, WeightKind kind) {
  Classification c;
  c.m = sym.cls().order;
  ScanOptions strict = opt;
  strict.min_weight = 0.0;
  c.ellipticity = strong_ellipticity_constant(sym, strict, kind);
  if (opt.min_weight > 0.0) c.ellipticity_excluded = strong_ellipticity_constant(sym, opt, kind);
  c.positivity = positivity_check(sym, strict);

  const auto& k = sym.cls();
  GardingBound g;
  std::string garding_error;
  try {
    g = garding_order_bound(k.rho, k.delta, k.kappa);
  } catch (const Error& e) {
    garding_error = e.what();
  }
  c.varkappa = g.value;
  c.garding_valid = g.valid;

  if (c.ellipticity.verdict == Verdict::StronglyElliptic && c.m > 0.0) {
    c.kind = ProblemCase::CaseI;
    c.C = c.ellipticity.C;
    return c;
  }
  if (!c.positivity.passed()) {
    c.reason = "positivity failed";
  } else if (!garding_error.empty()) {
    c.reason = "invalid (rho, delta, kappa): " + garding_error;
  } else if (!g.valid) {
    c.reason = "(rho, delta, kappa) outside the sharp Garding range";
  } else if (c.m < 0.0 || c.m > g.value) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "order m = %g outside [0, %g]", c.m, g.value);
    c.reason = buf;
  } else {
    c.kind = ProblemCase::CaseII;
  }
  return c;
}

}  // namespace liediff
