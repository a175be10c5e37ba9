#include <cmath>
#include <numbers>
#include <utility>

#include "liediff/harmonic.hpp"

namespace liediff {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw Error("Gauss-Legendre needs at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // returns P_n(x) and P_n'(x)
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

GridSpec::GridSpec(Group group, int band) : group_(group), band_(band) {
  if (band < 0) throw Error("bandlimit must be non-negative");
  const double two_pi = 2.0 * std::numbers::pi;
  const std::size_t n_uniform = 2 * static_cast<std::size_t>(band) + 1;
  if (group == Group::Torus1) {
    for (std::size_t a = 0; a < n_uniform; ++a) phi_.push_back(two_pi * a / n_uniform);
    theta_ = {0.0};
    psi_ = {0.0};
    w_theta_ = {1.0};
    weights_.assign(n_uniform, 1.0 / n_uniform);
    return;
  }

  for (std::size_t a = 0; a < n_uniform; ++a) phi_.push_back(two_pi * a / n_uniform);
  for (std::size_t c = 0; c < n_uniform; ++c) psi_.push_back(2.0 * two_pi * c / n_uniform);
  std::vector<double> x, w;
  gauss_legendre(band + 1, x, w);
  // theta ascending <=> cos(theta) descending
  long double w_sum = 0.0L;
  for (double wi : w) w_sum += wi;
  for (int b = band; b >= 0; --b) {
    theta_.push_back(std::acos(x[b]));
    w_theta_.push_back(static_cast<double>(w[b] / w_sum));
  }
  const double w_uniform = 1.0 / (static_cast<double>(n_uniform) * n_uniform);
  weights_.reserve(n_uniform * theta_.size() * n_uniform);
  for (std::size_t a = 0; a < n_uniform; ++a)
    for (std::size_t b = 0; b < theta_.size(); ++b)
      for (std::size_t c = 0; c < n_uniform; ++c) weights_.push_back(w_uniform * w_theta_[b]);

  d_tables_.reserve(theta_.size());
  for (double th : theta_) d_tables_.push_back(wigner_d_all(band, th));
}

Angles GridSpec::node(std::size_t i) const {
  const std::size_t c = i % psi_.size();
  const std::size_t b = (i / psi_.size()) % theta_.size();
  const std::size_t a = i / (psi_.size() * theta_.size());
  return Angles{phi_[a], theta_[b], psi_[c]};
}

GridPtr quadrature_grid(Group group, int band) {
  return std::make_shared<const GridSpec>(group, band);
}

}  // namespace liediff
