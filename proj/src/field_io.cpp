#include "liediff/field_io.hpp"

#include <fstream>

namespace liediff {
namespace {

const char* band_key(Group g) { return g == Group::SU2 ? "two_L" : "L"; }

int read_band(const nlohmann::json& j, Group g) {
  if (!j.contains(band_key(g))) throw Error(std::string("field JSON lacks '") + band_key(g) + "'");
  const int band = j.at(band_key(g)).get<int>();
  if (band < 0) throw Error("field JSON has a negative bandlimit");
  return band;
}

}  // namespace

nlohmann::json spectral_to_json(const SpectralField& F) {
  nlohmann::json j;
  j["group"] = to_string(F.group());
  j[band_key(F.group())] = F.band();
  auto coeffs = nlohmann::json::array();
  for (std::size_t i = 0; i < F.size(); ++i) {
    const RepIndex& r = F.rep(i);
    nlohmann::json c;
    if (F.group() == Group::SU2)
      c["two_ell"] = r.two_ell;
    else
      c["k"] = r.k;
    auto re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int a = 0; a < r.dim(); ++a) {
      auto rr = nlohmann::json::array(), ii = nlohmann::json::array();
      for (int b = 0; b < r.dim(); ++b) {
        rr.push_back(F[i](a, b).real());
        ii.push_back(F[i](a, b).imag());
      }
      re.push_back(std::move(rr));
      im.push_back(std::move(ii));
    }
    c["re"] = std::move(re);
    c["im"] = std::move(im);
    coeffs.push_back(std::move(c));
  }
  j["coeffs"] = std::move(coeffs);
  return j;
}

SpectralField spectral_from_json(const nlohmann::json& j) {
  try {
    const Group g = group_from_string(j.at("group").get<std::string>());
    const int band = read_band(j, g);
    SpectralField F(g, band);
    for (const auto& c : j.at("coeffs")) {
      const RepIndex r = g == Group::SU2 ? RepIndex::su2(c.at("two_ell").get<int>())
                                         : RepIndex::torus(c.at("k").get<int>());
      CMatrix& M = F.at(r);
      const auto& re = c.at("re");
      const auto& im = c.at("im");
      if (re.size() != std::size_t(r.dim()) || im.size() != std::size_t(r.dim()))
        throw Error("coefficient matrix shape does not match the representation dimension");
      for (int a = 0; a < r.dim(); ++a) {
        if (re[a].size() != std::size_t(r.dim()) || im[a].size() != std::size_t(r.dim()))
          throw Error("coefficient matrix shape does not match the representation dimension");
        for (int b = 0; b < r.dim(); ++b) M(a, b) = cplx(re[a][b].get<double>(), im[a][b].get<double>());
      }
    }
    return F;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed spectral field JSON: ") + e.what());
  }
}

nlohmann::json grid_to_json(const GridField& f) {
  nlohmann::json j;
  j["group"] = to_string(f.grid->group());
  j[band_key(f.grid->group())] = f.grid->band();
  auto re = nlohmann::json::array(), im = nlohmann::json::array();
  for (const auto& v : f.values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

GridField grid_from_json(const nlohmann::json& j) {
  try {
    const Group g = group_from_string(j.at("group").get<std::string>());
    auto grid = quadrature_grid(g, read_band(j, g));
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != grid->node_count() || im.size() != grid->node_count())
      throw Error("grid field JSON length does not match node count");
    GridField f(grid);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = cplx(re[i].get<double>(), im[i].get<double>());
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed grid field JSON: ") + e.what());
  }
}

SpectralField read_spectral_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse '" + path + "': " + e.what());
  }
  return spectral_from_json(j);
}

void write_spectral_file(const SpectralField& F, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << spectral_to_json(F).dump() << '\n';
}

}  // namespace liediff
