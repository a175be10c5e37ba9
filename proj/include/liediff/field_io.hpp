// JSON layout for spectral and grid fields.
//
//   {"group": "su2", "two_L": n,
//    "coeffs": [{"two_ell": n, "re": [[...]], "im": [[...]]}, ...]}
//   {"group": "torus", "L": n, "coeffs": [{"k": n, "re": [[x]], "im": [[y]]}, ...]}
//   {"group": ..., "two_L" | "L": n, "re": [...], "im": [...]}   (grid samples)
#pragma once

#include <string>

#include "json.hpp"
#include "liediff/harmonic.hpp"

namespace liediff {

nlohmann::json spectral_to_json(const SpectralField& F);
SpectralField spectral_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const GridField& f);
GridField grid_from_json(const nlohmann::json& j);

SpectralField read_spectral_file(const std::string& path);
void write_spectral_file(const SpectralField& F, const std::string& path);

}  // namespace liediff
