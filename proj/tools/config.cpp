#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "liediff/field_io.hpp"

namespace lie_diffuse {

using nlohmann::json;
using namespace liediff;

namespace {

const std::set<std::string> kTopKeys = {"command", "group", "two_L", "operator", "u0", "forcing", "T", "dt",
                                        "scheme", "s", "norm", "check", "time_order", "coefficients", "data",
                                        "gamma", "equivalence_tol", "snapshots", "seed", "out"};
const std::set<std::string> kCheckKeys = {"two_L", "time_samples", "x_two_L", "min_weight", "kind"};
const std::set<std::string> kForcingKeys = {"shape", "profile", "scale"};
const std::set<std::string> kCommands = {"check", "evolve", "reduce", "transform-selftest"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

WeightKind kind_of(const std::string& s, const std::string& key) {
  try {
    return weight_kind_from_string(s);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void validate_field_spec(const json& spec, const std::string& key) {
  if (spec.is_object()) {
    check_keys(spec, {"file"}, key);
    if (!spec.contains("file") || !spec["file"].is_string()) throw ConfigError(key + ": expected {\"file\": path}");
    return;
  }
  if (!spec.is_string()) throw ConfigError(key + ": field spec must be a string or {\"file\": path}");
}

void validate_operator(const std::string& text, Group g, int band, const std::string& key) {
  try {
    (void)make_symbol(text, g, std::min(band, 2));
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

double parse_ell(const std::string& tok) {
  const auto slash = tok.find('/');
  std::size_t used = 0;
  try {
    if (slash == std::string::npos) {
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw ConfigError("bad number '" + tok + "'");
      return v;
    }
    const double a = std::stod(tok.substr(0, slash), &used);
    const double b = std::stod(tok.substr(slash + 1));
    return a / b;
  } catch (const std::logic_error&) {
    throw ConfigError("bad number '" + tok + "'");
  }
}

// uniform in [-1, 1) from raw generator bits, identical on every platform
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0; }

}  // namespace

RunConfig parse_config(const json& j, const std::string& base_dir, const Overrides& o) {
  check_keys(j, kTopKeys, "config");
  RunConfig c;
  c.base_dir = base_dir;
  const std::string top = "config";

  if (j.contains("command")) c.command = get<std::string>(j, "command", top);
  if (o.command) c.command = *o.command;
  if (!kCommands.count(c.command)) throw ConfigError("unknown command '" + c.command + "'");

  if (!j.contains("group")) throw ConfigError("missing required key 'group'");
  try {
    c.group = group_from_string(get<std::string>(j, "group", top));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("group: ") + e.what());
  }
  if (j.contains("two_L")) c.two_L = get<int>(j, "two_L", top);
  if (o.two_L) c.two_L = *o.two_L;
  if (c.two_L < 0) throw ConfigError("two_L must be >= 0");

  if (j.contains("T")) c.T = get<double>(j, "T", top);
  if (!(c.T > 0.0)) throw ConfigError("T must be > 0");
  if (j.contains("dt")) c.dt = get<double>(j, "dt", top);
  if (o.dt) c.dt = *o.dt;
  if (!(c.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (c.dt > c.T) throw ConfigError("dt must not exceed T");
  std::string scheme = j.contains("scheme") ? get<std::string>(j, "scheme", top) : "auto";
  if (o.scheme) scheme = *o.scheme;
  try {
    c.scheme = scheme_from_string(scheme);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("s")) c.s = get<double>(j, "s", top);
  if (j.contains("norm")) c.norm = kind_of(get<std::string>(j, "norm", top), "norm");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", top);
  if (o.seed) c.seed = *o.seed;
  if (j.contains("out")) c.out = get<std::string>(j, "out", top);
  if (o.out) c.out = *o.out;

  c.check.T = c.T;
  if (j.contains("check")) {
    const json& k = j["check"];
    check_keys(k, kCheckKeys, "check");
    if (k.contains("two_L")) c.check.two_L = get<int>(k, "two_L", "check");
    if (k.contains("time_samples")) c.check.time_samples = get<int>(k, "time_samples", "check");
    if (k.contains("x_two_L")) c.check.x_two_L = get<int>(k, "x_two_L", "check");
    if (k.contains("min_weight")) c.check.min_weight = get<double>(k, "min_weight", "check");
    if (k.contains("kind")) c.check_kind = kind_of(get<std::string>(k, "kind", "check"), "check.kind");
    if (c.check.two_L < 0 || c.check.time_samples < 1 || c.check.x_two_L < 0)
      throw ConfigError("check: two_L and x_two_L must be >= 0 and time_samples >= 1");
  }

  if (j.contains("operator")) {
    c.op = get<std::string>(j, "operator", top);
    validate_operator(*c.op, c.group, c.two_L, "operator");
  }
  if (j.contains("u0")) {
    validate_field_spec(j["u0"], "u0");
    c.u0 = j["u0"];
  }
  if (j.contains("forcing") && !j["forcing"].is_null()) {
    const json& f = j["forcing"];
    const json list = f.is_array() ? f : json::array({f});
    for (const auto& item : list) {
      check_keys(item, kForcingKeys, "forcing");
      if (!item.contains("shape")) throw ConfigError("forcing: missing 'shape'");
      validate_field_spec(item["shape"], "forcing.shape");
      ForcingSpec fs;
      fs.shape = item["shape"];
      if (item.contains("profile")) fs.profile = get<std::string>(item, "profile", "forcing");
      if (item.contains("scale")) fs.scale = get<double>(item, "scale", "forcing");
      try {
        (void)TimeProfile::named(fs.profile);
      } catch (const Error& e) {
        throw ConfigError(std::string("forcing: ") + e.what());
      }
      c.forcing.push_back(std::move(fs));
    }
  }

  if (j.contains("time_order")) c.time_order = get<int>(j, "time_order", top);
  if (j.contains("coefficients")) c.coefficients = get<std::vector<std::string>>(j, "coefficients", top);
  if (j.contains("data")) {
    if (!j["data"].is_array()) throw ConfigError("data must be a list of field specs");
    for (const auto& d : j["data"]) {
      validate_field_spec(d, "data");
      c.data.push_back(d);
    }
  }
  if (j.contains("gamma")) c.gamma = kind_of(get<std::string>(j, "gamma", top), "gamma");
  if (j.contains("equivalence_tol")) c.equivalence_tol = get<double>(j, "equivalence_tol", top);
  for (std::size_t k = 0; k < c.coefficients.size(); ++k)
    validate_operator(c.coefficients[k], c.group, c.two_L, "coefficients[" + std::to_string(k) + "]");
  if (j.contains("snapshots")) c.snapshots = get<std::vector<double>>(j, "snapshots", top);
  for (double t : c.snapshots)
    if (t < 0.0 || t > c.T) throw ConfigError("snapshot times must lie in [0, T]");

  // command-specific requirements
  if (c.command == "check" || c.command == "evolve")
    if (!c.op) throw ConfigError("command '" + c.command + "' needs 'operator'");
  if (c.command == "evolve" && !c.u0) throw ConfigError("command 'evolve' needs 'u0'");
  if (c.command == "reduce") {
    if (c.time_order < 2) throw ConfigError("command 'reduce' needs 'time_order' >= 2");
    if (c.coefficients.size() != static_cast<std::size_t>(c.time_order))
      throw ConfigError("'coefficients' must list time_order operators a_m, ..., a_1");
    if (c.data.size() != static_cast<std::size_t>(c.time_order))
      throw ConfigError("'data' must list time_order fields g_1, ..., g_m");
  }

  // referenced files must exist
  auto check_file = [&](const json& spec, const std::string& key) {
    if (!spec.is_object()) return;
    const auto p = std::filesystem::path(base_dir) / spec["file"].get<std::string>();
    if (!std::filesystem::exists(p)) throw ConfigError(key + ": file '" + p.string() + "' does not exist");
  };
  if (c.u0) check_file(*c.u0, "u0");
  for (const auto& f : c.forcing) check_file(f.shape, "forcing.shape");
  for (const auto& d : c.data) check_file(d, "data");
  return c;
}

RunConfig parse_config_file(const std::string& path, const Overrides& o) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string(), o);
}

RunConfig default_config(const Overrides& o) {
  json j = {{"group", "su2"}, {"command", "transform-selftest"}};
  return parse_config(j, ".", o);
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["group"] = to_string(group);
  j["two_L"] = two_L;
  if (op) j["operator"] = *op;
  if (u0) j["u0"] = *u0;
  if (!forcing.empty()) {
    json f = json::array();
    for (const auto& p : forcing) f.push_back({{"shape", p.shape}, {"profile", p.profile}, {"scale", p.scale}});
    j["forcing"] = f;
  }
  j["T"] = T;
  j["dt"] = dt;
  j["scheme"] = liediff::to_string(scheme);
  j["s"] = s;
  j["norm"] = liediff::to_string(norm);
  j["check"] = {{"two_L", check.two_L},
                {"time_samples", check.time_samples},
                {"x_two_L", check.x_two_L},
                {"min_weight", check.min_weight},
                {"kind", liediff::to_string(check_kind)}};
  if (time_order > 0) {
    j["time_order"] = time_order;
    j["coefficients"] = coefficients;
    j["data"] = data;
    j["gamma"] = liediff::to_string(gamma);
    j["equivalence_tol"] = equivalence_tol;
  }
  if (!snapshots.empty()) j["snapshots"] = snapshots;
  j["seed"] = seed;
  return j;
}

SpectralField make_field(const json& spec, const RunConfig& cfg) {
  const Group g = cfg.group;
  const int band = cfg.two_L;
  if (spec.is_object()) {
    const auto p = std::filesystem::path(cfg.base_dir) / spec["file"].get<std::string>();
    SpectralField F;
    try {
      F = read_spectral_file(p.string());
    } catch (const Error& e) {
      throw ConfigError("field file '" + p.string() + "': " + e.what());
    }
    if (F.group() != g) throw ConfigError("field file '" + p.string() + "' belongs to another group");
    return F.with_band(band);
  }
  const std::string text = spec.get<std::string>();
  std::istringstream in(text);
  std::string head;
  in >> head;
  std::vector<std::string> args;
  for (std::string tok; in >> tok;) args.push_back(tok);

  SpectralField F(g, band);
  if (head == "zero" && args.empty()) return F;
  if (head == "delta" && args.empty()) {
    // bandlimited delta at the identity, unit L2 norm
    double n2 = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const int d = F.rep(i).dim();
      F[i] = CMatrix::Identity(d, d);
      n2 += static_cast<double>(d) * d;
    }
    F *= 1.0 / std::sqrt(n2);
    return F;
  }
  if (head == "xi") {
    if (g == Group::SU2) {
      if (args.size() != 3) throw ConfigError("field spec '" + text + "': expected 'xi l i j'");
      const double l = parse_ell(args[0]);
      const double twice = 2.0 * l;
      if (twice < 0.0 || std::abs(twice - std::round(twice)) > 1e-12)
        throw ConfigError("field spec '" + text + "': l must be a non-negative half-integer");
      const int two_ell = static_cast<int>(std::lround(twice));
      if (two_ell > band) throw ConfigError("field spec '" + text + "': l exceeds the bandlimit");
      int r = 0, cc = 0;
      try {
        r = std::stoi(args[1]);
        cc = std::stoi(args[2]);
      } catch (const std::logic_error&) {
        throw ConfigError("field spec '" + text + "': bad index");
      }
      if (r < 0 || cc < 0 || r > two_ell || cc > two_ell)
        throw ConfigError("field spec '" + text + "': indices must lie in [0, 2l]");
      return matrix_coefficient_field(g, band, RepIndex::su2(two_ell), r, cc);
    }
    if (args.size() != 1) throw ConfigError("field spec '" + text + "': expected 'xi k'");
    int k = 0;
    try {
      k = std::stoi(args[0]);
    } catch (const std::logic_error&) {
      throw ConfigError("field spec '" + text + "': bad index");
    }
    if (std::abs(k) > band) throw ConfigError("field spec '" + text + "': k exceeds the bandlimit");
    return matrix_coefficient_field(g, band, RepIndex::torus(k), 0, 0);
  }
  if (head == "random" && args.size() <= 1) {
    std::uint64_t seed = cfg.seed;
    if (args.size() == 1) {
      try {
        seed = std::stoull(args[0]);
      } catch (const std::logic_error&) {
        throw ConfigError("field spec '" + text + "': bad seed");
      }
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < F.size(); ++i)
      for (Eigen::Index a = 0; a < F[i].rows(); ++a)
        for (Eigen::Index b = 0; b < F[i].cols(); ++b) {
          const double re = unit(rng);
          F[i](a, b) = cplx(re, unit(rng));
        }
    return F;
  }
  throw ConfigError("unknown field spec '" + text + "'");
}

Forcing make_forcing(const RunConfig& cfg) {
  Forcing f;
  for (const auto& p : cfg.forcing) {
    SpectralField shape = make_field(p.shape, cfg);
    shape *= p.scale;
    f.parts.push_back({std::move(shape), TimeProfile::named(p.profile)});
  }
  return f;
}

}  // namespace lie_diffuse
