#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "risrsma/common.hpp"

namespace risrsma {

struct PathLoss {
  double intercept_db = 0.0;
  double slope_db = 0.0;  // per decade of distance
};

enum class FadingModel {
  kRician,    // Rician on RIS links, Rayleigh on direct links
  kRayleigh,  // Rayleigh everywhere
  kLos,       // deterministic unit-modulus coefficients everywhere
};

struct FadingConfig {
  FadingModel model = FadingModel::kRician;
  double rician_k_db = 3.0;
  bool reciprocal = false;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Placement {
  Point dc{0.0, 0.0};
  Point ris{75.0, 30.0};
  std::vector<Point> pair_centers;
  double radius = 10.0;
};

struct AoConfig {
  int i_max = 50;
  double epsilon = 1.0;  // bits, absolute
};

struct SrocrConfig {
  double delta0 = 0.1;
  double delta_min = 1e-4;
  double chi_tol = 1e-6;  // relative change of successive objectives
  int q_max = 50;
  double rank_tol = 1e-3;
  int randomization_rounds = 1000;
};

/// All physical and algorithmic parameters. Powers are held in watts.
struct ScenarioConfig {
  int M = 0;
  int N = 30;
  double T = 1.0;
  double B = 1e5;
  double P_max = dbm_to_watt(34.0);
  PerRsu<double> P_rsu_max;
  PerRsu<double> F_max;
  PerRsu<double> f_bits;
  double kappa = 1e-28;
  double sigma2 = dbm_to_watt(-8.0);
  double rho = 0.5;
  PerRsu<double> nleh_a;
  PerRsu<double> nleh_b;
  PerRsu<double> nleh_Lambda;
  PathLoss ris_link{35.6, 22.0};
  PathLoss direct_link{32.6, 36.7};
  bool pathloss_overridden = false;
  FadingConfig fading;
  Placement positions;
  std::uint64_t seed = 1;
  AoConfig ao;
  SrocrConfig srocr;
  double solver_tol = 1e-8;
  int init_t0_grid = 200;
  std::vector<std::string> defaulted;  // keys filled from defaults on load

  std::size_t pairs() const { return static_cast<std::size_t>(M); }
  void validate() const;
};

inline constexpr double kDefaultRsuPowerDbm = 20.0;
inline constexpr double kDefaultFmax = 1.8e7;
inline constexpr double kDefaultCyclesPerBit = 1000.0;
inline constexpr double kDefaultNlehA = 150.0;
inline constexpr double kDefaultNlehB = 0.014;
inline constexpr double kDefaultNlehLambda = 0.024;

namespace detail {

inline void check_positive_all(const PerRsu<double>& v, const char* name) {
  for (const auto& pr : v)
    for (double x : pr)
      if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string(name) + " must be positive");
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
  if (M < 1) throw ConfigError("M must be at least 1");
  if (N < 0) throw ConfigError("N must be nonnegative");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (!(B > 0.0)) throw ConfigError("B must be positive");
  if (!(P_max > 0.0)) throw ConfigError("P_max must be positive");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho out of [0,1]");
  for (const auto* v : {&P_rsu_max, &F_max, &f_bits, &nleh_a, &nleh_b, &nleh_Lambda})
    if (v->size() != pairs()) throw ConfigError("per-RSU arrays must have M rows");
  detail::check_positive_all(P_rsu_max, "P_rsu_max");
  detail::check_positive_all(F_max, "F_max");
  detail::check_positive_all(f_bits, "f_bits");
  detail::check_positive_all(nleh_a, "nleh.a");
  detail::check_positive_all(nleh_b, "nleh.b");
  detail::check_positive_all(nleh_Lambda, "nleh.Lambda");
  if (positions.pair_centers.size() != pairs()) throw ConfigError("positions.pair_centers must have M entries");
  if (!(positions.radius >= 0.0)) throw ConfigError("positions.radius must be nonnegative");
  if (ao.i_max < 1) throw ConfigError("ao.i_max must be at least 1");
  if (!(ao.epsilon > 0.0)) throw ConfigError("ao.epsilon must be positive");
  if (!(srocr.delta0 > 0.0 && srocr.delta_min > 0.0 && srocr.delta_min <= srocr.delta0))
    throw ConfigError("srocr deltas must satisfy 0 < delta_min <= delta0");
  if (srocr.q_max < 1) throw ConfigError("srocr.q_max must be at least 1");
  if (!(solver_tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (init_t0_grid < 2) throw ConfigError("init.t0_grid must be at least 2");
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k)) throw ConfigError("unknown key '" + where + (where.empty() ? "" : ".") + k + "'");
}

inline double get_number(const json& j, const std::string& name) {
  if (!j.is_number()) throw ConfigError(name + " must be a number");
  return j.get<double>();
}

/// Accepts a scalar (broadcast to every RSU) or an M x 2 nested array.
inline PerRsu<double> get_per_rsu(const json& j, std::size_t pairs, const std::string& name, bool dbm) {
  auto conv = [&](const json& x) {
    const double v = get_number(x, name);
    return dbm ? dbm_to_watt(v) : v;
  };
  if (j.is_number()) return make_per_rsu(pairs, conv(j));
  if (!j.is_array() || j.size() != pairs) throw ConfigError(name + " must be a number or an M x 2 array");
  PerRsu<double> out(pairs);
  for (std::size_t m = 0; m < pairs; ++m) {
    if (!j[m].is_array() || j[m].size() != 2) throw ConfigError(name + " rows must have two entries");
    out[m] = {conv(j[m][0]), conv(j[m][1])};
  }
  return out;
}

inline Point get_point(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(name + " must be [x, y]");
  return {get_number(j[0], name), get_number(j[1], name)};
}

}  // namespace detail

/// Parses a JSON scenario description. Only M is mandatory; every other key
/// falls back to the defaults listed in README.md. Powers are read in dBm.
inline ScenarioConfig load_scenario(const std::string& text) {
  using detail::json;
  json root;
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (blank) {
    root = json::object();
  } else {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("parse failure: ") + e.what());
    }
  }
  detail::reject_unknown(root,
                         {"M", "N", "T", "B", "P_max_dbm", "P_rsu_max_dbm", "F_max", "f_bits", "kappa",
                          "sigma2_dbm", "rho", "nleh", "pathloss", "fading", "positions", "seed", "ao", "srocr",
                          "solver", "init", "label"},
                         "");
  ScenarioConfig cfg;
  if (!root.contains("M")) throw ConfigError("missing required field M");
  if (!root["M"].is_number_integer()) throw ConfigError("M must be an integer");
  cfg.M = root["M"].get<int>();
  if (cfg.M < 1) throw ConfigError("M must be at least 1");
  const std::size_t pairs = cfg.pairs();

  auto number_or_default = [&](const char* key, double& dst) {
    if (root.contains(key))
      dst = detail::get_number(root[key], key);
    else
      cfg.defaulted.emplace_back(key);
  };
  if (root.contains("N")) {
    if (!root["N"].is_number_integer()) throw ConfigError("N must be an integer");
    cfg.N = root["N"].get<int>();
  } else {
    cfg.defaulted.emplace_back("N");
  }
  number_or_default("T", cfg.T);
  number_or_default("B", cfg.B);
  number_or_default("kappa", cfg.kappa);
  number_or_default("rho", cfg.rho);
  if (root.contains("P_max_dbm"))
    cfg.P_max = dbm_to_watt(detail::get_number(root["P_max_dbm"], "P_max_dbm"));
  else
    cfg.defaulted.emplace_back("P_max_dbm");
  if (root.contains("sigma2_dbm"))
    cfg.sigma2 = dbm_to_watt(detail::get_number(root["sigma2_dbm"], "sigma2_dbm"));
  else
    cfg.defaulted.emplace_back("sigma2_dbm");

  auto per_rsu = [&](const char* key, double def, bool dbm) {
    if (root.contains(key)) return detail::get_per_rsu(root[key], pairs, key, dbm);
    cfg.defaulted.emplace_back(key);
    return make_per_rsu(pairs, def);
  };
  cfg.P_rsu_max = per_rsu("P_rsu_max_dbm", dbm_to_watt(kDefaultRsuPowerDbm), true);
  cfg.F_max = per_rsu("F_max", kDefaultFmax, false);
  cfg.f_bits = per_rsu("f_bits", kDefaultCyclesPerBit, false);

  cfg.nleh_a = make_per_rsu(pairs, kDefaultNlehA);
  cfg.nleh_b = make_per_rsu(pairs, kDefaultNlehB);
  cfg.nleh_Lambda = make_per_rsu(pairs, kDefaultNlehLambda);
  if (root.contains("nleh")) {
    const auto& n = root["nleh"];
    detail::reject_unknown(n, {"a", "b_dbm", "Lambda_dbm"}, "nleh");
    if (n.contains("a")) cfg.nleh_a = detail::get_per_rsu(n["a"], pairs, "nleh.a", false);
    if (n.contains("b_dbm")) cfg.nleh_b = detail::get_per_rsu(n["b_dbm"], pairs, "nleh.b_dbm", true);
    if (n.contains("Lambda_dbm"))
      cfg.nleh_Lambda = detail::get_per_rsu(n["Lambda_dbm"], pairs, "nleh.Lambda_dbm", true);
  } else {
    cfg.defaulted.emplace_back("nleh");
  }

  if (root.contains("pathloss")) {
    const auto& pl = root["pathloss"];
    detail::reject_unknown(pl, {"ris_link", "direct_link"}, "pathloss");
    auto read = [&](const char* key, PathLoss& dst) {
      if (!pl.contains(key)) return;
      const auto& e = pl[key];
      detail::reject_unknown(e, {"intercept_db", "slope_db"}, std::string("pathloss.") + key);
      if (e.contains("intercept_db")) dst.intercept_db = detail::get_number(e["intercept_db"], "intercept_db");
      if (e.contains("slope_db")) dst.slope_db = detail::get_number(e["slope_db"], "slope_db");
    };
    const PathLoss ris0 = cfg.ris_link, dir0 = cfg.direct_link;
    read("ris_link", cfg.ris_link);
    read("direct_link", cfg.direct_link);
    cfg.pathloss_overridden = cfg.ris_link.intercept_db != ris0.intercept_db ||
                              cfg.ris_link.slope_db != ris0.slope_db ||
                              cfg.direct_link.intercept_db != dir0.intercept_db ||
                              cfg.direct_link.slope_db != dir0.slope_db;
  } else {
    cfg.defaulted.emplace_back("pathloss");
  }

  if (root.contains("fading")) {
    const auto& f = root["fading"];
    detail::reject_unknown(f, {"model", "rician_k_db", "reciprocal"}, "fading");
    if (f.contains("model")) {
      const auto tag = f["model"].get<std::string>();
      if (tag == "rician")
        cfg.fading.model = FadingModel::kRician;
      else if (tag == "rayleigh")
        cfg.fading.model = FadingModel::kRayleigh;
      else if (tag == "los")
        cfg.fading.model = FadingModel::kLos;
      else
        throw ConfigError("fading.model must be one of rician, rayleigh, los");
    }
    if (f.contains("rician_k_db")) cfg.fading.rician_k_db = detail::get_number(f["rician_k_db"], "rician_k_db");
    if (f.contains("reciprocal")) cfg.fading.reciprocal = f["reciprocal"].get<bool>();
  } else {
    cfg.defaulted.emplace_back("fading");
  }

  bool centers_given = false;
  if (root.contains("positions")) {
    const auto& p = root["positions"];
    detail::reject_unknown(p, {"dc", "ris", "pair_centers", "radius"}, "positions");
    if (p.contains("dc")) cfg.positions.dc = detail::get_point(p["dc"], "positions.dc");
    if (p.contains("ris")) cfg.positions.ris = detail::get_point(p["ris"], "positions.ris");
    if (p.contains("radius")) cfg.positions.radius = detail::get_number(p["radius"], "positions.radius");
    if (p.contains("pair_centers")) {
      const auto& pc = p["pair_centers"];
      if (!pc.is_array() || pc.size() != pairs) throw ConfigError("positions.pair_centers must have M entries");
      for (const auto& c : pc) cfg.positions.pair_centers.push_back(detail::get_point(c, "pair_centers"));
      centers_given = true;
    }
  } else {
    cfg.defaulted.emplace_back("positions");
  }
  if (!centers_given)
    for (std::size_t m = 0; m < pairs; ++m) cfg.positions.pair_centers.push_back({65.0 + 20.0 * m, 10.0});

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("ao")) {
    const auto& a = root["ao"];
    detail::reject_unknown(a, {"i_max", "epsilon"}, "ao");
    if (a.contains("i_max")) cfg.ao.i_max = a["i_max"].get<int>();
    if (a.contains("epsilon")) cfg.ao.epsilon = detail::get_number(a["epsilon"], "ao.epsilon");
  }
  if (root.contains("srocr")) {
    const auto& s = root["srocr"];
    detail::reject_unknown(s, {"delta0", "delta_min", "chi_tol", "q_max", "rank_tol", "randomization_rounds"},
                           "srocr");
    if (s.contains("delta0")) cfg.srocr.delta0 = detail::get_number(s["delta0"], "srocr.delta0");
    if (s.contains("delta_min")) cfg.srocr.delta_min = detail::get_number(s["delta_min"], "srocr.delta_min");
    if (s.contains("chi_tol")) cfg.srocr.chi_tol = detail::get_number(s["chi_tol"], "srocr.chi_tol");
    if (s.contains("q_max")) cfg.srocr.q_max = s["q_max"].get<int>();
    if (s.contains("rank_tol")) cfg.srocr.rank_tol = detail::get_number(s["rank_tol"], "srocr.rank_tol");
    if (s.contains("randomization_rounds")) cfg.srocr.randomization_rounds = s["randomization_rounds"].get<int>();
  }
  if (root.contains("solver")) {
    const auto& s = root["solver"];
    detail::reject_unknown(s, {"tol"}, "solver");
    if (s.contains("tol")) cfg.solver_tol = detail::get_number(s["tol"], "solver.tol");
  }
  if (root.contains("init")) {
    const auto& s = root["init"];
    detail::reject_unknown(s, {"t0_grid"}, "init");
    if (s.contains("t0_grid")) cfg.init_t0_grid = s["t0_grid"].get<int>();
  }
  cfg.validate();
  return cfg;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

/// Minimal valid configuration text with M pairs and everything else default.
inline ScenarioConfig default_scenario(int pairs = 2) {
  return load_scenario("{\"M\": " + std::to_string(pairs) + "}");
}

namespace detail {

inline json per_rsu_json(const PerRsu<double>& v) {
  json out = json::array();
  for (const auto& pr : v) out.push_back({pr[0], pr[1]});
  return out;
}

inline const char* fading_tag(FadingModel m) {
  switch (m) {
    case FadingModel::kRician: return "rician";
    case FadingModel::kRayleigh: return "rayleigh";
    case FadingModel::kLos: return "los";
  }
  return "unknown";
}

}  // namespace detail

/// Canonical echo of the resolved configuration (powers in watts).
inline nlohmann::json to_json(const ScenarioConfig& cfg) {
  using detail::json;
  json j;
  j["M"] = cfg.M;
  j["N"] = cfg.N;
  j["T_s"] = cfg.T;
  j["B_hz"] = cfg.B;
  j["P_max_w"] = cfg.P_max;
  j["P_rsu_max_w"] = detail::per_rsu_json(cfg.P_rsu_max);
  j["F_max"] = detail::per_rsu_json(cfg.F_max);
  j["f_bits"] = detail::per_rsu_json(cfg.f_bits);
  j["kappa"] = cfg.kappa;
  j["sigma2_w"] = cfg.sigma2;
  j["rho"] = cfg.rho;
  j["nleh"] = {{"a", detail::per_rsu_json(cfg.nleh_a)},
               {"b_w", detail::per_rsu_json(cfg.nleh_b)},
               {"Lambda_w", detail::per_rsu_json(cfg.nleh_Lambda)}};
  j["pathloss"] = {{"ris_link", {{"intercept_db", cfg.ris_link.intercept_db}, {"slope_db", cfg.ris_link.slope_db}}},
                   {"direct_link",
                    {{"intercept_db", cfg.direct_link.intercept_db}, {"slope_db", cfg.direct_link.slope_db}}},
                   {"overridden", cfg.pathloss_overridden}};
  j["fading"] = {{"model", detail::fading_tag(cfg.fading.model)},
                 {"rician_k_db", cfg.fading.rician_k_db},
                 {"reciprocal", cfg.fading.reciprocal}};
  json centers = json::array();
  for (const auto& c : cfg.positions.pair_centers) centers.push_back({c.x, c.y});
  j["positions"] = {{"dc", {cfg.positions.dc.x, cfg.positions.dc.y}},
                    {"ris", {cfg.positions.ris.x, cfg.positions.ris.y}},
                    {"pair_centers", centers},
                    {"radius", cfg.positions.radius}};
  j["seed"] = cfg.seed;
  j["ao"] = {{"i_max", cfg.ao.i_max}, {"epsilon_bits", cfg.ao.epsilon}};
  j["srocr"] = {{"delta0", cfg.srocr.delta0},       {"delta_min", cfg.srocr.delta_min},
                {"chi_tol", cfg.srocr.chi_tol},     {"q_max", cfg.srocr.q_max},
                {"rank_tol", cfg.srocr.rank_tol},   {"randomization_rounds", cfg.srocr.randomization_rounds}};
  j["solver"] = {{"tol", cfg.solver_tol}};
  j["init"] = {{"t0_grid", cfg.init_t0_grid}};
  j["defaulted"] = cfg.defaulted;
  return j;
}

/// 64-bit FNV-1a of the canonical config echo (seed excluded).
inline std::string config_hash(const ScenarioConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("seed");
  j.erase("defaulted");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace risrsma
