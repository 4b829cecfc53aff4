#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "risrsma/ao_driver.hpp"
#include "risrsma/config.hpp"

namespace risrsma {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Paired trend comparisons count as obeying the direction when the change
// against it is within this relative slack.
inline constexpr double kTrendTol = 1e-9;

// ---------------------------------------------------------------------------
// Output helpers

/// RFC-4180 field quoting.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Shortest round-trip decimal form, so equal doubles print identically.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += csv_escape(fields[k]);
  }
  return line + "\r\n";
}

/// Minimal RFC-4180 reader used by tests and trend statistics.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && k + 1 < text.size() && text[k + 1] == '\n') ++k;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Hand-written SVG line chart with axes, ticks and a legend.
inline std::string line_chart_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<Series>& series) {
  constexpr double W = 720, H = 460, L = 80, R = 170, Tp = 40, Bm = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) {
    y0 -= 0.5 * std::max(1.0, std::abs(y0) * 0.01);
    y1 += 0.5 * std::max(1.0, std::abs(y1) * 0.01);
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - Bm - (y - y0) / (y1 - y0) * (H - Tp - Bm); };
  const auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tp << "\" x2=\"" << L << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
    os << "<line x1=\"" << px(xv) << "\" y1=\"" << H - Bm << "\" x2=\"" << px(xv) << "\" y2=\"" << H - Bm + 5 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - Bm + 18 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << L << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << L - 8 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
  os << "<text transform=\"translate(18," << (Tp + H - Bm) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << esc(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k) os << px(series[s].x[k]) << "," << py(series[s].y[k]) << " ";
    os << "\"/>\n";
    for (std::size_t k = 0; k < series[s].x.size(); ++k)
      os << "<circle cx=\"" << px(series[s].x[k]) << "\" cy=\"" << py(series[s].y[k]) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
    const double ly = Tp + 10 + 20.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\"" << ly << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 4 << "\">" << esc(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Parallel trials

/// Runs fn(k) for k in [0, n) on up to `threads` workers. Results are placed
/// by index, so the output does not depend on scheduling.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, F&& fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        out[k] = fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// Metadata

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Algorithmic defaults in force, embedded in every output.
inline nlohmann::json design_defaults(const ScenarioConfig& cfg) {
  return {
      {"p0_policy", "fixed at P_max"},
      {"rho", cfg.rho},
      {"fading_model", detail::fading_tag(cfg.fading.model)},
      {"rician_k_db", cfg.fading.rician_k_db},
      {"reciprocal_channels", cfg.fading.reciprocal},
      {"ao_epsilon_bits", cfg.ao.epsilon},
      {"ao_i_max", cfg.ao.i_max},
      {"ao_block_order", "phases, crc, time, power"},
      {"step_rejection", true},
      {"init", "t0 = T/2 default start, replaced by a strictly better point of a t0 grid"},
      {"init_t0_grid", cfg.init_t0_grid},
      {"wet_objective", "max-min harvest margin"},
      {"pair_objective", "power-weighted trace sum (tdma_only: marginal-rate weights)"},
      {"srocr",
       {{"delta0", cfg.srocr.delta0},
        {"delta_min", cfg.srocr.delta_min},
        {"q_max", cfg.srocr.q_max},
        {"rank_tol", cfg.srocr.rank_tol},
        {"chi_tol", cfg.srocr.chi_tol},
        {"randomization_rounds", cfg.srocr.randomization_rounds}}},
      {"solver_tol", cfg.solver_tol},
      {"trend_tolerance", kTrendTol},
  };
}

inline nlohmann::json metadata(const ScenarioConfig& cfg, std::uint64_t seed) {
  return {{"artifact_version", kArtifactVersion},
          {"config_hash", config_hash(cfg)},
          {"seed", seed},
          {"defaults", design_defaults(cfg)},
          {"config", to_json(cfg)},
          {"generated_utc", utc_timestamp()}};
}

inline nlohmann::json state_json(const AllocationState& s) {
  nlohmann::json j;
  j["mode"] = s.mode == AccessMode::kRsma ? "rsma" : "tdma";
  j["t"] = s.t;
  j["p0_w"] = s.p0;
  j["p_w"] = detail::per_rsu_json(s.p);
  j["F_hz"] = detail::per_rsu_json(s.F);
  j["theta0"] = s.theta0;
  j["theta"] = s.theta;
  j["role"] = s.role;
  if (s.mode == AccessMode::kTdma) j["tdma_share"] = s.tdma_share;
  return j;
}

inline nlohmann::json evaluation_json(const Evaluation& ev) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pe : ev.pairs)
    pairs.push_back({{"D_bits", pe.D},
                     {"d_proc", pe.d_proc},
                     {"d_tr", pe.d_tr},
                     {"e_nleh_j", pe.e_nleh},
                     {"e_proc_j", pe.e_proc},
                     {"e_tr_j", pe.e_tr}});
  nlohmann::json viol = nlohmann::json::array();
  for (const auto& v : ev.report.violations()) viol.push_back({{"name", v.name}, {"normalized", v.normalized}});
  return {{"objective_bits", ev.ell},
          {"argmin_pair", ev.argmin},
          {"pairs", pairs},
          {"feasible", ev.report.feasible()},
          {"worst_normalized_slack", ev.report.worst_normalized()},
          {"violations", viol}};
}

inline nlohmann::json trace_json(const IterationTrace& tr) {
  nlohmann::json srocr = nlohmann::json::array();
  for (const auto& r : tr.srocr)
    srocr.push_back({{"iteration", r.iteration},
                     {"block", r.block},
                     {"chi", r.chi},
                     {"eig_ratio", r.eig_ratio},
                     {"rank_one", r.rank_one},
                     {"chi_one", r.reached_chi_one},
                     {"randomized", r.randomized},
                     {"accepted", r.accepted}});
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& t : tr.timings) timings.push_back({{"crc", t.crc}, {"time", t.time}, {"power", t.power}, {"ris", t.ris}});
  return {{"initial_objective", tr.initial_objective},
          {"objective", tr.objective},
          {"iterations", tr.iterations()},
          {"termination", to_string(tr.reason)},
          {"rejections", tr.rejections},
          {"rank_one", tr.rank_one()},
          {"flags", tr.flags},
          {"srocr", srocr},
          {"step_timings_s", timings}};
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  std::string axis;
  std::vector<double> values;
  int trials = 20;
  std::vector<SchemeId> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  ScenarioConfig base;
  std::uint64_t first_seed = 1;

  void validate() const {
    static const std::vector<std::string> axes{"f_bits", "F_max", "N", "P_max_dbm"};
    if (std::find(axes.begin(), axes.end(), axis) == axes.end())
      throw std::invalid_argument("unknown sweep axis '" + axis + "' (expected f_bits, F_max, N or P_max_dbm)");
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    for (std::size_t k = 1; k < values.size(); ++k)
      if (!(values[k] > values[k - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (schemes.empty()) throw std::invalid_argument("sweep needs at least one scheme");
  }
};

/// +1 when the objective should not decrease along the axis, -1 when it
/// should not increase.
inline int trend_direction(const std::string& axis) { return axis == "f_bits" ? -1 : +1; }

inline ScenarioConfig apply_axis(ScenarioConfig cfg, const std::string& axis, double value) {
  if (axis == "f_bits") {
    cfg.f_bits = make_per_rsu(cfg.pairs(), value);
  } else if (axis == "F_max") {
    cfg.F_max = make_per_rsu(cfg.pairs(), value);
  } else if (axis == "N") {
    if (value < 0 || value != std::floor(value)) throw std::invalid_argument("N must be a nonnegative integer");
    cfg.N = static_cast<int>(value);
  } else if (axis == "P_max_dbm") {
    cfg.P_max = dbm_to_watt(value);
  } else {
    throw std::invalid_argument("unknown sweep axis '" + axis + "'");
  }
  cfg.validate();
  return cfg;
}

struct ResultRow {
  SchemeId scheme = SchemeId::kProposed;
  double value = 0.0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  int iterations = 0;
  double wall_time = 0.0;  // kept out of the CSV body
  int rejections = 0;
  bool rank_one = true;
  bool feasible = true;
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"scheme",     "axis",     "value",   "seed", "objective_bits",
                                             "iterations", "rejections", "rank_one", "feasible"};
  return cols;
}

inline ResultRow run_trial(SchemeId scheme, const ScenarioConfig& cfg, std::uint64_t seed, double value = 0.0) {
  const auto a = std::chrono::steady_clock::now();
  const auto ch = realize(cfg, seed).channels;
  const auto r = run_scheme(scheme, cfg, ch, seed);
  ResultRow row;
  row.scheme = scheme;
  row.value = value;
  row.seed = seed;
  row.objective = r.evaluation.ell;
  row.iterations = r.trace.iterations();
  row.rejections = r.trace.rejections;
  row.rank_one = r.trace.rank_one();
  row.feasible = r.evaluation.report.feasible();
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  return row;
}

struct TrendStat {
  SchemeId scheme = SchemeId::kProposed;
  int comparisons = 0;
  int obeyed = 0;
  double fraction() const { return comparisons ? static_cast<double>(obeyed) / comparisons : 1.0; }
};

/// Paired comparisons of consecutive axis values for the same seed.
inline std::vector<TrendStat> trend_statistics(const std::vector<ResultRow>& rows, const std::string& axis,
                                               const std::vector<SchemeId>& schemes) {
  std::map<std::pair<int, std::uint64_t>, std::map<double, double>> by;
  for (const auto& r : rows) by[{static_cast<int>(r.scheme), r.seed}][r.value] = r.objective;
  const int dir = trend_direction(axis);
  std::vector<TrendStat> out;
  for (auto s : schemes) {
    TrendStat st;
    st.scheme = s;
    for (const auto& [key, series] : by) {
      if (key.first != static_cast<int>(s)) continue;
      for (auto it = series.begin(); std::next(it) != series.end(); ++it) {
        const double a = it->second, b = std::next(it)->second;
        ++st.comparisons;
        if (dir * (b - a) >= -kTrendTol * std::max(std::abs(a), std::abs(b))) ++st.obeyed;
      }
    }
    out.push_back(st);
  }
  return out;
}

struct SweepOutcome {
  std::vector<ResultRow> rows;
  std::vector<TrendStat> trends;
};

inline SweepOutcome run_sweep(const SweepSpec& spec, unsigned threads = 0) {
  spec.validate();
  struct Job {
    SchemeId scheme;
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto s : spec.schemes)
    for (double v : spec.values)
      for (int k = 0; k < spec.trials; ++k) jobs.push_back({s, v, spec.first_seed + static_cast<std::uint64_t>(k)});
  SweepOutcome out;
  out.rows = parallel_map<ResultRow>(
      jobs.size(),
      [&](std::size_t k) {
        const auto& j = jobs[k];
        return run_trial(j.scheme, apply_axis(spec.base, spec.axis, j.value), j.seed, j.value);
      },
      threads);
  out.trends = trend_statistics(out.rows, spec.axis, spec.schemes);
  return out;
}

inline std::string rows_csv(const std::vector<ResultRow>& rows, const std::string& axis) {
  std::string out = csv_line(result_columns());
  for (const auto& r : rows)
    out += csv_line({to_string(r.scheme), axis, fmt_double(r.value), std::to_string(r.seed), fmt_double(r.objective),
                     std::to_string(r.iterations), std::to_string(r.rejections), r.rank_one ? "1" : "0",
                     r.feasible ? "1" : "0"});
  return out;
}

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code.

inline ScenarioConfig with_env_overrides(ScenarioConfig cfg) {
  if (const char* tol = std::getenv("RISRSMA_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(tol, &end);
    if (end == tol || !(v > 0.0)) throw ConfigError("RISRSMA_SOLVER_TOL must be a positive number");
    cfg.solver_tol = v;
  }
  return cfg;
}

inline std::string trace_csv(const IterationTrace& tr) {
  std::string out = csv_line({"iter", "objective_bits", "delta_bits"});
  out += csv_line({"0", fmt_double(tr.initial_objective), "0"});
  double prev = tr.initial_objective;
  for (std::size_t k = 0; k < tr.objective.size(); ++k) {
    out += csv_line({std::to_string(k + 1), fmt_double(tr.objective[k]), fmt_double(tr.objective[k] - prev)});
    prev = tr.objective[k];
  }
  return out;
}

inline int cmd_run(const ScenarioConfig& cfg, SchemeId scheme, std::uint64_t seed,
                   const std::filesystem::path& out_dir, std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  const auto a = std::chrono::steady_clock::now();
  const auto ch = realize(cfg, seed).channels;
  const auto r = run_scheme(scheme, cfg, ch, seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  auto meta = metadata(cfg, seed);
  meta["scheme"] = to_string(scheme);
  meta["wall_time_s"] = wall;
  nlohmann::json out = {{"metadata", meta},
                        {"state", state_json(r.state)},
                        {"evaluation", evaluation_json(r.evaluation)},
                        {"trace", trace_json(r.trace)}};
  write_text(out_dir / "result.json", out.dump(2) + "\n");
  write_text(out_dir / "trace.csv", trace_csv(r.trace));
  log << to_string(scheme) << " seed " << seed << ": objective " << r.evaluation.ell << " bits after "
      << r.trace.iterations() << " iterations (" << to_string(r.trace.reason) << ")\n";
  if (!r.evaluation.report.feasible()) {
    log << "final allocation violates constraints\n";
    return 1;
  }
  return 0;
}

inline int cmd_convergence(const ScenarioConfig& cfg, int trials, std::uint64_t first_seed,
                           const std::filesystem::path& out_dir, std::ostream& log, unsigned threads = 0) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  std::filesystem::create_directories(out_dir);
  struct Job {
    SchemeId scheme;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto s : kAllSchemes)
    for (int k = 0; k < trials; ++k) jobs.push_back({s, first_seed + static_cast<std::uint64_t>(k)});
  const auto results = parallel_map<AoResult>(
      jobs.size(),
      [&](std::size_t k) { return run_scheme(jobs[k].scheme, cfg, realize(cfg, jobs[k].seed).channels, jobs[k].seed); },
      threads);

  std::string csv = csv_line({"scheme", "seed", "iter", "objective_bits"});
  std::vector<Series> series;
  nlohmann::json finals = nlohmann::json::object();
  std::size_t longest = 0;
  for (const auto& r : results) longest = std::max(longest, r.trace.objective.size());
  for (std::size_t si = 0; si < kAllSchemes.size(); ++si) {
    const auto scheme = kAllSchemes[si];
    std::vector<double> mean(longest + 1, 0.0);
    double final_mean = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      if (jobs[k].scheme != scheme) continue;
      const auto& tr = results[k].trace;
      std::vector<double> full{tr.initial_objective};
      full.insert(full.end(), tr.objective.begin(), tr.objective.end());
      for (std::size_t it = 0; it < full.size(); ++it)
        csv += csv_line({to_string(scheme), std::to_string(jobs[k].seed), std::to_string(it), fmt_double(full[it])});
      // Converged traces are held at their last value.
      for (std::size_t it = 0; it <= longest; ++it) mean[it] += full[std::min(it, full.size() - 1)] / trials;
      final_mean += full.back() / trials;
      if (trials == 1) {
        Series s{to_string(scheme), {}, {}};
        for (std::size_t it = 0; it < full.size(); ++it) {
          s.x.push_back(static_cast<double>(it));
          s.y.push_back(full[it]);
        }
        series.push_back(std::move(s));
      }
    }
    if (trials > 1) {
      Series s{to_string(scheme), {}, {}};
      for (std::size_t it = 0; it <= longest; ++it) {
        s.x.push_back(static_cast<double>(it));
        s.y.push_back(mean[it]);
      }
      series.push_back(std::move(s));
    }
    finals[to_string(scheme)] = final_mean;
    log << to_string(scheme) << ": mean final objective " << final_mean << " bits\n";
  }
  write_text(out_dir / "convergence.csv", csv);
  write_text(out_dir / "convergence.svg",
             line_chart_svg(trials > 1 ? "Mean objective vs iteration" : "Objective vs iteration", "iteration",
                            "min pair volume (bits)", series));
  auto meta = metadata(cfg, first_seed);
  meta["trials"] = trials;
  nlohmann::json wall = nlohmann::json::object();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    double t = 0.0;
    for (const auto& st : results[k].trace.timings) t += st.crc + st.time + st.power + st.ris;
    wall[std::string(to_string(jobs[k].scheme)) + "/" + std::to_string(jobs[k].seed)] = t;
  }
  write_text(out_dir / "convergence.json",
             nlohmann::json({{"metadata", meta}, {"final_mean_bits", finals}, {"solver_time_s", wall}}).dump(2) + "\n");
  return 0;
}

inline int cmd_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir, std::ostream& log,
                     unsigned threads = 0) {
  std::filesystem::create_directories(out_dir);
  const auto res = run_sweep(spec, threads);
  write_text(out_dir / "sweep.csv", rows_csv(res.rows, spec.axis));
  std::vector<Series> series;
  for (auto s : spec.schemes) {
    Series ser{to_string(s), spec.values, std::vector<double>(spec.values.size(), 0.0)};
    for (const auto& r : res.rows) {
      if (r.scheme != s) continue;
      const auto it = std::find(spec.values.begin(), spec.values.end(), r.value);
      ser.y[static_cast<std::size_t>(it - spec.values.begin())] += r.objective / spec.trials;
    }
    series.push_back(std::move(ser));
  }
  write_text(out_dir / "sweep.svg",
             line_chart_svg("Mean objective vs " + spec.axis, spec.axis, "min pair volume (bits)", series));
  std::string trend = csv_line({"scheme", "axis", "direction", "comparisons", "obeyed", "fraction"});
  nlohmann::json tj = nlohmann::json::array();
  for (const auto& t : res.trends) {
    trend += csv_line({to_string(t.scheme), spec.axis, trend_direction(spec.axis) > 0 ? "nondecreasing" : "nonincreasing",
                       std::to_string(t.comparisons), std::to_string(t.obeyed), fmt_double(t.fraction())});
    tj.push_back({{"scheme", to_string(t.scheme)}, {"comparisons", t.comparisons}, {"obeyed", t.obeyed},
                  {"fraction", t.fraction()}});
    log << to_string(t.scheme) << ": " << t.obeyed << "/" << t.comparisons << " paired comparisons follow the "
        << (trend_direction(spec.axis) > 0 ? "nondecreasing" : "nonincreasing") << " trend\n";
  }
  write_text(out_dir / "trend.csv", trend);
  auto meta = metadata(spec.base, spec.first_seed);
  meta["axis"] = spec.axis;
  meta["values"] = spec.values;
  meta["trials"] = spec.trials;
  nlohmann::json wall = nlohmann::json::array();
  for (const auto& r : res.rows)
    wall.push_back({{"scheme", to_string(r.scheme)}, {"value", r.value}, {"seed", r.seed}, {"wall_time_s", r.wall_time}});
  write_text(out_dir / "sweep.json",
             nlohmann::json({{"metadata", meta}, {"trends", tj}, {"wall_times", wall}}).dump(2) + "\n");
  return 0;
}

}  // namespace risrsma
