#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "risrsma/config.hpp"
#include "risrsma/phys_model.hpp"
#include "risrsma/ris_srocr.hpp"
#include "risrsma/scenario.hpp"
#include "risrsma/subproblems.hpp"

namespace risrsma {

enum class SchemeId { kProposed, kTdmaOnly, kRandomPhase, kNoRis };

inline constexpr std::array<SchemeId, 4> kAllSchemes{SchemeId::kProposed, SchemeId::kTdmaOnly,
                                                     SchemeId::kRandomPhase, SchemeId::kNoRis};

inline const char* to_string(SchemeId s) {
  switch (s) {
    case SchemeId::kProposed: return "proposed";
    case SchemeId::kTdmaOnly: return "tdma_only";
    case SchemeId::kRandomPhase: return "random_phase";
    case SchemeId::kNoRis: return "no_ris";
  }
  throw std::invalid_argument("unknown scheme id");
}

inline SchemeId parse_scheme(const std::string& name) {
  for (auto s : kAllSchemes)
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected proposed, tdma_only, random_phase or no_ris)");
}

inline AccessMode scheme_mode(SchemeId s) { return s == SchemeId::kTdmaOnly ? AccessMode::kTdma : AccessMode::kRsma; }
inline bool scheme_optimizes_ris(SchemeId s) { return s == SchemeId::kProposed || s == SchemeId::kTdmaOnly; }

enum class Termination { kEpsilon, kIMax };

inline const char* to_string(Termination t) { return t == Termination::kEpsilon ? "epsilon" : "i_max"; }

struct StepTimings {
  double crc = 0.0, time = 0.0, power = 0.0, ris = 0.0;  // seconds
};

/// Outcome of one SROCR solve inside the AO loop.
struct ChiRecord {
  int iteration = 0;
  std::string block;  // "wet" or "pair[m]"
  std::vector<double> chi;
  double eig_ratio = 1.0;
  bool rank_one = false;
  bool reached_chi_one = false;
  bool randomized = false;
  bool accepted = false;
};

struct IterationTrace {
  double initial_objective = 0.0;
  std::vector<double> objective;  // one entry per AO iteration
  std::vector<StepTimings> timings;
  std::vector<ChiRecord> srocr;
  std::vector<AllocationState> snapshots;  // filled only when requested
  std::vector<std::string> flags;
  Termination reason = Termination::kIMax;
  int rejections = 0;

  int iterations() const { return static_cast<int>(objective.size()); }
  /// True when every SROCR solve ended on a rank-one matrix.
  bool rank_one() const {
    for (const auto& r : srocr)
      if (!r.rank_one) return false;
    return true;
  }
};

struct AoOptions {
  bool keep_snapshots = false;
  std::optional<AllocationState> warm_start;
};

struct AoResult {
  AllocationState state;
  IterationTrace trace;
  Evaluation evaluation;
};

namespace detail {

inline void draw_initial_phases(AllocationState& s, const ScenarioConfig& cfg, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(cfg.N);
  auto rng0 = make_stream(seed, Stream::kPhases, 0);
  s.theta0 = random_phases(rng0, n);
  for (std::size_t m = 0; m < cfg.pairs(); ++m) {
    auto rng = make_stream(seed, Stream::kPhases, m + 1);
    s.theta[m] = random_phases(rng, n);
  }
}

/// Equal slots after a WET slot of t0. Powers follow the boundary rule
/// before any processing when transmit_first is set, and stay zero
/// otherwise; CRCs then take whatever energy is left.
inline AllocationState corner_state(const AllocationState& base, double t0, bool transmit_first,
                                    const ChannelSet& ch, const ScenarioConfig& cfg) {
  AllocationState s = base;
  const std::size_t M = cfg.pairs();
  s.t[0] = t0;
  for (std::size_t m = 0; m < M; ++m) s.t[m + 1] = (cfg.T - t0) / static_cast<double>(M);
  s.F = make_per_rsu(M, 0.0);
  s.p = make_per_rsu(M, 0.0);
  const auto hr = harvest_rates(s.p0, s.theta0, ch, cfg);
  if (transmit_first) s.p = solve_power(s, hr, ch, cfg).p;
  s.F = solve_crc(s, hr, cfg).F;
  s.role = default_roles(s.theta, ch);
  return s;
}

}  // namespace detail

/// Feasible starting point: half the frame for WET, equal pair slots,
/// p0 = P_max, uniform random phases, boundary powers at zero CRC and the
/// cube-root CRC rule. A grid over t0 with both orders of spending the
/// harvested energy is searched afterwards; a candidate replaces the
/// default start only when strictly better.
inline AllocationState init_feasible(const ScenarioConfig& cfg, const ChannelSet& ch, std::uint64_t seed,
                                     AccessMode mode = AccessMode::kRsma) {
  AllocationState base = zero_state(cfg, mode);
  base.p0 = cfg.P_max;
  detail::draw_initial_phases(base, cfg, seed);
  AllocationState best = detail::corner_state(base, 0.5 * cfg.T, true, ch, cfg);
  const auto first = evaluate_objective(best, ch, cfg);
  if (!first.report.feasible()) throw std::logic_error("initial allocation is infeasible");
  double best_ell = first.ell;
  const int G = std::max(0, cfg.init_t0_grid);
  for (int k = 1; k <= G; ++k) {
    const double t0 = cfg.T * static_cast<double>(k) / static_cast<double>(G + 1);
    for (bool transmit_first : {false, true}) {
      auto cand = detail::corner_state(base, t0, transmit_first, ch, cfg);
      const auto ev = evaluate_objective(cand, ch, cfg);
      if (ev.report.feasible() && ev.ell > best_ell) {
        best_ell = ev.ell;
        best = std::move(cand);
      }
    }
  }
  best.ell = best_ell;
  return best;
}

namespace detail {

class AoRun {
 public:
  AoRun(const ScenarioConfig& cfg, const ChannelSet& ch, std::uint64_t seed, SchemeId scheme, const AoOptions& opt)
      : cfg_(cfg), ch_(ch), seed_(seed), scheme_(scheme), opt_(opt) {
    solver_.tol = cfg.solver_tol;
  }

  AoResult run() {
    s_ = opt_.warm_start ? *opt_.warm_start : init_feasible(cfg_, ch_, seed_, scheme_mode(scheme_));
    auto ev = evaluate_objective(s_, ch_, cfg_);
    if (!ev.report.feasible()) throw std::invalid_argument("starting allocation is infeasible");
    ell_ = ev.ell;
    s_.ell = ell_;
    trace_.initial_objective = ell_;
    for (int it = 1; it <= cfg_.ao.i_max; ++it) {
      iter_ = it;
      const double prev = ell_;
      StepTimings tm;
      if (scheme_optimizes_ris(scheme_)) tm.ris = timed([&] { ris_step(); });
      const auto hr = harvest_rates(s_.p0, s_.theta0, ch_, cfg_);
      tm.crc = timed([&] {
        AllocationState c = s_;
        c.F = solve_crc(s_, hr, cfg_).F;
        try_accept(std::move(c));
      });
      tm.time = timed([&] {
        const auto R = rate_coefficients(s_, ch_, cfg_);
        const auto tr = solve_time(s_, hr, R, cfg_);
        if (!tr.ok()) {
          flag("time LP " + std::string(conic::to_string(tr.status)) + ": " + tr.diagnostics);
          ++trace_.rejections;
          return;
        }
        AllocationState c = s_;
        c.t = tr.t;
        c.tdma_share = tr.tdma_share;
        try_accept(std::move(c));
      });
      tm.power = timed([&] {
        const auto hr2 = harvest_rates(s_.p0, s_.theta0, ch_, cfg_);
        AllocationState c = s_;
        c.p = solve_power(s_, hr2, ch_, cfg_).p;
        try_accept(std::move(c));
      });
      s_.role = default_roles(s_.theta, ch_);
      s_.ell = ell_;
      trace_.objective.push_back(ell_);
      trace_.timings.push_back(tm);
      if (opt_.keep_snapshots) trace_.snapshots.push_back(s_);
      if (std::abs(ell_ - prev) < cfg_.ao.epsilon) {
        trace_.reason = Termination::kEpsilon;
        break;
      }
      trace_.reason = Termination::kIMax;
    }
    AoResult out;
    out.state = s_;
    out.evaluation = evaluate_objective(s_, ch_, cfg_);
    out.trace = std::move(trace_);
    return out;
  }

 private:
  template <typename F>
  static double timed(F&& f) {
    const auto a = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
  }

  void flag(std::string msg) { trace_.flags.push_back("iter " + std::to_string(iter_) + ": " + std::move(msg)); }

  /// Keeps the candidate when it is feasible and does not lower the objective.
  bool try_accept(AllocationState c) {
    const auto ev = evaluate_objective(c, ch_, cfg_);
    if (!ev.report.feasible() || ev.ell < ell_) {
      ++trace_.rejections;
      return false;
    }
    s_ = std::move(c);
    ell_ = ev.ell;
    return true;
  }

  void ris_step() {
    wet_step();
    for (std::size_t m = 0; m < cfg_.pairs(); ++m) pair_step(m);
  }

  void wet_step() {
    if (!(s_.t[0] > 0.0) || cfg_.N == 0) return;
    HarvestThreshold th;
    try {
      th = harvest_thresholds(s_, ch_, cfg_);
    } catch (const InfeasibleDemand& e) {
      flag(std::string("wet thresholds: ") + e.what());
      return;
    }
    PerRsu<CVector> lifted(cfg_.pairs());
    for (std::size_t m = 0; m < cfg_.pairs(); ++m)
      for (std::size_t i = 0; i < 2; ++i) lifted[m][i] = ch_.lifted_downlink(m, i);
    double scale = 1.0, offset = 0.0;
    const auto r = srocr_solve(
        [&](const std::optional<RankCut>& cut) {
          auto w = build_wet_sdp(th, lifted, s_.p0, cut);
          scale = w.scale;
          offset = w.offset;
          return std::move(w.program);
        },
        cfg_.srocr, solver_);
    ChiRecord rec = record("wet", r);
    if (!r.ok) {
      flag("wet SDP: " + r.diagnostics);
      trace_.srocr.push_back(rec);
      return;
    }
    auto rng = make_stream(seed_, Stream::kRandomization, static_cast<std::uint64_t>(iter_) * 1024);
    const auto score = [&](const std::vector<double>& t) { return wet_score(t, th, lifted, s_.p0, scale); };
    const auto ex = extract_phases(r.V.V, score, r.objective - offset, rng, cfg_.srocr.randomization_rounds);
    rec.randomized = ex.randomized;
    if (ex.score >= score(s_.theta0)) {
      AllocationState c = s_;
      c.theta0 = ex.theta;
      rec.accepted = try_accept(std::move(c));
    } else {
      ++trace_.rejections;
    }
    trace_.srocr.push_back(rec);
  }

  void pair_step(std::size_t m) {
    if (cfg_.N == 0) return;
    const auto ev = evaluate_objective(s_, ch_, cfg_);
    const auto& pe = ev.pairs[m];
    std::array<double, 2> w{};
    for (std::size_t i = 0; i < 2; ++i) {
      const double tx = s_.tx_time(m, i);
      if (!(tx > 0.0) || !(s_.p[m][i] > 0.0)) continue;
      // TDMA rates are concave in each received power separately, so the
      // trace sum is weighted by the marginal rate of each subslot.
      w[i] = s_.mode == AccessMode::kRsma ? s_.p[m][i] : s_.p[m][i] * tx / (cfg_.sigma2 + pe.p_bar[i]);
    }
    if (!(w[0] > 0.0) && !(w[1] > 0.0)) return;
    const std::array<CVector, 2> lifted{ch_.lifted_uplink(m, 0), ch_.lifted_uplink(m, 1)};
    double scale = 1.0;
    const auto r = srocr_solve(
        [&](const std::optional<RankCut>& cut) {
          auto ps = build_pair_sdp(lifted, w, cut);
          scale = ps.scale;
          return std::move(ps.program);
        },
        cfg_.srocr, solver_);
    ChiRecord rec = record("pair[" + std::to_string(m) + "]", r);
    if (!r.ok) {
      flag("pair SDP " + std::to_string(m) + ": " + r.diagnostics);
      trace_.srocr.push_back(rec);
      return;
    }
    auto rng = make_stream(seed_, Stream::kRandomization, static_cast<std::uint64_t>(iter_) * 1024 + m + 1);
    const auto score = [&](const std::vector<double>& t) { return pair_score(t, lifted, w, scale); };
    const auto ex = extract_phases(r.V.V, score, r.objective, rng, cfg_.srocr.randomization_rounds);
    rec.randomized = ex.randomized;
    AllocationState c = s_;
    c.theta[m] = ex.theta;
    const auto cev = evaluate_objective(c, ch_, cfg_);
    if (cev.pairs[m].D >= pe.D)
      rec.accepted = try_accept(std::move(c));
    else
      ++trace_.rejections;
    trace_.srocr.push_back(rec);
  }

  ChiRecord record(std::string block, const SrocrResult& r) const {
    ChiRecord rec;
    rec.iteration = iter_;
    rec.block = std::move(block);
    rec.chi = r.chi_trace;
    rec.eig_ratio = r.eig_ratio;
    rec.rank_one = r.rank_one;
    rec.reached_chi_one = r.reached_chi_one;
    return rec;
  }

  const ScenarioConfig& cfg_;
  const ChannelSet& ch_;
  std::uint64_t seed_;
  SchemeId scheme_;
  const AoOptions& opt_;
  conic::SolverOptions solver_;
  AllocationState s_;
  double ell_ = 0.0;
  int iter_ = 0;
  IterationTrace trace_;
};

}  // namespace detail

/// Alternating optimization of phases (RIS-optimizing schemes only), CRC,
/// time and power. The phase step only creates harvest slack, so it opens
/// each cycle and the CRC step of the same cycle turns the slack into
/// objective. The channels are used as given.
inline AoResult optimize(const ScenarioConfig& cfg, const ChannelSet& ch, std::uint64_t seed,
                         SchemeId scheme = SchemeId::kProposed, const AoOptions& opt = {}) {
  return detail::AoRun(cfg, ch, seed, scheme, opt).run();
}

/// Runs a scheme on one realization; no_ris removes every reflected path first.
inline AoResult run_scheme(SchemeId scheme, const ScenarioConfig& cfg, const ChannelSet& ch, std::uint64_t seed,
                           const AoOptions& opt = {}) {
  switch (scheme) {
    case SchemeId::kProposed:
    case SchemeId::kTdmaOnly:
    case SchemeId::kRandomPhase: return optimize(cfg, ch, seed, scheme, opt);
    case SchemeId::kNoRis: return optimize(cfg, ch.without_ris(), seed, scheme, opt);
  }
  throw std::invalid_argument("unknown scheme id");
}

inline AoResult run_baseline(SchemeId scheme, const ScenarioConfig& cfg, const ChannelSet& ch, std::uint64_t seed,
                             const AoOptions& opt = {}) {
  return run_scheme(scheme, cfg, ch, seed, opt);
}

}  // namespace risrsma
