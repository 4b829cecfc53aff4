#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "risrsma/common.hpp"
#include "risrsma/config.hpp"
#include "risrsma/scenario.hpp"

namespace risrsma {

// ---------------------------------------------------------------------------
// Energy harvesting

struct NlehParams {
  double a = kDefaultNlehA;
  double b = kDefaultNlehB;
  double Lambda = kDefaultNlehLambda;
};

inline NlehParams nleh_params(const ScenarioConfig& cfg, std::size_t m, std::size_t i) {
  return {cfg.nleh_a[m][i], cfg.nleh_b[m][i], cfg.nleh_Lambda[m][i]};
}

/// Zero-input response constant 1 / (1 + e^{ab}).
inline double nleh_omega(const NlehParams& q) { return 1.0 / (1.0 + std::exp(q.a * q.b)); }

/// Harvested power per second of WET, (Phi - Lambda Omega) / (1 - Omega).
/// Evaluated as Lambda (1 - e^{-a p}) / (1 + e^{-a (p - b)}), which is the same
/// expression with the Omega terms cancelled and no subtraction of close values.
inline double harvest_rate(double p_down, const NlehParams& q) {
  if (!(p_down > 0.0)) return 0.0;
  const double num = -std::expm1(-q.a * p_down);
  const double den = 1.0 + std::exp(-q.a * (p_down - q.b));
  return std::clamp(q.Lambda * num / den, 0.0, q.Lambda);
}

inline double harvested_energy(double t0, double p_down, const NlehParams& q) {
  return std::max(0.0, t0 * harvest_rate(p_down, q));
}

inline double harvested_energy(double t0, double p_down, double a, double b, double Lambda) {
  return harvested_energy(t0, p_down, NlehParams{a, b, Lambda});
}

/// Plain transcription of the sigmoid model, kept for cross-checking.
inline double harvested_energy_reference(double t0, double p_down, const NlehParams& q) {
  const double omega = nleh_omega(q);
  const double phi = q.Lambda / (1.0 + std::exp(-q.a * (p_down - q.b)));
  return std::max(0.0, t0 * (phi - q.Lambda * omega) / (1.0 - omega));
}

inline double received_power(double p0, const std::vector<double>& theta0, const CVector& cascade, Complex direct) {
  return p0 * std::norm(equivalent_gain(theta0, cascade, direct));
}

// ---------------------------------------------------------------------------
// Local processing

struct Processing {
  double rate = 0.0;    // bit/s
  double volume = 0.0;  // bits
  double energy = 0.0;  // J
};

inline Processing processing(double F, double f_bits, double t0, double T, double kappa) {
  const double window = std::max(0.0, T - t0);
  Processing out;
  out.rate = F / f_bits;
  out.volume = out.rate * window;
  out.energy = kappa * F * F * F * window;
  return out;
}

// ---------------------------------------------------------------------------
// Uplink RSMA

struct SinrTriplet {
  double split_first = 0.0;   // first stream of the splitting RSU
  double partner = 0.0;       // the other RSU
  double split_second = 0.0;  // second stream of the splitting RSU
};

inline SinrTriplet sinr_triplet(double rho, double pbar_i, double pbar_j, double sigma2) {
  SinrTriplet s;
  s.split_first = rho * pbar_i / ((1.0 - rho) * pbar_i + pbar_j + sigma2);
  s.partner = pbar_j / ((1.0 - rho) * pbar_i + sigma2);
  s.split_second = (1.0 - rho) * pbar_i / sigma2;
  return s;
}

inline double log2_1p(double x) { return std::log1p(x) / std::numbers::ln2; }

/// Sum-rate coefficient B log2(1 + (pbar_i + pbar_j) / sigma2), bit/s.
inline double aggregate_rate(double B, double pbar_i, double pbar_j, double sigma2) {
  return B * log2_1p((pbar_i + pbar_j) / sigma2);
}

inline double pair_volume(double t_m, double B, double pbar_i, double pbar_j, double sigma2, double d_proc_sum) {
  if (!(t_m > 0.0)) return d_proc_sum;
  return d_proc_sum + t_m * aggregate_rate(B, pbar_i, pbar_j, sigma2);
}

inline double pair_volume_streams(double t_m, double B, const SinrTriplet& s, double d_proc_sum) {
  if (!(t_m > 0.0)) return d_proc_sum;
  return d_proc_sum + t_m * B * (log2_1p(s.split_first) + log2_1p(s.split_second) + log2_1p(s.partner));
}

// ---------------------------------------------------------------------------
// Allocation and evaluation

enum class AccessMode { kRsma, kTdma };

struct AllocationState {
  AccessMode mode = AccessMode::kRsma;
  std::vector<double> t;  // t[0] is the WET slot, t[m + 1] the slot of pair m
  double p0 = 0.0;
  PerRsu<double> p;
  PerRsu<double> F;
  std::vector<double> theta0;
  std::vector<std::vector<double>> theta;  // uplink phases per pair
  std::vector<int> role;                   // splitting RSU per pair
  std::vector<double> tdma_share;          // fraction of t[m + 1] given to RSU 0 (TDMA only)
  double ell = 0.0;

  std::size_t pairs() const { return p.size(); }

  /// Time during which RSU (m, i) transmits.
  double tx_time(std::size_t m, std::size_t i) const {
    const double tm = t[m + 1];
    if (mode == AccessMode::kRsma) return tm;
    const double s = tdma_share[m];
    return i == 0 ? tm * s : tm * (1.0 - s);
  }
};

/// All-zero allocation with the right dimensions.
inline AllocationState zero_state(const ScenarioConfig& cfg, AccessMode mode = AccessMode::kRsma) {
  AllocationState s;
  s.mode = mode;
  s.t.assign(cfg.pairs() + 1, 0.0);
  s.p = make_per_rsu(cfg.pairs(), 0.0);
  s.F = make_per_rsu(cfg.pairs(), 0.0);
  s.theta0.assign(static_cast<std::size_t>(cfg.N), 0.0);
  s.theta.assign(cfg.pairs(), std::vector<double>(static_cast<std::size_t>(cfg.N), 0.0));
  s.role.assign(cfg.pairs(), 0);
  s.tdma_share.assign(cfg.pairs(), 0.5);
  return s;
}

struct PairEvaluation {
  std::array<double, 2> p_bar{};  // W, indexed by RSU
  SinrTriplet sinr;               // RSMA streams relative to role
  std::array<double, 2> rate{};   // transmission rate per RSU, bit/s
  std::array<double, 2> d_proc{};
  std::array<double, 2> d_tr{};
  std::array<double, 2> e_proc{};
  std::array<double, 2> e_tr{};
  std::array<double, 2> e_nleh{};
  std::array<double, 2> p_down{};  // received WET power, W
  double D = 0.0;
};

struct FeasibilityEntry {
  std::string name;
  double slack = 0.0;       // natural units, >= 0 when satisfied
  double normalized = 0.0;  // slack / scale
};

struct FeasibilityReport {
  std::vector<FeasibilityEntry> entries;
  double tol = 1e-7;

  bool feasible() const { return violations().empty(); }
  std::vector<FeasibilityEntry> violations() const {
    std::vector<FeasibilityEntry> out;
    for (const auto& e : entries)
      if (e.normalized < -tol) out.push_back(e);
    return out;
  }
  double worst_normalized() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) w = std::min(w, e.normalized);
    return w;
  }
  const FeasibilityEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

struct Evaluation {
  double ell = 0.0;
  std::size_t argmin = 0;
  std::vector<PairEvaluation> pairs;
  FeasibilityReport report;
};

namespace detail {

inline std::string idx(const std::string& base, std::size_t a) { return base + "[" + std::to_string(a) + "]"; }
inline std::string idx(const std::string& base, std::size_t a, std::size_t b) {
  return idx(base, a) + "[" + std::to_string(b) + "]";
}

inline void add_entry(FeasibilityReport& rep, std::string name, double slack, double scale) {
  rep.entries.push_back({std::move(name), slack, slack / std::max(scale, std::numeric_limits<double>::min())});
}

}  // namespace detail

/// Received WET power at every RSU for a given DC power and WET phase vector.
inline PerRsu<double> downlink_powers(double p0, const std::vector<double>& theta0, const ChannelSet& ch) {
  PerRsu<double> out(ch.pairs());
  for (std::size_t m = 0; m < ch.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i) out[m][i] = received_power(p0, theta0, ch.downlink_cascade(m, i), ch.g[m][i]);
  return out;
}

/// |uplink equivalent gain|^2 of every RSU for given uplink phases.
inline PerRsu<double> uplink_gains(const std::vector<std::vector<double>>& theta, const ChannelSet& ch) {
  PerRsu<double> out(ch.pairs());
  for (std::size_t m = 0; m < ch.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i)
      out[m][i] = std::norm(equivalent_gain(theta[m], ch.uplink_cascade(m, i), ch.gt[m][i]));
  return out;
}

/// Evaluates every physical quantity and the max-min objective of an
/// allocation. Constraint violations are reported, never thrown.
inline Evaluation evaluate_objective(const AllocationState& s, const ChannelSet& ch, const ScenarioConfig& cfg,
                                     double tol = 1e-7) {
  const std::size_t M = cfg.pairs();
  if (s.t.size() != M + 1 || s.p.size() != M || s.F.size() != M || s.theta.size() != M || s.role.size() != M ||
      s.theta0.size() != static_cast<std::size_t>(cfg.N) || ch.pairs() != M ||
      (s.mode == AccessMode::kTdma && s.tdma_share.size() != M))
    throw std::invalid_argument("allocation dimensions do not match configuration");
  Evaluation ev;
  ev.report.tol = tol;
  const double t0 = s.t[0];
  const auto p_down = downlink_powers(s.p0, s.theta0, ch);
  const auto gains = uplink_gains(s.theta, ch);
  ev.pairs.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    auto& pe = ev.pairs[m];
    for (std::size_t i = 0; i < 2; ++i) {
      pe.p_down[i] = p_down[m][i];
      pe.p_bar[i] = s.p[m][i] * gains[m][i];
      const auto proc = processing(s.F[m][i], cfg.f_bits[m][i], t0, cfg.T, cfg.kappa);
      pe.d_proc[i] = proc.volume;
      pe.e_proc[i] = proc.energy;
      pe.e_tr[i] = s.tx_time(m, i) * s.p[m][i];
      pe.e_nleh[i] = harvested_energy(t0, p_down[m][i], nleh_params(cfg, m, i));
    }
    const double tm = s.t[m + 1];
    if (s.mode == AccessMode::kRsma) {
      const auto si = static_cast<std::size_t>(s.role[m]);
      const std::size_t sj = 1 - si;
      pe.sinr = sinr_triplet(cfg.rho, pe.p_bar[si], pe.p_bar[sj], cfg.sigma2);
      pe.rate[si] = cfg.B * (log2_1p(pe.sinr.split_first) + log2_1p(pe.sinr.split_second));
      pe.rate[sj] = cfg.B * log2_1p(pe.sinr.partner);
      for (std::size_t i = 0; i < 2; ++i) pe.d_tr[i] = tm > 0.0 ? tm * pe.rate[i] : 0.0;
    } else {
      for (std::size_t i = 0; i < 2; ++i) {
        pe.rate[i] = cfg.B * log2_1p(pe.p_bar[i] / cfg.sigma2);
        const double ti = s.tx_time(m, i);
        pe.d_tr[i] = ti > 0.0 ? ti * pe.rate[i] : 0.0;
      }
    }
    pe.D = pe.d_proc[0] + pe.d_tr[0] + pe.d_proc[1] + pe.d_tr[1];
  }
  ev.ell = ev.pairs.empty() ? 0.0 : ev.pairs[0].D;
  for (std::size_t m = 1; m < M; ++m)
    if (ev.pairs[m].D < ev.ell) {
      ev.ell = ev.pairs[m].D;
      ev.argmin = m;
    }

  auto& rep = ev.report;
  double total = 0.0;
  for (double x : s.t) total += x;
  detail::add_entry(rep, "time_budget", cfg.T - total, cfg.T);
  for (std::size_t k = 0; k <= M; ++k) {
    detail::add_entry(rep, detail::idx("slot_lower", k), s.t[k], cfg.T);
    detail::add_entry(rep, detail::idx("slot_upper", k), cfg.T - s.t[k], cfg.T);
  }
  detail::add_entry(rep, "dc_power_lower", s.p0, cfg.P_max);
  detail::add_entry(rep, "dc_power", cfg.P_max - s.p0, cfg.P_max);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      detail::add_entry(rep, detail::idx("rsu_power_lower", m, i), s.p[m][i], cfg.P_rsu_max[m][i]);
      detail::add_entry(rep, detail::idx("rsu_power", m, i), cfg.P_rsu_max[m][i] - s.p[m][i], cfg.P_rsu_max[m][i]);
    }
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& pe = ev.pairs[m];
      const double used = pe.e_proc[i] + pe.e_tr[i];
      const double scale = std::max({pe.e_nleh[i], used, std::numeric_limits<double>::min()});
      detail::add_entry(rep, detail::idx("energy", m, i), pe.e_nleh[i] - used, scale);
    }
  auto phase_entries = [&](const std::vector<double>& th, const std::string& base) {
    for (std::size_t n = 0; n < th.size(); ++n) {
      detail::add_entry(rep, base + "_lower[" + std::to_string(n) + "]", th[n], kTwoPi);
      detail::add_entry(rep, base + "_upper[" + std::to_string(n) + "]", kTwoPi - th[n], kTwoPi);
    }
  };
  phase_entries(s.theta0, "wet_phase");
  for (std::size_t m = 0; m < M; ++m) phase_entries(s.theta[m], detail::idx("pair_phase", m));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      detail::add_entry(rep, detail::idx("crc_lower", m, i), s.F[m][i], cfg.F_max[m][i]);
      detail::add_entry(rep, detail::idx("crc", m, i), cfg.F_max[m][i] - s.F[m][i], cfg.F_max[m][i]);
    }
  if (s.mode == AccessMode::kTdma)
    for (std::size_t m = 0; m < M; ++m) {
      detail::add_entry(rep, detail::idx("tdma_share_lower", m), s.tdma_share[m], 1.0);
      detail::add_entry(rep, detail::idx("tdma_share_upper", m), 1.0 - s.tdma_share[m], 1.0);
    }
  return ev;
}

/// Splitting RSU default: the one with the larger uplink equivalent gain.
inline std::vector<int> default_roles(const std::vector<std::vector<double>>& theta, const ChannelSet& ch) {
  const auto gains = uplink_gains(theta, ch);
  std::vector<int> role(ch.pairs());
  for (std::size_t m = 0; m < ch.pairs(); ++m) role[m] = gains[m][1] > gains[m][0] ? 1 : 0;
  return role;
}

}  // namespace risrsma
