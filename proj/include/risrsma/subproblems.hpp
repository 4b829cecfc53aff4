#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "risrsma/conic.hpp"
#include "risrsma/config.hpp"
#include "risrsma/phys_model.hpp"
#include "risrsma/scenario.hpp"

namespace risrsma {

/// Harvested power per second of WET at the current DC power and WET phases.
struct HarvestRate {
  PerRsu<double> c;
};

inline HarvestRate harvest_rates(double p0, const std::vector<double>& theta0, const ChannelSet& ch,
                                 const ScenarioConfig& cfg) {
  HarvestRate hr;
  const auto pd = downlink_powers(p0, theta0, ch);
  hr.c.resize(cfg.pairs());
  for (std::size_t m = 0; m < cfg.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i) hr.c[m][i] = harvest_rate(pd[m][i], nleh_params(cfg, m, i));
  return hr;
}

// ---------------------------------------------------------------------------
// CRC allocation

struct CrcResult {
  PerRsu<double> F;
  bool degenerate_window = false;  // T == t0, nothing can be processed
};

/// Cube-root rule: spend whatever energy transmission leaves on processing.
inline double crc_closed_form(double residual_energy, double kappa, double window, double F_max) {
  if (!(window > 0.0) || !(residual_energy > 0.0)) return 0.0;
  return std::min(std::cbrt(residual_energy / (kappa * window)), F_max);
}

inline CrcResult solve_crc(const AllocationState& s, const HarvestRate& hr, const ScenarioConfig& cfg) {
  CrcResult out;
  out.F = make_per_rsu(cfg.pairs(), 0.0);
  const double t0 = s.t[0];
  const double window = cfg.T - t0;
  if (!(window > 0.0)) {
    out.degenerate_window = true;
    return out;
  }
  for (std::size_t m = 0; m < cfg.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const double residual = t0 * hr.c[m][i] - s.tx_time(m, i) * s.p[m][i];
      out.F[m][i] = crc_closed_form(residual, cfg.kappa, window, cfg.F_max[m][i]);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Time allocation

/// Transmission rate coefficients (bit/s) used by the time LP. In RSMA mode
/// only pair[m][0] is used and holds the aggregate sum rate; in TDMA mode
/// each entry is the single-user rate of that RSU.
inline PerRsu<double> rate_coefficients(const AllocationState& s, const ChannelSet& ch, const ScenarioConfig& cfg) {
  const auto gains = uplink_gains(s.theta, ch);
  PerRsu<double> R(cfg.pairs());
  for (std::size_t m = 0; m < cfg.pairs(); ++m) {
    const double pb0 = s.p[m][0] * gains[m][0], pb1 = s.p[m][1] * gains[m][1];
    if (s.mode == AccessMode::kRsma) {
      R[m] = {aggregate_rate(cfg.B, pb0, pb1, cfg.sigma2), 0.0};
    } else {
      R[m] = {cfg.B * log2_1p(pb0 / cfg.sigma2), cfg.B * log2_1p(pb1 / cfg.sigma2)};
    }
  }
  return R;
}

struct TimeResult {
  std::vector<double> t;
  std::vector<double> tdma_share;
  double ell = 0.0;  // LP optimum
  conic::SolveStatus status = conic::SolveStatus::kNumericalFailure;
  std::string diagnostics;
  bool ok() const { return status == conic::SolveStatus::kOptimal; }
};

/// Builds the time LP. Variables: t0, then one slot per pair (RSMA) or two
/// subslots per pair (TDMA), then ell / ell_scale.
inline conic::ConicProgram build_time_lp(const AllocationState& s, const HarvestRate& hr, const PerRsu<double>& R,
                                         const ScenarioConfig& cfg, double& ell_scale) {
  using namespace conic;
  const std::size_t M = cfg.pairs();
  const bool tdma = s.mode == AccessMode::kTdma;
  ConicProgram p;
  const auto t0 = p.add_scalar(VarKind::kNonnegative, 0.0, "t0");
  std::vector<std::array<std::size_t, 2>> slot(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (tdma) {
      slot[m][0] = p.add_scalar(VarKind::kNonnegative, 0.0, "tau[" + std::to_string(m) + "][0]");
      slot[m][1] = p.add_scalar(VarKind::kNonnegative, 0.0, "tau[" + std::to_string(m) + "][1]");
    } else {
      slot[m][0] = slot[m][1] = p.add_scalar(VarKind::kNonnegative, 0.0, "t[" + std::to_string(m + 1) + "]");
    }
  }
  ell_scale = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    double cap = 0.0;
    for (std::size_t i = 0; i < 2; ++i) cap += cfg.T * (s.F[m][i] / cfg.f_bits[m][i] + R[m][i]);
    ell_scale = std::max(ell_scale, cap);
  }
  if (!(ell_scale > 0.0)) ell_scale = 1.0;
  const auto ell = p.add_scalar(VarKind::kNonnegative, 1.0, "ell");

  AffineConstraint budget{"time_budget", {{t0, 1.0}}, {}, Relation::kLessEqual, cfg.T};
  for (std::size_t m = 0; m < M; ++m) {
    budget.scalar_terms.emplace_back(slot[m][0], 1.0);
    if (tdma) budget.scalar_terms.emplace_back(slot[m][1], 1.0);
  }
  p.add_constraint(budget);
  for (std::size_t k = 0; k < p.scalars.size() - 1; ++k)
    p.add_constraint({"slot_upper[" + std::to_string(k) + "]", {{k, 1.0}}, {}, Relation::kLessEqual, cfg.T});

  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      // kappa F^3 (T - t0) + tx p <= t0 c
      const double proc = cfg.kappa * std::pow(s.F[m][i], 3);
      AffineConstraint e{"energy[" + std::to_string(m) + "][" + std::to_string(i) + "]",
                         {{t0, hr.c[m][i] + proc}},
                         {},
                         Relation::kGreaterEqual,
                         proc * cfg.T};
      if (s.p[m][i] > 0.0) e.scalar_terms.emplace_back(slot[m][i], -s.p[m][i]);
      p.add_constraint(e);
    }
  for (std::size_t m = 0; m < M; ++m) {
    // ell <= sum_i (F_i / f_i)(T - t0) + transmission volume
    double rate_sum = 0.0;
    for (std::size_t i = 0; i < 2; ++i) rate_sum += s.F[m][i] / cfg.f_bits[m][i];
    AffineConstraint d{"volume[" + std::to_string(m) + "]",
                       {{ell, ell_scale}, {t0, rate_sum}},
                       {},
                       Relation::kLessEqual,
                       rate_sum * cfg.T};
    if (tdma) {
      if (R[m][0] > 0.0) d.scalar_terms.emplace_back(slot[m][0], -R[m][0]);
      if (R[m][1] > 0.0) d.scalar_terms.emplace_back(slot[m][1], -R[m][1]);
    } else if (R[m][0] > 0.0) {
      d.scalar_terms.emplace_back(slot[m][0], -R[m][0]);
    }
    p.add_constraint(d);
  }
  return p;
}

/// Makes an approximate time allocation exactly feasible: t0 is raised to the
/// smallest value the energy rows allow for the given transmit slots, then
/// the pair slots are shrunk if the interval overflows (shrinking only
/// relaxes the energy rows).
inline void repair_time(std::vector<double>& t, const std::vector<double>& share, const AllocationState& s,
                        const HarvestRate& hr, const ScenarioConfig& cfg) {
  const std::size_t M = cfg.pairs();
  for (auto& x : t) x = std::clamp(x, 0.0, cfg.T);
  AllocationState probe = s;
  probe.t = t;
  probe.tdma_share = share;
  double t0_req = 0.0;
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const double proc = cfg.kappa * std::pow(s.F[m][i], 3);
      const double den = hr.c[m][i] + proc;
      if (den > 0.0) t0_req = std::max(t0_req, (proc * cfg.T + probe.tx_time(m, i) * s.p[m][i]) / den);
    }
  t[0] = std::min(cfg.T, std::max(t[0], t0_req));
  double pair_total = 0.0;
  for (std::size_t m = 1; m <= M; ++m) pair_total += t[m];
  const double room = cfg.T - t[0];
  if (pair_total > room) {
    const double f = pair_total > 0.0 ? std::max(0.0, room) / pair_total : 0.0;
    for (std::size_t m = 1; m <= M; ++m) t[m] *= f;
    // Guard against the product rounding up.
    double total = 0.0;
    for (double x : t) total += x;
    for (std::size_t m = M; m >= 1 && total > cfg.T; --m) {
      const double cut = std::min(t[m], total - cfg.T);
      t[m] -= cut;
      total -= cut;
    }
  }
}

/// Solves the time LP and maps the result back to slot durations.
inline TimeResult solve_time(const AllocationState& s, const HarvestRate& hr, const PerRsu<double>& R,
                             const ScenarioConfig& cfg) {
  double ell_scale = 1.0;
  const auto prog = build_time_lp(s, hr, R, cfg, ell_scale);
  conic::SolverOptions opt;
  opt.tol = cfg.solver_tol;
  const auto sol = conic::solve(prog, opt);
  TimeResult out;
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.optimal()) return out;
  const std::size_t M = cfg.pairs();
  const bool tdma = s.mode == AccessMode::kTdma;
  out.t.assign(M + 1, 0.0);
  out.tdma_share.assign(M, 0.5);
  out.t[0] = std::clamp(sol.scalars[0], 0.0, cfg.T);
  std::size_t k = 1;
  for (std::size_t m = 0; m < M; ++m) {
    if (tdma) {
      const double a = std::max(0.0, sol.scalars[k]), b = std::max(0.0, sol.scalars[k + 1]);
      k += 2;
      out.t[m + 1] = a + b;
      out.tdma_share[m] = a + b > 0.0 ? a / (a + b) : 0.5;
    } else {
      out.t[m + 1] = std::max(0.0, sol.scalars[k++]);
    }
  }
  repair_time(out.t, out.tdma_share, s, hr, cfg);
  out.ell = sol.scalars[k] * ell_scale;
  return out;
}

// ---------------------------------------------------------------------------
// Power allocation

struct DualCertificate {
  PerRsu<double> lambda;  // energy constraints
  PerRsu<double> beta;    // volume constraints, pair weight split evenly over the two RSUs
  PerRsu<double> nu;      // upper power bound
  PerRsu<double> mu;      // lower power bound
  double beta_sum = 0.0;
  double stationarity_residual = 0.0;     // max relative |dL/dp|
  double complementarity_residual = 0.0;  // max normalized |multiplier x slack|
  double closed_form_residual = 0.0;      // max relative gap to the multiplier form of the optimum
  std::vector<std::size_t> argmin_pairs;
};

struct PowerResult {
  PerRsu<double> p;
  DualCertificate certificate;
};

/// Largest power that the energy budget and the power cap allow.
inline double power_cap(double harvested, double proc_energy, double tx_time, double P_rsu_max) {
  if (!(tx_time > 0.0)) return 0.0;
  return std::min(P_rsu_max, std::max(0.0, (harvested - proc_energy) / tx_time));
}

namespace detail {

inline double safe_rel(double num, double den) { return std::abs(num) / std::max(std::abs(den), 1e-300); }

}  // namespace detail

/// Rebuilds multipliers at a candidate power allocation and reports the
/// residuals of the first-order conditions. The gradient of the pair volume
/// with respect to p_i is t B |g_i|^2 / ((pbar_i + pbar_j + sigma2) ln 2).
inline DualCertificate reconstruct_duals(const AllocationState& s, const HarvestRate& hr, const ChannelSet& ch,
                                         const ScenarioConfig& cfg, double tie_tol = 1e-9) {
  const std::size_t M = cfg.pairs();
  DualCertificate dc;
  dc.lambda = dc.beta = dc.nu = dc.mu = make_per_rsu(M, 0.0);
  const auto ev = evaluate_objective(s, ch, cfg);
  const auto gains = uplink_gains(s.theta, ch);
  for (std::size_t m = 0; m < M; ++m)
    if (ev.pairs[m].D <= ev.ell + tie_tol * std::max(1.0, std::abs(ev.ell))) dc.argmin_pairs.push_back(m);
  const double weight = 1.0 / static_cast<double>(dc.argmin_pairs.size());
  const double t0 = s.t[0];
  for (std::size_t m : dc.argmin_pairs) {
    const auto& pe = ev.pairs[m];
    for (std::size_t i = 0; i < 2; ++i) dc.beta[m][i] = 0.5 * weight;
    const double beta_pair = weight;
    for (std::size_t i = 0; i < 2; ++i) {
      const double tx = s.tx_time(m, i);
      double grad = 0.0;
      if (tx > 0.0) {
        const double interference = s.mode == AccessMode::kRsma ? pe.p_bar[1 - i] : 0.0;
        grad = beta_pair * tx * cfg.B * gains[m][i] / ((pe.p_bar[i] + interference + cfg.sigma2) * std::numbers::ln2);
      }
      const double harvested = t0 * hr.c[m][i];
      const double proc = cfg.kappa * std::pow(s.F[m][i], 3) * (cfg.T - t0);
      const double e_slack = harvested - proc - tx * s.p[m][i];
      const double e_scale = std::max({harvested, proc + tx * s.p[m][i], 1e-300});
      const double cap_slack = cfg.P_rsu_max[m][i] - s.p[m][i];
      const bool energy_active = tx > 0.0 && std::abs(e_slack) <= 1e-7 * e_scale;
      const bool cap_active = std::abs(cap_slack) <= 1e-7 * cfg.P_rsu_max[m][i];
      if (grad > 0.0) {
        if (energy_active)
          dc.lambda[m][i] = grad / tx;
        else if (cap_active)
          dc.nu[m][i] = grad;
      }
      const double stat = dc.lambda[m][i] * tx + dc.nu[m][i] - dc.mu[m][i] - grad;
      dc.stationarity_residual = std::max(dc.stationarity_residual, grad > 0.0 ? detail::safe_rel(stat, grad) : 0.0);
      dc.complementarity_residual =
          std::max({dc.complementarity_residual, std::abs(dc.lambda[m][i] * tx) * std::abs(e_slack) / e_scale /
                                                     std::max(grad, 1e-300),
                    dc.nu[m][i] * std::abs(cap_slack) / cfg.P_rsu_max[m][i] / std::max(grad, 1e-300)});
      if (dc.lambda[m][i] > 0.0 && gains[m][i] > 0.0) {
        const double interference = s.mode == AccessMode::kRsma ? pe.p_bar[1 - i] : 0.0;
        const double lead = beta_pair * cfg.B / (dc.lambda[m][i] * std::numbers::ln2);
        const double form = lead - (cfg.sigma2 + interference) / gains[m][i];
        dc.closed_form_residual =
            std::max(dc.closed_form_residual, detail::safe_rel(form - s.p[m][i], std::max(lead, s.p[m][i])));
      }
    }
  }
  for (const auto& pr : dc.beta) dc.beta_sum += pr[0] + pr[1];
  return dc;
}

/// Boundary rule: each RSU transmits with all the power its energy budget
/// and its cap allow.
inline PowerResult solve_power(const AllocationState& s, const HarvestRate& hr, const ChannelSet& ch,
                               const ScenarioConfig& cfg) {
  PowerResult out;
  out.p = make_per_rsu(cfg.pairs(), 0.0);
  const double t0 = s.t[0];
  for (std::size_t m = 0; m < cfg.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const double proc = cfg.kappa * std::pow(s.F[m][i], 3) * std::max(0.0, cfg.T - t0);
      out.p[m][i] = power_cap(t0 * hr.c[m][i], proc, s.tx_time(m, i), cfg.P_rsu_max[m][i]);
    }
  AllocationState next = s;
  next.p = out.p;
  out.certificate = reconstruct_duals(next, hr, ch, cfg);
  return out;
}

struct PowerValidation {
  double conic_objective = 0.0;
  double closed_form_objective = 0.0;
  double relative_gap = 0.0;
  bool boundary = true;  // every argmin RSU sits on an active bound
  conic::SolveStatus status = conic::SolveStatus::kNumericalFailure;
  std::string diagnostics;
};

/// Independent numeric solve of the power subproblem. The concave volume is
/// replaced by the minimum of its tangents at `tangents` evenly spaced points
/// of the achievable received-power range (an outer approximation that is
/// exact at the grid points), giving an LP over normalized powers.
inline PowerValidation validate_power(const AllocationState& s, const HarvestRate& hr, const ChannelSet& ch,
                                      const ScenarioConfig& cfg, int tangents = 24) {
  using namespace conic;
  const std::size_t M = cfg.pairs();
  const double t0 = s.t[0];
  const auto gains = uplink_gains(s.theta, ch);
  PerRsu<double> cap(M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const double proc = cfg.kappa * std::pow(s.F[m][i], 3) * std::max(0.0, cfg.T - t0);
      cap[m][i] = power_cap(t0 * hr.c[m][i], proc, s.tx_time(m, i), cfg.P_rsu_max[m][i]);
    }
  ConicProgram prog;
  PerRsu<long> var(M, {-1, -1});
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t i = 0; i < 2; ++i)
      if (cap[m][i] > 0.0) {
        var[m][i] = static_cast<long>(prog.add_scalar(VarKind::kNonnegative, 0.0, "x"));
        prog.add_constraint({"power_cap", {{static_cast<std::size_t>(var[m][i]), 1.0}}, {}, Relation::kLessEqual, 1.0});
      }
  double ell_scale = 0.0;
  std::vector<double> d_proc(M);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < 2; ++i)
      d_proc[m] += processing(s.F[m][i], cfg.f_bits[m][i], t0, cfg.T, cfg.kappa).volume;
    double tx_max = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      tx_max += s.tx_time(m, i) * cfg.B * log2_1p(cap[m][i] * gains[m][i] / cfg.sigma2);
    ell_scale = std::max(ell_scale, d_proc[m] + tx_max);
  }
  if (!(ell_scale > 0.0)) ell_scale = 1.0;
  const auto ell = prog.add_scalar(VarKind::kNonnegative, 1.0, "ell");
  // Tangent points, from the range end downwards; points whose slope is
  // within 1e-3 of an already kept one would only add near-parallel rows.
  auto tangent_points = [&](double y_max) {
    std::vector<double> pts;
    for (int k = tangents; k >= 0; --k) {
      const double yk = y_max * k / tangents;
      if (pts.empty() || (pts.back() - yk) / (cfg.sigma2 + pts.back()) > 1e-3) pts.push_back(yk);
    }
    return pts;
  };
  // Tangent cut of y -> B log2(1 + y / sigma2) at y_k: value + slope (y - y_k).
  auto add_cut = [&](std::size_t, const std::vector<std::pair<std::size_t, double>>& terms, double tx,
                     double y_max, double base) {
    for (double yk : tangent_points(y_max)) {
      const double val = cfg.B * log2_1p(yk / cfg.sigma2);
      const double slope = cfg.B / ((cfg.sigma2 + yk) * std::numbers::ln2);
      AffineConstraint c{"volume_cut", {{ell, ell_scale}}, {}, Relation::kLessEqual, base + tx * (val - slope * yk)};
      for (const auto& [v, coef] : terms) c.scalar_terms.emplace_back(v, -tx * slope * coef);
      prog.add_constraint(c);
    }
  };
  for (std::size_t m = 0; m < M; ++m) {
    if (s.mode == AccessMode::kRsma) {
      std::vector<std::pair<std::size_t, double>> terms;
      double y_max = 0.0;
      for (std::size_t i = 0; i < 2; ++i)
        if (var[m][i] >= 0 && gains[m][i] > 0.0) {
          terms.emplace_back(static_cast<std::size_t>(var[m][i]), cap[m][i] * gains[m][i]);
          y_max += cap[m][i] * gains[m][i];
        }
      add_cut(m, terms, s.t[m + 1], y_max, d_proc[m]);
    } else {
      // Per-RSU rate terms need their own epigraph variables.
      AffineConstraint total{"volume", {{ell, ell_scale}}, {}, Relation::kLessEqual, d_proc[m]};
      for (std::size_t i = 0; i < 2; ++i) {
        const auto r = prog.add_scalar(VarKind::kNonnegative, 0.0, "rate_epigraph");
        total.scalar_terms.emplace_back(r, -ell_scale);
        const double tx = s.tx_time(m, i);
        const double y_max = var[m][i] >= 0 ? cap[m][i] * gains[m][i] : 0.0;
        for (double yk : tangent_points(y_max)) {
          const double val = cfg.B * log2_1p(yk / cfg.sigma2);
          const double slope = cfg.B / ((cfg.sigma2 + yk) * std::numbers::ln2);
          AffineConstraint c{"rate_cut", {{r, ell_scale}}, {}, Relation::kLessEqual, tx * (val - slope * yk)};
          if (var[m][i] >= 0 && y_max > 0.0)
            c.scalar_terms.emplace_back(static_cast<std::size_t>(var[m][i]), -tx * slope * y_max);
          prog.add_constraint(c);
        }
      }
      prog.add_constraint(total);
    }
  }
  conic::SolverOptions opt;
  opt.tol = cfg.solver_tol;
  const auto sol = conic::solve(prog, opt);
  PowerValidation v;
  v.status = sol.status;
  v.diagnostics = sol.diagnostics;
  AllocationState closed = s;
  closed.p = cap;
  const auto ev = evaluate_objective(closed, ch, cfg);
  v.closed_form_objective = ev.ell;
  if (!sol.optimal()) return v;
  v.conic_objective = sol.scalars[ell] * ell_scale;
  v.relative_gap = std::abs(v.conic_objective - v.closed_form_objective) / std::max(1e-300, v.closed_form_objective);
  // The numeric optimizer must sit on the boundary for every RSU of an argmin
  // pair. Distance from the bound is weighted by the marginal volume of that
  // RSU, so directions the objective cannot resolve are not over-interpreted.
  for (std::size_t m = 0; m < M; ++m) {
    if (ev.pairs[m].D > ev.ell * (1.0 + 1e-9)) continue;
    for (std::size_t i = 0; i < 2; ++i) {
      if (var[m][i] < 0 || gains[m][i] <= 0.0) continue;
      const double x = sol.scalars[static_cast<std::size_t>(var[m][i])];
      const double marginal = s.tx_time(m, i) * cfg.B * cap[m][i] * gains[m][i] /
                              ((cfg.sigma2 + ev.pairs[m].p_bar[i] + (s.mode == AccessMode::kRsma ? ev.pairs[m].p_bar[1 - i] : 0.0)) *
                               std::numbers::ln2);
      if (std::abs(1.0 - x) * marginal > 1e-7 * std::max(ev.ell, 1e-300)) v.boundary = false;
    }
  }
  return v;
}

}  // namespace risrsma
