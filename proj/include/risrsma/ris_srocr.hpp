#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "risrsma/conic.hpp"
#include "risrsma/config.hpp"
#include "risrsma/phys_model.hpp"
#include "risrsma/scenario.hpp"

namespace risrsma {

/// Raised when an energy demand exceeds what saturation allows.
class InfeasibleDemand : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct LiftedPhaseMatrix {
  CMatrix V;
  double chi = 0.0;
  CVector principal_eigvec;
};

struct HarvestThreshold {
  PerRsu<double> psi;
  PerRsu<double> rhs_floor;  // W of received power
};

/// Log-ratio form of the required received power (kept for reference).
inline double psi_value(double e_demand, double t0, const NlehParams& q) {
  const double om = nleh_omega(q);
  return std::log(((1.0 - om) * e_demand + t0 * q.Lambda * om) / ((1.0 - om) * (t0 * q.Lambda - e_demand)));
}

/// Smallest received power whose harvest over t0 covers e_demand.
inline double psi_threshold(double e_demand, double t0, double a, double b, double Lambda) {
  if (!(t0 > 0.0)) throw std::invalid_argument("psi_threshold needs t0 > 0");
  if (e_demand >= t0 * Lambda) throw InfeasibleDemand("energy demand at or above the saturation limit");
  const double r = std::max(0.0, e_demand) / (t0 * Lambda);
  // Inverse of harvest_rate(): x = e^{-ap} = (1 - r) / (1 + r e^{ab}).
  return (std::log1p(r * std::exp(a * b)) - std::log1p(-r)) / a;
}

inline HarvestThreshold harvest_thresholds(const AllocationState& s, const ChannelSet& ch, const ScenarioConfig& cfg) {
  const auto ev = evaluate_objective(s, ch, cfg);
  HarvestThreshold out;
  out.psi = out.rhs_floor = make_per_rsu(cfg.pairs(), 0.0);
  for (std::size_t m = 0; m < cfg.pairs(); ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const auto q = nleh_params(cfg, m, i);
      const double e = ev.pairs[m].e_proc[i] + ev.pairs[m].e_tr[i];
      out.rhs_floor[m][i] = psi_threshold(e, s.t[0], q.a, q.b, q.Lambda);
      out.psi[m][i] = q.a * (out.rhs_floor[m][i] - q.b);
    }
  return out;
}

/// Eigenvector cut tr((u u^H - chi I) V) >= 0 with unit-norm u.
struct RankCut {
  CVector u;
  double chi = 0.0;
};

namespace detail {

inline CMatrix outer(const CVector& h) { return h * h.adjoint(); }

inline void add_unit_diagonal(conic::ConicProgram& p, std::size_t block, Eigen::Index dim) {
  for (Eigen::Index n = 0; n < dim; ++n) {
    CMatrix e = CMatrix::Zero(dim, dim);
    e(n, n) = 1.0;
    p.add_constraint({"diag[" + std::to_string(n) + "]", {}, {{block, std::move(e)}}, conic::Relation::kEqual, 1.0});
  }
}

inline void add_cut(conic::ConicProgram& p, std::size_t block, Eigen::Index dim, const std::optional<RankCut>& cut) {
  if (!cut) return;
  CMatrix a = outer(cut->u) - cut->chi * CMatrix::Identity(dim, dim);
  a = 0.5 * (a + a.adjoint()).eval();
  p.add_constraint({"rank_cut", {}, {{block, std::move(a)}}, conic::Relation::kGreaterEqual, 0.0});
}

}  // namespace detail

struct WetSdp {
  conic::ConicProgram program;
  double scale = 1.0;   // program margin = scale * margin in W
  double offset = 0.0;  // program objective = scaled margin + offset
  std::size_t margin = 0;
  std::size_t block = 0;
};

/// Max-min harvest margin over the lifted WET phase matrix V0.
inline WetSdp build_wet_sdp(const HarvestThreshold& th, const PerRsu<CVector>& lifted, double p0,
                            const std::optional<RankCut>& cut = std::nullopt) {
  if (lifted.empty()) throw std::invalid_argument("no lifted channels");
  WetSdp w;
  const Eigen::Index dim = lifted[0][0].size();
  double peak = 0.0;
  for (std::size_t m = 0; m < lifted.size(); ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      if (!std::isfinite(th.rhs_floor[m][i])) throw std::invalid_argument("harvest threshold is not finite");
      peak = std::max({peak, p0 * lifted[m][i].squaredNorm(), th.rhs_floor[m][i]});
    }
  w.scale = peak > 0.0 ? 1.0 / peak : 1.0;
  // The margin is at least -max floor for every feasible V0, so it is
  // carried as a nonnegative shifted variable.
  double top = 0.0;
  for (const auto& pr : th.rhs_floor) top = std::max({top, pr[0], pr[1]});
  w.offset = w.scale * top;
  w.margin = w.program.add_scalar(conic::VarKind::kNonnegative, 1.0, "margin_shifted");
  w.block = w.program.add_psd_block(static_cast<std::size_t>(dim));
  for (std::size_t m = 0; m < lifted.size(); ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      CMatrix a = (w.scale * p0) * detail::outer(lifted[m][i]);
      w.program.add_constraint({"harvest[" + std::to_string(m) + "][" + std::to_string(i) + "]",
                                {{w.margin, -1.0}},
                                {{w.block, std::move(a)}},
                                conic::Relation::kGreaterEqual,
                                w.scale * th.rhs_floor[m][i] - w.offset});
    }
  detail::add_unit_diagonal(w.program, w.block, dim);
  detail::add_cut(w.program, w.block, dim, cut);
  return w;
}

struct PairSdp {
  conic::ConicProgram program;
  double scale = 1.0;  // program objective = scale * weighted trace sum
  std::size_t block = 0;
};

/// Maximizes w_1 tr(H_1 V) + w_2 tr(H_2 V) over unit-diagonal PSD V.
inline PairSdp build_pair_sdp(const std::array<CVector, 2>& lifted, std::array<double, 2> weight,
                              const std::optional<RankCut>& cut = std::nullopt) {
  PairSdp ps;
  const Eigen::Index dim = lifted[0].size();
  if (lifted[1].size() != dim) throw std::invalid_argument("lifted channel lengths differ");
  const double peak = weight[0] * lifted[0].squaredNorm() + weight[1] * lifted[1].squaredNorm();
  ps.scale = peak > 0.0 ? 1.0 / peak : 1.0;
  ps.block = ps.program.add_psd_block(static_cast<std::size_t>(dim));
  CMatrix c = ps.scale * (weight[0] * detail::outer(lifted[0]) + weight[1] * detail::outer(lifted[1]));
  ps.program.set_block_objective(ps.block, 0.5 * (c + c.adjoint()));
  detail::add_unit_diagonal(ps.program, ps.block, dim);
  detail::add_cut(ps.program, ps.block, dim, cut);
  return ps;
}

/// Program value of a rank-one point v v^H.
inline double wet_score(const std::vector<double>& theta, const HarvestThreshold& th, const PerRsu<CVector>& lifted,
                        double p0, double scale) {
  const CVector v = lifted_phase_vector(theta);
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < lifted.size(); ++m)
    for (std::size_t i = 0; i < 2; ++i)
      s = std::min(s, scale * (p0 * std::norm(v.dot(lifted[m][i])) - th.rhs_floor[m][i]));
  return s;
}

inline double pair_score(const std::vector<double>& theta, const std::array<CVector, 2>& lifted,
                         std::array<double, 2> weight, double scale) {
  const CVector v = lifted_phase_vector(theta);
  return scale * (weight[0] * std::norm(v.dot(lifted[0])) + weight[1] * std::norm(v.dot(lifted[1])));
}

struct SrocrResult {
  LiftedPhaseMatrix V;
  double objective = 0.0;          // program units, last accepted iterate
  double relaxed_objective = 0.0;  // plain relaxation, an upper bound
  std::vector<double> chi_trace;
  int solves = 0;
  int failures = 0;
  double eig_ratio = 1.0;  // lambda_2 / lambda_1 of the returned V
  bool rank_one = false;
  bool reached_chi_one = false;
  bool ok = false;
  std::string diagnostics;
};

using CutProgramBuilder = std::function<conic::ConicProgram(const std::optional<RankCut>&)>;

namespace detail {

struct Spectrum {
  double l1 = 0.0, l2 = 0.0, trace = 0.0;
  CVector u;
};

inline Spectrum spectrum(const CMatrix& v) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (v + v.adjoint()));
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  Spectrum s;
  s.l1 = ev(n - 1);
  s.l2 = n > 1 ? std::max(0.0, ev(n - 2)) : 0.0;
  s.trace = v.diagonal().real().sum();
  s.u = es.eigenvectors().col(n - 1);
  return s;
}

}  // namespace detail

/// Sequential rank-one constraint relaxation. Block 0 of every built program
/// must be the lifted phase matrix.
inline SrocrResult srocr_solve(const CutProgramBuilder& build, const SrocrConfig& sc, conic::SolverOptions opt = {}) {
  constexpr double kChiCeiling = 1.0 - 1e-6;
  SrocrResult r;
  auto sol = conic::solve(build(std::nullopt), opt);
  ++r.solves;
  if (!sol.optimal()) {
    r.diagnostics = std::string("relaxation failed: ") + conic::to_string(sol.status) + " " + sol.diagnostics;
    return r;
  }
  r.ok = true;
  r.relaxed_objective = r.objective = sol.objective;
  CMatrix V = sol.blocks.at(0);
  auto sp = detail::spectrum(V);
  double chi = std::clamp(sp.l1 / sp.trace, 0.0, 1.0);
  r.chi_trace.push_back(chi);
  double delta = sc.delta0;
  double prev = sol.objective;
  for (int q = 1; q <= sc.q_max; ++q) {
    const double target = std::max(chi, std::min(1.0, sp.l1 / sp.trace + delta));
    auto next = conic::solve(build(RankCut{sp.u, std::min(target, kChiCeiling)}), opt);
    ++r.solves;
    if (!next.optimal()) {
      ++r.failures;
      delta *= 0.5;
      if (delta < sc.delta_min) {
        r.diagnostics = "step size fell below delta_min";
        break;
      }
      continue;
    }
    V = next.blocks.at(0);
    sp = detail::spectrum(V);
    chi = target;
    r.chi_trace.push_back(chi);
    r.objective = next.objective;
    const bool settled = std::abs(next.objective - prev) <= sc.chi_tol * std::max(1.0, std::abs(prev));
    prev = next.objective;
    if (chi >= 1.0 && settled) {
      r.reached_chi_one = true;
      break;
    }
    if (q == sc.q_max) r.diagnostics = "q_max reached";
  }
  r.V.V = V;
  r.V.chi = chi;
  r.V.principal_eigvec = sp.u;
  r.eig_ratio = sp.l1 > 0.0 ? sp.l2 / sp.l1 : 1.0;
  r.rank_one = r.eig_ratio <= sc.rank_tol;
  if (!r.reached_chi_one && chi >= 1.0 && r.rank_one) r.reached_chi_one = true;
  return r;
}

struct ExtractedPhases {
  std::vector<double> theta;
  double score = 0.0;
  bool randomized = false;
};

using PhaseScore = std::function<double(const std::vector<double>&)>;

namespace detail {

/// theta_n = -arg(x_n / x_{N+1}), the inverse of lifted_phase_vector().
inline std::vector<double> phases_from_vector(const CVector& x) {
  const Eigen::Index n = x.size() - 1;
  const Complex last = x(n);
  const Complex ref = std::abs(last) > 0.0 ? last / std::abs(last) : Complex(1.0, 0.0);
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) theta[static_cast<std::size_t>(k)] = wrap_phase(-std::arg(x(k) / ref));
  return theta;
}

}  // namespace detail

/// Rank-one extraction from the principal eigenvector, with Gaussian
/// randomization when that loses more than 1% of the relaxed value.
inline ExtractedPhases extract_phases(const CMatrix& V, const PhaseScore& score, double relaxed_value,
                                      std::mt19937_64& rng, int rounds = 1000) {
  if (V.rows() != V.cols() || V.rows() < 1) throw std::invalid_argument("lifted matrix must be square");
  if (!conic::is_hermitian(V, 1e-8)) throw std::invalid_argument("lifted matrix is not Hermitian");
  for (Eigen::Index n = 0; n < V.rows(); ++n)
    if (std::abs(V(n, n) - 1.0) > 1e-5) throw std::invalid_argument("lifted matrix diagonal is not one");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (V + V.adjoint()));
  const Eigen::Index dim = V.rows();
  ExtractedPhases out;
  out.theta = detail::phases_from_vector(es.eigenvectors().col(dim - 1));
  out.score = score(out.theta);
  if (out.score >= relaxed_value - 0.01 * std::abs(relaxed_value)) return out;

  out.randomized = true;
  const RVector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix factor = es.eigenvectors() * lam.asDiagonal();
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  CVector z(dim);
  for (int k = 0; k < rounds; ++k) {
    for (Eigen::Index n = 0; n < dim; ++n) z(n) = Complex(nd(rng), nd(rng));
    auto theta = detail::phases_from_vector(factor * z);
    const double sc = score(theta);
    if (sc > out.score) {
      out.score = sc;
      out.theta = std::move(theta);
    }
  }
  return out;
}

/// Debug listing of one SDP in conic standard form.
inline void dump_sdp(std::ostream& os, const conic::ConicProgram& p) { conic::write_standard_form(os, p); }

}  // namespace risrsma
