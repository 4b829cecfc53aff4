#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "risrsma/subproblems.hpp"

using namespace risrsma;

namespace {

struct Instance {
  ScenarioConfig cfg;
  ChannelSet ch;
  AllocationState s;
  HarvestRate hr;
};

/// Random instance with direct links only, scaled so that transmission and
/// processing volumes are of comparable size.
Instance random_instance(std::mt19937_64& rng, std::size_t pairs, AccessMode mode = AccessMode::kRsma) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.cfg = load_scenario("{\"M\": " + std::to_string(pairs) + ", \"N\": 0, \"sigma2_dbm\": -80}");
  in.ch.G = CVector(0);
  in.ch.Gt = CVector(0);
  in.ch.g.resize(pairs);
  in.ch.gt.resize(pairs);
  in.ch.h.assign(pairs, {CVector(0), CVector(0)});
  in.ch.ht.assign(pairs, {CVector(0), CVector(0)});
  for (std::size_t m = 0; m < pairs; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      in.ch.g[m][i] = std::polar(std::sqrt(1e-7 * (0.1 + u(rng))), kTwoPi * u(rng));
      in.ch.gt[m][i] = std::polar(std::sqrt(std::pow(10.0, -9.0 - 3.0 * u(rng))), kTwoPi * u(rng));
    }
  in.s = zero_state(in.cfg, mode);
  in.s.t[0] = 0.2 + 0.6 * u(rng);
  double rest = in.cfg.T - in.s.t[0];
  for (std::size_t m = 0; m < pairs; ++m) in.s.t[m + 1] = rest / static_cast<double>(pairs) * (0.5 + 0.5 * u(rng));
  for (auto& sh : in.s.tdma_share) sh = 0.2 + 0.6 * u(rng);
  in.s.p0 = in.cfg.P_max;
  in.hr.c.resize(pairs);
  for (std::size_t m = 0; m < pairs; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      in.hr.c[m][i] = 1e-3 * (0.2 + u(rng));
      in.s.F[m][i] = in.cfg.F_max[m][i] * 0.3 * u(rng);
    }
  in.s.role = default_roles(in.s.theta, in.ch);
  return in;
}

}  // namespace

TEST(Crc, CubeRootExamples) {
  EXPECT_NEAR(crc_closed_form(5.2488e-7, 1e-28, 0.9, 1.8e7), 1.8e7, 1e-3);
  EXPECT_NEAR(std::cbrt(5.2488e-7 / (1e-28 * 0.9)), 1.8e7, 1e-3);
  EXPECT_NEAR(crc_closed_form(7.29e-10, 1e-28, 0.9, 1.8e7), 2.0083e6, 1e2);
  EXPECT_EQ(crc_closed_form(0.0, 1e-28, 0.9, 1.8e7), 0.0);
  EXPECT_EQ(crc_closed_form(-1e-6, 1e-28, 0.9, 1.8e7), 0.0);
}

TEST(Crc, DegenerateWindow) {
  std::mt19937_64 rng(1);
  auto in = random_instance(rng, 2);
  in.s.t = {in.cfg.T, 0.0, 0.0};
  const auto r = solve_crc(in.s, in.hr, in.cfg);
  EXPECT_TRUE(r.degenerate_window);
  for (const auto& pr : r.F) EXPECT_EQ(pr[0] + pr[1], 0.0);
}

TEST(Crc, BeatsFineGridSearch) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 1);
    in.s.p = {{1e-3, 2e-3}};
    const auto F = solve_crc(in.s, in.hr, in.cfg).F;
    const double t0 = in.s.t[0], w = in.cfg.T - t0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double residual = t0 * in.hr.c[0][i] - in.s.tx_time(0, i) * in.s.p[0][i];
      const double fmax = in.cfg.F_max[0][i];
      const double step = fmax / 1e4;
      double best = 0.0;
      for (int k = 0; k <= 10000; ++k) {
        const double f = k * step;
        if (in.cfg.kappa * f * f * f * w <= residual) best = std::max(best, f / in.cfg.f_bits[0][i] * w);
      }
      const double closed = F[0][i] / in.cfg.f_bits[0][i] * w;
      EXPECT_GE(closed, best - 1e-9 * best);
      EXPECT_LE(closed, best + step / in.cfg.f_bits[0][i] * w * (1 + 1e-12));
      EXPECT_LE(in.cfg.kappa * std::pow(F[0][i], 3) * w, std::max(0.0, residual) * (1 + 1e-12));
    }
  }
}

TEST(Time, NullObjective) {
  std::mt19937_64 rng(3);
  auto in = random_instance(rng, 2);
  in.s.F = make_per_rsu(2, 0.0);
  const PerRsu<double> R = make_per_rsu(2, 0.0);
  const auto r = solve_time(in.s, in.hr, R, in.cfg);
  ASSERT_TRUE(r.ok()) << r.diagnostics;
  EXPECT_NEAR(r.ell, 0.0, 1e-9);
  double total = 0.0;
  for (double x : r.t) total += x;
  EXPECT_LE(total, in.cfg.T + 1e-8);
}

/// Objective of an M = 1 RSMA time allocation, or -1 when infeasible.
double time_objective(const Instance& in, const PerRsu<double>& R, double t0, double t1, double tol = 0.0) {
  if (t0 + t1 > in.cfg.T * (1.0 + tol) + 1e-12) return -1.0;
  double vol = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double proc = in.cfg.kappa * std::pow(in.s.F[0][i], 3) * (in.cfg.T - t0);
    if (proc + t1 * in.s.p[0][i] > t0 * in.hr.c[0][i] * (1.0 + tol)) return -1.0;
    vol += in.s.F[0][i] / in.cfg.f_bits[0][i] * (in.cfg.T - t0);
  }
  return vol + t1 * R[0][0];
}

TEST(Time, MatchesGridOracleForSinglePair) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng, 1);
    in.s.p = {{0.02 * std::uniform_real_distribution<double>(0.1, 1.0)(rng), 0.01}};
    const PerRsu<double> R{{2e4 * std::uniform_real_distribution<double>(0.1, 1.0)(rng), 0.0}};
    const auto r = solve_time(in.s, in.hr, R, in.cfg);
    ASSERT_TRUE(r.ok()) << r.diagnostics;
    double best = -1.0;
    for (int a = 0; a <= 1000; ++a)
      for (int b = 0; a + b <= 1000; ++b) best = std::max(best, time_objective(in, R, a * 1e-3, b * 1e-3));
    double proc_rate = 0.0;
    for (std::size_t i = 0; i < 2; ++i) proc_rate += in.s.F[0][i] / in.cfg.f_bits[0][i];
    // Rounding the optimum to a feasible grid point moves t0 by at most one
    // cell and t1 by at most two.
    const double cell = 1e-3 * (proc_rate + 2.0 * R[0][0]);
    EXPECT_GE(r.ell, best - 1e-6 * best);
    EXPECT_LE(r.ell, best + cell);
    const double direct = time_objective(in, R, r.t[0], r.t[1], 1e-7);
    EXPECT_NEAR(direct, r.ell, 1e-6 * r.ell + 1e-9);
  }
}

TEST(Time, ObjectiveGrowsWithInterval) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto in = random_instance(rng, 2);
    in.s.p = make_per_rsu(2, 5e-3);
    const PerRsu<double> R = {{1e4, 0.0}, {3e4, 0.0}};
    double prev = -1.0;
    for (double T : {0.5, 1.0, 2.0}) {
      auto cfg = in.cfg;
      cfg.T = T;
      const auto r = solve_time(in.s, in.hr, R, cfg);
      ASSERT_TRUE(r.ok()) << r.diagnostics;
      EXPECT_GE(r.ell, prev - 1e-7 * std::abs(prev));
      prev = r.ell;
    }
  }
}

TEST(Time, TdmaSubslotsAreFeasible) {
  std::mt19937_64 rng(6);
  auto in = random_instance(rng, 2, AccessMode::kTdma);
  in.s.p = make_per_rsu(2, 5e-3);
  const PerRsu<double> R = {{1e4, 2e4}, {3e4, 5e3}};
  const auto r = solve_time(in.s, in.hr, R, in.cfg);
  ASSERT_TRUE(r.ok()) << r.diagnostics;
  auto s = in.s;
  s.t = r.t;
  s.tdma_share = r.tdma_share;
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      const double proc = in.cfg.kappa * std::pow(s.F[m][i], 3) * (in.cfg.T - s.t[0]);
      EXPECT_LE(proc + s.tx_time(m, i) * s.p[m][i], s.t[0] * in.hr.c[m][i] * (1 + 1e-7));
    }
}

TEST(Power, ZeroResidualBudget) {
  std::mt19937_64 rng(7);
  auto in = random_instance(rng, 1);
  // Choose F so that processing consumes the whole harvest of RSU 0.
  const double t0 = in.s.t[0];
  in.s.F[0][0] = std::cbrt(t0 * in.hr.c[0][0] / (in.cfg.kappa * (in.cfg.T - t0)));
  const auto r = solve_power(in.s, in.hr, in.ch, in.cfg);
  EXPECT_NEAR(r.p[0][0], 0.0, 1e-12);
}

TEST(Power, PowerLimitedRegime) {
  std::mt19937_64 rng(8);
  auto in = random_instance(rng, 2);
  in.s.F = make_per_rsu(2, 0.0);
  for (auto& pr : in.hr.c) pr = {1.0, 1.0};
  const auto r = solve_power(in.s, in.hr, in.ch, in.cfg);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(r.p[m][i], in.cfg.P_rsu_max[m][i]);
  EXPECT_NEAR(r.certificate.beta_sum, 1.0, 1e-12);
  EXPECT_LE(r.certificate.stationarity_residual, 1e-9);
}

TEST(Power, BoundaryMatchesConicAndKkt) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(rng, 2, trial % 5 == 4 ? AccessMode::kTdma : AccessMode::kRsma);
    const auto r = solve_power(in.s, in.hr, in.ch, in.cfg);
    auto s = in.s;
    s.p = r.p;
    const auto v = validate_power(s, in.hr, in.ch, in.cfg);
    ASSERT_EQ(v.status, conic::SolveStatus::kOptimal) << v.diagnostics;
    EXPECT_LE(v.relative_gap, 1e-6) << "trial " << trial;
    EXPECT_TRUE(v.boundary) << "trial " << trial;
    const auto& dc = r.certificate;
    EXPECT_LE(dc.stationarity_residual, 1e-5);
    EXPECT_LE(dc.complementarity_residual, 1e-5);
    EXPECT_LE(dc.closed_form_residual, 1e-5);
    EXPECT_NEAR(dc.beta_sum, 1.0, 1e-6);
    for (std::size_t m = 0; m < 2; ++m)
      for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_GE(dc.lambda[m][i], 0.0);
        EXPECT_GE(dc.beta[m][i], 0.0);
        EXPECT_GE(dc.nu[m][i], 0.0);
      }
  }
}

TEST(Power, InteriorPointFailsCertificate) {
  std::mt19937_64 rng(10);
  auto in = random_instance(rng, 1);
  const auto r = solve_power(in.s, in.hr, in.ch, in.cfg);
  auto s = in.s;
  s.p = r.p;
  s.p[0][0] *= 0.5;
  const auto dc = reconstruct_duals(s, in.hr, in.ch, in.cfg);
  EXPECT_GT(dc.stationarity_residual, 0.5);
}

TEST(Power, TiedPairsShareDualWeight) {
  std::mt19937_64 rng(11);
  auto in = random_instance(rng, 2);
  in.ch.gt[1] = in.ch.gt[0];
  in.hr.c[1] = in.hr.c[0];
  in.s.F[1] = in.s.F[0];
  in.s.t[2] = in.s.t[1];
  in.s.role = default_roles(in.s.theta, in.ch);
  const auto r = solve_power(in.s, in.hr, in.ch, in.cfg);
  EXPECT_EQ(r.certificate.argmin_pairs.size(), 2u);
  EXPECT_NEAR(r.certificate.beta[0][0], 0.25, 1e-15);
  EXPECT_NEAR(r.certificate.beta_sum, 1.0, 1e-12);
}
