#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "risrsma/phys_model.hpp"

using namespace risrsma;

namespace {

const NlehParams kNleh{150.0, 0.014, 0.024};

}  // namespace

TEST(ReceivedPower, BasicCases) {
  CVector one(1);
  one(0) = 1.0;
  EXPECT_EQ(received_power(0.0, {0.3}, one, 1.0), 0.0);
  EXPECT_NEAR(received_power(1.0, {0.0}, one, 1.0), 4.0, 1e-15);
}

TEST(ReceivedPower, MatchesDirectEvaluation) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const int n = 6;
  CVector h(n), G(n);
  std::vector<double> th(n);
  for (int k = 0; k < n; ++k) {
    h(k) = Complex(nd(rng), nd(rng));
    G(k) = Complex(nd(rng), nd(rng));
    th[static_cast<std::size_t>(k)] = std::abs(nd(rng));
  }
  const Complex g(nd(rng), nd(rng));
  // p0 |h^H Theta G + g|^2 with Theta = diag(e^{j theta}).
  Complex s = g;
  for (int k = 0; k < n; ++k) s += std::conj(h(k)) * std::exp(Complex(0.0, th[static_cast<std::size_t>(k)])) * G(k);
  const CVector cascade = h.conjugate().cwiseProduct(G);
  EXPECT_NEAR(received_power(2.5, th, cascade, g), 2.5 * std::norm(s), 1e-12 * (1.0 + std::norm(s)));
}

TEST(Harvest, ZeroInputZeroOutput) {
  for (double t0 : {0.0, 0.3, 1.0}) EXPECT_EQ(harvested_energy(t0, 0.0, kNleh), 0.0);
}

TEST(Harvest, SaturationLimit) {
  EXPECT_NEAR(harvested_energy(0.7, 1e3, kNleh), 0.7 * 0.024, 1e-15);
}

TEST(Harvest, HalfSaturationExample) {
  const double omega = nleh_omega(kNleh);
  EXPECT_NEAR(omega, 0.109097, 1e-6);
  EXPECT_NEAR(harvested_energy(1.0, 0.014, kNleh), 1.0531e-2, 1e-6);
  EXPECT_NEAR(harvested_energy(1.0, 0.014, kNleh), harvested_energy_reference(1.0, 0.014, kNleh), 1e-15);
}

TEST(Harvest, StableFormMatchesReference) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int k = 0; k < 500; ++k) {
    const double p = u(rng);
    EXPECT_NEAR(harvested_energy(1.0, p, kNleh), harvested_energy_reference(1.0, p, kNleh), 1e-14);
  }
  // Far below the knee the stable form keeps relative precision.
  const double tiny = 1e-12;
  const double e = harvested_energy(1.0, tiny, kNleh);
  EXPECT_GT(e, 0.0);
  const double slope = kNleh.Lambda * kNleh.a / (1.0 + std::exp(kNleh.a * kNleh.b));
  EXPECT_NEAR(e / (slope * tiny), 1.0, 1e-6);
}

TEST(Harvest, MonotoneBoundedAndLinearInTime) {
  double prev = 0.0;
  for (double p = 0.0; p < 0.2; p += 1e-4) {
    const double r = harvest_rate(p, kNleh);
    EXPECT_GE(r, prev);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, kNleh.Lambda);
    prev = r;
    EXPECT_NEAR(harvested_energy(0.6, p, kNleh), 2.0 * harvested_energy(0.3, p, kNleh), 1e-16);
  }
}

TEST(Processing, Examples) {
  const auto z = processing(0.0, 1000.0, 0.1, 1.0, 1e-28);
  EXPECT_EQ(z.rate, 0.0);
  EXPECT_EQ(z.volume, 0.0);
  EXPECT_EQ(z.energy, 0.0);
  const auto p = processing(1.8e7, 1000.0, 0.1, 1.0, 1e-28);
  EXPECT_NEAR(p.rate, 1.8e4, 1e-9);
  EXPECT_NEAR(p.volume, 1.62e4, 1e-9);
  EXPECT_NEAR(p.energy, 5.2488e-7, 1e-18);
  const auto full = processing(1.8e7, 1000.0, 1.0, 1.0, 1e-28);
  EXPECT_EQ(full.volume, 0.0);
  EXPECT_EQ(full.energy, 0.0);
}

TEST(Sinr, Examples) {
  const double s2 = 1e-3;
  const auto a = sinr_triplet(0.5, s2, s2, s2);
  EXPECT_NEAR(a.split_first, 0.2, 1e-15);
  EXPECT_NEAR(a.partner, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.split_second, 0.5, 1e-15);
  const auto z = sinr_triplet(0.5, 0.0, 0.0, s2);
  EXPECT_EQ(z.split_first, 0.0);
  EXPECT_EQ(z.partner, 0.0);
  EXPECT_EQ(z.split_second, 0.0);
  const auto one = sinr_triplet(1.0, 3.0 * s2, 0.0, s2);
  EXPECT_NEAR(one.split_first, 3.0, 1e-15);
  EXPECT_EQ(one.partner, 0.0);
  EXPECT_EQ(one.split_second, 0.0);
}

TEST(PairVolume, TelescopingExample) {
  const double s2 = 0.01;
  const auto sinr = sinr_triplet(0.5, s2, s2, s2);
  EXPECT_NEAR(pair_volume(1.0, 1.0, s2, s2, s2, 0.0), std::log2(3.0), 1e-14);
  EXPECT_NEAR(pair_volume_streams(1.0, 1.0, sinr, 0.0), std::log2(3.0), 1e-14);
  EXPECT_EQ(pair_volume(0.0, 1e5, 1.0, 1.0, s2, 42.0), 42.0);
  EXPECT_EQ(pair_volume_streams(0.0, 1e5, sinr, 42.0), 42.0);
}

TEST(PairVolume, StreamAndAggregateFormsAgree) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> ex(-12.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double rho = u01(rng);
    const double s2 = std::pow(10.0, ex(rng));
    const double pi = std::pow(10.0, ex(rng)), pj = std::pow(10.0, ex(rng));
    const double d = 1e4 * u01(rng);
    const double agg = pair_volume(0.4, 1e5, pi, pj, s2, d);
    const double str = pair_volume_streams(0.4, 1e5, sinr_triplet(rho, pi, pj, s2), d);
    EXPECT_LE(std::abs(agg - str), 1e-10 * std::abs(agg));
  }
}

class EvaluateFixture : public ::testing::Test {
 protected:
  ScenarioConfig cfg = default_scenario(2);
  ChannelSet ch = realize(cfg, 7).channels;
};

TEST_F(EvaluateFixture, ZeroAllocationIsFeasibleWithZeroObjective) {
  const auto s = zero_state(cfg);
  const auto ev = evaluate_objective(s, ch, cfg);
  EXPECT_EQ(ev.ell, 0.0);
  EXPECT_TRUE(ev.report.feasible());
}

TEST_F(EvaluateFixture, PowerViolationIsNamed) {
  auto s = zero_state(cfg);
  s.p[0][0] = 2.0 * cfg.P_rsu_max[0][0];
  const auto ev = evaluate_objective(s, ch, cfg);
  EXPECT_FALSE(ev.report.feasible());
  const auto* e = ev.report.find("rsu_power[0][0]");
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(e->slack, -cfg.P_rsu_max[0][0], 1e-15);
  bool listed = false;
  for (const auto& v : ev.report.violations()) listed = listed || v.name == "rsu_power[0][0]";
  EXPECT_TRUE(listed);
}

TEST_F(EvaluateFixture, VolumeIsSumOfPartsAndRoleInvariant) {
  auto s = zero_state(cfg);
  s.t = {0.5, 0.25, 0.25};
  s.p0 = cfg.P_max;
  s.p = make_per_rsu(2, 1e-3);
  s.F = make_per_rsu(2, 1e6);
  const auto base = evaluate_objective(s, ch, cfg);
  for (const auto& pe : base.pairs)
    EXPECT_EQ(pe.D, pe.d_proc[0] + pe.d_tr[0] + pe.d_proc[1] + pe.d_tr[1]);
  auto swapped = s;
  swapped.role = {1, 1};
  auto cfg2 = cfg;
  cfg2.rho = 0.2;
  const auto ev2 = evaluate_objective(swapped, ch, cfg2);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_NEAR(ev2.pairs[m].D, base.pairs[m].D, 1e-10 * base.pairs[m].D);
    const double agg = pair_volume(0.25, cfg.B, base.pairs[m].p_bar[0], base.pairs[m].p_bar[1], cfg.sigma2,
                                   base.pairs[m].d_proc[0] + base.pairs[m].d_proc[1]);
    EXPECT_NEAR(base.pairs[m].D, agg, 1e-10 * agg);
  }
  EXPECT_NE(ev2.pairs[0].rate[0], base.pairs[0].rate[0]);
}

TEST_F(EvaluateFixture, VolumeMonotoneInResources) {
  auto s = zero_state(cfg);
  s.t = {0.5, 0.25, 0.25};
  s.p0 = cfg.P_max;
  s.p = make_per_rsu(2, 1e-3);
  s.F = make_per_rsu(2, 1e6);
  const double D0 = evaluate_objective(s, ch, cfg).pairs[0].D;
  auto more_f = s;
  more_f.F[0][1] *= 2.0;
  EXPECT_GT(evaluate_objective(more_f, ch, cfg).pairs[0].D, D0);
  auto more_t = s;
  more_t.t[1] += 0.1;
  EXPECT_GT(evaluate_objective(more_t, ch, cfg).pairs[0].D, D0);
  auto more_p = s;
  more_p.p[0][0] *= 2.0;
  EXPECT_GT(evaluate_objective(more_p, ch, cfg).pairs[0].D, D0);
  auto more_t0 = s;
  more_t0.t[0] += 0.1;
  EXPECT_LT(evaluate_objective(more_t0, ch, cfg).pairs[0].D, D0);
}

TEST_F(EvaluateFixture, EnergyAccounting) {
  auto s = zero_state(cfg);
  s.t = {0.5, 0.25, 0.25};
  s.p0 = cfg.P_max;
  s.p[1][0] = 0.05;
  const auto ev = evaluate_objective(s, ch, cfg);
  const auto* e = ev.report.find("energy[1][0]");
  ASSERT_NE(e, nullptr);
  EXPECT_NEAR(e->slack, ev.pairs[1].e_nleh[0] - 0.25 * 0.05, 1e-18);
  EXPECT_FALSE(ev.report.feasible());
}

TEST_F(EvaluateFixture, TdmaUsesSubslots) {
  auto s = zero_state(cfg, AccessMode::kTdma);
  s.t = {0.5, 0.25, 0.25};
  s.tdma_share = {0.2, 0.5};
  s.p = make_per_rsu(2, 1e-3);
  const auto ev = evaluate_objective(s, ch, cfg);
  EXPECT_NEAR(ev.pairs[0].e_tr[0], 0.05 * 1e-3, 1e-18);
  EXPECT_NEAR(ev.pairs[0].e_tr[1], 0.2 * 1e-3, 1e-18);
  EXPECT_NEAR(ev.pairs[0].d_tr[0], 0.05 * cfg.B * log2_1p(ev.pairs[0].p_bar[0] / cfg.sigma2), 1e-12);
}

TEST_F(EvaluateFixture, RejectsDimensionMismatch) {
  auto s = zero_state(cfg);
  s.t.pop_back();
  EXPECT_THROW(evaluate_objective(s, ch, cfg), std::invalid_argument);
}
