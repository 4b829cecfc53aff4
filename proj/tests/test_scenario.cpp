#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "risrsma/config.hpp"
#include "risrsma/scenario.hpp"

using namespace risrsma;

namespace {

std::string default_path() { return std::string(RISRSMA_CONFIG_DIR) + "/default.json"; }

}  // namespace

TEST(Config, DefaultPresetValues) {
  const auto cfg = load_scenario_file(default_path());
  EXPECT_EQ(cfg.M, 2);
  EXPECT_EQ(cfg.N, 30);
  EXPECT_DOUBLE_EQ(cfg.B, 1e5);
  EXPECT_DOUBLE_EQ(cfg.T, 1.0);
  EXPECT_DOUBLE_EQ(cfg.kappa, 1e-28);
  EXPECT_NEAR(cfg.P_max, std::pow(10.0, 0.4), 1e-12);
  EXPECT_NEAR(cfg.sigma2, std::pow(10.0, -3.8), 1e-18);
  EXPECT_DOUBLE_EQ(cfg.F_max[1][1], 1.8e7);
  EXPECT_DOUBLE_EQ(cfg.f_bits[0][0], 1000.0);
  EXPECT_DOUBLE_EQ(cfg.ris_link.intercept_db, 35.6);
  EXPECT_DOUBLE_EQ(cfg.direct_link.slope_db, 36.7);
  EXPECT_FALSE(cfg.pathloss_overridden);
}

TEST(Config, EmptyTextNamesMissingField) {
  try {
    load_scenario("");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "missing required field M");
  }
}

TEST(Config, RhoOutOfRange) {
  try {
    load_scenario(R"({"M": 2, "rho": 1.3})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_STREQ(e.what(), "rho out of [0,1]");
  }
}

TEST(Config, RejectsUnknownKeysAndBadSyntax) {
  EXPECT_THROW(load_scenario(R"({"M": 2, "bandwidth": 3})"), ConfigError);
  EXPECT_THROW(load_scenario(R"({"M": 2, "ao": {"imax": 3}})"), ConfigError);
  EXPECT_THROW(load_scenario(R"({"M": 2,)"), ConfigError);
  EXPECT_THROW(load_scenario(R"({"M": 2, "T": -1})"), ConfigError);
  EXPECT_THROW(load_scenario(R"({"M": 2, "kappa": 0})"), ConfigError);
}

TEST(Config, DefaultsAreRecordedAndOverridesEchoed) {
  const auto cfg = load_scenario(R"({"M": 1, "pathloss": {"ris_link": {"intercept_db": 30}}})");
  EXPECT_TRUE(cfg.pathloss_overridden);
  EXPECT_NE(std::find(cfg.defaulted.begin(), cfg.defaulted.end(), "N"), cfg.defaulted.end());
  const auto j = to_json(cfg);
  EXPECT_TRUE(j["pathloss"]["overridden"].get<bool>());
  EXPECT_DOUBLE_EQ(j["pathloss"]["ris_link"]["intercept_db"].get<double>(), 30.0);
}

TEST(Config, PerRsuArrays) {
  const auto cfg = load_scenario(R"({"M": 2, "F_max": [[1e6, 2e6], [3e6, 4e6]], "P_rsu_max_dbm": 10})");
  EXPECT_DOUBLE_EQ(cfg.F_max[1][0], 3e6);
  EXPECT_NEAR(cfg.P_rsu_max[0][1], 0.01, 1e-15);
  EXPECT_THROW(load_scenario(R"({"M": 2, "F_max": [[1e6, 2e6]]})"), ConfigError);
}

TEST(Config, HashIgnoresSeed) {
  auto a = load_scenario(R"({"M": 2, "seed": 1})");
  auto b = load_scenario(R"({"M": 2, "seed": 9})");
  auto c = load_scenario(R"({"M": 2, "N": 10})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(PathLoss, TableValues) {
  const ScenarioConfig cfg = default_scenario();
  EXPECT_NEAR(path_loss_db(cfg, LinkModel::kRisLink, 1.0), 35.6, 1e-12);
  EXPECT_NEAR(path_loss_db(cfg, LinkModel::kRisLink, 10.0), 57.6, 1e-12);
  EXPECT_NEAR(path_loss_db(cfg, LinkModel::kDirectLink, 10.0), 69.3, 1e-12);
  EXPECT_THROW(path_loss_db(cfg, LinkModel::kDirectLink, 0.0), std::invalid_argument);
  EXPECT_THROW(path_loss_db(cfg, LinkModel::kDirectLink, -2.0), std::invalid_argument);
}

TEST(PathLoss, StrictlyIncreasing) {
  const ScenarioConfig cfg = default_scenario();
  for (auto link : {LinkModel::kRisLink, LinkModel::kDirectLink}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double d = 0.5; d < 500.0; d *= 1.07) {
      const double pl = path_loss_db(cfg, link, d);
      EXPECT_GT(pl, prev);
      prev = pl;
    }
  }
}

TEST(Geometry, RsusInsideRegions) {
  const ScenarioConfig cfg = default_scenario(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto geo = place_nodes(cfg, seed);
    for (std::size_t m = 0; m < 3; ++m)
      for (const auto& p : geo.rsu[m]) {
        EXPECT_LE(distance(p, cfg.positions.pair_centers[m]), cfg.positions.radius + 1e-12);
        EXPECT_GT(distance(p, geo.dc), 0.0);
        EXPECT_GT(distance(p, geo.ris), 0.0);
      }
  }
}

TEST(Channels, Deterministic) {
  const ScenarioConfig cfg = default_scenario();
  const auto a = realize(cfg, 42);
  const auto b = realize(cfg, 42);
  EXPECT_EQ(a.channels.G, b.channels.G);
  EXPECT_EQ(a.channels.Gt, b.channels.Gt);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(a.channels.g[m][i], b.channels.g[m][i]);
      EXPECT_EQ(a.channels.h[m][i], b.channels.h[m][i]);
      EXPECT_EQ(a.channels.ht[m][i], b.channels.ht[m][i]);
    }
  const auto c = realize(cfg, 43);
  EXPECT_NE(a.channels.G, c.channels.G);
}

TEST(Channels, PrefixCommonAcrossElementCount) {
  auto small = load_scenario(R"({"M": 2, "N": 10})");
  auto large = load_scenario(R"({"M": 2, "N": 30})");
  const auto a = realize(small, 5).channels;
  const auto b = realize(large, 5).channels;
  EXPECT_EQ(a.G, b.G.head(10));
  EXPECT_EQ(a.h[1][0], b.h[1][0].head(10));
  EXPECT_EQ(a.g[0][1], b.g[0][1]);
}

TEST(Channels, LosLimitGivesExactPathGain) {
  auto cfg = load_scenario(R"({"M": 1, "N": 4, "fading": {"model": "los"}})");
  const auto r = realize(cfg, 3);
  const double pl = path_loss_db(cfg.ris_link, distance(r.geometry.dc, r.geometry.ris));
  for (Eigen::Index n = 0; n < 4; ++n) EXPECT_NEAR(std::abs(r.channels.G(n)), std::sqrt(path_gain(pl)), 1e-15);
  const double pld = path_loss_db(cfg.direct_link, distance(r.geometry.dc, r.geometry.rsu[0][1]));
  EXPECT_NEAR(std::abs(r.channels.g[0][1]), std::sqrt(path_gain(pld)), 1e-15);

  // Infinite Rician factor on the default model has the same magnitude.
  FadingConfig f;
  f.rician_k_db = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(1);
  EXPECT_NEAR(std::abs(detail::draw_coefficient(rng, f, true, 40.0)), std::sqrt(1e-4), 1e-15);
}

TEST(Channels, MonteCarloMeanPowerMatchesPathGain) {
  const double pl = 57.6;
  for (auto model : {FadingModel::kRician, FadingModel::kRayleigh}) {
    FadingConfig f;
    f.model = model;
    std::mt19937_64 rng(99);
    for (bool ris : {true, false}) {
      double acc = 0.0;
      const int draws = 10000;
      for (int k = 0; k < draws; ++k) acc += std::norm(detail::draw_coefficient(rng, f, ris, pl));
      EXPECT_NEAR(acc / draws / path_gain(pl), 1.0, 0.05);
    }
  }
}

TEST(Channels, ReciprocalFlagCopiesDownlink) {
  auto cfg = load_scenario(R"({"M": 1, "N": 3, "fading": {"reciprocal": true}})");
  const auto ch = realize(cfg, 8).channels;
  EXPECT_EQ(ch.G, ch.Gt);
  EXPECT_EQ(ch.h[0][1], ch.ht[0][1]);
  EXPECT_EQ(ch.g[0][0], ch.gt[0][0]);
}

TEST(EquivalentGain, SmallCases) {
  CVector one(1);
  one(0) = 1.0;
  EXPECT_NEAR(std::abs(equivalent_gain({0.0}, one, 1.0) - Complex(2.0, 0.0)), 0.0, 1e-15);
  const CVector zero = CVector::Zero(3);
  const Complex d(0.3, -0.7);
  EXPECT_EQ(equivalent_gain({1.0, 2.0, 3.0}, zero, d), d);
  EXPECT_THROW(equivalent_gain({1.0}, zero, d), std::invalid_argument);
}

TEST(EquivalentGain, MatchesElementwiseOracleAndLiftedForm) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  CVector c(4);
  std::vector<double> th(4);
  for (int n = 0; n < 4; ++n) {
    c(n) = Complex(nd(rng), nd(rng));
    th[static_cast<std::size_t>(n)] = ph(rng);
  }
  const Complex d(nd(rng), nd(rng));
  double re = d.real(), im = d.imag();
  for (int n = 0; n < 4; ++n) {
    const double cs = std::cos(th[static_cast<std::size_t>(n)]), sn = std::sin(th[static_cast<std::size_t>(n)]);
    re += cs * c(n).real() - sn * c(n).imag();
    im += cs * c(n).imag() + sn * c(n).real();
  }
  const Complex g = equivalent_gain(th, c, d);
  EXPECT_NEAR(g.real(), re, 1e-12);
  EXPECT_NEAR(g.imag(), im, 1e-12);
  CVector lifted(5);
  lifted.head(4) = c;
  lifted(4) = d;
  const Complex via_lift = lifted_phase_vector(th).dot(lifted);  // v^H H
  EXPECT_NEAR(std::abs(via_lift - g), 0.0, 1e-12);
}

TEST(EquivalentGain, CophasingIsOptimalOnFineGrid) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    CVector c(1);
    c(0) = Complex(nd(rng), nd(rng));
    const Complex d(nd(rng), nd(rng));
    double best = -1.0, best_th = 0.0;
    for (int k = 0; k < 3600; ++k) {
      const double th = k * kTwoPi / 3600.0;
      const double v = std::abs(equivalent_gain({th}, c, d));
      if (v > best) {
        best = v;
        best_th = th;
      }
    }
    const double star = cophase_angles(c, d)[0];
    double diff = std::abs(star - best_th);
    diff = std::min(diff, kTwoPi - diff);
    EXPECT_LE(diff, kTwoPi / 3600.0 + 1e-12);
    EXPECT_NEAR(std::abs(equivalent_gain({star}, c, d)), std::abs(c(0)) + std::abs(d), 1e-12);
  }
}

TEST(Channels, CascadeAndWithoutRis) {
  const ScenarioConfig cfg = default_scenario();
  const auto ch = realize(cfg, 2).channels;
  const CVector dc = ch.downlink_cascade(1, 0);
  EXPECT_NEAR(std::abs(dc(3) - std::conj(ch.h[1][0](3)) * ch.G(3)), 0.0, 1e-20);
  const auto bare = ch.without_ris();
  EXPECT_EQ(bare.uplink_cascade(0, 1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(bare.gt[0][1], ch.gt[0][1]);
}
