#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "risrsma/common.hpp"
#include "risrsma/config.hpp"

namespace risrsma {

enum class LinkModel { kRisLink, kDirectLink };

/// Large-scale attenuation in dB: intercept + slope * log10(d).
inline double path_loss_db(const PathLoss& model, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("path loss distance must be positive");
  return model.intercept_db + model.slope_db * std::log10(d);
}

inline double path_loss_db(const ScenarioConfig& cfg, LinkModel link, double d) {
  return path_loss_db(link == LinkModel::kRisLink ? cfg.ris_link : cfg.direct_link, d);
}

inline double path_gain(double pl_db) { return std::pow(10.0, -pl_db / 10.0); }

struct Geometry {
  Point dc;
  Point ris;
  PerRsu<Point> rsu;
};

/// Independent generator per (purpose, index). Streams are keyed so that
/// changing N only extends the per-element sequences, which keeps draws
/// common across values of N for a fixed seed.
enum class Stream : std::uint64_t {
  kPlacement = 1,
  kDownlinkRisDc = 2,
  kDownlinkRisRsu = 3,
  kDownlinkDirect = 4,
  kUplinkRisDc = 5,
  kUplinkRisRsu = 6,
  kUplinkDirect = 7,
  kPhases = 8,
  kRandomization = 9,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform placement of each RSU inside its pair's disk.
inline Geometry place_nodes(const ScenarioConfig& cfg, std::uint64_t seed) {
  Geometry geo;
  geo.dc = cfg.positions.dc;
  geo.ris = cfg.positions.ris;
  geo.rsu.resize(cfg.pairs());
  auto rng = make_stream(seed, Stream::kPlacement);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t m = 0; m < cfg.pairs(); ++m) {
    const Point c = cfg.positions.pair_centers[m];
    for (int i = 0; i < 2; ++i) {
      Point p;
      do {
        const double r = cfg.positions.radius * std::sqrt(u01(rng));
        const double phi = kTwoPi * u01(rng);
        p = {c.x + r * std::cos(phi), c.y + r * std::sin(phi)};
      } while (distance(p, geo.dc) <= 0.0 || distance(p, geo.ris) <= 0.0 ||
               (i == 1 && distance(p, geo.rsu[m][0]) <= 0.0));
      geo.rsu[m][static_cast<std::size_t>(i)] = p;
    }
  }
  return geo;
}

struct ChannelSet {
  // Downlink (DC -> RSU): direct g, DC->RIS G, RIS->RSU h.
  PerRsu<Complex> g;
  CVector G;
  PerRsu<CVector> h;
  // Uplink (RSU -> DC): direct gt, RIS->DC Gt, RSU->RIS ht.
  PerRsu<Complex> gt;
  CVector Gt;
  PerRsu<CVector> ht;

  std::size_t pairs() const { return g.size(); }
  Eigen::Index elements() const { return G.size(); }

  /// Per-element product of the reflected downlink path, conj(h_n) G_n.
  CVector downlink_cascade(std::size_t m, std::size_t i) const { return h[m][i].conjugate().cwiseProduct(G); }
  /// Per-element product of the reflected uplink path, conj(Gt_n) ht_n.
  CVector uplink_cascade(std::size_t m, std::size_t i) const { return Gt.conjugate().cwiseProduct(ht[m][i]); }

  /// Lifted channel H = [cascade; direct] of length N + 1.
  CVector lifted_downlink(std::size_t m, std::size_t i) const {
    CVector out(elements() + 1);
    out.head(elements()) = downlink_cascade(m, i);
    out(elements()) = g[m][i];
    return out;
  }
  CVector lifted_uplink(std::size_t m, std::size_t i) const {
    CVector out(elements() + 1);
    out.head(elements()) = uplink_cascade(m, i);
    out(elements()) = gt[m][i];
    return out;
  }

  /// Copy with every reflected path removed.
  ChannelSet without_ris() const {
    ChannelSet c = *this;
    c.G.setZero();
    c.Gt.setZero();
    for (auto& pr : c.h)
      for (auto& v : pr) v.setZero();
    for (auto& pr : c.ht)
      for (auto& v : pr) v.setZero();
    return c;
  }
};

namespace detail {

/// Unit-mean-power small-scale coefficient.
inline Complex small_scale(std::mt19937_64& rng, bool rician, double k_linear) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (!rician) return {nd(rng), nd(rng)};
  // Both draws are always consumed so the stream layout does not depend on K.
  const double phi = kTwoPi * u01(rng);
  const Complex scatter(nd(rng), nd(rng));
  if (std::isinf(k_linear)) return std::polar(1.0, phi);
  return std::sqrt(k_linear / (k_linear + 1.0)) * std::polar(1.0, phi) + std::sqrt(1.0 / (k_linear + 1.0)) * scatter;
}

inline Complex draw_coefficient(std::mt19937_64& rng, const FadingConfig& fading, bool ris_link, double pl_db) {
  const double amp = std::sqrt(path_gain(pl_db));
  switch (fading.model) {
    case FadingModel::kLos: return amp * detail::small_scale(rng, true, std::numeric_limits<double>::infinity());
    case FadingModel::kRayleigh: return amp * detail::small_scale(rng, false, 0.0);
    case FadingModel::kRician:
      if (ris_link) return amp * detail::small_scale(rng, true, std::pow(10.0, fading.rician_k_db / 10.0));
      return amp * detail::small_scale(rng, false, 0.0);
  }
  return {};
}

inline CVector draw_vector(std::mt19937_64& rng, const FadingConfig& fading, Eigen::Index n, double pl_db) {
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = draw_coefficient(rng, fading, true, pl_db);
  return v;
}

}  // namespace detail

/// Draws every link from per-link streams derived from the seed.
inline ChannelSet generate_channels(const ScenarioConfig& cfg, const Geometry& geo, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(cfg.N);
  const std::size_t pairs = cfg.pairs();
  ChannelSet ch;
  const double pl_dc_ris = path_loss_db(cfg.ris_link, distance(geo.dc, geo.ris));
  {
    auto rng = make_stream(seed, Stream::kDownlinkRisDc);
    ch.G = detail::draw_vector(rng, cfg.fading, n, pl_dc_ris);
  }
  ch.g.resize(pairs);
  ch.h.resize(pairs);
  for (std::size_t m = 0; m < pairs; ++m) {
    for (std::size_t i = 0; i < 2; ++i) {
      const std::uint64_t idx = 2 * m + i;
      const double pl_ris = path_loss_db(cfg.ris_link, distance(geo.ris, geo.rsu[m][i]));
      const double pl_dir = path_loss_db(cfg.direct_link, distance(geo.dc, geo.rsu[m][i]));
      auto rng_h = make_stream(seed, Stream::kDownlinkRisRsu, idx);
      ch.h[m][i] = detail::draw_vector(rng_h, cfg.fading, n, pl_ris);
      auto rng_g = make_stream(seed, Stream::kDownlinkDirect, idx);
      ch.g[m][i] = detail::draw_coefficient(rng_g, cfg.fading, false, pl_dir);
    }
  }
  if (cfg.fading.reciprocal) {
    ch.gt = ch.g;
    ch.Gt = ch.G;
    ch.ht = ch.h;
    return ch;
  }
  {
    auto rng = make_stream(seed, Stream::kUplinkRisDc);
    ch.Gt = detail::draw_vector(rng, cfg.fading, n, pl_dc_ris);
  }
  ch.gt.resize(pairs);
  ch.ht.resize(pairs);
  for (std::size_t m = 0; m < pairs; ++m) {
    for (std::size_t i = 0; i < 2; ++i) {
      const std::uint64_t idx = 2 * m + i;
      const double pl_ris = path_loss_db(cfg.ris_link, distance(geo.ris, geo.rsu[m][i]));
      const double pl_dir = path_loss_db(cfg.direct_link, distance(geo.dc, geo.rsu[m][i]));
      auto rng_h = make_stream(seed, Stream::kUplinkRisRsu, idx);
      ch.ht[m][i] = detail::draw_vector(rng_h, cfg.fading, n, pl_ris);
      auto rng_g = make_stream(seed, Stream::kUplinkDirect, idx);
      ch.gt[m][i] = detail::draw_coefficient(rng_g, cfg.fading, false, pl_dir);
    }
  }
  return ch;
}

/// Geometry and channels for one Monte-Carlo trial.
struct Realization {
  Geometry geometry;
  ChannelSet channels;
};

inline Realization realize(const ScenarioConfig& cfg, std::uint64_t seed) {
  Realization r;
  r.geometry = place_nodes(cfg, seed);
  r.channels = generate_channels(cfg, r.geometry, seed);
  return r;
}

/// sum_n e^{j theta_n} cascade_n + direct. With theta_n = arg(direct) - arg(cascade_n)
/// every reflected term is co-phased with the direct one.
inline Complex equivalent_gain(const std::vector<double>& theta, const CVector& cascade, Complex direct) {
  if (static_cast<Eigen::Index>(theta.size()) != cascade.size())
    throw std::invalid_argument("phase vector and cascade lengths differ");
  Complex s = direct;
  for (Eigen::Index n = 0; n < cascade.size(); ++n) s += std::polar(1.0, theta[static_cast<std::size_t>(n)]) * cascade(n);
  return s;
}

/// Lifted phase vector v = [e^{-j theta_1}, ..., e^{-j theta_N}, 1]^T, so that
/// v^H [cascade; direct] equals equivalent_gain(theta, cascade, direct).
inline CVector lifted_phase_vector(const std::vector<double>& theta) {
  CVector v(static_cast<Eigen::Index>(theta.size()) + 1);
  for (std::size_t n = 0; n < theta.size(); ++n) v(static_cast<Eigen::Index>(n)) = std::polar(1.0, -theta[n]);
  v(v.size() - 1) = 1.0;
  return v;
}

/// Co-phasing angles theta_n = arg(direct) - arg(cascade_n) in [0, 2pi).
inline std::vector<double> cophase_angles(const CVector& cascade, Complex direct) {
  std::vector<double> theta(static_cast<std::size_t>(cascade.size()));
  for (Eigen::Index n = 0; n < cascade.size(); ++n)
    theta[static_cast<std::size_t>(n)] = wrap_phase(std::arg(direct) - std::arg(cascade(n)));
  return theta;
}

inline std::vector<double> random_phases(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<double> theta(n);
  for (auto& t : theta) t = wrap_phase(u(rng));
  return theta;
}

}  // namespace risrsma
