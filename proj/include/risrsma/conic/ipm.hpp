#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "risrsma/conic/standard_form.hpp"

namespace risrsma::conic {

namespace detail {

inline double max_step_lp(const RVector& x, const RVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

/// Largest a with X + a dX PSD; 0 when X itself is not positive definite.
inline double max_step_psd(const RMatrix& x, const RMatrix& dx) {
  Eigen::LLT<RMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  RMatrix s = llt.matrixL().solve(dx);
  s = llt.matrixL().solve(s.transpose().eval());
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(s, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

/// Infeasible primal-dual path following with the HKM search direction and
/// Mehrotra predictor-corrector steps.
class HkmSolver {
 public:
  HkmSolver(const StandardForm& sf, SolverOptions opt) : sf_(sf), opt_(opt) {
    m_ = static_cast<Eigen::Index>(sf_.rows.size());
    cols_.resize(sf_.n_lp);
    in_block_.resize(sf_.block_dims.size());
    for (std::size_t i = 0; i < sf_.rows.size(); ++i) {
      for (const auto& [j, v] : sf_.rows[i].lp) cols_[j].emplace_back(static_cast<Eigen::Index>(i), v);
      for (const auto& bc : sf_.rows[i].blocks) in_block_[bc.block].push_back({static_cast<Eigen::Index>(i), &bc});
    }
    b_.resize(m_);
    for (Eigen::Index i = 0; i < m_; ++i) b_(i) = sf_.rows[static_cast<std::size_t>(i)].b;
    nu_ = static_cast<double>(sf_.n_lp);
    for (auto d : sf_.block_dims) nu_ += static_cast<double>(d);
  }

  struct Result {
    SolveStatus status = SolveStatus::kNumericalFailure;
    RVector x;
    std::vector<RMatrix> X;
    double pres = 0, dres = 0, gap = 0;
    int iterations = 0;
    std::string diagnostics;
  };

  Result run() {
    Result res;
    initialise();
    const double bnorm = b_.norm();
    double cnorm_sq = sf_.c_lp.squaredNorm();
    for (const auto& c : sf_.c_blocks) cnorm_sq += c.squaredNorm();
    const double cnorm = std::sqrt(cnorm_sq);

    int stalls = 0;
    double best_merit = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opt_.max_iterations; ++it) {
      res.iterations = it;
      RVector rp = b_ - apply_a(x_, X_);
      RVector aty_l;
      std::vector<RMatrix> aty_k;
      apply_at(y_, aty_l, aty_k);
      RVector rd_l = sf_.c_lp - z_ - aty_l;
      std::vector<RMatrix> rd_k(X_.size());
      double rd_sq = rd_l.squaredNorm();
      double ray_sq = (sf_.c_lp - rd_l).squaredNorm();
      for (std::size_t k = 0; k < X_.size(); ++k) {
        rd_k[k] = sf_.c_blocks[k] - Z_[k] - aty_k[k];
        rd_sq += rd_k[k].squaredNorm();
        ray_sq += (sf_.c_blocks[k] - rd_k[k]).squaredNorm();
      }
      double pobj = sf_.c_lp.dot(x_);
      for (std::size_t k = 0; k < X_.size(); ++k) pobj += sf_.c_blocks[k].cwiseProduct(X_[k]).sum();
      const double dobj = b_.dot(y_);

      res.pres = rp.norm() / (1.0 + bnorm);
      res.dres = std::sqrt(rd_sq) / (1.0 + cnorm);
      res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
      if (opt_.verbose)
        std::cerr << "it " << it << " pobj " << pobj << " dobj " << dobj << " pres " << res.pres << " dres "
                  << res.dres << " gap " << res.gap << "\n";
      if (res.pres <= opt_.tol && res.dres <= opt_.tol && res.gap <= opt_.tol) {
        res.status = SolveStatus::kOptimal;
        break;
      }
      const double merit = std::max({res.pres, res.dres, res.gap});
      if (merit < best_merit) {
        best_merit = merit;
        best_ = {x_, X_, res.pres, res.dres, res.gap};
      } else if (merit > 1e3 * best_merit && best_merit < 1e-4) {
        res.diagnostics = "residuals diverging; best iterate returned";
        return finish_best(res);
      }
      if (dobj > 0.0 && std::sqrt(ray_sq) / dobj < 1e-9) {
        res.status = SolveStatus::kInfeasible;
        res.diagnostics = "dual ray found: primal infeasible";
        break;
      }
      if (pobj < 0.0 && (b_ - rp).norm() / -pobj < 1e-9) {
        res.status = SolveStatus::kNumericalFailure;
        res.diagnostics = "primal ray found: problem unbounded";
        break;
      }
      if (it == opt_.max_iterations) {
        res.diagnostics = "iteration limit reached";
        return finish_best(res);
      }

      double mu = x_.dot(z_);
      for (std::size_t k = 0; k < X_.size(); ++k) mu += X_[k].cwiseProduct(Z_[k]).sum();
      mu /= nu_;

      std::vector<RMatrix> zinv(Z_.size());
      for (std::size_t k = 0; k < Z_.size(); ++k) {
        Eigen::LLT<RMatrix> llt(Z_[k]);
        if (llt.info() != Eigen::Success) {
          res.diagnostics = "dual block lost positive definiteness";
          return finish_best(res);
        }
        zinv[k] = llt.solve(RMatrix::Identity(Z_[k].rows(), Z_[k].cols()));
        zinv[k] = sym(zinv[k]);
      }

      RMatrix schur = build_schur(zinv);
      Eigen::LLT<RMatrix> chol(schur);
      if (chol.info() != Eigen::Success) {
        const double reg = 1e-13 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
        schur.diagonal().array() += reg;
        chol.compute(schur);
        if (chol.info() != Eigen::Success) {
          res.diagnostics = "Schur complement is not positive definite";
          return finish_best(res);
        }
      }

      // Predictor.
      Direction pred;
      compute_direction(chol, zinv, rp, rd_l, rd_k, 0.0, nullptr, pred);
      double ap = std::min(1.0, step_primal(pred));
      double ad = std::min(1.0, step_dual(pred));
      double mu_aff = (x_ + ap * pred.dx).dot(z_ + ad * pred.dz);
      for (std::size_t k = 0; k < X_.size(); ++k)
        mu_aff += (X_[k] + ap * pred.dX[k]).cwiseProduct(Z_[k] + ad * pred.dZ[k]).sum();
      mu_aff /= nu_;
      const double expo = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
      const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expo), 0.0, 1.0);

      // Corrector.
      Direction corr;
      compute_direction(chol, zinv, rp, rd_l, rd_k, sigma * mu, &pred, corr);
      const double gamma = 0.9 + 0.09 * std::min(ap, ad);
      ap = std::min(1.0, gamma * step_primal(corr));
      ad = std::min(1.0, gamma * step_dual(corr));
      if (ap < 1e-10 && ad < 1e-10) {
        if (++stalls >= 3) {
          res.diagnostics = "step length stagnated";
          return finish_best(res);
        }
      } else {
        stalls = 0;
      }

      x_ += ap * corr.dx;
      z_ += ad * corr.dz;
      y_ += ad * corr.dy;
      for (std::size_t k = 0; k < X_.size(); ++k) {
        X_[k] = sym(X_[k] + ap * corr.dX[k]);
        Z_[k] = sym(Z_[k] + ad * corr.dZ[k]);
      }
    }
    return finish(res);
  }

 private:
  struct BlockRow {
    Eigen::Index row;
    const RealBlockCoeff* coeff;
  };
  struct Direction {
    RVector dx, dz, dy;
    std::vector<RMatrix> dX, dZ;
  };

  Result finish(Result& res) {
    res.x = x_;
    res.X = X_;
    return res;
  }
  Result finish_best(Result& res) {
    if (best_.x.size() == 0) return finish(res);
    res.x = best_.x;
    res.X = best_.X;
    res.pres = best_.pres;
    res.dres = best_.dres;
    res.gap = best_.gap;
    return res;
  }
  struct Snapshot {
    RVector x;
    std::vector<RMatrix> X;
    double pres = 0, dres = 0, gap = 0;
  };
  Snapshot best_;

  void initialise() {
    const auto n_lp = static_cast<Eigen::Index>(sf_.n_lp);
    double max_b = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) max_b = std::max(max_b, std::abs(b_(i)));
    // Rows are equilibrated, so every row has unit norm.
    const double xi_l = std::max({10.0, std::sqrt(static_cast<double>(n_lp)),
                                  static_cast<double>(n_lp) * (1.0 + max_b) / 2.0});
    const double eta_l = std::max({10.0, std::sqrt(static_cast<double>(n_lp)), sf_.c_lp.norm()});
    x_ = RVector::Constant(n_lp, xi_l);
    z_ = RVector::Constant(n_lp, eta_l);
    y_ = RVector::Zero(m_);
    X_.clear();
    Z_.clear();
    for (std::size_t k = 0; k < sf_.block_dims.size(); ++k) {
      const auto n = sf_.block_dims[k];
      const double dn = static_cast<double>(n);
      const double xi = std::max({10.0, std::sqrt(dn), dn * (1.0 + max_b) / 2.0});
      const double eta = std::max({10.0, std::sqrt(dn), sf_.c_blocks[k].norm(), 1.0});
      X_.push_back(xi * RMatrix::Identity(n, n));
      Z_.push_back(eta * RMatrix::Identity(n, n));
    }
  }

  RVector apply_a(const RVector& x, const std::vector<RMatrix>& X) const {
    RVector out = RVector::Zero(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const auto& row = sf_.rows[static_cast<std::size_t>(i)];
      double s = 0.0;
      for (const auto& [j, v] : row.lp) s += v * x(static_cast<Eigen::Index>(j));
      for (const auto& bc : row.blocks) s += bc.inner(X[bc.block]);
      out(i) = s;
    }
    return out;
  }

  void apply_at(const RVector& y, RVector& lp, std::vector<RMatrix>& blocks) const {
    lp = RVector::Zero(static_cast<Eigen::Index>(sf_.n_lp));
    blocks.clear();
    for (auto d : sf_.block_dims) blocks.push_back(RMatrix::Zero(d, d));
    for (Eigen::Index i = 0; i < m_; ++i) {
      const auto& row = sf_.rows[static_cast<std::size_t>(i)];
      for (const auto& [j, v] : row.lp) lp(static_cast<Eigen::Index>(j)) += v * y(i);
      for (const auto& bc : row.blocks) bc.add_to(blocks[bc.block], y(i));
    }
  }

  RMatrix build_schur(const std::vector<RMatrix>& zinv) const {
    RMatrix M = RMatrix::Zero(m_, m_);
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      const double d = x_(static_cast<Eigen::Index>(j)) / z_(static_cast<Eigen::Index>(j));
      for (const auto& [r1, a1] : cols_[j])
        for (const auto& [r2, a2] : cols_[j]) M(r1, r2) += d * a1 * a2;
    }
    for (std::size_t k = 0; k < in_block_.size(); ++k) {
      const auto& rows = in_block_[k];
      const RMatrix& X = X_[k];
      const RMatrix& Zi = zinv[k];
      for (std::size_t a = 0; a < rows.size(); ++a) {
        if (!rows[a].coeff->dense) continue;
        const RMatrix W = X * (rows[a].coeff->mat * Zi);
        for (std::size_t b = 0; b < rows.size(); ++b) {
          if (rows[b].coeff->dense && b < a) continue;
          const double v = rows[b].coeff->inner(W);
          M(rows[b].row, rows[a].row) += v;
          if (b != a) M(rows[a].row, rows[b].row) += v;
        }
      }
      for (std::size_t a = 0; a < rows.size(); ++a) {
        if (rows[a].coeff->dense) continue;
        for (std::size_t b = a; b < rows.size(); ++b) {
          if (rows[b].coeff->dense) continue;
          double v = 0.0;
          for (const auto& ea : rows[a].coeff->entries)
            for (const auto& eb : rows[b].coeff->entries) v += ea.v * eb.v * X(ea.c, eb.r) * Zi(eb.c, ea.r);
          M(rows[b].row, rows[a].row) += v;
          if (b != a) M(rows[a].row, rows[b].row) += v;
        }
      }
    }
    return 0.5 * (M + M.transpose());
  }

  void compute_direction(const Eigen::LLT<RMatrix>& chol, const std::vector<RMatrix>& zinv, const RVector& rp,
                         const RVector& rd_l, const std::vector<RMatrix>& rd_k, double sigma_mu,
                         const Direction* pred, Direction& out) const {
    RVector tmp_l = sigma_mu * z_.cwiseInverse() - x_ - x_.cwiseProduct(rd_l).cwiseQuotient(z_);
    RVector corr_l;
    if (pred) {
      corr_l = pred->dx.cwiseProduct(pred->dz).cwiseQuotient(z_);
      tmp_l -= corr_l;
    }
    std::vector<RMatrix> tmp_k(X_.size()), corr_k(X_.size());
    for (std::size_t k = 0; k < X_.size(); ++k) {
      tmp_k[k] = sigma_mu * zinv[k] - X_[k] - X_[k] * (rd_k[k] * zinv[k]);
      if (pred) {
        corr_k[k] = pred->dX[k] * (pred->dZ[k] * zinv[k]);
        tmp_k[k] -= corr_k[k];
      }
    }
    const RVector h = rp - apply_a(tmp_l, tmp_k);
    out.dy = chol.solve(h);
    RVector aty_l;
    std::vector<RMatrix> aty_k;
    apply_at(out.dy, aty_l, aty_k);
    out.dz = rd_l - aty_l;
    out.dx = sigma_mu * z_.cwiseInverse() - x_ - x_.cwiseProduct(out.dz).cwiseQuotient(z_);
    if (pred) out.dx -= corr_l;
    out.dZ.resize(X_.size());
    out.dX.resize(X_.size());
    for (std::size_t k = 0; k < X_.size(); ++k) {
      out.dZ[k] = sym(rd_k[k] - aty_k[k]);
      out.dX[k] = sigma_mu * zinv[k] - X_[k] - sym(X_[k] * (out.dZ[k] * zinv[k]));
      if (pred) out.dX[k] -= sym(corr_k[k]);
    }
    // Iterative refinement of the primal equation A d = rp with the same factor.
    for (int pass = 0; pass < 2; ++pass) {
      const RVector e = rp - apply_a(out.dx, out.dX);
      if (e.norm() <= 1e-15 * (1.0 + rp.norm())) break;
      const RVector ddy = chol.solve(e);
      RVector at_l;
      std::vector<RMatrix> at_k;
      apply_at(ddy, at_l, at_k);
      out.dy += ddy;
      out.dz -= at_l;
      out.dx += x_.cwiseProduct(at_l).cwiseQuotient(z_);
      for (std::size_t k = 0; k < X_.size(); ++k) {
        out.dZ[k] -= sym(at_k[k]);
        out.dX[k] += sym(X_[k] * (at_k[k] * zinv[k]));
      }
    }
  }

  double step_primal(const Direction& d) const {
    double a = max_step_lp(x_, d.dx);
    for (std::size_t k = 0; k < X_.size(); ++k) a = std::min(a, max_step_psd(X_[k], d.dX[k]));
    return a;
  }
  double step_dual(const Direction& d) const {
    double a = max_step_lp(z_, d.dz);
    for (std::size_t k = 0; k < Z_.size(); ++k) a = std::min(a, max_step_psd(Z_[k], d.dZ[k]));
    return a;
  }

  const StandardForm& sf_;
  SolverOptions opt_;
  Eigen::Index m_ = 0;
  double nu_ = 0.0;
  RVector b_;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> cols_;
  std::vector<std::vector<BlockRow>> in_block_;
  RVector x_, z_, y_;
  std::vector<RMatrix> X_, Z_;
};

}  // namespace detail

/// Solves a maximization conic program. Hermitian blocks are realified and
/// handed to a dense real-symmetric interior-point method.
inline ConicSolution solve(const ConicProgram& prog, SolverOptions opt = {}) {
  const StandardForm sf = to_standard_form(prog);
  ConicSolution sol;
  if (sf.rows.empty()) {
    sol.status = SolveStatus::kNumericalFailure;
    sol.diagnostics = "program has no constraints";
    return sol;
  }
  detail::HkmSolver solver(sf, opt);
  auto res = solver.run();
  sol.status = res.status;
  sol.primal_residual = res.pres;
  sol.dual_residual = res.dres;
  sol.relative_gap = res.gap;
  sol.iterations = res.iterations;
  sol.diagnostics = res.diagnostics;
  sol.scalars.resize(prog.scalars.size());
  for (std::size_t j = 0; j < prog.scalars.size(); ++j) {
    const auto& map = sf.scalar_map[j];
    double v = res.x(static_cast<Eigen::Index>(map.plus));
    if (map.minus >= 0) v -= res.x(map.minus);
    sol.scalars[j] = v;
  }
  for (const auto& X : res.X) sol.blocks.push_back(complexify(X));
  double obj = 0.0;
  for (std::size_t j = 0; j < prog.scalars.size(); ++j) obj += prog.scalars[j].objective * sol.scalars[j];
  for (std::size_t b = 0; b < prog.psd_blocks.size(); ++b)
    if (prog.block_objective[b]) obj += (*prog.block_objective[b] * sol.blocks[b]).trace().real();
  sol.objective = obj;
  return sol;
}

}  // namespace risrsma::conic
