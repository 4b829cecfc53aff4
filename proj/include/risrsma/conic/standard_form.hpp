#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "risrsma/conic/program.hpp"

namespace risrsma::conic {

/// Real coefficient of one standard-form row restricted to one PSD block.
/// Sparse coefficients keep every stored (row, col) entry explicitly, both
/// triangles included.
struct RealBlockCoeff {
  std::size_t block = 0;
  bool dense = false;
  RMatrix mat;
  struct Entry {
    Eigen::Index r, c;
    double v;
  };
  std::vector<Entry> entries;

  double frobenius_sq() const {
    if (dense) return mat.squaredNorm();
    double s = 0.0;
    for (const auto& e : entries) s += e.v * e.v;
    return s;
  }
  void scale(double f) {
    if (dense) mat *= f;
    for (auto& e : entries) e.v *= f;
  }
  double inner(const RMatrix& y) const {
    if (dense) return mat.cwiseProduct(y).sum();
    double s = 0.0;
    for (const auto& e : entries) s += e.v * y(e.r, e.c);
    return s;
  }
  void add_to(RMatrix& y, double f) const {
    if (dense) {
      y.noalias() += f * mat;
      return;
    }
    for (const auto& e : entries) y(e.r, e.c) += f * e.v;
  }
};

struct StandardRow {
  std::vector<std::pair<std::size_t, double>> lp;
  std::vector<RealBlockCoeff> blocks;
  double b = 0.0;
};

/// minimize  c'x + sum <C_k, X_k>   s.t.  A(x, X) = b,  x >= 0,  X_k PSD (real symmetric).
///
/// Column layout of x: user scalars in order (free scalars take two columns,
/// plus then minus), followed by one slack column per inequality row.
/// Block k is the realification of user block k (dimension 2n).
struct StandardForm {
  std::size_t n_lp = 0;
  std::vector<Eigen::Index> block_dims;
  RVector c_lp;
  std::vector<RMatrix> c_blocks;
  std::vector<StandardRow> rows;

  struct ScalarMap {
    std::size_t plus;
    long minus;  // -1 when the scalar is nonnegative
  };
  std::vector<ScalarMap> scalar_map;
  std::vector<double> row_scale;  // original row = scaled row * row_scale
  double objective_scale = 1.0;
};

namespace detail {

inline RealBlockCoeff make_block_coeff(std::size_t block, const CMatrix& h) {
  RealBlockCoeff out;
  out.block = block;
  RMatrix emb = 0.5 * realify(h);
  const Eigen::Index n = emb.rows();
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (emb(i, j) != 0.0) ++nnz;
  if (nnz > 4 * n) {
    out.dense = true;
    out.mat = std::move(emb);
  } else {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (emb(i, j) != 0.0) out.entries.push_back({i, j, emb(i, j)});
  }
  return out;
}

}  // namespace detail

/// Builds the scaled real standard form of a (maximization) program.
inline StandardForm to_standard_form(const ConicProgram& prog) {
  prog.validate();
  StandardForm sf;
  for (const auto& s : prog.scalars) {
    StandardForm::ScalarMap m{sf.n_lp++, -1};
    if (s.kind == VarKind::kFree) m.minus = static_cast<long>(sf.n_lp++);
    sf.scalar_map.push_back(m);
  }
  std::size_t slack_start = sf.n_lp;
  for (const auto& c : prog.constraints)
    if (c.relation != Relation::kEqual) ++sf.n_lp;

  sf.c_lp = RVector::Zero(static_cast<Eigen::Index>(sf.n_lp));
  for (std::size_t j = 0; j < prog.scalars.size(); ++j) {
    const double cj = -prog.scalars[j].objective;
    sf.c_lp(static_cast<Eigen::Index>(sf.scalar_map[j].plus)) = cj;
    if (sf.scalar_map[j].minus >= 0) sf.c_lp(sf.scalar_map[j].minus) = -cj;
  }
  for (std::size_t b = 0; b < prog.psd_blocks.size(); ++b) {
    const auto n = static_cast<Eigen::Index>(2 * prog.psd_blocks[b]);
    sf.block_dims.push_back(n);
    if (prog.block_objective[b])
      sf.c_blocks.push_back(-0.5 * realify(*prog.block_objective[b]));
    else
      sf.c_blocks.push_back(RMatrix::Zero(n, n));
  }

  std::size_t slack = slack_start;
  for (const auto& c : prog.constraints) {
    StandardRow row;
    for (const auto& [j, v] : c.scalar_terms) {
      if (v == 0.0) continue;
      row.lp.emplace_back(sf.scalar_map[j].plus, v);
      if (sf.scalar_map[j].minus >= 0) row.lp.emplace_back(static_cast<std::size_t>(sf.scalar_map[j].minus), -v);
    }
    if (c.relation == Relation::kLessEqual) row.lp.emplace_back(slack++, 1.0);
    if (c.relation == Relation::kGreaterEqual) row.lp.emplace_back(slack++, -1.0);
    std::vector<std::optional<CMatrix>> merged(prog.psd_blocks.size());
    for (const auto& t : c.block_terms) {
      if (merged[t.block])
        *merged[t.block] += t.coeff;
      else
        merged[t.block] = t.coeff;
    }
    for (std::size_t b = 0; b < merged.size(); ++b) {
      if (!merged[b]) continue;
      auto bc = detail::make_block_coeff(b, *merged[b]);
      if (bc.dense || !bc.entries.empty()) row.blocks.push_back(std::move(bc));
    }
    row.b = c.rhs;
    sf.rows.push_back(std::move(row));
  }

  // Row equilibration. The slack column of an inequality row is left out of
  // the norm and keeps its unit coefficient (a positive rescaling of a
  // slack with zero cost), so tiny physical coefficients still get scaled.
  for (auto& row : sf.rows) {
    double sq = 0.0;
    for (const auto& [j, v] : row.lp)
      if (j < slack_start) sq += v * v;
    for (const auto& bc : row.blocks) sq += bc.frobenius_sq();
    const double norm = sq > 0.0 ? std::sqrt(sq) : 1.0;
    for (auto& [j, v] : row.lp)
      if (j < slack_start) v /= norm;
    for (auto& bc : row.blocks) bc.scale(1.0 / norm);
    row.b /= norm;
    sf.row_scale.push_back(norm);
  }
  double csq = sf.c_lp.squaredNorm();
  for (const auto& cb : sf.c_blocks) csq += cb.squaredNorm();
  if (csq > 0.0) {
    sf.objective_scale = std::sqrt(csq);
    sf.c_lp /= sf.objective_scale;
    for (auto& cb : sf.c_blocks) cb /= sf.objective_scale;
  }
  return sf;
}

/// Plain-text listing of the (unscaled-structure, scaled-value) standard form.
///
///   STANDARD_FORM minimize
///   LP <n>                          nonnegative orthant size
///   PSD <k> <dim>                   one line per real symmetric block
///   ROWS <m>
///   C LP <j> <value>                objective, LP part
///   C PSD <k> <r> <c> <value>       objective, block part (upper triangle)
///   A LP <i> <j> <value>            constraint triplets, LP part
///   A PSD <i> <k> <r> <c> <value>   constraint triplets, block part (upper triangle)
///   B <i> <value>                   right-hand side
///   SCALE ROW <i> <factor>          equilibration factor applied to row i
inline void write_standard_form(std::ostream& os, const ConicProgram& prog) {
  const StandardForm sf = to_standard_form(prog);
  os << std::setprecision(17);
  os << "STANDARD_FORM minimize\n";
  os << "LP " << sf.n_lp << "\n";
  for (std::size_t k = 0; k < sf.block_dims.size(); ++k) os << "PSD " << k << " " << sf.block_dims[k] << "\n";
  os << "ROWS " << sf.rows.size() << "\n";
  os << "OBJECTIVE_SCALE " << sf.objective_scale << "\n";
  for (Eigen::Index j = 0; j < sf.c_lp.size(); ++j)
    if (sf.c_lp(j) != 0.0) os << "C LP " << j << " " << sf.c_lp(j) << "\n";
  for (std::size_t k = 0; k < sf.c_blocks.size(); ++k)
    for (Eigen::Index c = 0; c < sf.c_blocks[k].cols(); ++c)
      for (Eigen::Index r = 0; r <= c; ++r)
        if (sf.c_blocks[k](r, c) != 0.0)
          os << "C PSD " << k << " " << r << " " << c << " " << sf.c_blocks[k](r, c) << "\n";
  for (std::size_t i = 0; i < sf.rows.size(); ++i) {
    const auto& row = sf.rows[i];
    for (const auto& [j, v] : row.lp) os << "A LP " << i << " " << j << " " << v << "\n";
    for (const auto& bc : row.blocks) {
      if (bc.dense) {
        for (Eigen::Index c = 0; c < bc.mat.cols(); ++c)
          for (Eigen::Index r = 0; r <= c; ++r)
            if (bc.mat(r, c) != 0.0)
              os << "A PSD " << i << " " << bc.block << " " << r << " " << c << " " << bc.mat(r, c) << "\n";
      } else {
        for (const auto& e : bc.entries)
          if (e.r <= e.c) os << "A PSD " << i << " " << bc.block << " " << e.r << " " << e.c << " " << e.v << "\n";
      }
    }
    os << "B " << i << " " << row.b << "\n";
    os << "SCALE ROW " << i << " " << sf.row_scale[i] << "\n";
  }
}

}  // namespace risrsma::conic
