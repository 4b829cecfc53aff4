#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "risrsma/common.hpp"

namespace risrsma::conic {

enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class VarKind { kFree, kNonnegative };

struct ScalarVar {
  VarKind kind = VarKind::kFree;
  double objective = 0.0;
  std::string name;
};

struct BlockTerm {
  std::size_t block = 0;
  CMatrix coeff;  // Hermitian, contributes Re tr(coeff * V_block)
};

/// One affine relation  sum_j a_j x_j + sum_b tr(A_b V_b)  (<=, =, >=)  rhs.
struct AffineConstraint {
  std::string name;
  std::vector<std::pair<std::size_t, double>> scalar_terms;
  std::vector<BlockTerm> block_terms;
  Relation relation = Relation::kEqual;
  double rhs = 0.0;
};

/// Linear objective (maximized) over free/nonnegative scalars and Hermitian
/// PSD blocks, subject to affine constraints.
struct ConicProgram {
  std::vector<ScalarVar> scalars;
  std::vector<std::size_t> psd_blocks;          // Hermitian block dimensions
  std::vector<std::optional<CMatrix>> block_objective;
  std::vector<AffineConstraint> constraints;

  std::size_t add_scalar(VarKind kind, double objective = 0.0, std::string name = {}) {
    scalars.push_back({kind, objective, std::move(name)});
    return scalars.size() - 1;
  }

  std::size_t add_psd_block(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("psd block dimension must be positive");
    psd_blocks.push_back(dim);
    block_objective.emplace_back();
    return psd_blocks.size() - 1;
  }

  void set_block_objective(std::size_t block, CMatrix coeff) {
    block_objective.at(block) = std::move(coeff);
  }

  std::size_t add_constraint(AffineConstraint c) {
    constraints.push_back(std::move(c));
    return constraints.size() - 1;
  }

  void validate() const;
};

enum class SolveStatus { kOptimal, kInfeasible, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<double> scalars;
  std::vector<CMatrix> blocks;
  double objective = 0.0;
  double primal_residual = 0.0;  // relative, on the scaled standard form
  double dual_residual = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  std::string diagnostics;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 120;
  bool verbose = false;  // per-iteration log on stderr
};

inline bool is_hermitian(const CMatrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline void ConicProgram::validate() const {
  for (std::size_t b = 0; b < psd_blocks.size(); ++b) {
    if (const auto& c = block_objective[b]) {
      if (c->rows() != static_cast<Eigen::Index>(psd_blocks[b]) || !is_hermitian(*c))
        throw std::invalid_argument("block objective " + std::to_string(b) +
                                    " is not a Hermitian matrix of the declared dimension");
    }
  }
  for (const auto& c : constraints) {
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("constraint '" + c.name + "' has non-finite rhs");
    for (const auto& [idx, v] : c.scalar_terms) {
      if (idx >= scalars.size()) throw std::invalid_argument("constraint '" + c.name + "' references unknown scalar");
      if (!std::isfinite(v)) throw std::invalid_argument("constraint '" + c.name + "' has non-finite coefficient");
    }
    for (const auto& t : c.block_terms) {
      if (t.block >= psd_blocks.size())
        throw std::invalid_argument("constraint '" + c.name + "' references unknown block");
      if (t.coeff.rows() != static_cast<Eigen::Index>(psd_blocks[t.block]) || !is_hermitian(t.coeff))
        throw std::invalid_argument("constraint '" + c.name +
                                    "' block coefficient is not Hermitian of the declared dimension");
    }
  }
}

// Realification of Hermitian matrices.
//
// A Hermitian n x n matrix H = R + jI is stored as the real symmetric 2n x 2n
// matrix  [ R  -I ]
//         [ I   R ].
// H is PSD iff the embedding is PSD, and Re tr(A H) = tr(emb(A) emb(H)) / 2.

inline RMatrix realify(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = h.real();
  out.bottomRightCorner(n, n) = h.real();
  out.topRightCorner(n, n) = -h.imag();
  out.bottomLeftCorner(n, n) = h.imag();
  return out;
}

/// Inverse of realify(); averages the two redundant copies so that a
/// nearly-structured iterate maps to the closest Hermitian matrix.
inline CMatrix complexify(const RMatrix& x) {
  const Eigen::Index n = x.rows() / 2;
  const RMatrix re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RMatrix im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMatrix out(n, n);
  out.real() = re;
  out.imag() = im;
  return 0.5 * (out + out.adjoint());
}

}  // namespace risrsma::conic
