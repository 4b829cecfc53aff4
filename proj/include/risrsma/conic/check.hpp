#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "risrsma/conic/program.hpp"

namespace risrsma::conic {

struct ConstraintResidual {
  std::string name;
  double lhs = 0.0;
  double slack = 0.0;  // >= 0 when satisfied; equality rows report -|lhs - rhs|
  bool violated = false;
};

struct ResidualReport {
  std::vector<ConstraintResidual> constraints;
  std::vector<ConstraintResidual> sign_constraints;  // nonnegative scalars
  std::vector<double> block_min_eigenvalue;
  double worst_slack = 0.0;
  double worst_eigenvalue = 0.0;
  bool feasible = true;

  const ConstraintResidual* find(const std::string& name) const {
    for (const auto& c : constraints)
      if (c.name == name) return &c;
    for (const auto& c : sign_constraints)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline double min_eigenvalue(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Validates a candidate solution against the program definition alone.
/// A row is violated when its slack is below -tol * (1 + |rhs|).
inline ResidualReport check_solution(const ConicProgram& prog, const ConicSolution& sol, double tol = 1e-8) {
  if (sol.scalars.size() != prog.scalars.size() || sol.blocks.size() != prog.psd_blocks.size())
    throw std::invalid_argument("solution dimensions do not match program");
  ResidualReport rep;
  for (const auto& c : prog.constraints) {
    double lhs = 0.0;
    for (const auto& [j, v] : c.scalar_terms) lhs += v * sol.scalars[j];
    for (const auto& t : c.block_terms) lhs += (t.coeff * sol.blocks[t.block]).trace().real();
    ConstraintResidual r{c.name, lhs, 0.0, false};
    switch (c.relation) {
      case Relation::kLessEqual: r.slack = c.rhs - lhs; break;
      case Relation::kGreaterEqual: r.slack = lhs - c.rhs; break;
      case Relation::kEqual: r.slack = -std::abs(lhs - c.rhs); break;
    }
    r.violated = r.slack < -tol * (1.0 + std::abs(c.rhs));
    rep.worst_slack = std::min(rep.worst_slack, r.slack);
    rep.feasible = rep.feasible && !r.violated;
    rep.constraints.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < prog.scalars.size(); ++j) {
    if (prog.scalars[j].kind != VarKind::kNonnegative) continue;
    const std::string name = prog.scalars[j].name.empty() ? "x" + std::to_string(j) : prog.scalars[j].name;
    ConstraintResidual r{name + ">=0", sol.scalars[j], sol.scalars[j], sol.scalars[j] < -tol};
    rep.worst_slack = std::min(rep.worst_slack, r.slack);
    rep.feasible = rep.feasible && !r.violated;
    rep.sign_constraints.push_back(std::move(r));
  }
  for (std::size_t b = 0; b < prog.psd_blocks.size(); ++b) {
    if (sol.blocks[b].rows() != static_cast<Eigen::Index>(prog.psd_blocks[b]))
      throw std::invalid_argument("solution block dimension mismatch");
    const double lmin = min_eigenvalue(sol.blocks[b]);
    rep.block_min_eigenvalue.push_back(lmin);
    rep.worst_eigenvalue = std::min(rep.worst_eigenvalue, lmin);
    if (lmin < -tol) rep.feasible = false;
  }
  return rep;
}

}  // namespace risrsma::conic
