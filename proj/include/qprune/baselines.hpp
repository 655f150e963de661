#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qprune/linalg.hpp"
#include "qprune/pruning.hpp"

namespace qprune {

/// Lawson-Hanson active-set solution of min_{w >= 0} ||V^T w - eta||_2.
struct NnlsSolution {
  Vector weights;                      ///< M entries, zero outside the passive set
  std::vector<std::size_t> passive;    ///< 0-based, ascending
  Vector dual;                         ///< V (eta - V^T w) at termination
  std::uint64_t outer_iterations = 0;
  std::vector<double> objective_trace;  ///< ||V^T w - eta||^2 after each outer iteration
  std::vector<std::size_t> inner_passive_sizes;  ///< |P| after each inner removal
};

/// `tol` bounds the dual entries at termination. Dual ties go to the smallest
/// index, as do ties in the interpolation step. Throws MaxIterationsExceeded
/// after 10 M outer iterations.
NnlsSolution nnls(const Matrix& vandermonde, const Vector& eta, double tol = 1e-10);
PruneResult nnls_prune(const Matrix& vandermonde, const Vector& eta, double tol = 1e-10);

/// min c^T v subject to V^T v = eta, v >= 0.
struct LpProblem {
  Matrix vandermonde;  ///< M x N
  Vector eta;          ///< N
  Vector cost;         ///< M
};

struct LpSolution {
  Vector v;                        ///< M entries, a basic feasible point
  std::vector<std::size_t> basis;  ///< 0-based columns of V^T in the final basis
  double objective = 0.0;
  std::uint64_t iterations = 0;  ///< simplex pivots over both phases
};

/// Dense two-phase revised simplex with Dantzig pricing, falling back to
/// Bland's rule on degenerate stretches. Throws Infeasible or Unbounded.
LpSolution lp_solve(const LpProblem& problem);
PruneResult lp_prune(const LpProblem& problem);

}  // namespace qprune
