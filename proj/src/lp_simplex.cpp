#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "qprune/baselines.hpp"
#include "qprune/error.hpp"

namespace qprune {

namespace {

constexpr int kRefactorEvery = 50;
constexpr int kDegenerateStreak = 20;
constexpr double kPivotTol = 1e-9;

// Revised simplex on min c^T x, A x = b, x >= 0 with b >= 0 and the last
// `rows` columns of A an identity (the artificials).
class Simplex {
 public:
  Simplex(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    const Eigen::Index rows = a_.rows();
    const Eigen::Index total = a_.cols();
    basis_.resize(std::size_t(rows));
    for (Eigen::Index i = 0; i < rows; ++i) basis_[std::size_t(i)] = std::size_t(total - rows + i);
    in_basis_.assign(std::size_t(total), 0);
    for (std::size_t j : basis_) in_basis_[j] = 1;
    allowed_.assign(std::size_t(total), 1);
    binv_ = Matrix::Identity(rows, rows);
    xb_ = b_;
  }

  void forbid(std::size_t j) { allowed_[j] = 0; }
  std::uint64_t iterations() const { return iterations_; }
  const std::vector<std::size_t>& basis() const { return basis_; }
  const Matrix& a() const { return a_; }

  // Runs to optimality for `cost`; throws Unbounded.
  void optimize(const Vector& cost) {
    const Eigen::Index rows = a_.rows();
    const Eigen::Index total = a_.cols();
    const double cost_scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    int degenerate = 0;
    int since_refactor = 0;
    Vector cb(rows), y(rows), col(rows);
    while (true) {
      for (Eigen::Index i = 0; i < rows; ++i) cb[i] = cost[Eigen::Index(basis_[std::size_t(i)])];
      y.noalias() = binv_.transpose() * cb;
      const Vector reduced = cost - a_.transpose() * y;

      const bool bland = degenerate >= kDegenerateStreak;
      Eigen::Index enter = -1;
      double best = -kPivotTol * cost_scale;
      for (Eigen::Index j = 0; j < total; ++j) {
        if (in_basis_[std::size_t(j)] || !allowed_[std::size_t(j)]) continue;
        if (reduced[j] < best) {
          enter = j;
          if (bland) break;
          best = reduced[j];
        }
      }
      if (enter < 0) return;

      col.noalias() = binv_ * a_.col(enter);
      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (col[i] > kPivotTol) {
          const double r = std::max(xb_[i], 0.0) / col[i];
          const bool better = bland ? (r < ratio || (r == ratio && leave >= 0 &&
                                                    basis_[std::size_t(i)] < basis_[std::size_t(leave)]))
                                    : r < ratio;
          if (better) ratio = r, leave = i;
        }
      }
      if (leave < 0) throw Error(ErrorCode::Unbounded, "LP objective is unbounded below");

      degenerate = ratio <= 0.0 ? degenerate + 1 : 0;
      pivot(enter, leave, col, ratio);
      if (++since_refactor >= kRefactorEvery) {
        refactor();
        since_refactor = 0;
      }
    }
  }

  // Swaps a zero-level artificial out of the basis for any structural column
  // with a usable pivot in its row.
  void expel(Eigen::Index row, std::size_t structural) {
    const Eigen::Index rows = a_.rows();
    Vector col(rows);
    for (std::size_t j = 0; j < structural; ++j) {
      if (in_basis_[j] || !allowed_[j]) continue;
      const double entry = binv_.row(row).dot(a_.col(Eigen::Index(j)));
      if (std::abs(entry) > 1e-7) {
        col.noalias() = binv_ * a_.col(Eigen::Index(j));
        pivot(Eigen::Index(j), row, col, 0.0);
        return;
      }
    }
  }

  void refactor() {
    const Eigen::Index rows = a_.rows();
    Matrix bm(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) bm.col(i) = a_.col(Eigen::Index(basis_[std::size_t(i)]));
    Eigen::PartialPivLU<Matrix> lu(bm);
    binv_ = lu.inverse();
    xb_ = lu.solve(b_);
  }

  const Vector& xb() const { return xb_; }

 private:
  void pivot(Eigen::Index enter, Eigen::Index leave, const Vector& col, double step) {
    xb_ -= step * col;
    xb_[leave] = step;
    const double p = col[leave];
    const Vector pivot_row = binv_.row(leave) / p;
    for (Eigen::Index i = 0; i < binv_.rows(); ++i) {
      if (i != leave) binv_.row(i) -= col[i] * pivot_row;
    }
    binv_.row(leave) = pivot_row;
    in_basis_[basis_[std::size_t(leave)]] = 0;
    basis_[std::size_t(leave)] = std::size_t(enter);
    in_basis_[std::size_t(enter)] = 1;
    ++iterations_;
  }

  Matrix a_;
  Vector b_;
  std::vector<std::size_t> basis_;
  std::vector<char> in_basis_;
  std::vector<char> allowed_;
  Matrix binv_;
  Vector xb_;
  std::uint64_t iterations_ = 0;
};

}  // namespace

LpSolution lp_solve(const LpProblem& problem) {
  const Matrix& v = problem.vandermonde;
  const Eigen::Index m = v.rows();
  const Eigen::Index n = v.cols();
  if (problem.eta.size() != n) throw Error(ErrorCode::DimensionMismatch, "eta length != N");
  if (problem.cost.size() != m) throw Error(ErrorCode::DimensionMismatch, "cost length != M");
  if (m < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "empty LP");
  if (!v.allFinite() || !problem.eta.allFinite() || !problem.cost.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "LP input contains NaN/Inf");
  }

  Matrix a(n, m + n);
  a.leftCols(m) = v.transpose();
  a.rightCols(n).setIdentity();
  Vector b = problem.eta;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (b[i] < 0.0) {
      b[i] = -b[i];
      a.row(i).head(m) *= -1.0;
    }
  }
  const double b_scale = std::max(1.0, b.cwiseAbs().maxCoeff());

  Simplex lp(std::move(a), b);
  Vector phase1 = Vector::Zero(m + n);
  phase1.tail(n).setOnes();
  lp.optimize(phase1);
  lp.refactor();

  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lp.basis()[std::size_t(i)] >= std::size_t(m)) infeasibility += std::abs(lp.xb()[i]);
  }
  if (infeasibility > 1e-9 * b_scale) {
    throw Error(ErrorCode::Infeasible,
                "no v >= 0 reproduces the moments (phase-1 residual " + std::to_string(infeasibility) + ")");
  }

  for (Eigen::Index j = m; j < m + n; ++j) lp.forbid(std::size_t(j));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lp.basis()[std::size_t(i)] >= std::size_t(m)) lp.expel(i, std::size_t(m));
  }
  lp.refactor();

  Vector phase2 = Vector::Zero(m + n);
  phase2.head(m) = problem.cost;
  lp.optimize(phase2);
  lp.refactor();

  LpSolution out;
  out.v = Vector::Zero(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t j = lp.basis()[std::size_t(i)];
    if (j >= std::size_t(m)) continue;
    double x = lp.xb()[i];
    if (x < 0.0) {
      if (x < -1e-9 * b_scale) {
        throw Error(ErrorCode::Infeasible, "simplex lost primal feasibility");
      }
      x = 0.0;
    }
    out.v[Eigen::Index(j)] = x;
    out.basis.push_back(j);
  }
  std::sort(out.basis.begin(), out.basis.end());
  out.objective = problem.cost.dot(out.v);
  out.iterations = lp.iterations();
  return out;
}

PruneResult lp_prune(const LpProblem& problem) {
  const LpSolution sol = lp_solve(problem);
  PruneResult out;
  for (Eigen::Index i = 0; i < sol.v.size(); ++i) {
    if (sol.v[i] > 0.0) {
      out.kept_global.push_back(static_cast<std::uint64_t>(i) + 1);
      out.kept_weights.push_back(sol.v[i]);
    }
  }
  out.iterations = sol.iterations;
  const auto m = static_cast<std::size_t>(problem.vandermonde.rows());
  const auto n = static_cast<std::size_t>(problem.vandermonde.cols());
  out.diagnostics.working_bytes = ((m + n) * n + n * n + 2 * m) * sizeof(double);
  return out;
}

}  // namespace qprune
