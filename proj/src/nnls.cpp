#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "qprune/baselines.hpp"
#include "qprune/error.hpp"

namespace qprune {

namespace {

// Least-squares solution of A_P s = eta where A_P holds the rows P of V as
// columns; rank-deficient passive sets get the minimum-norm solution.
Vector passive_solve(const Matrix& v, const std::vector<std::size_t>& passive, const Vector& eta) {
  Matrix a(v.cols(), static_cast<Eigen::Index>(passive.size()));
  for (std::size_t t = 0; t < passive.size(); ++t) {
    a.col(Eigen::Index(t)) = v.row(Eigen::Index(passive[t])).transpose();
  }
  return Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(eta);
}

double objective(const Matrix& v, const Vector& w, const Vector& eta) {
  return (v.transpose() * w - eta).squaredNorm();
}

}  // namespace

NnlsSolution nnls(const Matrix& vandermonde, const Vector& eta, double tol) {
  const Matrix& v = vandermonde;
  const auto m = static_cast<std::size_t>(v.rows());
  if (eta.size() != v.cols()) throw Error(ErrorCode::DimensionMismatch, "eta length != N");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (!v.allFinite() || !eta.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "NNLS input contains NaN/Inf");
  }

  NnlsSolution out;
  Vector w = Vector::Zero(Eigen::Index(m));
  std::vector<char> in_passive(m, 0);
  std::vector<char> blocked(m, 0);
  std::vector<std::size_t> passive;
  Vector d = v * eta;
  const std::uint64_t cap = 10 * static_cast<std::uint64_t>(std::max<std::size_t>(m, 1));

  const auto drop = [&](std::size_t i) {
    in_passive[i] = 0;
    w[Eigen::Index(i)] = 0.0;
    passive.erase(std::find(passive.begin(), passive.end(), i));
  };

  while (true) {
    std::size_t j = m;
    double best = tol;
    for (std::size_t i = 0; i < m; ++i) {
      if (!in_passive[i] && !blocked[i] && d[Eigen::Index(i)] > best) {
        best = d[Eigen::Index(i)];
        j = i;
      }
    }
    if (j == m) break;
    if (++out.outer_iterations > cap) {
      throw Error(ErrorCode::MaxIterationsExceeded,
                  "NNLS did not converge within " + std::to_string(cap) + " outer iterations");
    }
    in_passive[j] = 1;
    passive.insert(std::upper_bound(passive.begin(), passive.end(), j), j);

    while (true) {
      const Vector s = passive_solve(v, passive, eta);
      const double s_max = s.cwiseAbs().maxCoeff();
      const double tol_s = 1e-12 * s_max;

      // Interpolate back towards w until the first trial entry hits zero.
      double alpha = 2.0;
      for (std::size_t t = 0; t < passive.size(); ++t) {
        const double st = s[Eigen::Index(t)];
        if (st <= -tol_s) {
          const double wt = w[Eigen::Index(passive[t])];
          const double a = wt / (wt - st);
          if (a < alpha) alpha = a;
        }
      }
      if (alpha > 1.0) {
        std::vector<std::size_t> gone;
        for (std::size_t t = 0; t < passive.size(); ++t) {
          const double st = s[Eigen::Index(t)];
          w[Eigen::Index(passive[t])] = st > 0.0 ? st : 0.0;
          if (st <= 0.0) gone.push_back(passive[t]);
        }
        for (std::size_t i : gone) drop(i);
        if (!gone.empty()) out.inner_passive_sizes.push_back(passive.size());
        break;
      }
      std::vector<std::size_t> gone;
      for (std::size_t t = 0; t < passive.size(); ++t) {
        const auto i = Eigen::Index(passive[t]);
        const double st = s[Eigen::Index(t)];
        const bool hits = st <= -tol_s && w[i] / (w[i] - st) == alpha;
        w[i] += alpha * (st - w[i]);
        if (hits || w[i] <= tol_s) gone.push_back(passive[t]);
      }
      for (std::size_t i : gone) drop(i);
      out.inner_passive_sizes.push_back(passive.size());
    }

    // An index that left again at once would be chosen again next time.
    std::fill(blocked.begin(), blocked.end(), 0);
    if (!in_passive[j]) blocked[j] = 1;

    d = v * (eta - v.transpose() * w);
    out.objective_trace.push_back(objective(v, w, eta));
  }

  out.weights = std::move(w);
  out.passive = std::move(passive);
  out.dual = std::move(d);
  return out;
}

PruneResult nnls_prune(const Matrix& vandermonde, const Vector& eta, double tol) {
  const NnlsSolution sol = nnls(vandermonde, eta, tol);
  PruneResult out;
  for (Eigen::Index i = 0; i < sol.weights.size(); ++i) {
    if (sol.weights[i] > 0.0) {
      out.kept_global.push_back(static_cast<std::uint64_t>(i) + 1);
      out.kept_weights.push_back(sol.weights[i]);
    }
  }
  out.iterations = sol.outer_iterations;
  out.diagnostics.working_bytes =
      static_cast<std::size_t>(vandermonde.size() + 3 * vandermonde.rows()) * sizeof(double);
  return out;
}

}  // namespace qprune
