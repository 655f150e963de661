#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qprune/linalg.hpp"

namespace qprune {

struct GivensCoeffs {
  double c = 1.0;
  double s = 0.0;
};

/// Rotation with [c s; -s c] (a, b)^T = (r, 0)^T and r = hypot(a, b) >= 0.
/// (0, 0) gives the identity.
GivensCoeffs givens(double a, double b) noexcept;

/// Full QR factorization of a (N+k) x N window of Vandermonde rows, kept up
/// to date under row replacement with O((N+k) N) Givens work per change.
///
/// Row i of Q (and of the cached rows) belongs to window()[i]. The trailing
/// k columns of Q span the cokernel of the window rows. Diagonal entries of
/// R produced by rotations are nonnegative and everything below the
/// diagonal is stored as exact zeros.
class QrWindow {
 public:
  struct DriftGuard {
    std::uint64_t interval = 4096;  ///< check every this many row changes; 0 disables
    double threshold = 1e-9;        ///< refactor when ||Q^T Q - I||_F exceeds this
  };

  /// Householder factorization of `rows` (n x N, n > N >= 1). `globals`
  /// names the rows; empty means 1..n.
  static QrWindow full_qr(const Matrix& rows, std::vector<std::uint64_t> globals = {});

  std::size_t n_rows() const noexcept { return static_cast<std::size_t>(q_.rows()); }
  std::size_t n_cols() const noexcept { return n_cols_; }
  /// Window rows beyond N; negative never happens, zero only after draining.
  std::size_t k_extra() const noexcept { return n_rows() - n_cols_; }

  const Matrix& q() const noexcept { return q_; }
  const RowMatrix& r() const noexcept { return r_; }
  const RowMatrix& rows() const noexcept { return rows_; }
  const std::vector<std::uint64_t>& window() const noexcept { return window_; }

  /// Local position of a global index, or nullopt.
  std::optional<std::size_t> find(std::uint64_t global) const noexcept;

  /// Replaces the row of `remove_global` by `new_row` (named `new_global`),
  /// or drops it when `new_row` is empty, shrinking the window by one.
  void downdate_update(std::uint64_t remove_global, std::optional<std::span<const double>> new_row,
                       std::uint64_t new_global);

  /// Same by local position.
  void replace_row(std::size_t local, std::span<const double> new_row, std::uint64_t new_global);
  void remove_row(std::size_t local);

  /// Column N + which - 1 of Q (which in 1..k); unit norm, orthogonal to the
  /// window's columns.
  Vector kernel_column(std::size_t which) const;
  std::span<const double> kernel_view(std::size_t which) const;

  double orthogonality_error() const;   ///< ||Q^T Q - I||_F
  double factorization_residual() const;  ///< ||QR - rows||_F / ||rows||_F
  /// |R(N,N)| <= 1e-12 ||R||_F: the window rows do not have full column rank.
  bool rank_deficient() const;

  /// Recomputes Q and R from the cached rows.
  void refresh();

  void set_drift_guard(DriftGuard guard) noexcept { guard_ = guard; }
  std::uint64_t flops() const noexcept { return flops_; }
  std::uint64_t refresh_count() const noexcept { return refreshes_; }

 private:
  QrWindow() = default;

  void factor();
  void downdate(std::size_t local);
  void rotate_cols(std::size_t i, std::size_t j, GivensCoeffs g);
  void rotate_rows(std::size_t i, std::size_t j, std::size_t from, GivensCoeffs g);
  void after_change();

  std::size_t n_cols_ = 0;
  Matrix q_;          // n x n, column-major so column rotations are contiguous
  RowMatrix r_;       // n x N, row-major so row rotations are contiguous
  RowMatrix rows_;    // n x N, the factored rows
  std::vector<std::uint64_t> window_;
  DriftGuard guard_;
  std::uint64_t changes_ = 0;
  std::uint64_t flops_ = 0;
  std::uint64_t refreshes_ = 0;
};

}  // namespace qprune
