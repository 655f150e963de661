#include "qprune/givens_qr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "qprune/error.hpp"

namespace qprune {

GivensCoeffs givens(double a, double b) noexcept {
  if (b == 0.0) return {a < 0.0 ? -1.0 : 1.0, 0.0};
  if (a == 0.0) return {0.0, b < 0.0 ? -1.0 : 1.0};
  const double r = std::hypot(a, b);
  return {a / r, b / r};
}

QrWindow QrWindow::full_qr(const Matrix& rows, std::vector<std::uint64_t> globals) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto cols = static_cast<std::size_t>(rows.cols());
  if (cols < 1 || n <= cols) {
    throw Error(ErrorCode::InvalidArgument, "full_qr needs more rows than columns, got " +
                                                std::to_string(n) + "x" + std::to_string(cols));
  }
  if (!rows.allFinite()) throw Error(ErrorCode::NonFiniteInput, "window rows contain NaN/Inf");
  if (globals.empty()) {
    globals.resize(n);
    for (std::size_t i = 0; i < n; ++i) globals[i] = i + 1;
  }
  if (globals.size() != n) throw Error(ErrorCode::InvalidArgument, "one global index per row");

  QrWindow w;
  w.n_cols_ = cols;
  w.rows_ = rows;
  w.window_ = std::move(globals);
  w.factor();
  return w;
}

void QrWindow::factor() {
  const auto n = static_cast<Eigen::Index>(rows_.rows());
  const auto cols = static_cast<Eigen::Index>(n_cols_);
  Eigen::HouseholderQR<Matrix> qr{Matrix(rows_)};
  q_ = qr.householderQ() * Matrix::Identity(n, n);
  r_ = RowMatrix::Zero(n, cols);
  const Matrix& packed = qr.matrixQR();
  for (Eigen::Index i = 0; i < std::min(n, cols); ++i) {
    for (Eigen::Index j = i; j < cols; ++j) r_(i, j) = packed(i, j);
    if (r_(i, i) < 0.0) {
      r_.row(i) *= -1.0;
      q_.col(i) *= -1.0;
    }
  }
  // Householder reduction plus explicit accumulation of the full Q.
  const auto nn = static_cast<std::uint64_t>(n);
  const auto nc = static_cast<std::uint64_t>(cols);
  flops_ += 4 * nn * nn * nc;
}

std::optional<std::size_t> QrWindow::find(std::uint64_t global) const noexcept {
  const auto it = std::find(window_.begin(), window_.end(), global);
  if (it == window_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - window_.begin());
}

void QrWindow::rotate_cols(std::size_t i, std::size_t j, GivensCoeffs g) {
  const std::size_t n = n_rows();
  double* __restrict qi = q_.data() + i * n;
  double* __restrict qj = q_.data() + j * n;
  const double c = g.c, s = g.s;
  for (std::size_t t = 0; t < n; ++t) {
    const double a = qi[t];
    const double b = qj[t];
    qi[t] = c * a + s * b;
    qj[t] = c * b - s * a;
  }
  flops_ += 6 * n;
}

void QrWindow::rotate_rows(std::size_t i, std::size_t j, std::size_t from, GivensCoeffs g) {
  const std::size_t cols = n_cols_;
  if (from >= cols) return;
  double* __restrict ri = r_.data() + i * cols;
  double* __restrict rj = r_.data() + j * cols;
  const double c = g.c, s = g.s;
  for (std::size_t t = from; t < cols; ++t) {
    const double a = ri[t];
    const double b = rj[t];
    ri[t] = c * a + s * b;
    rj[t] = c * b - s * a;
  }
  flops_ += 6 * (cols - from);
}

// Rotates row `local` of Q onto e_local. Afterwards column `local` of Q is
// e_local as well, row `local` of R holds the removed row, and deleting both
// leaves a valid full QR of the remaining rows.
void QrWindow::downdate(std::size_t local) {
  const std::size_t n = n_rows();
  auto q_at = [&](std::size_t row, std::size_t col) -> double& { return q_.data()[col * n + row]; };

  // Chase the row's mass leftwards through adjacent column pairs. R picks up
  // one subdiagonal in rows below `local`.
  for (std::size_t i = n - 1; i > local; --i) {
    const GivensCoeffs g = givens(q_at(local, i - 1), q_at(local, i));
    rotate_cols(i - 1, i, g);
    q_at(local, i) = 0.0;
    rotate_rows(i - 1, i, i - 1, g);
    flops_ += 6;
  }
  // Fold the leading entries into column `local`.
  for (std::size_t i = local; i-- > 0;) {
    const GivensCoeffs g = givens(q_at(local, local), q_at(local, i));
    rotate_cols(local, i, g);
    q_at(local, i) = 0.0;
    rotate_rows(local, i, i, g);
    flops_ += 6;
  }
  for (std::size_t t = 0; t < n; ++t) {
    q_at(local, t) = 0.0;
    q_at(t, local) = 0.0;
  }
  q_at(local, local) = 1.0;
}

void QrWindow::replace_row(std::size_t local, std::span<const double> new_row,
                           std::uint64_t new_global) {
  const std::size_t n = n_rows();
  const std::size_t cols = n_cols_;
  if (local >= n) throw Error(ErrorCode::IndexNotInWindow, "local row out of range");
  if (new_row.size() != cols) throw Error(ErrorCode::DimensionMismatch, "new row length");
  for (double v : new_row) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "new row contains NaN/Inf");
  }

  downdate(local);

  double* rl = r_.data() + local * cols;
  std::copy(new_row.begin(), new_row.end(), rl);
  std::copy(new_row.begin(), new_row.end(), rows_.data() + local * cols);
  window_[local] = new_global;

  // Zero the leading entries of the new row against the diagonal above it.
  const std::size_t lead = std::min(cols, local);
  for (std::size_t i = 0; i < lead; ++i) {
    const GivensCoeffs g = givens(r_(i, i), rl[i]);
    rotate_rows(i, local, i, g);
    rl[i] = 0.0;
    rotate_cols(i, local, g);
    flops_ += 6;
  }
  // Rows local..N now form an upper Hessenberg block; clear its subdiagonal.
  for (std::size_t i = local; i < cols && i + 1 < n; ++i) {
    const GivensCoeffs g = givens(r_(i, i), r_(i + 1, i));
    rotate_rows(i, i + 1, i, g);
    r_(i + 1, i) = 0.0;
    rotate_cols(i, i + 1, g);
    flops_ += 6;
  }
  after_change();
}

void QrWindow::remove_row(std::size_t local) {
  const std::size_t n = n_rows();
  if (local >= n) throw Error(ErrorCode::IndexNotInWindow, "local row out of range");
  if (n <= 1) throw Error(ErrorCode::InvalidArgument, "cannot empty the window");
  downdate(local);

  const auto m = static_cast<Eigen::Index>(n - 1);
  const auto l = static_cast<Eigen::Index>(local);
  const auto tail = m - l;
  const auto cols = static_cast<Eigen::Index>(n_cols_);

  Matrix q(m, m);
  q.topLeftCorner(l, l) = q_.topLeftCorner(l, l);
  q.topRightCorner(l, tail) = q_.block(0, l + 1, l, tail);
  q.bottomLeftCorner(tail, l) = q_.block(l + 1, 0, tail, l);
  q.bottomRightCorner(tail, tail) = q_.bottomRightCorner(tail, tail);
  q_.swap(q);

  RowMatrix r(m, cols), rows(m, cols);
  r.topRows(l) = r_.topRows(l);
  r.bottomRows(tail) = r_.bottomRows(tail);
  rows.topRows(l) = rows_.topRows(l);
  rows.bottomRows(tail) = rows_.bottomRows(tail);
  r_.swap(r);
  rows_.swap(rows);
  window_.erase(window_.begin() + l);
  after_change();
}

void QrWindow::downdate_update(std::uint64_t remove_global,
                               std::optional<std::span<const double>> new_row,
                               std::uint64_t new_global) {
  const auto local = find(remove_global);
  if (!local) {
    throw Error(ErrorCode::IndexNotInWindow,
                "global index " + std::to_string(remove_global) + " is not in the window");
  }
  if (new_row) {
    replace_row(*local, *new_row, new_global);
  } else {
    remove_row(*local);
  }
}

void QrWindow::after_change() {
  ++changes_;
  if (guard_.interval != 0 && changes_ % guard_.interval == 0 &&
      orthogonality_error() > guard_.threshold) {
    refresh();
  }
}

void QrWindow::refresh() {
  factor();
  ++refreshes_;
}

Vector QrWindow::kernel_column(std::size_t which) const {
  const auto v = kernel_view(which);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::span<const double> QrWindow::kernel_view(std::size_t which) const {
  const std::size_t k = k_extra();
  if (which < 1 || which > k) {
    throw Error(ErrorCode::InvalidArgument,
                "kernel column " + std::to_string(which) + " not in 1.." + std::to_string(k));
  }
  const std::size_t n = n_rows();
  return {q_.data() + (n_cols_ + which - 1) * n, n};
}

double QrWindow::orthogonality_error() const {
  const auto n = q_.rows();
  return (q_.transpose() * q_ - Matrix::Identity(n, n)).norm();
}

double QrWindow::factorization_residual() const {
  const double scale = rows_.norm();
  const double res = (q_ * r_ - rows_).norm();
  return scale > 0.0 ? res / scale : res;
}

bool QrWindow::rank_deficient() const {
  if (n_rows() < n_cols_) return true;
  const auto last = static_cast<Eigen::Index>(n_cols_ - 1);
  return std::abs(r_(last, last)) <= 1e-12 * r_.norm();
}

}  // namespace qprune
