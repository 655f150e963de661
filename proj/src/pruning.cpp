#include "qprune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/QR>

#include "qprune/error.hpp"

namespace qprune {

namespace {

constexpr double kIncidentalZero = 1e-14;

struct StepInfo {
  std::size_t pruned_local = 0;
  double c = 0.0;
  Sign sign = Sign::Plus;
  std::size_t negative_clamps = 0;
};

// Applies one step to `w` in place and appends every zeroed local index
// (the selected one first) to `zeroed`.
StepInfo step_in_place(std::span<double> w, std::span<const double> n,
                       const SigSelectPolicy& policy, std::vector<std::size_t>& zeroed) {
  const std::size_t len = w.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t m_plus = len, m_minus = len;
  double r_plus = inf, r_minus = inf;
  double w_max = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    w_max = std::max(w_max, std::abs(w[i]));
    const double ni = n[i];
    if (ni > 0.0) {
      const double r = w[i] / ni;
      if (r < r_plus) r_plus = r, m_plus = i;
    } else if (ni < 0.0) {
      const double r = w[i] / -ni;
      if (r < r_minus) r_minus = r, m_minus = i;
    }
  }
  if (m_plus == len && m_minus == len) {
    throw Error(ErrorCode::ZeroKernel, "kernel vector is identically zero");
  }
  const double c_plus = m_plus == len ? inf : r_plus;
  const double c_minus = m_minus == len ? -inf : -r_minus;

  Sign sign;
  if (m_minus == len) {
    sign = Sign::Plus;
  } else if (m_plus == len) {
    sign = Sign::Minus;
  } else {
    switch (policy.kind) {
      case SigSelectPolicy::Kind::MinAbsC:
        sign = std::abs(c_plus) <= std::abs(c_minus) ? Sign::Plus : Sign::Minus;
        break;
      case SigSelectPolicy::Kind::ForcePlus:
        sign = Sign::Plus;
        break;
      case SigSelectPolicy::Kind::ForceMinus:
        sign = Sign::Minus;
        break;
      case SigSelectPolicy::Kind::Custom:
        if (!policy.custom) throw Error(ErrorCode::InvalidArgument, "custom policy has no callback");
        sign = policy.custom(w, n, c_plus, c_minus);
        break;
      default:
        sign = Sign::Plus;
    }
  }

  StepInfo info;
  info.sign = sign;
  info.pruned_local = sign == Sign::Plus ? m_plus : m_minus;
  info.c = sign == Sign::Plus ? c_plus : c_minus;

  const double c = info.c;
  const double eps = kIncidentalZero * w_max;
  zeroed.push_back(info.pruned_local);
  for (std::size_t i = 0; i < len; ++i) {
    if (i == info.pruned_local) {
      w[i] = 0.0;
      continue;
    }
    const double v = w[i] - c * n[i];
    if (v > eps) {
      w[i] = v;
    } else {
      if (v < -eps) ++info.negative_clamps;
      w[i] = 0.0;
      zeroed.push_back(i);
    }
  }
  return info;
}

double kernel_residual(const RowMatrix& rows, std::span<const double> n) {
  const Eigen::Map<const Vector> nv(n.data(), static_cast<Eigen::Index>(n.size()));
  const double scale = rows.norm();
  const double res = (rows.transpose() * nv).norm();
  return scale > 0.0 ? res / scale : res;
}

void check_weight(double w, std::uint64_t global) {
  if (!std::isfinite(w) || w <= 0.0) {
    throw Error(ErrorCode::NonPositiveWeight,
                "weight of node " + std::to_string(global) + " is not a positive finite number");
  }
}

PruneResult collect(const std::vector<std::uint64_t>& globals, const std::vector<double>& w) {
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return globals[a] < globals[b]; });
  PruneResult out;
  for (std::size_t i : order) {
    if (w[i] > 0.0) {
      out.kept_global.push_back(globals[i]);
      out.kept_weights.push_back(w[i]);
    }
  }
  return out;
}

}  // namespace

PruneStepOutcome prune_step(std::span<const double> weights, std::span<const double> kernel,
                            const SigSelectPolicy& policy) {
  if (weights.size() != kernel.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights and kernel differ in length");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::NonPositiveWeight, "prune_step needs positive finite weights");
    }
  }
  for (double v : kernel) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "kernel contains NaN/Inf");
  }
  PruneStepOutcome out;
  out.updated_weights.assign(weights.begin(), weights.end());
  std::vector<std::size_t> zeroed;
  const StepInfo info = step_in_place(out.updated_weights, kernel, policy, zeroed);
  out.pruned_local = info.pruned_local;
  out.c = info.c;
  out.sign = info.sign;
  out.negative_clamps = info.negative_clamps;
  out.extra_zeroed.assign(zeroed.begin() + 1, zeroed.end());
  return out;
}

PruneResult csp(const Matrix& vandermonde, std::span<const double> weights,
                const SigSelectPolicy& policy, bool track_diagnostics) {
  const auto m = static_cast<std::size_t>(vandermonde.rows());
  const auto cols = static_cast<Eigen::Index>(vandermonde.cols());
  if (weights.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per Vandermonde row");
  }
  if (cols < 1) throw Error(ErrorCode::InvalidArgument, "empty basis");
  if (!vandermonde.allFinite()) throw Error(ErrorCode::NonFiniteInput, "matrix contains NaN/Inf");

  std::vector<std::uint64_t> globals(m);
  std::iota(globals.begin(), globals.end(), std::uint64_t{1});
  std::vector<double> w(weights.begin(), weights.end());
  for (std::size_t i = 0; i < m; ++i) check_weight(w[i], globals[i]);

  PruneResult out;
  std::vector<std::size_t> zeroed;
  RowMatrix rows;
  Vector kernel;
  while (w.size() > static_cast<std::size_t>(cols)) {
    const auto n = static_cast<Eigen::Index>(w.size());
    rows.resize(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) rows.row(i) = vandermonde.row(Eigen::Index(globals[i] - 1));
    Eigen::HouseholderQR<Matrix> qr{Matrix(rows)};
    kernel = Vector::Unit(n, n - 1);
    kernel.applyOnTheLeft(qr.householderQ());
    if (!kernel.allFinite()) throw Error(ErrorCode::RankCollapse, "kernel computation broke down");
    if (track_diagnostics) {
      out.diagnostics.kernel_orthogonality_max =
          std::max(out.diagnostics.kernel_orthogonality_max,
                   kernel_residual(rows, {kernel.data(), w.size()}));
    }

    zeroed.clear();
    const StepInfo info = step_in_place(w, {kernel.data(), w.size()}, policy, zeroed);
    out.diagnostics.positivity_clamps += info.negative_clamps;
    ++out.iterations;

    std::sort(zeroed.begin(), zeroed.end());
    for (auto it = zeroed.rbegin(); it != zeroed.rend(); ++it) {
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(*it));
      globals.erase(globals.begin() + static_cast<std::ptrdiff_t>(*it));
    }
  }
  out.diagnostics.working_bytes = m * static_cast<std::size_t>(cols) * sizeof(double) * 2;

  PruneResult kept = collect(globals, w);
  out.kept_global = std::move(kept.kept_global);
  out.kept_weights = std::move(kept.kept_weights);
  return out;
}

BasisRowSource::BasisRowSource(NodeStream& stream, const BasisSpec& basis)
    : stream_(&stream), basis_(&basis), eval_(basis) {
  if (stream.dim() != basis.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "stream has dimension " +
                                                  std::to_string(stream.dim()) + ", basis expects " +
                                                  std::to_string(basis.dim()));
  }
}

bool BasisRowSource::next(std::span<double> row, double& weight, std::uint64_t& global) {
  const auto node = stream_->next();
  if (!node) return false;
  eval_(node->coords, row);
  weight = node->weight;
  global = node->index;
  return true;
}

MatrixRowSource::MatrixRowSource(const Matrix& vandermonde, std::span<const double> weights)
    : v_(&vandermonde), w_(weights) {
  if (static_cast<std::size_t>(vandermonde.rows()) != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per Vandermonde row");
  }
}

bool MatrixRowSource::next(std::span<double> row, double& weight, std::uint64_t& global) {
  if (pos_ >= w_.size()) return false;
  const auto i = static_cast<Eigen::Index>(pos_);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (*v_)(i, static_cast<Eigen::Index>(j));
  weight = w_[pos_];
  global = ++pos_;
  return true;
}

namespace {

// The window state shared by both backends: rows, weights and global names
// by local position. The Givens backend keeps rows inside its QrWindow.
class Window {
 public:
  virtual ~Window() = default;
  virtual std::span<const double> kernel() = 0;
  virtual void replace(std::size_t local, std::span<const double> row, std::uint64_t global) = 0;
  virtual void remove(std::size_t local) = 0;
  virtual const RowMatrix& rows() const = 0;
  virtual std::uint64_t flops() const { return 0; }
  virtual std::uint64_t refreshes() const { return 0; }
  virtual bool rank_deficient() const = 0;
  virtual std::size_t bytes() const = 0;
};

class GivensBackend final : public Window {
 public:
  GivensBackend(const Matrix& rows, std::vector<std::uint64_t> globals, QrWindow::DriftGuard guard)
      : qr_(QrWindow::full_qr(rows, std::move(globals))) {
    qr_.set_drift_guard(guard);
  }
  std::span<const double> kernel() override { return qr_.kernel_view(qr_.k_extra()); }
  void replace(std::size_t local, std::span<const double> row, std::uint64_t global) override {
    qr_.replace_row(local, row, global);
  }
  void remove(std::size_t local) override { qr_.remove_row(local); }
  const RowMatrix& rows() const override { return qr_.rows(); }
  std::uint64_t flops() const override { return qr_.flops(); }
  std::uint64_t refreshes() const override { return qr_.refresh_count(); }
  bool rank_deficient() const override { return qr_.rank_deficient(); }
  std::size_t bytes() const override {
    const std::size_t n = qr_.n_rows(), c = qr_.n_cols();
    return (n * n + 2 * n * c + n) * sizeof(double);
  }

 private:
  QrWindow qr_;
};

class DenseBackend final : public Window {
 public:
  explicit DenseBackend(const Matrix& rows) : rows_(rows) {}
  std::span<const double> kernel() override {
    const auto n = rows_.rows();
    qr_.compute(rows_);
    kernel_ = Vector::Unit(n, n - 1);
    kernel_.applyOnTheLeft(qr_.householderQ());
    return {kernel_.data(), static_cast<std::size_t>(n)};
  }
  void replace(std::size_t local, std::span<const double> row, std::uint64_t) override {
    for (std::size_t j = 0; j < row.size(); ++j) rows_(Eigen::Index(local), Eigen::Index(j)) = row[j];
  }
  void remove(std::size_t local) override {
    const auto l = static_cast<Eigen::Index>(local);
    const auto tail = rows_.rows() - l - 1;
    if (tail > 0) rows_.middleRows(l, tail) = rows_.bottomRows(tail).eval();
    rows_.conservativeResize(rows_.rows() - 1, Eigen::NoChange);
  }
  const RowMatrix& rows() const override { return rows_; }
  bool rank_deficient() const override {
    Eigen::ColPivHouseholderQR<Matrix> qr(rows_);
    qr.setThreshold(1e-12);
    return qr.rank() < rows_.cols();
  }
  std::size_t bytes() const override {
    const std::size_t n = static_cast<std::size_t>(rows_.rows());
    const std::size_t c = static_cast<std::size_t>(rows_.cols());
    return (2 * n * c + 2 * n + c) * sizeof(double);
  }

 private:
  RowMatrix rows_;
  Eigen::HouseholderQR<Matrix> qr_;
  Vector kernel_;
};

}  // namespace

PruneResult scsp(RowSource& source, const ScspOptions& options) {
  const std::size_t cols = source.cols();
  if (cols < 1) throw Error(ErrorCode::InvalidArgument, "empty basis");
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const std::size_t cap = cols + options.k;

  Matrix init(static_cast<Eigen::Index>(cap), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  std::vector<double> w;
  std::vector<std::uint64_t> globals;
  w.reserve(cap);
  globals.reserve(cap);
  double weight = 0.0;
  std::uint64_t global = 0;
  while (w.size() < cap && source.next(row, weight, global)) {
    check_weight(weight, global);
    const auto i = static_cast<Eigen::Index>(w.size());
    for (std::size_t j = 0; j < cols; ++j) init(i, Eigen::Index(j)) = row[j];
    w.push_back(weight);
    globals.push_back(global);
  }
  if (w.size() <= cols) {
    throw Error(ErrorCode::StreamTooShort, "stream produced " + std::to_string(w.size()) +
                                               " nodes, need more than " + std::to_string(cols));
  }
  init.conservativeResize(static_cast<Eigen::Index>(w.size()), Eigen::NoChange);
  if (!init.allFinite()) throw Error(ErrorCode::NonFiniteInput, "basis rows contain NaN/Inf");

  // One row of lookahead tells whether the stream is exhausted.
  std::vector<double> pending(cols);
  double pending_w = 0.0;
  std::uint64_t pending_g = 0;
  bool has_pending = w.size() == cap && source.next(pending, pending_w, pending_g);

  std::unique_ptr<Window> win;
  if (options.backend == KernelBackend::GivensWindow) {
    win = std::make_unique<GivensBackend>(init, globals, options.drift);
  } else {
    win = std::make_unique<DenseBackend>(init);
  }
  init.resize(0, 0);

  PruneResult out;
  PruneDiagnostics& diag = out.diagnostics;
  diag.working_bytes = win->bytes();
  std::vector<std::size_t> zeroed;
  zeroed.reserve(cap);
  std::uint64_t flops_before = 0;

  while (has_pending || w.size() > cols) {
    const std::span<const double> n = win->kernel();
    if (options.track_diagnostics) {
      diag.kernel_orthogonality_max =
          std::max(diag.kernel_orthogonality_max, kernel_residual(win->rows(), n));
      if (win->rank_deficient()) ++diag.rank_deficient_iterations;
    }
    for (double v : n) {
      if (!std::isfinite(v)) throw Error(ErrorCode::RankCollapse, "kernel computation broke down");
    }

    zeroed.clear();
    const StepInfo info = step_in_place(w, n, options.policy, zeroed);
    diag.positivity_clamps += info.negative_clamps;
    ++out.iterations;

    // Refill zeroed slots in place, in ascending local order, then drain
    // whatever could not be refilled from the highest position down.
    std::sort(zeroed.begin(), zeroed.end());
    std::size_t refilled = 0;
    for (; refilled < zeroed.size() && has_pending; ++refilled) {
      check_weight(pending_w, pending_g);
      const std::size_t local = zeroed[refilled];
      win->replace(local, pending, pending_g);
      w[local] = pending_w;
      globals[local] = pending_g;
      has_pending = source.next(pending, pending_w, pending_g);
    }
    for (std::size_t t = zeroed.size(); t > refilled; --t) {
      const std::size_t local = zeroed[t - 1];
      win->remove(local);
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(local));
      globals.erase(globals.begin() + static_cast<std::ptrdiff_t>(local));
    }

    const std::uint64_t f = win->flops();
    if (out.iterations == 1) {
      diag.first_iteration_flops = f;
    } else {
      diag.max_iteration_flops = std::max(diag.max_iteration_flops, f - flops_before);
    }
    flops_before = f;
  }

  diag.flops = win->flops();
  diag.qr_refreshes = win->refreshes();
  PruneResult kept = collect(globals, w);
  out.kept_global = std::move(kept.kept_global);
  out.kept_weights = std::move(kept.kept_weights);
  return out;
}

PruneResult scsp(NodeStream& stream, const BasisSpec& basis, const ScspOptions& options) {
  BasisRowSource source(stream, basis);
  return scsp(source, options);
}

PruneResult gscsp(RowSource& source, std::size_t k, const SigSelectPolicy& policy) {
  ScspOptions opts;
  opts.k = k;
  opts.policy = policy;
  opts.backend = KernelBackend::GivensWindow;
  return scsp(source, opts);
}

PruneResult gscsp(NodeStream& stream, const BasisSpec& basis, std::size_t k,
                  const SigSelectPolicy& policy) {
  BasisRowSource source(stream, basis);
  return gscsp(source, k, policy);
}

}  // namespace qprune
