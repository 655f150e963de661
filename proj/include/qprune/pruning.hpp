#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "qprune/basis.hpp"
#include "qprune/givens_qr.hpp"
#include "qprune/linalg.hpp"
#include "qprune/node_stream.hpp"

namespace qprune {

enum class Sign { Plus, Minus };

/// Chooses between the two admissible step sizes. When only one side of the
/// kernel vector is populated that side is forced regardless of the policy.
struct SigSelectPolicy {
  enum class Kind { MinAbsC, ForcePlus, ForceMinus, Custom };
  using Callback = std::function<Sign(std::span<const double> weights,
                                      std::span<const double> kernel, double c_plus,
                                      double c_minus)>;

  Kind kind = Kind::MinAbsC;
  Callback custom;

  static SigSelectPolicy min_abs() { return {}; }
  static SigSelectPolicy force(Sign s) {
    return {s == Sign::Plus ? Kind::ForcePlus : Kind::ForceMinus, {}};
  }
  static SigSelectPolicy with(Callback cb) { return {Kind::Custom, std::move(cb)}; }
};

struct PruneStepOutcome {
  std::size_t pruned_local = 0;
  double c = 0.0;
  Sign sign = Sign::Plus;
  std::vector<double> updated_weights;  ///< exact zero at pruned_local
  std::vector<std::size_t> extra_zeroed;
  std::size_t negative_clamps = 0;  ///< entries that went below -eps and were clamped
};

/// One pruning step: w <- w - c n with c the chosen smallest-magnitude
/// constant that zeros an entry. Ratio ties go to the smallest local index,
/// |c+| == |c-| ties go to +. Other entries within 1e-14 ||w||_inf of zero
/// are zeroed as well and reported in extra_zeroed.
PruneStepOutcome prune_step(std::span<const double> weights, std::span<const double> kernel,
                            const SigSelectPolicy& policy = {});

struct PruneDiagnostics {
  double kernel_orthogonality_max = 0.0;  ///< max ||rows^T n|| / ||rows||_F (when tracked)
  std::uint64_t positivity_clamps = 0;
  std::uint64_t qr_refreshes = 0;
  std::uint64_t rank_deficient_iterations = 0;  ///< when tracked
  std::uint64_t flops = 0;                 ///< QR arithmetic, Givens backend only
  std::uint64_t first_iteration_flops = 0;  ///< includes the initial factorization
  std::uint64_t max_iteration_flops = 0;    ///< over iterations after the first
  std::size_t working_bytes = 0;            ///< dense state held by the algorithm
};

struct PruneResult {
  std::vector<std::uint64_t> kept_global;  ///< 1-based stream positions, ascending
  std::vector<double> kept_weights;
  std::uint64_t iterations = 0;
  double moment_residual = std::numeric_limits<double>::quiet_NaN();
  PruneDiagnostics diagnostics;
};

/// Naive pruning over a dense M x N matrix: every iteration takes the kernel
/// vector from the last column of a full QR of all surviving rows.
PruneResult csp(const Matrix& vandermonde, std::span<const double> weights,
                const SigSelectPolicy& policy = {}, bool track_diagnostics = false);

/// Ordered source of Vandermonde rows for the streaming pruners.
class RowSource {
 public:
  virtual ~RowSource() = default;
  virtual std::size_t cols() const = 0;
  /// Writes the next row; returns false at the end of the stream.
  virtual bool next(std::span<double> row, double& weight, std::uint64_t& global) = 0;
};

/// Rows v(x) of a basis over a node stream; globals are the stream indices.
class BasisRowSource final : public RowSource {
 public:
  BasisRowSource(NodeStream& stream, const BasisSpec& basis);
  std::size_t cols() const override { return basis_->size(); }
  bool next(std::span<double> row, double& weight, std::uint64_t& global) override;

 private:
  NodeStream* stream_;
  const BasisSpec* basis_;
  RowEvaluator eval_;
};

/// Rows of an in-memory matrix; globals are row numbers starting at 1.
class MatrixRowSource final : public RowSource {
 public:
  MatrixRowSource(const Matrix& vandermonde, std::span<const double> weights);
  std::size_t cols() const override { return static_cast<std::size_t>(v_->cols()); }
  bool next(std::span<double> row, double& weight, std::uint64_t& global) override;

 private:
  const Matrix* v_;
  std::span<const double> w_;
  std::size_t pos_ = 0;
};

enum class KernelBackend {
  DenseQR,       ///< factor the window from scratch every iteration
  GivensWindow,  ///< maintain the window's QR by Givens downdate/update
};

struct ScspOptions {
  std::size_t k = 1;
  SigSelectPolicy policy;
  KernelBackend backend = KernelBackend::GivensWindow;
  /// Per-iteration kernel residual and rank checks; costs O(N^2) per step.
  bool track_diagnostics = false;
  QrWindow::DriftGuard drift;
};

/// Streaming pruning over a window of N + k rows. Pruned rows are refilled
/// from the source in place; once it is exhausted the window drains until
/// at most N rows remain.
PruneResult scsp(RowSource& source, const ScspOptions& options = {});
PruneResult scsp(NodeStream& stream, const BasisSpec& basis, const ScspOptions& options = {});

/// scsp with the Givens backend.
PruneResult gscsp(RowSource& source, std::size_t k = 1, const SigSelectPolicy& policy = {});
PruneResult gscsp(NodeStream& stream, const BasisSpec& basis, std::size_t k = 1,
                  const SigSelectPolicy& policy = {});

}  // namespace qprune
