#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qprune {

/// A finitely supported nonnegative measure: ordered nodes in R^d with
/// weights. The node order is part of the value and every operation in this
/// library preserves it.
class DiscreteMeasure {
 public:
  enum class Mode {
    AllowZero,  ///< weights >= 0 (zero-padded comparisons need this)
    Strict,     ///< weights > 0
  };

  explicit DiscreteMeasure(std::size_t dim = 1);

  /// `nodes` is row-major, `weights.size()` rows of `dim` coordinates.
  DiscreteMeasure(std::size_t dim, std::vector<double> nodes, std::vector<double> weights,
                  Mode mode = Mode::AllowZero);

  static DiscreteMeasure from_points(const std::vector<std::vector<double>>& points,
                                     std::vector<double> weights, Mode mode = Mode::AllowZero);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }

  std::span<const double> node(std::size_t i) const noexcept {
    return {nodes_.data() + i * dim_, dim_};
  }
  double weight(std::size_t i) const noexcept { return weights_[i]; }

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::size_t dim_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

enum class SupportAlignment {
  /// Nodes are matched by position; the shorter measure is zero-padded and
  /// the shared prefix must agree coordinate-for-coordinate.
  ByIndex,
  /// Nodes are matched by exact coordinate equality.
  ByCoordinateExact,
};

/// Sum of |w_m|.
double total_mass(const DiscreteMeasure& m);

/// |a - b| / (|a| + |b|) with |.| the l1 norm of the aligned weights.
double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                   SupportAlignment align = SupportAlignment::ByIndex);

/// Same distance on bare weight vectors aligned by position (shorter one
/// zero-padded).
double tv_distance(std::span<const double> a, std::span<const double> b);

/// Random mean-zero displacement of the weights hitting `target_tv` to 1%.
///
/// Displacements are iid uniform in [-w_m, w_m], projected onto the zero-sum
/// subspace proportionally to the weights, then scaled to the l1 size the
/// target requires. If that would drive a weight to zero the displacement is
/// shrunk; a shrink that misses the target by more than 1% is an error.
DiscreteMeasure perturb_weights(const DiscreteMeasure& m, double target_tv, std::uint64_t seed);

/// Appends `new_nodes` (row-major) with equal weights eps / count, where eps
/// is chosen so that tv_distance(m, result) == target_tv.
DiscreteMeasure append_nodes(const DiscreteMeasure& m, std::span<const double> new_nodes,
                             double target_tv);

}  // namespace qprune
