#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qprune/linalg.hpp"
#include "qprune/node_stream.hpp"

namespace qprune {

enum class IndexSetKind {
  HC,     ///< hyperbolic cross: prod(alpha_j + 1) <= r + 1
  TD,     ///< total degree: sum(alpha_j) <= r
  PNorm,  ///< ||alpha||_p <= r
};

/// A finite set of multi-indices in N_0^d, kept in graded lexicographic
/// order (total degree first, then lexicographic). The order fixes the
/// column order of every Vandermonde-like matrix built from it.
class MultiIndexSet {
 public:
  /// Sorts `indices` into graded lexicographic order; duplicates are an error.
  MultiIndexSet(std::size_t dim, std::vector<std::vector<unsigned>> indices);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return indices_.size() / (dim_ ? dim_ : 1); }
  std::span<const unsigned> operator[](std::size_t i) const noexcept {
    return {indices_.data() + i * dim_, dim_};
  }
  unsigned max_degree(std::size_t axis) const noexcept { return max_degree_[axis]; }

  /// The first `n` indices. Used to pick dimensions that no complete set hits.
  MultiIndexSet truncated(std::size_t n) const;

 private:
  std::size_t dim_;
  std::vector<unsigned> indices_;
  std::vector<unsigned> max_degree_;
};

/// `p` is only read for IndexSetKind::PNorm.
MultiIndexSet multi_index_set(IndexSetKind kind, double r, std::size_t dim, double p = 1.0);

enum class Family {
  Monomial,
  Legendre,
  Chebyshev,
  HermiteProbabilists,  ///< He_{q+1}(x) = x He_q(x) - q He_{q-1}(x)
  BesselJ,              ///< first kind, integer order; |x| <= 12 only
  UserCallback,
};

/// Arguments beyond this magnitude are rejected for Family::BesselJ.
inline constexpr double kBesselMaxArgument = 12.0;

/// f_q(x) for a single univariate family member.
double univariate(Family family, unsigned degree, double x);

/// x -> scale * x + shift, applied per axis before evaluation.
struct AxisMap {
  double scale = 1.0;
  double shift = 0.0;
};

using BasisCallback = std::function<void(std::span<const double> x, std::span<double> row)>;

/// The N-dimensional function space: d-fold products of univariate functions,
/// one product per multi-index, or a user callback producing whole rows.
class BasisSpec {
 public:
  BasisSpec(Family family, MultiIndexSet index_set, std::vector<AxisMap> axis_maps = {});

  /// A basis whose rows come from `callback`; `size` is N.
  static BasisSpec user(std::size_t dim, std::size_t size, BasisCallback callback);

  Family family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return size_; }
  const MultiIndexSet& index_set() const noexcept { return index_set_; }
  const std::vector<AxisMap>& axis_maps() const noexcept { return axis_maps_; }

  void eval_row(std::span<const double> x, std::span<double> row) const;
  Vector eval_row(std::span<const double> x) const;

  /// Rows for every node of `m`, in node order.
  Matrix vandermonde(const DiscreteMeasure& m) const;

 private:
  friend class RowEvaluator;

  Family family_;
  std::size_t dim_;
  std::size_t size_;
  MultiIndexSet index_set_;
  std::vector<AxisMap> axis_maps_;
  BasisCallback callback_;
};

/// Evaluates rows of one basis with reusable scratch space. Not shareable
/// across threads; make one per thread.
class RowEvaluator {
 public:
  explicit RowEvaluator(const BasisSpec& basis);

  void operator()(std::span<const double> x, std::span<double> row);

 private:
  const BasisSpec* basis_;
  std::vector<double> table_;
  std::vector<std::size_t> offsets_;
};

/// Parses `family:KIND:r[:p]`, e.g. `legendre:TD:10` or
/// `besselj:PNORM:25:0.3333333333`.
BasisSpec parse_basis_spec(std::string_view spec, std::size_t dim);

struct MomentVector {
  Vector values;
};

/// eta_n = sum_m w_m v_n(x_m) in one pass with compensated summation.
MomentVector stream_moments(const BasisSpec& basis, NodeStream& source);

}  // namespace qprune
