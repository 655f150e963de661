#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qprune/baselines.hpp"
#include "qprune/basis.hpp"
#include "qprune/io_stream.hpp"
#include "qprune/measure.hpp"
#include "qprune/pruning.hpp"

namespace qprune {

enum class Method {
  Gscsp,
  Scsp,  ///< streaming with the dense per-iteration QR
  Csp,
  Nnls,
  Lp,              ///< appended nodes get cost 1
  LpRandomAppend,  ///< appended nodes get uniform (0, 1) costs
};

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Runs one method on a dense instance. `cost` is only read by the LP
/// methods and must then have one entry per row.
PruneResult run_method(Method method, const Matrix& vandermonde, std::span<const double> weights,
                       const Vector& cost = {}, const SigSelectPolicy& policy = {});

struct MomentReport {
  double residual = 0.0;  ///< ||V_kept^T w_kept - eta|| / ||eta||
  std::size_t kept = 0;
  double min_weight = 0.0;
  double max_weight = 0.0;
  bool flagged = false;  ///< residual above kMomentFlag
};

inline constexpr double kMomentFlag = 1e-8;

/// Re-reads `source` once, accumulating eta and the kept rows together.
MomentReport moment_report(const PruneResult& result, const BasisSpec& basis, NodeStream& source);

enum class PerturbationKind { Weights, AppendFew, AppendMany };
std::string_view to_string(PerturbationKind k);

struct StabilityRecord {
  Method method;
  PerturbationKind kind;
  double delta;
  double tv = 0.0;  ///< NaN when the cell failed
  std::uint32_t rep;
  std::uint64_t seed;
  std::string error;  ///< empty on success
};

struct StabilityConfig {
  std::vector<Method> methods{Method::Gscsp, Method::Nnls, Method::Lp};
  PerturbationKind kind = PerturbationKind::Weights;
  std::vector<double> deltas{1e-12, 1e-10, 1e-8, 1e-6};
  std::uint32_t reps = 20;
  std::uint64_t seed = 1;
  std::size_t append_few = 10;
  std::size_t append_many = 0;  ///< 0 means as many nodes as the base measure
  /// Where appended nodes are sampled from; defaults to the base measure's
  /// bounding box when absent.
  std::optional<DomainSpec> domain;
  unsigned threads = 0;  ///< 0 picks the hardware concurrency
};

/// Prunes the base measure and its perturbations with every method and
/// records d_TV between the two outputs, aligned by index over the union
/// of both supports. Records are ordered by (method, delta, rep).
std::vector<StabilityRecord> stability_experiment(const DiscreteMeasure& base, const BasisSpec& basis,
                                                  const StabilityConfig& config);

struct BenchRecord {
  Method method;
  std::uint64_t m;
  std::uint64_t n;
  double seconds = 0.0;  ///< mean over reps
  std::uint64_t ops = 0;  ///< QR arithmetic, Givens method only
  std::uint64_t first_iteration_ops = 0;
  std::uint64_t max_iteration_ops = 0;
  std::size_t working_bytes = 0;
  std::uint32_t reps;
  std::uint64_t seed;
  std::string skipped;  ///< reason, when the cell was not run
};

/// Dense methods stop above this many rows.
inline constexpr std::uint64_t kDenseRowLimit = 100'000;
inline constexpr std::uint64_t kCspRowLimit = 5'000;

/// Rows and weights are iid uniform (0, 1). Streaming methods generate rows
/// on the fly; dense ones materialize the matrix.
std::vector<BenchRecord> timing_benchmark(const std::vector<Method>& methods,
                                          const std::vector<std::uint64_t>& m_grid,
                                          const std::vector<std::uint64_t>& n_grid, std::uint32_t reps,
                                          std::uint64_t seed = 1);

/// Random uniform (0, 1) rows and weights, one seed per stream.
class UniformRowSource final : public RowSource {
 public:
  UniformRowSource(std::uint64_t m, std::size_t n, std::uint64_t seed);
  std::size_t cols() const override { return n_; }
  bool next(std::span<double> row, double& weight, std::uint64_t& global) override;

 private:
  std::uint64_t m_;
  std::size_t n_;
  Rng rng_;
  std::uint64_t pos_ = 0;
};

void write_stability_csv(const std::string& path, const std::vector<StabilityRecord>& records);
void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);

/// Median of the finite entries; NaN when there are none.
double median(std::vector<double> values);

}  // namespace qprune
