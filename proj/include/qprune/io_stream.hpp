#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qprune/measure.hpp"
#include "qprune/node_stream.hpp"
#include "qprune/random.hpp"

namespace qprune {

/// Text nodes: header `x1,...,xd,w`, then one node per line. Errors carry
/// the 1-based file line.
class CsvStream final : public NodeStream {
 public:
  /// `dim` of 0 takes the dimension from the header.
  explicit CsvStream(std::string path, std::size_t dim = 0);

  std::size_t dim() const override { return dim_; }
  std::optional<NodeView> next() override;
  void rewind() override;

 private:
  void open();

  std::string path_;
  std::size_t dim_;
  std::ifstream in_;
  std::string line_;
  std::vector<double> coords_;
  std::uint64_t line_no_ = 0;
  std::uint64_t index_ = 0;
};

inline constexpr char kBinaryMagic[4] = {'Q', 'P', 'N', '1'};
inline constexpr std::size_t kBinaryHeaderBytes = 16;

/// Binary nodes: `QPN1`, u32 dim, u64 count, then count records of dim + 1
/// little-endian binary64 values (coordinates, then weight).
class BinaryStream final : public NodeStream {
 public:
  explicit BinaryStream(std::string path);

  std::size_t dim() const override { return dim_; }
  std::optional<std::uint64_t> size_hint() const override { return count_; }
  std::optional<NodeView> next() override;
  void rewind() override;

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t dim_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t index_ = 0;
  std::vector<double> record_;
};

/// Writes every remaining node of `source`; returns the count.
std::uint64_t write_binary(const std::string& path, NodeStream& source);
std::uint64_t write_csv(const std::string& path, NodeStream& source);

/// Shortest decimal that parses back to the same binary64.
std::string format_double(double x);

/// A sampling domain: bounding box plus a deterministic membership test.
struct DomainSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::function<bool(std::span<const double>)> contains;

  std::size_t dim() const noexcept { return lo.size(); }

  static DomainSpec box(std::vector<double> lo, std::vector<double> hi);
  static DomainSpec disk(double cx, double cy, double radius);
  static DomainSpec annulus(double cx, double cy, double inner, double outer);
  struct Disk {
    double cx, cy, r;
  };
  static DomainSpec union_of_disks(std::vector<Disk> disks);
  /// Points in R^3 whose distance to the circle of radius `major` in the
  /// xy-plane lies in [inner, outer].
  static DomainSpec torus_shell(double major, double inner, double outer);
};

/// Exactly `count` points drawn uniformly from the domain by rejection in
/// its bounding box, each with weight 1 / count. Replays identically.
class RejectionSampler final : public NodeStream {
 public:
  static constexpr std::uint64_t kMaxConsecutiveRejections = 10'000'000;

  RejectionSampler(DomainSpec domain, std::uint64_t count, std::uint64_t seed);

  std::size_t dim() const override { return domain_.dim(); }
  std::optional<std::uint64_t> size_hint() const override { return count_; }
  std::optional<NodeView> next() override;
  void rewind() override;

  std::uint64_t proposals() const noexcept { return proposals_; }
  const DomainSpec& domain() const noexcept { return domain_; }

 private:
  DomainSpec domain_;
  std::uint64_t count_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<double> point_;
  std::uint64_t produced_ = 0;
  std::uint64_t proposals_ = 0;
};

/// `gen:SHAPE[:key=value]...`, shapes box, disk, annulus, disks, torus.
/// `m` sets the count (required), `seed` overrides `default_seed`.
std::unique_ptr<RejectionSampler> parse_generator(std::string_view spec,
                                                  std::uint64_t default_seed);

/// Opens a `gen:` spec, a `.csv` file, or a binary file.
std::unique_ptr<NodeStream> open_source(const std::string& spec, std::uint64_t seed,
                                        std::size_t dim_hint = 0);

/// Materializes a stream (rewound first).
DiscreteMeasure read_all(NodeStream& source);

}  // namespace qprune
