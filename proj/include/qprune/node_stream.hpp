#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "qprune/measure.hpp"

namespace qprune {

/// One node pulled from a stream. `coords` stays valid until the next call
/// to next() or rewind() on the producing stream.
struct NodeView {
  std::span<const double> coords;
  double weight;
  std::uint64_t index;  ///< position in the stream order, starting at 1
};

/// Pull-based ordered source of weighted nodes. The order in which nodes are
/// produced is the processing order the streaming pruners depend on.
class NodeStream {
 public:
  virtual ~NodeStream() = default;

  virtual std::size_t dim() const = 0;
  virtual std::optional<std::uint64_t> size_hint() const { return std::nullopt; }
  virtual std::optional<NodeView> next() = 0;
  /// Restarts at the first node; re-openable sources replay identically.
  virtual void rewind() = 0;
};

/// Streams an in-memory measure without copying it.
class MeasureStream final : public NodeStream {
 public:
  explicit MeasureStream(const DiscreteMeasure& m) : m_(&m) {}

  std::size_t dim() const override { return m_->dim(); }
  std::optional<std::uint64_t> size_hint() const override { return m_->size(); }
  std::optional<NodeView> next() override {
    if (pos_ >= m_->size()) return std::nullopt;
    const std::size_t i = pos_++;
    return NodeView{m_->node(i), m_->weight(i), static_cast<std::uint64_t>(i + 1)};
  }
  void rewind() override { pos_ = 0; }

 private:
  const DiscreteMeasure* m_;
  std::size_t pos_ = 0;
};

}  // namespace qprune
