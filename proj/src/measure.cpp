#include "qprune/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "qprune/error.hpp"
#include "qprune/random.hpp"
#include "qprune/summation.hpp"

namespace qprune {

DiscreteMeasure::DiscreteMeasure(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "measure dimension must be positive");
}

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> nodes,
                                 std::vector<double> weights, Mode mode)
    : dim_(dim), nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "measure dimension must be positive");
  if (nodes_.size() != weights_.size() * dim_) {
    throw Error(ErrorCode::InvalidArgument,
                "node storage holds " + std::to_string(nodes_.size()) + " values, expected " +
                    std::to_string(weights_.size() * dim_));
  }
  for (double x : nodes_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "non-finite node coordinate");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteInput, "non-finite weight");
    if (w < 0.0 || (mode == Mode::Strict && w == 0.0)) {
      throw Error(ErrorCode::NonPositiveWeight, "weight " + std::to_string(i) + " is " +
                                                    std::to_string(w));
    }
  }
}

DiscreteMeasure DiscreteMeasure::from_points(const std::vector<std::vector<double>>& points,
                                             std::vector<double> weights, Mode mode) {
  if (points.empty()) return DiscreteMeasure(1, {}, std::move(weights), mode);
  const std::size_t d = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * d);
  for (const auto& p : points) {
    if (p.size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged point list");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return DiscreteMeasure(d, std::move(flat), std::move(weights), mode);
}

double total_mass(const DiscreteMeasure& m) {
  CompensatedSum s;
  for (double w : m.weights()) s.add(std::abs(w));
  return s.value();
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
  CompensatedSum diff, mass;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double wa = i < a.size() ? a[i] : 0.0;
    const double wb = i < b.size() ? b[i] : 0.0;
    diff.add(std::abs(wa - wb));
    mass.add(std::abs(wa));
    mass.add(std::abs(wb));
  }
  const double denom = mass.value();
  if (denom == 0.0) throw Error(ErrorCode::BothZero, "both measures have zero mass");
  return diff.value() / denom;
}

double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, SupportAlignment align) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "measures live in different dimensions");
  }
  if (align == SupportAlignment::ByIndex) {
    const std::size_t shared = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < shared; ++i) {
      if (!std::equal(a.node(i).begin(), a.node(i).end(), b.node(i).begin())) {
        throw Error(ErrorCode::UnalignableSupports,
                    "node " + std::to_string(i) + " differs between the measures");
      }
    }
    return tv_distance(a.weights(), b.weights());
  }

  // Exact coordinate matching; repeated coordinates within one measure merge.
  std::map<std::vector<double>, std::pair<double, double>> merged;
  for (std::size_t i = 0; i < a.size(); ++i) {
    merged[{a.node(i).begin(), a.node(i).end()}].first += a.weight(i);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    merged[{b.node(i).begin(), b.node(i).end()}].second += b.weight(i);
  }
  std::vector<double> wa, wb;
  wa.reserve(merged.size());
  wb.reserve(merged.size());
  for (const auto& [key, w] : merged) {
    wa.push_back(w.first);
    wb.push_back(w.second);
  }
  return tv_distance(std::span<const double>(wa), std::span<const double>(wb));
}

DiscreteMeasure perturb_weights(const DiscreteMeasure& m, double target_tv, std::uint64_t seed) {
  if (!(target_tv >= 0.0 && target_tv < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "target_tv must lie in [0, 1)");
  }
  std::vector<double> nodes(m.nodes().begin(), m.nodes().end());
  std::vector<double> w(m.weights().begin(), m.weights().end());
  if (target_tv == 0.0) return DiscreteMeasure(m.dim(), std::move(nodes), std::move(w));

  Rng rng(seed);
  const std::size_t n = w.size();
  std::vector<double> delta(n);
  CompensatedSum delta_sum, mass;
  for (std::size_t i = 0; i < n; ++i) {
    delta[i] = w[i] * uniform(rng, -1.0, 1.0);
    delta_sum.add(delta[i]);
    mass.add(w[i]);
  }
  const double total = mass.value();
  if (total == 0.0) throw Error(ErrorCode::TargetUnreachable, "measure has zero mass");
  const double shift = delta_sum.value() / total;
  CompensatedSum l1;
  for (std::size_t i = 0; i < n; ++i) {
    delta[i] -= w[i] * shift;
    l1.add(std::abs(delta[i]));
  }
  if (l1.value() == 0.0) {
    throw Error(ErrorCode::TargetUnreachable, "no nonzero mean-zero displacement exists");
  }

  // Mean-zero displacements keep the mass, so tv = ||delta||_1 / (2 |m|).
  double scale = 2.0 * total * target_tv / l1.value();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] > 0.0) worst = std::max(worst, -scale * delta[i] / w[i]);
  }
  if (worst >= 1.0) {
    const double shrink = (1.0 - 1e-3) / worst;
    if (shrink < 0.99) {
      throw Error(ErrorCode::TargetUnreachable,
                  "positivity caps the reachable distance at about " +
                      std::to_string(target_tv * shrink));
    }
    scale *= shrink;
  }
  for (std::size_t i = 0; i < n; ++i) w[i] += scale * delta[i];
  return DiscreteMeasure(m.dim(), std::move(nodes), std::move(w));
}

DiscreteMeasure append_nodes(const DiscreteMeasure& m, std::span<const double> new_nodes,
                             double target_tv) {
  if (!(target_tv > 0.0 && target_tv < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "target_tv must lie in (0, 1)");
  }
  if (new_nodes.empty() || new_nodes.size() % m.dim() != 0) {
    throw Error(ErrorCode::InvalidArgument, "new_nodes must hold a positive number of points");
  }
  const std::size_t count = new_nodes.size() / m.dim();
  // eps / (2|m| + eps) = target  =>  eps = 2|m| target / (1 - target)
  const double eps = 2.0 * total_mass(m) * target_tv / (1.0 - target_tv);

  std::vector<double> nodes(m.nodes().begin(), m.nodes().end());
  nodes.insert(nodes.end(), new_nodes.begin(), new_nodes.end());
  std::vector<double> w(m.weights().begin(), m.weights().end());
  w.insert(w.end(), count, eps / static_cast<double>(count));
  return DiscreteMeasure(m.dim(), std::move(nodes), std::move(w));
}

}  // namespace qprune
