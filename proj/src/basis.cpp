#include "qprune/basis.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "qprune/error.hpp"
#include "qprune/summation.hpp"

namespace qprune {

namespace {

constexpr std::size_t kMaxIndexSetSize = 10'000'000;

bool graded_lex_less(std::span<const unsigned> a, std::span<const unsigned> b) {
  unsigned da = 0, db = 0;
  for (unsigned v : a) da += v;
  for (unsigned v : b) db += v;
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Fills out[0..max_degree] with f_0(x) .. f_max(x).
void univariate_table(Family family, double x, unsigned max_degree, double* out) {
  switch (family) {
    case Family::Monomial: {
      out[0] = 1.0;
      for (unsigned q = 1; q <= max_degree; ++q) out[q] = out[q - 1] * x;
      return;
    }
    case Family::Legendre: {
      out[0] = 1.0;
      if (max_degree >= 1) out[1] = x;
      for (unsigned q = 1; q < max_degree; ++q) {
        out[q + 1] = ((2.0 * q + 1.0) * x * out[q] - q * out[q - 1]) / (q + 1.0);
      }
      return;
    }
    case Family::Chebyshev: {
      out[0] = 1.0;
      if (max_degree >= 1) out[1] = x;
      for (unsigned q = 1; q < max_degree; ++q) out[q + 1] = 2.0 * x * out[q] - out[q - 1];
      return;
    }
    case Family::HermiteProbabilists: {
      out[0] = 1.0;
      if (max_degree >= 1) out[1] = x;
      for (unsigned q = 1; q < max_degree; ++q) out[q + 1] = x * out[q] - q * out[q - 1];
      return;
    }
    case Family::BesselJ: {
      for (unsigned q = 0; q <= max_degree; ++q) out[q] = univariate(Family::BesselJ, q, x);
      return;
    }
    case Family::UserCallback:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "family has no univariate members");
}

// Ascending power series, accumulated in extended precision: the terms peak
// near (|x|/2)^(2m) / (m!)^2 ~ 4e3 for |x| = 12 while J stays O(1).
double bessel_j(unsigned order, double x) {
  if (!std::isfinite(x) || std::abs(x) > kBesselMaxArgument) {
    throw Error(ErrorCode::EvaluationDomain,
                "BesselJ argument " + std::to_string(x) + " outside [-12, 12]");
  }
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  const long double half = static_cast<long double>(x) / 2.0L;
  long double term = 1.0L;
  for (unsigned k = 1; k <= order; ++k) term *= half / static_cast<long double>(k);
  long double sum = term;
  const long double half_sq = half * half;
  for (unsigned m = 1; m < 200; ++m) {
    term *= -half_sq / (static_cast<long double>(m) * static_cast<long double>(m + order));
    sum += term;
    if (std::abs(term) <= 1e-21L * std::abs(sum) && static_cast<long double>(m) > std::abs(half)) {
      break;
    }
  }
  return static_cast<double>(sum);
}

}  // namespace

MultiIndexSet::MultiIndexSet(std::size_t dim, std::vector<std::vector<unsigned>> indices)
    : dim_(dim), max_degree_(dim, 0) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "multi-index dimension must be positive");
  for (const auto& a : indices) {
    if (a.size() != dim) throw Error(ErrorCode::DimensionMismatch, "multi-index of wrong length");
  }
  std::sort(indices.begin(), indices.end(),
            [](const auto& a, const auto& b) { return graded_lex_less(a, b); });
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw Error(ErrorCode::InvalidArgument, "duplicate multi-index");
  }
  indices_.reserve(indices.size() * dim);
  for (const auto& a : indices) {
    for (std::size_t j = 0; j < dim; ++j) {
      indices_.push_back(a[j]);
      max_degree_[j] = std::max(max_degree_[j], a[j]);
    }
  }
}

MultiIndexSet MultiIndexSet::truncated(std::size_t n) const {
  if (n > size()) throw Error(ErrorCode::InvalidArgument, "truncation beyond set size");
  std::vector<std::vector<unsigned>> head;
  head.reserve(n);
  for (std::size_t i = 0; i < n; ++i) head.emplace_back((*this)[i].begin(), (*this)[i].end());
  return MultiIndexSet(dim_, std::move(head));
}

MultiIndexSet multi_index_set(IndexSetKind kind, double r, std::size_t dim, double p) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "r must be >= 0");
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (kind == IndexSetKind::PNorm && !(p > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "p must be positive");
  }

  // Every set here is downward closed and bounded by alpha_j <= r, so a
  // depth-first sweep can stop an axis as soon as the partial index fails.
  const double rp = kind == IndexSetKind::PNorm ? std::pow(r, p) : 0.0;
  auto admits = [&](const std::vector<unsigned>& a) {
    switch (kind) {
      case IndexSetKind::TD: {
        double s = 0;
        for (unsigned v : a) s += v;
        return s <= r + 1e-12 * (1.0 + r);
      }
      case IndexSetKind::HC: {
        double prod = 1;
        for (unsigned v : a) prod *= v + 1.0;
        return prod <= (r + 1.0) * (1.0 + 1e-12);
      }
      case IndexSetKind::PNorm: {
        double s = 0;
        for (unsigned v : a) s += std::pow(static_cast<double>(v), p);
        return s <= rp * (1.0 + 1e-12) + 1e-300;
      }
    }
    return false;
  };

  const unsigned bound = static_cast<unsigned>(std::floor(r + 1e-9));
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> alpha(dim, 0);
  auto sweep = [&](auto&& self, std::size_t axis) -> void {
    if (axis == dim) {
      if (out.size() >= kMaxIndexSetSize) {
        throw Error(ErrorCode::InvalidArgument, "multi-index set too large");
      }
      out.push_back(alpha);
      return;
    }
    for (unsigned v = 0; v <= bound; ++v) {
      alpha[axis] = v;
      if (!admits(alpha)) break;
      self(self, axis + 1);
    }
    alpha[axis] = 0;
  };
  sweep(sweep, 0);
  return MultiIndexSet(dim, std::move(out));
}

double univariate(Family family, unsigned degree, double x) {
  if (family == Family::BesselJ) return bessel_j(degree, x);
  std::vector<double> table(degree + 1);
  univariate_table(family, x, degree, table.data());
  return table[degree];
}

BasisSpec::BasisSpec(Family family, MultiIndexSet index_set, std::vector<AxisMap> axis_maps)
    : family_(family),
      dim_(index_set.dim()),
      size_(index_set.size()),
      index_set_(std::move(index_set)),
      axis_maps_(std::move(axis_maps)) {
  if (family == Family::UserCallback) {
    throw Error(ErrorCode::InvalidArgument, "use BasisSpec::user for callback bases");
  }
  if (axis_maps_.empty()) axis_maps_.resize(dim_);
  if (axis_maps_.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "one axis map per dimension required");
  }
  if (size_ == 0) throw Error(ErrorCode::InvalidArgument, "empty basis");
}

BasisSpec BasisSpec::user(std::size_t dim, std::size_t size, BasisCallback callback) {
  if (!callback) throw Error(ErrorCode::InvalidArgument, "null basis callback");
  std::vector<std::vector<unsigned>> one(1, std::vector<unsigned>(dim, 0));
  BasisSpec b(Family::Monomial, MultiIndexSet(dim, std::move(one)));
  b.family_ = Family::UserCallback;
  b.size_ = size;
  b.callback_ = std::move(callback);
  return b;
}

void BasisSpec::eval_row(std::span<const double> x, std::span<double> row) const {
  RowEvaluator eval(*this);
  eval(x, row);
}

Vector BasisSpec::eval_row(std::span<const double> x) const {
  Vector row(static_cast<Eigen::Index>(size_));
  eval_row(x, std::span<double>(row.data(), size_));
  return row;
}

Matrix BasisSpec::vandermonde(const DiscreteMeasure& m) const {
  if (m.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "measure/basis dimension");
  RowMatrix v(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(size_));
  RowEvaluator eval(*this);
  for (std::size_t i = 0; i < m.size(); ++i) {
    eval(m.node(i), std::span<double>(v.row(static_cast<Eigen::Index>(i)).data(), size_));
  }
  return v;
}

RowEvaluator::RowEvaluator(const BasisSpec& basis) : basis_(&basis) {
  if (basis.family() == Family::UserCallback) return;
  std::size_t total = 0;
  for (std::size_t j = 0; j < basis.dim(); ++j) {
    offsets_.push_back(total);
    total += basis.index_set().max_degree(j) + 1;
  }
  table_.resize(total);
}

void RowEvaluator::operator()(std::span<const double> x, std::span<double> row) {
  const BasisSpec& b = *basis_;
  if (x.size() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "point/basis dimension");
  if (row.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "row length");
  for (double xi : x) {
    if (!std::isfinite(xi)) throw Error(ErrorCode::NonFiniteInput, "non-finite coordinate");
  }
  if (b.family() == Family::UserCallback) {
    b.callback_(x, row);
    return;
  }
  const std::size_t d = b.dim();
  for (std::size_t j = 0; j < d; ++j) {
    const double mapped = b.axis_maps_[j].scale * x[j] + b.axis_maps_[j].shift;
    univariate_table(b.family(), mapped, b.index_set().max_degree(j), table_.data() + offsets_[j]);
  }
  const MultiIndexSet& set = b.index_set();
  for (std::size_t n = 0; n < b.size(); ++n) {
    const auto alpha = set[n];
    double v = table_[offsets_[0] + alpha[0]];
    for (std::size_t j = 1; j < d; ++j) v *= table_[offsets_[j] + alpha[j]];
    row[n] = v;
  }
}

BasisSpec parse_basis_spec(std::string_view spec, std::size_t dim) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = spec.find(':', start);
    parts.emplace_back(spec.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  auto number = [&](const std::string& s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::ParseError, "bad number '" + s + "' in basis spec");
    }
    return v;
  };
  if (parts.size() < 3 || parts.size() > 4) {
    throw Error(ErrorCode::ParseError,
                "basis spec must be family:KIND:r[:p], got '" + std::string(spec) + "'");
  }

  const std::string fam = lower(parts[0]);
  Family family;
  if (fam == "monomial") family = Family::Monomial;
  else if (fam == "legendre") family = Family::Legendre;
  else if (fam == "chebyshev") family = Family::Chebyshev;
  else if (fam == "hermite") family = Family::HermiteProbabilists;
  else if (fam == "besselj") family = Family::BesselJ;
  else throw Error(ErrorCode::ParseError, "unknown basis family '" + parts[0] + "'");

  const std::string kind_s = lower(parts[1]);
  IndexSetKind kind;
  if (kind_s == "td") kind = IndexSetKind::TD;
  else if (kind_s == "hc") kind = IndexSetKind::HC;
  else if (kind_s == "pnorm") kind = IndexSetKind::PNorm;
  else throw Error(ErrorCode::ParseError, "unknown index set '" + parts[1] + "'");

  const double r = number(parts[2]);
  double p = 1.0;
  if (kind == IndexSetKind::PNorm) {
    if (parts.size() != 4) throw Error(ErrorCode::ParseError, "PNORM needs a p value");
    p = number(parts[3]);
  } else if (parts.size() == 4) {
    throw Error(ErrorCode::ParseError, "only PNORM takes a p value");
  }
  return BasisSpec(family, multi_index_set(kind, r, dim, p));
}

MomentVector stream_moments(const BasisSpec& basis, NodeStream& source) {
  if (source.dim() != basis.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "stream/basis dimension");
  }
  const std::size_t n = basis.size();
  std::vector<CompensatedSum> acc(n);
  std::vector<double> row(n);
  RowEvaluator eval(basis);
  while (auto node = source.next()) {
    eval(node->coords, row);
    for (std::size_t i = 0; i < n; ++i) acc[i].add(node->weight * row[i]);
  }
  MomentVector eta{Vector(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) eta.values[static_cast<Eigen::Index>(i)] = acc[i].value();
  return eta;
}

}  // namespace qprune
