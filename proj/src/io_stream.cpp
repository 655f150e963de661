#include "qprune/io_stream.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>

#include "qprune/error.hpp"

namespace qprune {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

std::string at_line(std::uint64_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

CsvStream::CsvStream(std::string path, std::size_t dim) : path_(std::move(path)), dim_(dim) {
  open();
}

void CsvStream::open() {
  in_ = std::ifstream(path_);
  if (!in_) throw Error(ErrorCode::Io, "cannot open " + path_);
  line_no_ = 0;
  index_ = 0;
  if (!std::getline(in_, line_)) throw Error(ErrorCode::ParseError, at_line(1, "missing header"));
  ++line_no_;
  const auto cols = split(trim(line_), ',');
  const std::size_t d = cols.size() - 1;
  bool ok = cols.size() >= 2 && trim(cols.back()) == "w";
  for (std::size_t i = 0; ok && i < d; ++i) ok = trim(cols[i]) == "x" + std::to_string(i + 1);
  if (!ok) throw Error(ErrorCode::ParseError, at_line(1, "header must read x1,...,xd,w"));
  if (dim_ != 0 && d != dim_) {
    throw Error(ErrorCode::DimensionMismatch, path_ + " holds " + std::to_string(d) +
                                                  "-dimensional nodes, expected " + std::to_string(dim_));
  }
  dim_ = d;
  coords_.resize(dim_);
}

std::optional<NodeView> CsvStream::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    const std::string_view text = trim(line_);
    if (text.empty()) continue;
    const auto cols = split(text, ',');
    if (cols.size() != dim_ + 1) {
      throw Error(ErrorCode::ParseError, at_line(line_no_, "expected " + std::to_string(dim_ + 1) +
                                                                " fields, found " + std::to_string(cols.size())));
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto v = parse_double(cols[i]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::ParseError, at_line(line_no_, "bad coordinate '" + std::string(cols[i]) + "'"));
      }
      coords_[i] = *v;
    }
    const auto w = parse_double(cols[dim_]);
    if (!w || std::isnan(*w)) {
      throw Error(ErrorCode::ParseError, at_line(line_no_, "bad weight '" + std::string(cols[dim_]) + "'"));
    }
    if (!(*w > 0.0) || !std::isfinite(*w)) {
      throw Error(ErrorCode::NonPositiveWeight, at_line(line_no_, "weight must be positive"));
    }
    return NodeView{coords_, *w, ++index_};
  }
  if (in_.bad()) throw Error(ErrorCode::Io, "read error in " + path_);
  return std::nullopt;
}

void CsvStream::rewind() { open(); }

BinaryStream::BinaryStream(std::string path) : path_(std::move(path)) { rewind(); }

void BinaryStream::rewind() {
  in_ = std::ifstream(path_, std::ios::binary);
  if (!in_) throw Error(ErrorCode::Io, "cannot open " + path_);
  char header[kBinaryHeaderBytes];
  in_.read(header, kBinaryHeaderBytes);
  if (in_.gcount() < 4 || std::memcmp(header, kBinaryMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, path_ + " does not start with QPN1");
  }
  if (in_.gcount() != std::streamsize(kBinaryHeaderBytes)) {
    throw Error(ErrorCode::TruncatedFile,
                path_ + ": header ends at byte offset " + std::to_string(in_.gcount()));
  }
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  std::memcpy(&dim, header + 4, 4);
  std::memcpy(&count, header + 8, 8);
  dim_ = to_little(dim);
  count_ = to_little(count);
  if (dim_ == 0) throw Error(ErrorCode::ParseError, path_ + ": dimension is zero");

  const std::uint64_t size = std::filesystem::file_size(path_);
  const std::uint64_t record = (dim_ + 1) * sizeof(double);
  if (count_ > (size - kBinaryHeaderBytes) / record || size < kBinaryHeaderBytes + count_ * record) {
    const std::uint64_t whole = (size - kBinaryHeaderBytes) / record;
    throw Error(ErrorCode::TruncatedFile,
                path_ + ": declares " + std::to_string(count_) + " records but data ends at byte offset " +
                    std::to_string(size) + " inside record " + std::to_string(whole + 1));
  }
  record_.resize(dim_ + 1);
  index_ = 0;
}

std::optional<NodeView> BinaryStream::next() {
  if (index_ >= count_) return std::nullopt;
  const std::uint64_t offset = kBinaryHeaderBytes + index_ * record_.size() * sizeof(double);
  in_.read(reinterpret_cast<char*>(record_.data()), std::streamsize(record_.size() * sizeof(double)));
  if (in_.gcount() != std::streamsize(record_.size() * sizeof(double))) {
    throw Error(ErrorCode::TruncatedFile, path_ + ": short read at byte offset " +
                                              std::to_string(offset + std::uint64_t(in_.gcount())));
  }
  for (double& v : record_) v = to_little(v);
  ++index_;
  const double w = record_.back();
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw Error(ErrorCode::NonPositiveWeight,
                path_ + ": record " + std::to_string(index_) + " has a non-positive weight");
  }
  return NodeView{{record_.data(), dim_}, w, index_};
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::uint64_t write_binary(const std::string& path, NodeStream& source) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  const auto dim = static_cast<std::uint32_t>(source.dim());
  std::uint64_t count = 0;
  char header[kBinaryHeaderBytes] = {};
  std::memcpy(header, kBinaryMagic, 4);
  const std::uint32_t d = to_little(dim);
  std::memcpy(header + 4, &d, 4);
  out.write(header, kBinaryHeaderBytes);
  std::vector<double> rec(dim + 1);
  while (auto node = source.next()) {
    for (std::size_t i = 0; i < dim; ++i) rec[i] = to_little(node->coords[i]);
    rec[dim] = to_little(node->weight);
    out.write(reinterpret_cast<const char*>(rec.data()), std::streamsize(rec.size() * sizeof(double)));
    ++count;
  }
  const std::uint64_t c = to_little(count);
  out.seekp(8);
  out.write(reinterpret_cast<const char*>(&c), 8);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
  return count;
}

std::uint64_t write_csv(const std::string& path, NodeStream& source) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  const std::size_t dim = source.dim();
  for (std::size_t i = 0; i < dim; ++i) out << 'x' << i + 1 << ',';
  out << "w\n";
  std::uint64_t count = 0;
  std::string line;
  while (auto node = source.next()) {
    line.clear();
    for (double x : node->coords) {
      line += format_double(x);
      line += ',';
    }
    line += format_double(node->weight);
    line += '\n';
    out << line;
    ++count;
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
  return count;
}

DomainSpec DomainSpec::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.empty() || lo.size() != hi.size()) {
    throw Error(ErrorCode::InvalidArgument, "box needs matching nonempty corners");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw Error(ErrorCode::InvalidArgument, "box corner lo >= hi");
  }
  return {std::move(lo), std::move(hi), [](std::span<const double>) { return true; }};
}

DomainSpec DomainSpec::disk(double cx, double cy, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "disk radius must be positive");
  return {{cx - radius, cy - radius}, {cx + radius, cy + radius}, [=](std::span<const double> p) {
            const double dx = p[0] - cx, dy = p[1] - cy;
            return dx * dx + dy * dy <= radius * radius;
          }};
}

DomainSpec DomainSpec::annulus(double cx, double cy, double inner, double outer) {
  if (!(inner >= 0.0 && inner < outer)) {
    throw Error(ErrorCode::InvalidArgument, "annulus needs 0 <= inner < outer");
  }
  return {{cx - outer, cy - outer}, {cx + outer, cy + outer}, [=](std::span<const double> p) {
            const double dx = p[0] - cx, dy = p[1] - cy;
            const double r2 = dx * dx + dy * dy;
            return r2 >= inner * inner && r2 <= outer * outer;
          }};
}

DomainSpec DomainSpec::union_of_disks(std::vector<Disk> disks) {
  if (disks.empty()) throw Error(ErrorCode::InvalidArgument, "union of zero disks");
  std::vector<double> lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
  for (const Disk& d : disks) {
    if (!(d.r > 0.0)) throw Error(ErrorCode::InvalidArgument, "disk radius must be positive");
    lo[0] = std::min(lo[0], d.cx - d.r);
    lo[1] = std::min(lo[1], d.cy - d.r);
    hi[0] = std::max(hi[0], d.cx + d.r);
    hi[1] = std::max(hi[1], d.cy + d.r);
  }
  return {std::move(lo), std::move(hi), [disks = std::move(disks)](std::span<const double> p) {
            for (const Disk& d : disks) {
              const double dx = p[0] - d.cx, dy = p[1] - d.cy;
              if (dx * dx + dy * dy <= d.r * d.r) return true;
            }
            return false;
          }};
}

DomainSpec DomainSpec::torus_shell(double major, double inner, double outer) {
  if (!(inner >= 0.0 && inner < outer && outer < major)) {
    throw Error(ErrorCode::InvalidArgument, "torus shell needs 0 <= inner < outer < major");
  }
  const double e = major + outer;
  return {{-e, -e, -outer}, {e, e, outer}, [=](std::span<const double> p) {
            const double rho = std::hypot(p[0], p[1]) - major;
            const double r2 = rho * rho + p[2] * p[2];
            return r2 >= inner * inner && r2 <= outer * outer;
          }};
}

RejectionSampler::RejectionSampler(DomainSpec domain, std::uint64_t count, std::uint64_t seed)
    : domain_(std::move(domain)), count_(count), seed_(seed), rng_(seed) {
  if (domain_.dim() == 0 || domain_.hi.size() != domain_.dim() || !domain_.contains) {
    throw Error(ErrorCode::InvalidArgument, "incomplete domain");
  }
  if (count_ == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  point_.resize(domain_.dim());
}

std::optional<NodeView> RejectionSampler::next() {
  if (produced_ >= count_) return std::nullopt;
  const std::size_t d = domain_.dim();
  for (std::uint64_t tries = 0; tries < kMaxConsecutiveRejections; ++tries) {
    for (std::size_t i = 0; i < d; ++i) point_[i] = uniform(rng_, domain_.lo[i], domain_.hi[i]);
    ++proposals_;
    if (domain_.contains(point_)) {
      ++produced_;
      return NodeView{point_, 1.0 / double(count_), produced_};
    }
  }
  throw Error(ErrorCode::AcceptanceTooLow, "no point accepted in " +
                                               std::to_string(kMaxConsecutiveRejections) + " proposals");
}

void RejectionSampler::rewind() {
  rng_.seed(seed_);
  produced_ = 0;
  proposals_ = 0;
}

std::unique_ptr<RejectionSampler> parse_generator(std::string_view spec, std::uint64_t default_seed) {
  const std::string text(spec);
  auto parts = split(spec, ':');
  if (parts.size() < 2 || parts[0] != "gen") {
    throw Error(ErrorCode::ParseError, "generator spec must start with gen:SHAPE, got '" + text + "'");
  }
  const std::string shape(parts[1]);
  std::map<std::string, double> kv;
  std::optional<std::uint64_t> count;
  std::uint64_t seed = default_seed;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ParseError, "expected key=value in '" + text + "'");
    const std::string key(parts[i].substr(0, eq));
    const std::string_view val = parts[i].substr(eq + 1);
    if (key == "m" || key == "seed") {
      std::uint64_t u = 0;
      const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), u);
      if (ec != std::errc() || ptr != val.data() + val.size()) {
        // Accept 1e6-style counts as well.
        const auto d = parse_double(val);
        if (!d || *d < 0 || *d != std::floor(*d) || *d > 1e18) {
          throw Error(ErrorCode::ParseError, "bad integer for " + key + " in '" + text + "'");
        }
        u = static_cast<std::uint64_t>(*d);
      }
      if (key == "m") {
        count = u;
      } else {
        seed = u;
      }
      continue;
    }
    const auto d = parse_double(val);
    if (!d) throw Error(ErrorCode::ParseError, "bad number for " + key + " in '" + text + "'");
    kv[key] = *d;
  }
  if (!count) throw Error(ErrorCode::ParseError, "generator spec needs m=COUNT: '" + text + "'");

  std::map<std::string, double> used;
  const auto get = [&](const std::string& key, double fallback) {
    const auto it = kv.find(key);
    const double v = it == kv.end() ? fallback : it->second;
    used[key] = v;
    return v;
  };
  DomainSpec domain;
  if (shape == "box") {
    const auto dim = static_cast<std::size_t>(get("dim", 2));
    if (dim < 1 || dim > 16) throw Error(ErrorCode::ParseError, "box dim must be in 1..16");
    domain = DomainSpec::box(std::vector<double>(dim, get("lo", -1.0)), std::vector<double>(dim, get("hi", 1.0)));
  } else if (shape == "disk") {
    domain = DomainSpec::disk(get("cx", 0.0), get("cy", 0.0), get("r", 1.0));
  } else if (shape == "annulus") {
    domain = DomainSpec::annulus(get("cx", 0.0), get("cy", 0.0), get("r0", 0.5), get("r1", 1.0));
  } else if (shape == "disks") {
    // A large disk with two smaller overlapping ones on top.
    const double s = get("scale", 1.0);
    domain = DomainSpec::union_of_disks({{0.0, -0.2 * s, 0.6 * s}, {-0.55 * s, 0.45 * s, 0.35 * s},
                                         {0.55 * s, 0.45 * s, 0.35 * s}});
  } else if (shape == "torus") {
    domain = DomainSpec::torus_shell(get("R", 0.7), get("r0", 0.1), get("r1", 0.3));
  } else {
    throw Error(ErrorCode::ParseError, "unknown generator shape '" + shape + "'");
  }
  for (const auto& [key, v] : kv) {
    if (!used.count(key)) throw Error(ErrorCode::ParseError, "unknown key '" + key + "' for " + shape);
  }
  return std::make_unique<RejectionSampler>(std::move(domain), *count, seed);
}

std::unique_ptr<NodeStream> open_source(const std::string& spec, std::uint64_t seed, std::size_t dim_hint) {
  std::unique_ptr<NodeStream> s;
  if (spec.rfind("gen:", 0) == 0) {
    s = parse_generator(spec, seed);
  } else if (spec.size() >= 4 && spec.compare(spec.size() - 4, 4, ".csv") == 0) {
    s = std::make_unique<CsvStream>(spec, dim_hint);
  } else {
    s = std::make_unique<BinaryStream>(spec);
  }
  if (dim_hint != 0 && s->dim() != dim_hint) {
    throw Error(ErrorCode::DimensionMismatch, spec + " holds " + std::to_string(s->dim()) +
                                                  "-dimensional nodes, expected " + std::to_string(dim_hint));
  }
  return s;
}

DiscreteMeasure read_all(NodeStream& source) {
  source.rewind();
  std::vector<double> nodes, weights;
  while (auto node = source.next()) {
    nodes.insert(nodes.end(), node->coords.begin(), node->coords.end());
    weights.push_back(node->weight);
  }
  return DiscreteMeasure(source.dim(), std::move(nodes), std::move(weights));
}

}  // namespace qprune
