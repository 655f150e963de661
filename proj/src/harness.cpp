#include "qprune/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include "qprune/error.hpp"
#include "qprune/summation.hpp"

namespace qprune {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Uniform on the open interval (0, 1), so weights are never zero.
double open01(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

bool is_dense(Method m) { return m != Method::Gscsp && m != Method::Scsp; }

Vector moments_of(const Matrix& v, std::span<const double> w) {
  return v.transpose() * Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
}

// Weights of a pruned rule spread over `size` positions by global index.
std::vector<double> dense_weights(const PruneResult& r, std::size_t size) {
  std::vector<double> out(size, 0.0);
  for (std::size_t i = 0; i < r.kept_global.size(); ++i) out[r.kept_global[i] - 1] = r.kept_weights[i];
  return out;
}

unsigned worker_count(unsigned requested, std::size_t tasks) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(tasks, 1)));
}

template <class Fn>
void parallel_for(std::size_t tasks, unsigned threads, Fn fn) {
  const unsigned workers = worker_count(threads, tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) {
    pool.emplace_back([&] {
      for (std::size_t t; (t = next.fetch_add(1)) < tasks;) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Gscsp: return "gscsp";
    case Method::Scsp: return "scsp";
    case Method::Csp: return "csp";
    case Method::Nnls: return "nnls";
    case Method::Lp: return "lp";
    case Method::LpRandomAppend: return "lp_random_c";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Gscsp, Method::Scsp, Method::Csp, Method::Nnls, Method::Lp,
                   Method::LpRandomAppend}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Weights: return "weights";
    case PerturbationKind::AppendFew: return "append_few";
    case PerturbationKind::AppendMany: return "append_many";
  }
  return "?";
}

PruneResult run_method(Method method, const Matrix& vandermonde, std::span<const double> weights,
                       const Vector& cost, const SigSelectPolicy& policy) {
  switch (method) {
    case Method::Gscsp:
    case Method::Scsp: {
      MatrixRowSource src(vandermonde, weights);
      ScspOptions o;
      o.policy = policy;
      o.backend = method == Method::Gscsp ? KernelBackend::GivensWindow : KernelBackend::DenseQR;
      return scsp(src, o);
    }
    case Method::Csp:
      return csp(vandermonde, weights, policy);
    case Method::Nnls: {
      const Vector eta = moments_of(vandermonde, weights);
      const double scale = vandermonde.rowwise().norm().maxCoeff() * eta.norm();
      return nnls_prune(vandermonde, eta, std::max(1e-12 * scale, 1e-300));
    }
    case Method::Lp:
    case Method::LpRandomAppend: {
      if (cost.size() != vandermonde.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "LP needs one cost per row");
      }
      return lp_prune({vandermonde, moments_of(vandermonde, weights), cost});
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

MomentReport moment_report(const PruneResult& result, const BasisSpec& basis, NodeStream& source) {
  if (source.dim() != basis.dim()) throw Error(ErrorCode::DimensionMismatch, "source/basis dimension");
  std::vector<std::pair<std::uint64_t, double>> kept;
  for (std::size_t i = 0; i < result.kept_global.size(); ++i) {
    kept.emplace_back(result.kept_global[i], result.kept_weights[i]);
  }
  std::sort(kept.begin(), kept.end());

  const std::size_t n = basis.size();
  std::vector<CompensatedSum> eta(n), got(n);
  std::vector<double> row(n);
  RowEvaluator eval(basis);
  std::size_t next = 0;
  source.rewind();
  while (auto node = source.next()) {
    eval(node->coords, row);
    for (std::size_t j = 0; j < n; ++j) eta[j].add(node->weight * row[j]);
    while (next < kept.size() && kept[next].first == node->index) {
      for (std::size_t j = 0; j < n; ++j) got[j].add(kept[next].second * row[j]);
      ++next;
    }
  }
  if (next != kept.size()) {
    throw Error(ErrorCode::IndexNotInWindow,
                "kept index " + std::to_string(kept[next].first) + " is not in the source");
  }

  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double e = eta[j].value();
    const double diff = got[j].value() - e;
    num += diff * diff;
    den += e * e;
  }
  MomentReport rep;
  rep.residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  rep.kept = kept.size();
  if (!kept.empty()) {
    rep.min_weight = rep.max_weight = kept[0].second;
    for (const auto& [g, w] : kept) {
      rep.min_weight = std::min(rep.min_weight, w);
      rep.max_weight = std::max(rep.max_weight, w);
    }
  }
  rep.flagged = !(rep.residual <= kMomentFlag);
  return rep;
}

std::vector<StabilityRecord> stability_experiment(const DiscreteMeasure& base, const BasisSpec& basis,
                                                  const StabilityConfig& config) {
  const std::size_t m = base.size();
  const std::size_t dim = base.dim();
  const Matrix v0 = basis.vandermonde(base);
  const std::vector<double> w0(base.weights().begin(), base.weights().end());

  // One cost vector for the whole grid.
  Rng cost_rng(mix_seed(config.seed, 0xC0));
  Vector c0(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < c0.size(); ++i) c0[i] = open01(cost_rng);

  DomainSpec domain;
  if (config.domain) {
    domain = *config.domain;
  } else {
    std::vector<double> lo(dim, INFINITY), hi(dim, -INFINITY);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        lo[j] = std::min(lo[j], base.node(i)[j]);
        hi[j] = std::max(hi[j], base.node(i)[j]);
      }
    }
    domain = DomainSpec::box(lo, hi);
  }

  const std::size_t n_methods = config.methods.size();
  std::vector<PruneResult> baseline(n_methods);
  std::vector<std::string> baseline_error(n_methods);
  for (std::size_t k = 0; k < n_methods; ++k) {
    try {
      baseline[k] = run_method(config.methods[k], v0, w0, c0);
    } catch (const Error& e) {
      baseline_error[k] = e.what();
    }
  }

  const std::size_t n_delta = config.deltas.size();
  const std::size_t tasks = n_delta * config.reps;
  std::vector<StabilityRecord> out(n_methods * tasks);

  parallel_for(tasks, config.threads, [&](std::size_t t) {
    const std::size_t di = t / config.reps;
    const auto rep = static_cast<std::uint32_t>(t % config.reps);
    const double delta = config.deltas[di];
    const std::uint64_t cell_seed = mix_seed(config.seed, 1 + di * 1'000'003ULL + rep);

    std::string cell_error;
    DiscreteMeasure perturbed(dim);
    std::size_t appended = 0;
    try {
      if (delta == 0.0) {
        perturbed = base;
      } else if (config.kind == PerturbationKind::Weights) {
        perturbed = perturb_weights(base, delta, cell_seed);
      } else {
        appended = config.kind == PerturbationKind::AppendFew ? config.append_few
                                                               : (config.append_many ? config.append_many : m);
        RejectionSampler sampler(domain, appended, mix_seed(cell_seed, 1));
        std::vector<double> nodes;
        nodes.reserve(appended * dim);
        while (auto node = sampler.next()) nodes.insert(nodes.end(), node->coords.begin(), node->coords.end());
        perturbed = append_nodes(base, nodes, delta);
      }
    } catch (const Error& e) {
      cell_error = e.what();
    }

    const std::size_t total = m + appended;
    Matrix v1;
    Vector c_ones, c_random;
    if (cell_error.empty()) {
      v1.resize(static_cast<Eigen::Index>(total), v0.cols());
      v1.topRows(v0.rows()) = v0;
      for (std::size_t i = m; i < total; ++i) {
        v1.row(Eigen::Index(i)) = basis.eval_row(perturbed.node(i)).transpose();
      }
      c_ones = Vector::Ones(Eigen::Index(total));
      c_ones.head(Eigen::Index(m)) = c0;
      c_random = c_ones;
      Rng rng(mix_seed(cell_seed, 2));
      for (std::size_t i = m; i < total; ++i) c_random[Eigen::Index(i)] = open01(rng);
    }
    const std::vector<double> w1(perturbed.weights().begin(), perturbed.weights().end());

    for (std::size_t k = 0; k < n_methods; ++k) {
      StabilityRecord& rec = out[k * tasks + t];
      rec.method = config.methods[k];
      rec.kind = config.kind;
      rec.delta = delta;
      rec.rep = rep;
      rec.seed = cell_seed;
      rec.tv = kNan;
      if (!baseline_error[k].empty()) {
        rec.error = "base: " + baseline_error[k];
        continue;
      }
      if (!cell_error.empty()) {
        rec.error = cell_error;
        continue;
      }
      try {
        const Vector& c = rec.method == Method::LpRandomAppend ? c_random : c_ones;
        const PruneResult r = run_method(rec.method, v1, w1, c);
        const auto a = dense_weights(baseline[k], total);
        const auto b = dense_weights(r, total);
        rec.tv = tv_distance(std::span<const double>(a), std::span<const double>(b));
      } catch (const Error& e) {
        rec.error = e.what();
      }
    }
  });
  return out;
}

UniformRowSource::UniformRowSource(std::uint64_t m, std::size_t n, std::uint64_t seed)
    : m_(m), n_(n), rng_(seed) {}

bool UniformRowSource::next(std::span<double> row, double& weight, std::uint64_t& global) {
  if (pos_ >= m_) return false;
  for (double& x : row) x = open01(rng_);
  weight = open01(rng_);
  global = ++pos_;
  return true;
}

std::vector<BenchRecord> timing_benchmark(const std::vector<Method>& methods,
                                          const std::vector<std::uint64_t>& m_grid,
                                          const std::vector<std::uint64_t>& n_grid, std::uint32_t reps,
                                          std::uint64_t seed) {
  std::vector<BenchRecord> out;
  if (reps == 0) return out;
  using Clock = std::chrono::steady_clock;
  for (Method method : methods) {
    for (std::uint64_t n : n_grid) {
      for (std::uint64_t m : m_grid) {
        BenchRecord rec{method, m, n, 0.0, 0, 0, 0, 0, reps, seed, {}};
        if (m <= n) {
          rec.skipped = "M must exceed N";
        } else if (method == Method::Csp && m > kCspRowLimit) {
          rec.skipped = "csp is quadratic in M; limit " + std::to_string(kCspRowLimit);
        } else if (is_dense(method) && m > kDenseRowLimit) {
          rec.skipped = "dense method; limit " + std::to_string(kDenseRowLimit);
        }
        if (!rec.skipped.empty()) {
          out.push_back(rec);
          continue;
        }
        double total = 0.0;
        for (std::uint32_t r = 0; r < reps; ++r) {
          const std::uint64_t s = mix_seed(seed, (m * 131 + n) * 1009 + r);
          PruneResult res;
          if (!is_dense(method)) {
            UniformRowSource src(m, std::size_t(n), s);
            ScspOptions o;
            o.backend = method == Method::Gscsp ? KernelBackend::GivensWindow : KernelBackend::DenseQR;
            const auto t0 = Clock::now();
            res = scsp(src, o);
            total += std::chrono::duration<double>(Clock::now() - t0).count();
          } else {
            UniformRowSource src(m, std::size_t(n), s);
            Matrix v(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
            std::vector<double> w(m), row(n);
            std::uint64_t g = 0;
            for (std::uint64_t i = 0; i < m; ++i) {
              src.next(row, w[i], g);
              for (std::uint64_t j = 0; j < n; ++j) v(Eigen::Index(i), Eigen::Index(j)) = row[j];
            }
            Vector c(static_cast<Eigen::Index>(m));
            Rng crng(mix_seed(s, 7));
            for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = open01(crng);
            const auto t0 = Clock::now();
            res = run_method(method, v, w, c);
            total += std::chrono::duration<double>(Clock::now() - t0).count();
          }
          rec.ops = res.diagnostics.flops;
          rec.first_iteration_ops = res.diagnostics.first_iteration_flops;
          rec.max_iteration_ops = res.diagnostics.max_iteration_flops;
          rec.working_bytes = res.diagnostics.working_bytes;
        }
        rec.seconds = total / reps;
        out.push_back(rec);
      }
    }
  }
  return out;
}

void write_stability_csv(const std::string& path, const std::vector<StabilityRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "method,kind,delta,tv,rep,seed,error\n";
  for (const auto& r : records) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << to_string(r.method) << ',' << to_string(r.kind) << ',' << format_double(r.delta) << ','
        << (std::isnan(r.tv) ? std::string("nan") : format_double(r.tv)) << ',' << r.rep << ',' << r.seed << ','
        << err << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "method,m,n,seconds,ops,first_iteration_ops,max_iteration_ops,working_bytes,reps,seed,skipped\n";
  for (const auto& r : records) {
    out << to_string(r.method) << ',' << r.m << ',' << r.n << ',' << format_double(r.seconds) << ',' << r.ops
        << ',' << r.first_iteration_ops << ',' << r.max_iteration_ops << ',' << r.working_bytes << ',' << r.reps
        << ',' << r.seed << ',' << r.skipped << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double x) { return !std::isfinite(x); }),
               values.end());
  if (values.empty()) return kNan;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + std::ptrdiff_t(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + std::ptrdiff_t(mid));
  return 0.5 * (lo + hi);
}

}  // namespace qprune
