// Command-line front end: prune, perturb, compare, convert, bench, stability.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qprune/error.hpp"
#include "qprune/harness.hpp"
#include "qprune/io_stream.hpp"

using namespace qprune;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Writes `m` as CSV or, for any other extension, in the binary format.
void write_measure(const std::string& path, const DiscreteMeasure& m) {
  MeasureStream s(m);
  if (ends_with(path, ".csv")) {
    write_csv(path, s);
  } else {
    write_binary(path, s);
  }
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error(ErrorCode::ParseError, "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> parse_counts(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (double v : parse_doubles(list)) {
    if (!(v >= 1) || v != std::floor(v) || v > 1e15) {
      throw Error(ErrorCode::ParseError, "expected positive integers in '" + list + "'");
    }
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_method(item));
  return out;
}

SigSelectPolicy parse_policy(const std::string& name) {
  if (name == "minabs") return SigSelectPolicy::min_abs();
  if (name == "plus") return SigSelectPolicy::force(Sign::Plus);
  if (name == "minus") return SigSelectPolicy::force(Sign::Minus);
  throw Error(ErrorCode::InvalidArgument, "sigselect must be minabs, plus or minus");
}

// The nodes named by `kept`, fetched by replaying the source.
DiscreteMeasure gather_rule(NodeStream& source, const PruneResult& r) {
  std::vector<std::pair<std::uint64_t, double>> kept;
  for (std::size_t i = 0; i < r.kept_global.size(); ++i) kept.emplace_back(r.kept_global[i], r.kept_weights[i]);
  std::sort(kept.begin(), kept.end());
  std::vector<double> nodes, weights;
  std::size_t next = 0;
  source.rewind();
  while (next < kept.size()) {
    const auto node = source.next();
    if (!node) break;
    if (node->index == kept[next].first) {
      nodes.insert(nodes.end(), node->coords.begin(), node->coords.end());
      weights.push_back(kept[next].second);
      ++next;
    }
  }
  if (next != kept.size()) throw Error(ErrorCode::Io, "source changed between passes");
  return DiscreteMeasure(source.dim(), std::move(nodes), std::move(weights), DiscreteMeasure::Mode::Strict);
}

struct PruneArgs {
  std::string input, basis, method = "gscsp", sigselect = "minabs", output;
  std::size_t k = 1;
  bool verify = false;
  std::uint64_t seed = 1;
};

int run_prune(const PruneArgs& a) {
  auto source = open_source(a.input, a.seed);
  const BasisSpec basis = parse_basis_spec(a.basis, source->dim());
  const Method method = parse_method(a.method);
  const SigSelectPolicy policy = parse_policy(a.sigselect);

  PruneResult result;
  if (method == Method::Gscsp || method == Method::Scsp) {
    ScspOptions o;
    o.k = a.k;
    o.policy = policy;
    o.backend = method == Method::Gscsp ? KernelBackend::GivensWindow : KernelBackend::DenseQR;
    result = scsp(*source, basis, o);
  } else {
    const DiscreteMeasure m = read_all(*source);
    const Matrix v = basis.vandermonde(m);
    Vector cost(v.rows());
    Rng rng(mix_seed(a.seed, 0xC0));
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost[i] = uniform01(rng);
    result = run_method(method, v, m.weights(), cost, policy);
  }

  const DiscreteMeasure rule = gather_rule(*source, result);
  if (!a.output.empty()) write_measure(a.output, rule);

  std::cout << "method: " << to_string(method) << "\n"
            << "basis_size: " << basis.size() << "\n"
            << "kept: " << result.kept_global.size() << "\n"
            << "iterations: " << result.iterations << "\n"
            << "seed: " << a.seed << "\n";
  if (result.diagnostics.positivity_clamps) {
    std::cout << "positivity_clamps: " << result.diagnostics.positivity_clamps << "\n";
  }
  if (a.verify) {
    const MomentReport rep = moment_report(result, basis, *source);
    std::cout << "moment_residual: " << format_double(rep.residual) << "\n"
              << "min_weight: " << format_double(rep.min_weight) << "\n"
              << "max_weight: " << format_double(rep.max_weight) << "\n";
    if (rep.flagged) std::cout << "warning: moment residual above " << kMomentFlag << "\n";
  }
  return 0;
}

struct PerturbArgs {
  std::string input, mode = "weights", output, domain;
  double tv = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t count = 10;
};

int run_perturb(const PerturbArgs& a) {
  auto source = open_source(a.input, a.seed);
  const DiscreteMeasure m = read_all(*source);
  DiscreteMeasure out(m.dim());
  if (a.mode == "weights") {
    out = perturb_weights(m, a.tv, a.seed);
  } else if (a.mode == "append") {
    std::unique_ptr<RejectionSampler> sampler;
    if (!a.domain.empty()) {
      sampler = parse_generator(a.domain + ":m=" + std::to_string(a.count), mix_seed(a.seed, 1));
    } else {
      std::vector<double> lo(m.dim(), INFINITY), hi(m.dim(), -INFINITY);
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j) {
          lo[j] = std::min(lo[j], m.node(i)[j]);
          hi[j] = std::max(hi[j], m.node(i)[j]);
        }
      }
      sampler = std::make_unique<RejectionSampler>(DomainSpec::box(lo, hi), a.count, mix_seed(a.seed, 1));
    }
    if (sampler->dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "domain/input dimension");
    std::vector<double> nodes;
    while (auto node = sampler->next()) nodes.insert(nodes.end(), node->coords.begin(), node->coords.end());
    out = append_nodes(m, nodes, a.tv);
  } else {
    throw Error(ErrorCode::InvalidArgument, "mode must be weights or append");
  }
  write_measure(a.output, out);
  std::cout << "tv: " << format_double(tv_distance(m, out)) << "\n"
            << "nodes: " << out.size() << "\n"
            << "seed: " << a.seed << "\n";
  return 0;
}

struct CompareArgs {
  std::string a, b, metric = "tv", align = "coords", basis;
  std::uint64_t seed = 1;
};

int run_compare(const CompareArgs& c) {
  auto sa = open_source(c.a, c.seed);
  auto sb = open_source(c.b, c.seed);
  if (sa->dim() != sb->dim()) throw Error(ErrorCode::DimensionMismatch, "inputs differ in dimension");
  if (c.metric == "tv") {
    SupportAlignment align;
    if (c.align == "coords") {
      align = SupportAlignment::ByCoordinateExact;
    } else if (c.align == "index") {
      align = SupportAlignment::ByIndex;
    } else {
      throw Error(ErrorCode::InvalidArgument, "align must be coords or index");
    }
    std::cout << "tv: " << format_double(tv_distance(read_all(*sa), read_all(*sb), align)) << "\n";
  } else if (c.metric == "moments") {
    if (c.basis.empty()) throw Error(ErrorCode::InvalidArgument, "--metric moments needs --basis");
    const BasisSpec basis = parse_basis_spec(c.basis, sa->dim());
    const Vector ea = stream_moments(basis, *sa).values;
    const Vector eb = stream_moments(basis, *sb).values;
    const double den = eb.norm();
    std::cout << "moment_residual: " << format_double(den > 0 ? (ea - eb).norm() / den : (ea - eb).norm())
              << "\n";
  } else {
    throw Error(ErrorCode::InvalidArgument, "metric must be tv or moments");
  }
  return 0;
}

int run_convert(const std::string& input, const std::string& output, std::uint64_t seed) {
  auto source = open_source(input, seed);
  const std::uint64_t n = ends_with(output, ".csv") ? write_csv(output, *source) : write_binary(output, *source);
  std::cout << "nodes: " << n << "\n";
  return 0;
}

struct BenchArgs {
  std::string methods = "gscsp", n_grid = "8", m_grid = "10000,100000", output;
  std::uint32_t reps = 1;
  std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a) {
  const auto records = timing_benchmark(parse_methods(a.methods), parse_counts(a.m_grid), parse_counts(a.n_grid),
                                        a.reps, a.seed);
  if (!a.output.empty()) write_bench_csv(a.output, records);
  for (const auto& r : records) {
    std::cout << to_string(r.method) << " M=" << r.m << " N=" << r.n << " ";
    if (r.skipped.empty()) {
      std::cout << format_double(r.seconds) << " s\n";
    } else {
      std::cout << "skipped: " << r.skipped << "\n";
    }
  }
  return 0;
}

struct StabilityArgs {
  std::string input, basis, kind = "weights", deltas = "1e-12,1e-10,1e-8,1e-6", methods = "gscsp,nnls,lp",
                                output, domain;
  std::uint32_t reps = 20;
  std::uint64_t seed = 1;
  std::uint64_t append_count = 0;
  unsigned threads = 0;
};

int run_stability(const StabilityArgs& a) {
  auto source = open_source(a.input, a.seed);
  const DiscreteMeasure base = read_all(*source);
  const BasisSpec basis = parse_basis_spec(a.basis, base.dim());
  StabilityConfig cfg;
  cfg.methods = parse_methods(a.methods);
  if (a.kind == "weights") {
    cfg.kind = PerturbationKind::Weights;
  } else if (a.kind == "append_few") {
    cfg.kind = PerturbationKind::AppendFew;
    if (a.append_count) cfg.append_few = a.append_count;
  } else if (a.kind == "append_many") {
    cfg.kind = PerturbationKind::AppendMany;
    cfg.append_many = a.append_count;
  } else {
    throw Error(ErrorCode::InvalidArgument, "kind must be weights, append_few or append_many");
  }
  cfg.deltas = parse_doubles(a.deltas);
  for (double d : cfg.deltas) {
    if (!(d >= 0.0 && d < 1.0)) throw Error(ErrorCode::InvalidArgument, "deltas must lie in [0, 1)");
  }
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  if (!a.domain.empty()) cfg.domain = parse_generator(a.domain + ":m=1", a.seed)->domain();

  const auto records = stability_experiment(base, basis, cfg);
  if (!a.output.empty()) write_stability_csv(a.output, records);
  for (Method m : cfg.methods) {
    for (double d : cfg.deltas) {
      std::vector<double> tv;
      std::size_t failed = 0;
      for (const auto& r : records) {
        if (r.method == m && r.delta == d) {
          tv.push_back(r.tv);
          failed += !r.error.empty();
        }
      }
      std::cout << to_string(m) << " delta=" << format_double(d) << " median_tv=" << format_double(median(tv));
      if (failed) std::cout << " failed=" << failed;
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive moment-preserving quadrature pruning"};
  app.require_subcommand(1);

  PruneArgs prune;
  auto* p = app.add_subcommand("prune", "Prune a weighted node set down to at most N nodes");
  p->add_option("--input", prune.input, "CSV file, binary file, or gen:SHAPE:m=COUNT[:key=value]")->required();
  p->add_option("--basis", prune.basis, "family:KIND:r[:p], e.g. legendre:TD:10")->required();
  p->add_option("--method", prune.method, "gscsp, scsp, csp, nnls or lp");
  p->add_option("--k", prune.k, "extra window rows for the streaming methods");
  p->add_option("--sigselect", prune.sigselect, "minabs, plus or minus");
  p->add_flag("--verify", prune.verify, "re-read the source and report the moment residual");
  p->add_option("--seed", prune.seed, "seed for generated sources and LP costs");
  p->add_option("--output", prune.output, "pruned rule (.csv, otherwise binary)");

  PerturbArgs perturb;
  auto* q = app.add_subcommand("perturb", "Perturb a node set by a target TV distance");
  q->add_option("--input", perturb.input)->required();
  q->add_option("--mode", perturb.mode, "weights or append");
  q->add_option("--tv", perturb.tv)->required();
  q->add_option("--seed", perturb.seed);
  q->add_option("--count", perturb.count, "nodes to append");
  q->add_option("--domain", perturb.domain, "gen:SHAPE[:key=value] to sample appended nodes from");
  q->add_option("--output", perturb.output)->required();

  CompareArgs compare;
  auto* c = app.add_subcommand("compare", "Distance between two node sets");
  c->add_option("--a", compare.a)->required();
  c->add_option("--b", compare.b)->required();
  c->add_option("--metric", compare.metric, "tv, or moments (relative to b)");
  c->add_option("--align", compare.align, "coords or index (tv only)");
  c->add_option("--basis", compare.basis, "basis for --metric moments");
  c->add_option("--seed", compare.seed, "seed for generated inputs");

  std::string conv_in, conv_out;
  std::uint64_t conv_seed = 1;
  auto* v = app.add_subcommand("convert", "Copy a node source to CSV or binary");
  v->add_option("--input", conv_in)->required();
  v->add_option("--output", conv_out)->required();
  v->add_option("--seed", conv_seed);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Timing benchmark on random uniform instances");
  b->add_option("--method", bench.methods, "comma-separated methods");
  b->add_option("--n-grid", bench.n_grid);
  b->add_option("--m-grid", bench.m_grid);
  b->add_option("--reps", bench.reps);
  b->add_option("--seed", bench.seed);
  b->add_option("--output", bench.output);

  StabilityArgs stab;
  auto* s = app.add_subcommand("stability", "TV stability of pruned rules under perturbation");
  s->add_option("--input", stab.input)->required();
  s->add_option("--basis", stab.basis)->required();
  s->add_option("--kind", stab.kind, "weights, append_few or append_many");
  s->add_option("--deltas", stab.deltas);
  s->add_option("--methods", stab.methods, "comma-separated; lp_random_c appends random costs");
  s->add_option("--reps", stab.reps);
  s->add_option("--seed", stab.seed);
  s->add_option("--append-count", stab.append_count);
  s->add_option("--domain", stab.domain, "gen:SHAPE[:key=value] to sample appended nodes from");
  s->add_option("--threads", stab.threads);
  s->add_option("--output", stab.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*p) return run_prune(prune);
    if (*q) return run_perturb(perturb);
    if (*c) return run_compare(compare);
    if (*v) return run_convert(conv_in, conv_out, conv_seed);
    if (*b) return run_bench(bench);
    if (*s) return run_stability(stab);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
