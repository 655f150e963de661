#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "qprune/error.hpp"
#include "qprune/harness.hpp"

using namespace qprune;
namespace fs = std::filesystem;

namespace {

DiscreteMeasure three_nodes() { return DiscreteMeasure(1, {0.0, 0.5, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}); }

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::Gscsp, Method::Scsp, Method::Csp, Method::Nnls, Method::Lp, Method::LpRandomAppend}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("simplex"), Error);
}

TEST_CASE("moment report on the three-node example") {
  const DiscreteMeasure m = three_nodes();
  const BasisSpec basis = parse_basis_spec("monomial:TD:1", 1);
  MeasureStream s(m);
  const PruneResult r = gscsp(s, basis);
  REQUIRE(r.kept_global.size() == 2);
  const MomentReport rep = moment_report(r, basis, s);
  CHECK(rep.residual <= 1e-15);
  CHECK(rep.kept == 2);
  CHECK(rep.min_weight > 0.0);
  CHECK_FALSE(rep.flagged);
}

TEST_CASE("moment report with nothing pruned is exact") {
  const DiscreteMeasure m(1, {0.0, 1.0}, {0.3, 0.7});
  const BasisSpec basis = parse_basis_spec("monomial:TD:1", 1);
  PruneResult r;
  r.kept_global = {1, 2};
  r.kept_weights = {0.3, 0.7};
  MeasureStream s(m);
  const MomentReport rep = moment_report(r, basis, s);
  CHECK(rep.residual == 0.0);
  CHECK(rep.min_weight == 0.3);
  CHECK(rep.max_weight == 0.7);
}

TEST_CASE("moment report flags a wrong rule and a missing index") {
  const DiscreteMeasure m = three_nodes();
  const BasisSpec basis = parse_basis_spec("monomial:TD:1", 1);
  MeasureStream s(m);
  PruneResult r;
  r.kept_global = {1, 3};
  r.kept_weights = {0.5, 0.4};
  const MomentReport rep = moment_report(r, basis, s);
  CHECK(rep.residual > 1e-2);
  CHECK(rep.flagged);

  r.kept_global = {1, 4};
  CHECK_THROWS_AS(moment_report(r, basis, s), Error);
}

TEST_CASE("every method reproduces the moments on a random instance") {
  auto gen = parse_generator("gen:disk:m=400", 11);
  const DiscreteMeasure m = read_all(*gen);
  const BasisSpec basis = parse_basis_spec("legendre:TD:4", 2);
  const Matrix v = basis.vandermonde(m);
  Vector cost = Vector::LinSpaced(v.rows(), 0.1, 0.9);
  for (Method method : {Method::Gscsp, Method::Scsp, Method::Csp, Method::Nnls, Method::Lp}) {
    CAPTURE(to_string(method));
    const PruneResult r = run_method(method, v, m.weights(), cost);
    CHECK(r.kept_global.size() <= basis.size());
    MeasureStream s(m);
    CHECK(moment_report(r, basis, s).residual <= 1e-12);
    for (double w : r.kept_weights) CHECK(w > 0.0);
  }
  CHECK_THROWS_AS(run_method(Method::Lp, v, m.weights()), Error);
}

TEST_CASE("stability experiment bookkeeping") {
  auto gen = parse_generator("gen:disk:m=300", 2);
  const DiscreteMeasure m = read_all(*gen);
  const BasisSpec basis = parse_basis_spec("legendre:TD:3", 2);

  StabilityConfig cfg;
  cfg.deltas = {0.0, 1e-8};
  cfg.reps = 3;
  cfg.threads = 2;
  const auto recs = stability_experiment(m, basis, cfg);
  REQUIRE(recs.size() == 3 * 2 * 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    CHECK(r.method == cfg.methods[i / 6]);
    CHECK(r.delta == cfg.deltas[(i / 3) % 2]);
    CHECK(r.rep == i % 3);
    CHECK(r.error.empty());
    if (r.delta == 0.0) {
      CHECK(r.tv == 0.0);
    } else {
      CHECK(r.tv < 1e-6);
    }
  }

  cfg.threads = 1;
  const auto again = stability_experiment(m, basis, cfg);
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[i].tv == recs[i].tv);

  cfg.reps = 0;
  CHECK(stability_experiment(m, basis, cfg).empty());
}

TEST_CASE("stability experiment with appended nodes") {
  auto gen = parse_generator("gen:disk:m=200", 3);
  const DiscreteMeasure m = read_all(*gen);
  const BasisSpec basis = parse_basis_spec("legendre:TD:2", 2);
  StabilityConfig cfg;
  cfg.methods = {Method::Gscsp, Method::LpRandomAppend};
  cfg.kind = PerturbationKind::AppendFew;
  cfg.deltas = {1e-6};
  cfg.reps = 2;
  cfg.domain = DomainSpec::disk(0, 0, 1);
  const auto recs = stability_experiment(m, basis, cfg);
  REQUIRE(recs.size() == 4);
  for (const auto& r : recs) {
    CHECK(r.error.empty());
    CHECK(std::isfinite(r.tv));
    CHECK(r.kind == PerturbationKind::AppendFew);
  }

  const fs::path p = fs::temp_directory_path() / "qprune_stability.csv";
  write_stability_csv(p.string(), recs);
  CHECK(count_lines(p) == 5);
}

TEST_CASE("timing benchmark records and skips") {
  const auto recs = timing_benchmark({Method::Gscsp, Method::Csp, Method::Nnls}, {50, 6000}, {4}, 1, 3);
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].skipped.empty());
  CHECK(recs[0].seconds > 0.0);
  CHECK(recs[0].ops > 0);
  CHECK(recs[0].first_iteration_ops > 0);
  CHECK(recs[0].max_iteration_ops > 0);
  CHECK(recs[3].method == Method::Csp);
  CHECK_FALSE(recs[3].skipped.empty());
  CHECK(recs[5].skipped.empty());

  CHECK(timing_benchmark({Method::Gscsp}, {3}, {4}, 1).at(0).skipped.size() > 0);
  CHECK(timing_benchmark({Method::Gscsp}, {100}, {4}, 0).empty());

  const fs::path p = fs::temp_directory_path() / "qprune_bench.csv";
  write_bench_csv(p.string(), recs);
  CHECK(count_lines(p) == 7);
}

TEST_CASE("median ignores failed cells") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median({NAN, 5.0, NAN}) == 5.0);
  CHECK(std::isnan(median({})));
  CHECK(std::isnan(median({NAN})));
}
