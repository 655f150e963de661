#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "qprune/basis.hpp"
#include "qprune/error.hpp"
#include "qprune/pruning.hpp"
#include "qprune/random.hpp"

using namespace qprune;

namespace {

struct Instance {
  Matrix v;
  std::vector<double> w;
};

Instance random_instance(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Instance in{Matrix(Eigen::Index(m), Eigen::Index(n)), std::vector<double>(m)};
  for (Eigen::Index i = 0; i < in.v.rows(); ++i)
    for (Eigen::Index j = 0; j < in.v.cols(); ++j) in.v(i, j) = uniform01(rng);
  for (auto& x : in.w) x = uniform01(rng);
  return in;
}

Vector moments(const Matrix& v, std::span<const double> w) {
  return v.transpose() * Eigen::Map<const Vector>(w.data(), Eigen::Index(w.size()));
}

double residual(const Instance& in, const PruneResult& r) {
  Vector eta = moments(in.v, in.w);
  Vector got = Vector::Zero(in.v.cols());
  for (std::size_t i = 0; i < r.kept_global.size(); ++i)
    got += r.kept_weights[i] * in.v.row(Eigen::Index(r.kept_global[i] - 1)).transpose();
  return (got - eta).norm() / eta.norm();
}

void check_rule(const Instance& in, const PruneResult& r, double tol) {
  CHECK(r.kept_global.size() <= std::size_t(in.v.cols()));
  CHECK(std::is_sorted(r.kept_global.begin(), r.kept_global.end()));
  for (double x : r.kept_weights) CHECK(x > 0.0);
  for (auto g : r.kept_global) {
    CHECK(g >= 1);
    CHECK(g <= in.w.size());
  }
  CHECK(residual(in, r) <= tol);
}

ScspOptions with_backend(KernelBackend b) {
  ScspOptions o;
  o.backend = b;
  return o;
}

// The monomial example: nodes (0, 0.5, 1), weights 1/3, basis {1, x}.
const DiscreteMeasure& three_nodes() {
  static const DiscreteMeasure m(1, {0.0, 0.5, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  return m;
}

const BasisSpec& linear() {
  static const BasisSpec b(Family::Monomial, multi_index_set(IndexSetKind::TD, 1, 1));
  return b;
}

}  // namespace

TEST_CASE("prune_step examples") {
  const std::vector<double> w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<double> n{1, -2, 1};
  auto s = prune_step(w, n);
  CHECK(s.sign == Sign::Minus);
  CHECK(s.pruned_local == 1);
  CHECK(s.c == doctest::Approx(-1.0 / 6));
  CHECK(s.updated_weights[0] == doctest::Approx(0.5));
  CHECK(s.updated_weights[1] == 0.0);
  CHECK(s.updated_weights[2] == doctest::Approx(0.5));
  CHECK(s.extra_zeroed.empty());

  s = prune_step(w, n, SigSelectPolicy::force(Sign::Plus));
  CHECK(s.sign == Sign::Plus);
  CHECK(s.pruned_local == 0);
  CHECK(s.c == doctest::Approx(1.0 / 3));
  // Both positive entries hit zero together.
  CHECK(s.extra_zeroed == std::vector<std::size_t>{2});
  CHECK(s.updated_weights[1] == doctest::Approx(1.0));

  const std::vector<double> pos{1, 2, 0.5};
  const std::vector<double> wp{0.3, 0.4, 0.5};
  s = prune_step(wp, pos, SigSelectPolicy::force(Sign::Minus));
  CHECK(s.sign == Sign::Plus);
  CHECK(s.pruned_local == 1);

  const std::vector<double> one{1.0, 1.0};
  const std::vector<double> pm{1.0, -1.0};
  s = prune_step(one, pm);
  CHECK(s.sign == Sign::Plus);
  CHECK(s.updated_weights == std::vector<double>{0.0, 2.0});

  // Ratio ties go to the smallest local index.
  const std::vector<double> tie{2.0, 1.0, 4.0, 3.0};
  const std::vector<double> kt{2.0, -5.0, 4.0, -1.0};
  s = prune_step(tie, kt, SigSelectPolicy::force(Sign::Plus));
  CHECK(s.pruned_local == 0);
}

TEST_CASE("prune_step custom policy and errors") {
  const std::vector<double> w{1.0, 1.0, 1.0};
  const std::vector<double> n{1.0, -3.0, 2.0};
  double seen_plus = 0, seen_minus = 0;
  auto s = prune_step(w, n, SigSelectPolicy::with([&](auto, auto, double cp, double cm) {
                        seen_plus = cp;
                        seen_minus = cm;
                        return Sign::Plus;
                      }));
  CHECK(seen_plus == doctest::Approx(0.5));
  CHECK(seen_minus == doctest::Approx(-1.0 / 3));
  CHECK(s.pruned_local == 2);

  const std::vector<double> zero{0.0, 0.0, 0.0};
  try {
    prune_step(w, zero);
    FAIL("expected ZeroKernel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroKernel);
  }
  const std::vector<double> neg{1.0, -1.0, 1.0};
  CHECK_THROWS_AS(prune_step(neg, n), Error);
}

TEST_CASE("prune_step properties") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    std::vector<double> w(9), n(9);
    for (auto& x : w) x = uniform(rng, 0.01, 1.0);
    for (auto& x : n) x = uniform(rng, -1.0, 1.0);
    for (auto policy : {SigSelectPolicy::min_abs(), SigSelectPolicy::force(Sign::Plus),
                        SigSelectPolicy::force(Sign::Minus)}) {
      const auto s = prune_step(w, n, policy);
      CHECK(s.updated_weights[s.pruned_local] == 0.0);
      for (double x : s.updated_weights) CHECK(x >= 0.0);
      // The update moves along the kernel: w' - w = -c n.
      for (std::size_t i = 0; i < 9; ++i) {
        if (i == s.pruned_local) continue;
        CHECK(s.updated_weights[i] == doctest::Approx(w[i] - s.c * n[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("three-node example for every algorithm") {
  const Matrix v = linear().vandermonde(three_nodes());
  const auto check = [](const PruneResult& r) {
    REQUIRE(r.kept_global == std::vector<std::uint64_t>{1, 3});
    CHECK(r.kept_weights[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.kept_weights[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.iterations == 1);
  };
  check(csp(v, three_nodes().weights()));
  for (auto backend : {KernelBackend::DenseQR, KernelBackend::GivensWindow}) {
    MeasureStream s(three_nodes());
    check(scsp(s, linear(), with_backend(backend)));
  }
  MeasureStream s(three_nodes());
  check(gscsp(s, linear()));

  // Oracle: among all 2-subsets only {0, 1} carries a positive rule with
  // moments (1, 1/2).
  const double xs[] = {0.0, 0.5, 1.0};
  int positive_rules = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const double wb = (0.5 - xs[a]) / (xs[b] - xs[a]);
      const double wa = 1.0 - wb;
      if (wa > 0 && wb > 0) {
        ++positive_rules;
        CHECK(a == 0);
        CHECK(b == 2);
      }
    }
  }
  CHECK(positive_rules == 1);
}

TEST_CASE("nothing to prune") {
  const Matrix v = Matrix::Identity(3, 3);
  const std::vector<double> w{0.2, 0.3, 0.5};
  const auto r = csp(v, w);
  CHECK(r.iterations == 0);
  CHECK(r.kept_global == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(r.kept_weights == w);
}

TEST_CASE("stream too short") {
  const DiscreteMeasure m(1, {0.0, 1.0}, {0.5, 0.5});
  MeasureStream s(m);
  try {
    gscsp(s, linear());
    FAIL("expected StreamTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StreamTooShort);
  }
}

TEST_CASE("csp on random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto in = random_instance(40, 5, seed);
    const auto r = csp(in.v, in.w, {}, true);
    check_rule(in, r, 1e-12);
    CHECK(r.kept_global.size() == 5);
    CHECK(r.diagnostics.kernel_orthogonality_max <= 1e-12);
  }
}

TEST_CASE("backends agree") {
  struct Size {
    std::size_t m, n;
    std::uint64_t seeds;
  };
  for (auto size : {Size{500, 8, 100}, Size{200, 10, 100}, Size{1000, 32, 100}}) {
    std::size_t not_full = 0;
    for (std::uint64_t seed = 1; seed <= size.seeds; ++seed) {
      const auto in = random_instance(size.m, size.n, seed * 7919 + size.n);
      MatrixRowSource a(in.v, in.w), b(in.v, in.w);
      ScspOptions dense = with_backend(KernelBackend::DenseQR);
      ScspOptions givens = with_backend(KernelBackend::GivensWindow);
      givens.track_diagnostics = true;
      const auto rd = scsp(a, dense);
      const auto rg = scsp(b, givens);
      CHECK(rd.kept_global == rg.kept_global);
      CHECK(rd.iterations == rg.iterations);
      if (rd.kept_global == rg.kept_global) {
        for (std::size_t i = 0; i < rd.kept_weights.size(); ++i) {
          CHECK(std::abs(rd.kept_weights[i] - rg.kept_weights[i]) <= 1e-9 * rd.kept_weights[i]);
        }
      }
      check_rule(in, rg, 1e-10);
      CHECK(rg.diagnostics.kernel_orthogonality_max <= 1e-10);
      CHECK(rg.diagnostics.positivity_clamps == 0);
      if (rg.kept_global.size() != size.n) ++not_full;
    }
    if (not_full) MESSAGE(not_full << " runs kept fewer than N nodes at M=" << size.m);
  }
}

TEST_CASE("larger windows preserve moments") {
  for (std::size_t k : {2u, 5u, 17u}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto in = random_instance(300, 9, seed);
      for (auto backend : {KernelBackend::DenseQR, KernelBackend::GivensWindow}) {
        MatrixRowSource src(in.v, in.w);
        ScspOptions o = with_backend(backend);
        o.k = k;
        check_rule(in, scsp(src, o), 1e-10);
      }
    }
  }
}

TEST_CASE("sign policies preserve moments") {
  const auto in = random_instance(200, 6, 99);
  for (auto policy : {SigSelectPolicy::force(Sign::Plus), SigSelectPolicy::force(Sign::Minus)}) {
    MatrixRowSource src(in.v, in.w);
    check_rule(in, gscsp(src, 1, policy), 1e-10);
    check_rule(in, csp(in.v, in.w, policy), 1e-10);
  }
}

TEST_CASE("output depends on stream order") {
  // Five nodes on a line, basis {1, x}: forward and reverse streams end
  // on different supports.
  const std::vector<double> xs{0.1, 0.35, 0.4, 0.8, 0.95};
  const std::vector<double> ws{0.3, 0.1, 0.25, 0.2, 0.15};
  const DiscreteMeasure fwd(1, xs, ws);
  const DiscreteMeasure rev(1, {xs.rbegin(), xs.rend()}, {ws.rbegin(), ws.rend()});
  MeasureStream a(fwd), b(rev);
  const auto ra = gscsp(a, linear());
  const auto rb = gscsp(b, linear());
  std::set<double> na, nb;
  for (auto g : ra.kept_global) na.insert(xs[g - 1]);
  for (auto g : rb.kept_global) nb.insert(xs[xs.size() - g]);
  CHECK(na.size() == 2);
  CHECK(nb.size() == 2);
  CHECK(na != nb);
}

TEST_CASE("per-iteration work after the first is O(N^2)") {
  for (std::size_t n : {8u, 16u, 32u}) {
    const auto in = random_instance(20 * n, n, n);
    MatrixRowSource src(in.v, in.w);
    const auto r = gscsp(src);
    const double per = double(r.diagnostics.max_iteration_flops) / double(n * n);
    CHECK(per <= 40.0);
    CHECK(r.diagnostics.first_iteration_flops > r.diagnostics.max_iteration_flops);
  }
}

TEST_CASE("bad weights in the stream") {
  const DiscreteMeasure m(1, {0.0, 0.5, 1.0, 2.0}, {0.25, 0.25, 0.0, 0.5});
  MeasureStream s(m);
  CHECK_THROWS_AS(gscsp(s, linear()), Error);
}
