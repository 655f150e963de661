// Python bindings. Node arrays are (M, d) float64, index results are 0-based
// positions in the input arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qprune/baselines.hpp"
#include "qprune/error.hpp"
#include "qprune/harness.hpp"

namespace py = pybind11;
using namespace qprune;

namespace {

using RowArray = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

DiscreteMeasure to_measure(const RowArray& nodes, const Vector& weights) {
  if (nodes.rows() != weights.size()) throw Error(ErrorCode::DimensionMismatch, "nodes and weights differ in length");
  std::vector<double> flat(nodes.data(), nodes.data() + nodes.size());
  std::vector<double> w(weights.data(), weights.data() + weights.size());
  return DiscreteMeasure(static_cast<std::size_t>(nodes.cols()), std::move(flat), std::move(w));
}

SigSelectPolicy policy_from(const std::string& name) {
  if (name == "minabs") return SigSelectPolicy::min_abs();
  if (name == "plus") return SigSelectPolicy::force(Sign::Plus);
  if (name == "minus") return SigSelectPolicy::force(Sign::Minus);
  throw Error(ErrorCode::InvalidArgument, "sigselect must be minabs, plus or minus");
}

py::dict to_dict(const PruneResult& r) {
  std::vector<std::int64_t> idx;
  for (auto g : r.kept_global) idx.push_back(static_cast<std::int64_t>(g) - 1);
  py::dict d;
  d["indices"] = idx;
  d["weights"] = r.kept_weights;
  d["iterations"] = r.iterations;
  return d;
}

Vector cost_or_random(const std::optional<Vector>& cost, Eigen::Index m, std::uint64_t seed) {
  if (cost) return *cost;
  Vector c(m);
  Rng rng(mix_seed(seed, 0xC0));
  for (Eigen::Index i = 0; i < m; ++i) c[i] = uniform01(rng);
  return c;
}

}  // namespace

PYBIND11_MODULE(_qprune, m) {
  m.doc() = "Positive moment-preserving quadrature pruning";
  py::register_exception<Error>(m, "QpruneError", PyExc_ValueError);

  m.def(
      "index_set_size",
      [](const std::string& kind, double r, std::size_t dim, double p) {
        IndexSetKind k;
        if (kind == "TD") {
          k = IndexSetKind::TD;
        } else if (kind == "HC") {
          k = IndexSetKind::HC;
        } else if (kind == "PNORM") {
          k = IndexSetKind::PNorm;
        } else {
          throw Error(ErrorCode::InvalidArgument, "kind must be TD, HC or PNORM");
        }
        return multi_index_set(k, r, dim, p).size();
      },
      py::arg("kind"), py::arg("r"), py::arg("dim"), py::arg("p") = 1.0);

  m.def(
      "vandermonde",
      [](const RowArray& nodes, const std::string& basis) {
        const DiscreteMeasure measure = to_measure(nodes, Vector::Ones(nodes.rows()));
        return parse_basis_spec(basis, measure.dim()).vandermonde(measure);
      },
      py::arg("nodes"), py::arg("basis"), "Rows of basis values, one per node.");

  m.def(
      "prune",
      [](const RowArray& nodes, const Vector& weights, const std::string& basis, const std::string& method,
         std::size_t k, const std::string& sigselect, std::uint64_t seed) {
        const DiscreteMeasure measure = to_measure(nodes, weights);
        const BasisSpec spec = parse_basis_spec(basis, measure.dim());
        const Method meth = parse_method(method);
        PruneResult r;
        if (meth == Method::Gscsp || meth == Method::Scsp) {
          MeasureStream s(measure);
          ScspOptions o;
          o.k = k;
          o.policy = policy_from(sigselect);
          o.backend = meth == Method::Gscsp ? KernelBackend::GivensWindow : KernelBackend::DenseQR;
          r = scsp(s, spec, o);
        } else {
          const Matrix v = spec.vandermonde(measure);
          r = run_method(meth, v, measure.weights(), cost_or_random(std::nullopt, v.rows(), seed),
                         policy_from(sigselect));
        }
        return to_dict(r);
      },
      py::arg("nodes"), py::arg("weights"), py::arg("basis"), py::arg("method") = "gscsp", py::arg("k") = 1,
      py::arg("sigselect") = "minabs", py::arg("seed") = 1,
      "Prunes a weighted node set; returns kept indices (0-based), weights and iteration count.");

  m.def(
      "prune_matrix",
      [](const Matrix& v, const Vector& weights, const std::string& method, std::optional<Vector> cost,
         std::uint64_t seed) {
        std::vector<double> w(weights.data(), weights.data() + weights.size());
        return to_dict(run_method(parse_method(method), v, w, cost_or_random(cost, v.rows(), seed)));
      },
      py::arg("vandermonde"), py::arg("weights"), py::arg("method") = "gscsp", py::arg("cost") = py::none(),
      py::arg("seed") = 1, "Prunes given the M x N matrix of basis values directly.");

  m.def(
      "nnls",
      [](const Matrix& v, const Vector& eta, double tol) {
        const NnlsSolution s = nnls(v, eta, tol);
        py::dict d;
        d["weights"] = s.weights;
        d["passive"] = s.passive;
        d["dual"] = s.dual;
        d["outer_iterations"] = s.outer_iterations;
        return d;
      },
      py::arg("vandermonde"), py::arg("eta"), py::arg("tol") = 1e-10);

  m.def(
      "lp_solve",
      [](const Matrix& v, const Vector& eta, const Vector& cost) {
        const LpSolution s = lp_solve({v, eta, cost});
        py::dict d;
        d["v"] = s.v;
        d["basis"] = s.basis;
        d["objective"] = s.objective;
        d["iterations"] = s.iterations;
        return d;
      },
      py::arg("vandermonde"), py::arg("eta"), py::arg("cost"));

  m.def(
      "tv_distance",
      [](const Vector& a, const Vector& b) {
        return tv_distance(std::span<const double>(a.data(), std::size_t(a.size())),
                           std::span<const double>(b.data(), std::size_t(b.size())));
      },
      py::arg("a"), py::arg("b"), "Distance between weight vectors aligned by position.");

  m.def(
      "perturb_weights",
      [](const RowArray& nodes, const Vector& weights, double target_tv, std::uint64_t seed) {
        const DiscreteMeasure out = perturb_weights(to_measure(nodes, weights), target_tv, seed);
        return std::vector<double>(out.weights().begin(), out.weights().end());
      },
      py::arg("nodes"), py::arg("weights"), py::arg("target_tv"), py::arg("seed"));

  m.def(
      "moment_residual",
      [](const RowArray& nodes, const Vector& weights, const std::vector<std::int64_t>& indices,
         const std::vector<double>& kept_weights, const std::string& basis) {
        const DiscreteMeasure measure = to_measure(nodes, weights);
        if (indices.size() != kept_weights.size()) {
          throw Error(ErrorCode::DimensionMismatch, "indices and weights differ in length");
        }
        PruneResult r;
        for (std::size_t i = 0; i < indices.size(); ++i) {
          if (indices[i] < 0) throw Error(ErrorCode::IndexNotInWindow, "negative index");
          r.kept_global.push_back(static_cast<std::uint64_t>(indices[i]) + 1);
          r.kept_weights.push_back(kept_weights[i]);
        }
        MeasureStream s(measure);
        return moment_report(r, parse_basis_spec(basis, measure.dim()), s).residual;
      },
      py::arg("nodes"), py::arg("weights"), py::arg("indices"), py::arg("kept_weights"), py::arg("basis"));

  m.def(
      "sample",
      [](const std::string& spec, std::uint64_t seed) {
        auto gen = parse_generator(spec, seed);
        const DiscreteMeasure measure = read_all(*gen);
        RowArray nodes(Eigen::Index(measure.size()), Eigen::Index(measure.dim()));
        std::copy(measure.nodes().begin(), measure.nodes().end(), nodes.data());
        Vector w = Eigen::Map<const Vector>(measure.weights().data(), Eigen::Index(measure.size()));
        return py::make_tuple(nodes, w);
      },
      py::arg("spec"), py::arg("seed") = 1, "Nodes and weights from a gen:SHAPE:m=COUNT spec.");
}
