#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "sfk/analysis.hpp"
#include "sfk/problems.hpp"
#include "sfk/random.hpp"
#include "sfk/solvers.hpp"
#include "sfk/version.hpp"

namespace py = pybind11;
using namespace sfk;

namespace {

using InArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using InMatrix = py::array_t<double, py::array::f_style | py::array::forcecast>;

Vector to_vector(const InArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return Vector(a.data(), a.data() + a.size());
}

py::array_t<double> to_numpy(std::span<const double> v) {
  py::array_t<double> out(py::ssize_t(v.size()));
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

DenseMatrix to_dense(const InMatrix& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const std::size_t r = a.shape(0), c = a.shape(1);
  return DenseMatrix(r, c, Vector(a.data(), a.data() + r * c));
}

py::array_t<double> to_numpy(const DenseMatrix& m) {
  py::array_t<double, py::array::f_style> out({py::ssize_t(m.rows()), py::ssize_t(m.cols())});
  if (!m.empty())
    std::memcpy(out.mutable_data(), m.data().data(), m.data().size() * sizeof(double));
  return out;
}

std::optional<py::array_t<double>> image_of(const Problem& p, std::span<const double> v) {
  if (!p.grid) return std::nullopt;
  return to_numpy(unvec(*p.grid, v));
}

SolverConfig make_config(std::size_t maxit, double tol, std::size_t window,
                         std::optional<SketchOperator> sketch,
                         std::optional<TruncationOperator> tau, double eta,
                         std::optional<double> delta_e, bool stop_on_discrepancy,
                         const std::string& discrepancy_on, bool track_true_residual,
                         bool record_iterates, bool keep_basis, bool reorthogonalize) {
  SolverConfig c;
  c.maxit = maxit;
  c.tol = tol;
  c.window = window;
  c.sketch = std::move(sketch);
  if (tau) c.tau = *tau;
  c.eta = eta;
  c.delta_e = delta_e;
  c.stop_on_discrepancy = stop_on_discrepancy;
  if (discrepancy_on == "true") c.discrepancy_on = DiscrepancyTarget::true_residual;
  else if (discrepancy_on == "sketched") c.discrepancy_on = DiscrepancyTarget::sketched_residual;
  else throw py::value_error("discrepancy_on must be 'true' or 'sketched'");
  c.track_true_residual = track_true_residual;
  c.record_iterates = record_iterates;
  c.keep_basis = keep_basis;
  c.reorthogonalize = reorthogonalize;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sketched flexible Golub-Kahan solvers";
  m.attr("__version__") = SFK_VERSION;

  py::register_exception<SolverError>(m, "SolverError", PyExc_ValueError);
  py::register_exception<SketchError>(m, "SketchError", PyExc_ValueError);
  py::register_exception<ProblemError>(m, "ProblemError", PyExc_ValueError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);

  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("name"));

  py::class_<ImageGrid>(m, "ImageGrid")
      .def(py::init([](std::size_t h, std::size_t w) { return ImageGrid{h, w}; }),
           py::arg("height"), py::arg("width"))
      .def_readonly("height", &ImageGrid::height)
      .def_readonly("width", &ImageGrid::width)
      .def("__repr__", [](const ImageGrid& g) {
        return "ImageGrid(" + std::to_string(g.height) + ", " + std::to_string(g.width) + ")";
      });

  py::class_<LinearOperator>(m, "LinearOperator")
      .def(py::init([](std::size_t rows, std::size_t cols, py::function fwd, py::function adj,
                       bool matched) {
             auto wrap = [](py::function f, std::size_t out_len) {
               return [f, out_len](std::span<const double> in, std::span<double> out) {
                 py::gil_scoped_acquire gil;
                 const InArray r = f(to_numpy(in));
                 if (std::size_t(r.size()) != out_len)
                   throw py::value_error("operator callback returned the wrong length");
                 std::memcpy(out.data(), r.data(), out_len * sizeof(double));
               };
             };
             return LinearOperator(rows, cols, wrap(fwd, rows), wrap(adj, cols), matched,
                                   "python");
           }),
           py::arg("rows"), py::arg("cols"), py::arg("forward"), py::arg("adjoint"),
           py::arg("matched") = false)
      .def_property_readonly("shape", [](const LinearOperator& a) {
        return py::make_tuple(a.rows(), a.cols());
      })
      .def_property_readonly("matched", &LinearOperator::matched)
      .def_property_readonly("name", &LinearOperator::name)
      .def("forward", [](const LinearOperator& a, const InArray& x) {
        return to_numpy(a.forward(to_vector(x)));
      })
      .def("adjoint", [](const LinearOperator& a, const InArray& y) {
        return to_numpy(a.adjoint(to_vector(y)));
      })
      .def("materialize", [](const LinearOperator& a) { return to_numpy(a.materialize()); })
      .def("materialize_adjoint",
           [](const LinearOperator& a) { return to_numpy(a.materialize_adjoint()); });

  m.def("from_dense", [](const InMatrix& a) { return from_dense(to_dense(a)); }, py::arg("a"));
  m.def("gaussian_blur", [](const ImageGrid& g, double var) { return gaussian_blur(g, var); },
        py::arg("grid"), py::arg("variance"));
  m.def("subsample_mask", &subsample_mask, py::arg("grid"), py::arg("keep_fraction"),
        py::arg("seed"));
  m.def("compose", &compose, py::arg("outer"), py::arg("inner"));
  m.def("ct_parallel", &ct_parallel, py::arg("grid"), py::arg("n_angles"), py::arg("n_rays"));
  m.def("perturb_adjoint", &perturb_adjoint, py::arg("op"), py::arg("asymmetry"),
        py::arg("seed"));
  m.def("asymmetry_measure", &asymmetry_measure, py::arg("op"), py::arg("n_probes") = 100,
        py::arg("seed") = 0);

  py::class_<SketchOperator>(m, "SketchOperator")
      .def_property_readonly("kind", [](const SketchOperator& s) { return to_string(s.kind()); })
      .def_property_readonly("shape", [](const SketchOperator& s) {
        return py::make_tuple(s.rows(), s.cols());
      })
      .def_property_readonly("seed", &SketchOperator::seed)
      .def("apply", [](const SketchOperator& s, const InArray& v) {
        return to_numpy(s.apply(to_vector(v)));
      })
      .def("materialize", [](const SketchOperator& s) { return to_numpy(s.materialize()); });

  m.def("identity_sketch", &identity_sketch, py::arg("d"));
  m.def("gaussian_sketch", &gaussian_sketch, py::arg("s"), py::arg("d"), py::arg("seed"),
        py::arg("scale") = 0.0);
  m.def("countsketch", &countsketch, py::arg("s"), py::arg("d"), py::arg("seed"));
  m.def("make_sketch",
        [](const std::string& kind, std::size_t s, std::size_t d, std::uint64_t seed) {
          return make_sketch(sketch_kind_from_string(kind), s, d, seed);
        },
        py::arg("kind"), py::arg("s"), py::arg("d"), py::arg("seed"));

  py::class_<TruncationOperator>(m, "TruncationOperator")
      .def(py::init<>())
      .def_static("rank_exact", &TruncationOperator::rank_exact, py::arg("grid"),
                  py::arg("rank"))
      .def_static("rank_randomized",
                  [](const ImageGrid& g, std::size_t rank, std::size_t oversample,
                     std::size_t power_iters, std::uint64_t seed) {
                    return TruncationOperator::rank_randomized(
                        g, rank, {oversample, power_iters, seed});
                  },
                  py::arg("grid"), py::arg("rank"), py::arg("oversample") = 5,
                  py::arg("power_iters") = 1, py::arg("seed") = 0)
      .def_property_readonly("kind", [](const TruncationOperator& t) { return to_string(t.kind()); })
      .def_property_readonly("rank", &TruncationOperator::rank)
      .def("apply", [](const TruncationOperator& t, const InArray& c, std::uint64_t call_index) {
        return to_numpy(t.apply(to_vector(c), call_index));
      }, py::arg("c"), py::arg("call_index") = 0);

  py::class_<SolveHistory>(m, "SolveHistory")
      .def_readonly("solver", &SolveHistory::solver)
      .def_readonly("b_norm", &SolveHistory::b_norm)
      .def_readonly("objective_ref", &SolveHistory::objective_ref)
      .def_property_readonly("true_residual",
                             [](const SolveHistory& h) { return to_numpy(h.true_residual); })
      .def_property_readonly("sketched_residual",
                             [](const SolveHistory& h) { return to_numpy(h.sketched_residual); })
      .def_property_readonly("error", [](const SolveHistory& h) { return to_numpy(h.error); })
      .def_property_readonly("x", [](const SolveHistory& h) { return to_numpy(h.x); })
      .def_property_readonly("basis", [](const SolveHistory& h) { return to_numpy(h.basis); })
      .def_property_readonly("iterates", [](const SolveHistory& h) {
        py::list out;
        for (const Vector& v : h.iterates) out.append(to_numpy(v));
        return out;
      })
      .def_readonly("stop_iteration", &SolveHistory::stop_iteration)
      .def_readonly("stop_reason", &SolveHistory::stop_reason)
      .def_readonly("breakdown", &SolveHistory::breakdown)
      .def_property_readonly("iterations", &SolveHistory::iterations);

  m.def("solve",
        [](const std::string& solver, const LinearOperator& a, const InArray& b,
           std::size_t maxit, double tol, std::size_t window,
           std::optional<SketchOperator> sketch, std::optional<TruncationOperator> tau,
           double eta, std::optional<double> delta_e, bool stop_on_discrepancy,
           const std::string& discrepancy_on, bool track_true_residual, bool record_iterates,
           bool keep_basis, bool reorthogonalize, std::optional<InArray> x_true) {
          const SolverConfig cfg =
              make_config(maxit, tol, window, std::move(sketch), std::move(tau), eta, delta_e,
                          stop_on_discrepancy, discrepancy_on, track_true_residual,
                          record_iterates, keep_basis, reorthogonalize);
          const Vector bv = to_vector(b);
          const Vector xt = x_true ? to_vector(*x_true) : Vector{};
          py::gil_scoped_release nogil;
          return solve(solver_kind_from_string(solver), a, bv, cfg, xt);
        },
        py::arg("solver"), py::arg("a"), py::arg("b"), py::kw_only(), py::arg("maxit") = 50,
        py::arg("tol") = 0.0, py::arg("window") = 2, py::arg("sketch") = py::none(),
        py::arg("tau") = py::none(), py::arg("eta") = 1.01, py::arg("delta_e") = py::none(),
        py::arg("stop_on_discrepancy") = false, py::arg("discrepancy_on") = "true",
        py::arg("track_true_residual") = true, py::arg("record_iterates") = false,
        py::arg("keep_basis") = false, py::arg("reorthogonalize") = false,
        py::arg("x_true") = py::none());

  m.def("discrepancy_stop",
        [](const InArray& res, double eta, double delta_e) {
          return discrepancy_stop(to_vector(res), eta, delta_e);
        },
        py::arg("residuals"), py::arg("eta"), py::arg("delta_e"));

  py::class_<Problem>(m, "Problem")
      .def_readonly("name", &Problem::name)
      .def_readonly("a", &Problem::a)
      .def_property_readonly("b", [](const Problem& p) { return to_numpy(p.b); })
      .def_property_readonly("b_true", [](const Problem& p) { return to_numpy(p.b_true); })
      .def_property_readonly("x_true", [](const Problem& p) { return to_numpy(p.x_true); })
      .def_readonly("grid", &Problem::grid)
      .def_readonly("delta", &Problem::delta)
      .def_readonly("delta_e", &Problem::delta_e)
      .def_readonly("seed", &Problem::seed)
      .def_readonly("rank_hint", &Problem::rank_hint)
      .def("image", [](const Problem& p, const InArray& v) { return image_of(p, to_vector(v)); },
           py::arg("v"));

  m.def("synthetic_decay", &synthetic_decay, py::arg("m"), py::arg("n"), py::arg("rho"),
        py::arg("delta"), py::arg("seed"));
  m.def("deblur_inpaint_problem", &deblur_inpaint_problem, py::arg("n"),
        py::arg("psf_variance") = 0.25, py::arg("keep") = 0.8, py::arg("delta") = 0.05,
        py::arg("rank_hint") = 0, py::arg("seed") = 1);
  m.def("ct_problem", &ct_problem, py::arg("n"), py::arg("n_angles") = 60,
        py::arg("n_rays") = 96, py::arg("delta") = 0.05, py::arg("asymmetry") = 4e-2,
        py::arg("seed") = 1);
  m.def("shepp_logan", [](std::size_t n) { return to_numpy(shepp_logan(n)); }, py::arg("n"));
  m.def("test_scene", [](std::size_t n) { return to_numpy(test_scene(n)); }, py::arg("n"));
  m.def("default_truncation_rank", &default_truncation_rank, py::arg("n"));
  m.def("write_pgm",
        [](const std::string& path, const InMatrix& img, double lo, double hi) {
          write_pgm(path, to_dense(img), lo, hi);
        },
        py::arg("path"), py::arg("image"), py::arg("lo") = 0.0, py::arg("hi") = 0.0);
  m.def("read_pgm", [](const std::string& path) { return to_numpy(read_pgm(path)); },
        py::arg("path"));

  m.def("optimal_residual",
        [](const LinearOperator& a, const InMatrix& z, const InArray& b) {
          const OptimalResidual r = optimal_residual(a, to_dense(z), to_vector(b));
          return py::make_tuple(r.r_opt, to_numpy(r.y_opt));
        },
        py::arg("a"), py::arg("z"), py::arg("b"),
        "Returns (r_opt, y_opt) for min_y ||A Z y - b||.");
  m.def("bound_sflsqr",
        [](const SketchOperator& s, const InMatrix& q) { return bound_sflsqr(s, to_dense(q)); },
        py::arg("sketch"), py::arg("q"));
  m.def("bound_sflsmr",
        [](const SketchOperator& s, const LinearOperator& a, const InMatrix& q) {
          return bound_sflsmr(s, a, to_dense(q));
        },
        py::arg("sketch"), py::arg("a"), py::arg("q"));

  m.def("bound_report",
        [](const LinearOperator& a, const InArray& b, const SketchOperator& s_m,
           const SketchOperator& s_n, std::size_t maxit, std::size_t window, double slack) {
          SolverConfig cfg;
          cfg.maxit = maxit;
          cfg.tol = 0.0;
          cfg.window = window;
          const BoundReport rep = bound_report(a, to_vector(b), cfg, s_m, s_n, slack);
          py::dict out;
          auto column = [&rep](auto get) {
            Vector v;
            for (const BoundRow& r : rep.rows) v.push_back(double(get(r)));
            return to_numpy(v);
          };
          out["k"] = column([](const BoundRow& r) { return r.k; });
          out["r_opt"] = column([](const BoundRow& r) { return r.r_opt; });
          out["r_sflsqr"] = column([](const BoundRow& r) { return r.r_sflsqr; });
          out["r_sflsmr"] = column([](const BoundRow& r) { return r.r_sflsmr; });
          out["bound1"] = column([](const BoundRow& r) { return r.bound1; });
          out["bound2"] = column([](const BoundRow& r) { return r.bound2; });
          out["factor1"] = column([](const BoundRow& r) { return r.factor1; });
          out["factor2"] = column([](const BoundRow& r) { return r.factor2; });
          out["violations"] = rep.violations();
          return out;
        },
        py::arg("a"), py::arg("b"), py::arg("s_m"), py::arg("s_n"), py::arg("maxit") = 20,
        py::arg("window") = 2, py::arg("slack") = 1e-9);

  m.def("corollary_check",
        [](const LinearOperator& a, const InMatrix& z, const InArray& b, std::size_t s,
           std::size_t trials, std::uint64_t seed) {
          const CorollaryResult r = corollary_check(a, to_dense(z), to_vector(b), s, trials, seed);
          py::dict out;
          out["empirical"] = r.empirical_mean;
          out["standard_error"] = r.standard_error;
          out["predicted"] = r.predicted;
          out["predicted_exact"] = r.predicted_exact;
          out["rel_err"] = r.rel_err();
          out["rel_err_exact"] = r.rel_err_exact();
          out["r_opt"] = r.r_opt;
          return out;
        },
        py::arg("a"), py::arg("z"), py::arg("b"), py::arg("s"), py::arg("trials"),
        py::arg("seed"));
}
