#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dft/calculus.hpp"
#include "dft/errors.hpp"
#include "dft/fibration.hpp"
#include "dft/fibrations.hpp"
#include "dft/geodesic.hpp"
#include "dft/grid.hpp"
#include "dft/metric.hpp"
#include "dft/normal.hpp"
#include "dft/transform.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_dftomo, m) {
    m.doc() = "double fibration transform toolkit (C++ core)";

    py::register_exception<dft::ValidationError>(m, "ValidationError");
    py::register_exception<dft::Error>(m, "ConsistencyError");

    py::class_<dft::MetricField>(m, "MetricField")
        .def_readonly("r_dom", &dft::MetricField::r_dom)
        .def_readonly("name", &dft::MetricField::name)
        .def("lambda_at", [](const dft::MetricField& f, double x, double y) {
            return f.lambda(dft::Vec2(x, y));
        })
        .def("gauss_curvature", [](const dft::MetricField& f, double x, double y) {
            return f.gauss_curvature(dft::Vec2(x, y));
        })
        .def_static("preset", &dft::MetricField::preset, py::arg("name"),
                    py::arg("r_dom") = 1.0);

    py::class_<dft::GridFunction>(m, "GridFunction")
        .def_static("zeros", &dft::GridFunction::zeros, py::arg("size"), py::arg("extent"))
        .def_readonly("size", &dft::GridFunction::size)
        .def_readonly("extent", &dft::GridFunction::extent)
        .def_readwrite("values", &dft::GridFunction::values)
        .def("spacing", &dft::GridFunction::spacing)
        .def("interpolate",
             [](const dft::GridFunction& f, double x, double y) {
                 return f.interpolate(dft::Vec2(x, y));
             })
        .def("norm2", &dft::GridFunction::norm2);

    py::class_<dft::SinogramFunction>(m, "SinogramFunction")
        .def_readwrite("values", &dft::SinogramFunction::values)
        .def_readonly("label0", &dft::SinogramFunction::label0)
        .def_readonly("label1", &dft::SinogramFunction::label1)
        .def_readonly("origin0", &dft::SinogramFunction::origin0)
        .def_readonly("step0", &dft::SinogramFunction::step0)
        .def_readonly("origin1", &dft::SinogramFunction::origin1)
        .def_readonly("step1", &dft::SinogramFunction::step1);

    py::class_<dft::FibrationSpec>(m, "FibrationSpec")
        .def_readonly("N", &dft::FibrationSpec::N)
        .def_readonly("n", &dft::FibrationSpec::n)
        .def_readonly("n_prime", &dft::FibrationSpec::n_prime)
        .def_readonly("n_dprime", &dft::FibrationSpec::n_dprime)
        .def_readonly("name", &dft::FibrationSpec::name);

    m.def("lines_fibration", &dft::lines_fibration, py::arg("extent") = 1.0);
    m.def("xray_fibration", &dft::xray_fibration, py::arg("metric"),
          py::keep_alive<0, 1>());

    m.def("phantom", &dft::phantom_by_name, py::arg("name"), py::arg("size"),
          py::arg("extent"));
    m.def(
        "phantom_gaussian",
        [](int size, double extent, double cx, double cy, double sigma) {
            return dft::phantom_gaussian(size, extent, dft::Vec2(cx, cy), sigma);
        },
        py::arg("size"), py::arg("extent"), py::arg("cx"), py::arg("cy"),
        py::arg("sigma"));

    m.def(
        "forward",
        [](const dft::FibrationSpec& spec, const dft::GridFunction& f, double step) {
            dft::Quadrature q;
            q.step = step;
            return dft::forward(spec, f, q);
        },
        py::arg("spec"), py::arg("f"), py::arg("step") = 0.0);
    m.def(
        "adjoint",
        [](const dft::FibrationSpec& spec, const dft::SinogramFunction& u, int grid_size,
           double extent, double step) {
            dft::Quadrature q;
            q.step = step;
            return dft::adjoint(spec, u, q, grid_size, extent);
        },
        py::arg("spec"), py::arg("u"), py::arg("grid_size"), py::arg("extent"),
        py::arg("step") = 0.0);
    m.def(
        "normal_apply",
        [](const dft::FibrationSpec& spec, const dft::GridFunction& f, double step) {
            dft::Quadrature q;
            q.step = step;
            return dft::normal_apply(spec, f, q);
        },
        py::arg("spec"), py::arg("f"), py::arg("step") = 0.0);

    m.def("radon_invert", &dft::radon_invert, py::arg("sinogram"), py::arg("grid_size"),
          py::arg("extent"));
    m.def("backproject_lines", &dft::backproject_lines, py::arg("sinogram"),
          py::arg("grid_size"), py::arg("extent"));
    m.def("fractional_laplacian", &dft::fractional_laplacian, py::arg("f"), py::arg("d"),
          py::arg("pad_factor") = 2);
    m.def("helgason_constant", &dft::helgason_constant, py::arg("d"), py::arg("n"));

    m.def(
        "conjugate_scan",
        [](const dft::MetricField& metric, double beta, double alpha) {
            const auto start = dft::boundary_start(metric, beta, alpha);
            const auto g = dft::integrate_geodesic(metric, start, 1e-3 * metric.r_dom);
            std::vector<std::tuple<double, double, int>> out;
            for (const auto& p : dft::conjugate_scan(metric, g))
                out.emplace_back(p.t0, p.t1, p.degree);
            return out;
        },
        py::arg("metric"), py::arg("beta"), py::arg("alpha"));

    m.def(
        "bolker_check",
        [](const dft::FibrationSpec& spec, const Eigen::VectorXd& z,
           const Eigen::VectorXd& x, const Eigen::VectorXd& eta_dprime) {
            const auto r = dft::bolker_rank(spec, z, x, eta_dprime);
            return std::make_pair(r.rank, r.immersive);
        },
        py::arg("spec"), py::arg("z"), py::arg("x"), py::arg("eta_dprime"));

    m.def(
        "structure_numbers",
        [](int N, int n, int n_prime, std::optional<int> k) {
            const auto s = dft::structure_numbers(N, n, n_prime, k);
            py::dict d;
            d["N"] = s.N;
            d["n"] = s.n;
            d["n_prime"] = s.n_prime;
            d["n_dprime"] = s.n_dprime;
            d["dim_Z"] = s.dim_Z;
            d["order_R"] = s.order_R.value();
            d["order_normal"] = s.order_normal.value();
            d["excess_clean"] = s.excess_clean;
            if (s.k) d["k"] = *s.k;
            if (s.excess_conjugate) d["excess_conjugate"] = *s.excess_conjugate;
            if (s.order_artifact) d["order_artifact"] = s.order_artifact->value();
            if (s.dim_E) d["dim_E"] = *s.dim_E;
            d["dim_CRk"] = s.dim_CRk;
            return d;
        },
        py::arg("N"), py::arg("n"), py::arg("n_prime"), py::arg("k") = std::nullopt);
}
