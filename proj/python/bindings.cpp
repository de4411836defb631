#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "impscat/carleman.hpp"
#include "impscat/errors.hpp"
#include "impscat/forward.hpp"
#include "impscat/geometry.hpp"
#include "impscat/specfun.hpp"
#include "impscat/stability.hpp"

namespace py = pybind11;
using namespace impscat;

namespace {

Vec3 vec(const std::array<double, 3>& a) { return Vec3(a[0], a[1], a[2]); }

Eigen::MatrixXd directions(const QuadratureRule& r)
{
    Eigen::MatrixXd d(r.size(), 3);
    for (std::size_t i = 0; i < r.size(); ++i)
        d.row(i) = r.directions[i].transpose();
    return d;
}

Eigen::VectorXcd values(const FarField& f)
{
    return Eigen::Map<const Eigen::VectorXcd>(f.values.data(), f.values.size());
}

} // namespace

PYBIND11_MODULE(_impscat, m)
{
    m.doc() = "Exterior impedance scattering: forward solver, verification checks and stability tools";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<GeometryError>(m, "GeometryError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<AliasingError>(m, "AliasingError", PyExc_ArithmeticError);
    py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
    py::register_exception<ResolutionError>(m, "ResolutionError", PyExc_ArithmeticError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);

    m.def("sph_bessel_j", &sph_bessel_j, py::arg("n"), py::arg("x"));
    m.def("sph_bessel_y", &sph_bessel_y, py::arg("n"), py::arg("x"));
    m.def("sph_hankel1", &sph_hankel1, py::arg("n"), py::arg("x"));

    py::class_<WaveContext>(m, "WaveContext")
        .def(py::init([](double k, std::array<double, 3> d) {
                 WaveContext c{k, vec(d).normalized()};
                 c.validate();
                 return c;
             }),
             py::arg("k"), py::arg("direction") = std::array<double, 3>{0.0, 0.0, 1.0})
        .def_readonly("k", &WaveContext::k)
        .def_property_readonly("direction", [](const WaveContext& c) { return Vec3(c.omega); });

    py::class_<ObstacleGeometry>(m, "Geometry")
        .def_static("sphere", &ObstacleGeometry::sphere, py::arg("radius"), py::arg("exterior_radius") = -1.0,
                    py::arg("cone_half_angle") = kPi / 6.0)
        .def_static("perturbed_sphere", &ObstacleGeometry::perturbed_sphere, py::arg("radius"),
                    py::arg("coefficients"), py::arg("exterior_radius") = -1.0,
                    py::arg("cone_half_angle") = kPi / 6.0)
        .def("is_sphere", &ObstacleGeometry::is_sphere)
        .def("max_radius", &ObstacleGeometry::max_radius)
        .def("diameter", &ObstacleGeometry::diameter)
        .def("exterior_radius", &ObstacleGeometry::exterior_radius);

    py::class_<ImpedanceField>(m, "Impedance")
        .def_static("constant", &ImpedanceField::constant, py::arg("value"))
        .def_static("from_coefficients", &ImpedanceField::from_coefficients, py::arg("coefficients"))
        .def_property_readonly("coefficients", &ImpedanceField::coefficients)
        .def("is_constant", &ImpedanceField::is_constant)
        .def("constant_value", &ImpedanceField::constant_value)
        .def("value", [](const ImpedanceField& f, std::array<double, 3> d) { return f.value(vec(d)); })
        .def("sup", &ImpedanceField::sup)
        .def("inf", &ImpedanceField::inf);

    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init([](int band_limit, double eta, double resolution_tol) {
                 SolverOptions o;
                 o.band_limit = band_limit;
                 o.eta = eta;
                 o.resolution_tol = resolution_tol;
                 return o;
             }),
             py::arg("band_limit") = 24, py::arg("eta") = 0.0, py::arg("resolution_tol") = 1e-10)
        .def_readwrite("band_limit", &SolverOptions::band_limit)
        .def_readwrite("eta", &SolverOptions::eta)
        .def_readwrite("resolution_tol", &SolverOptions::resolution_tol);

    py::class_<ScatteringSolution>(m, "Solution")
        .def_readonly("residual", &ScatteringSolution::residual)
        .def_readonly("tail_ratio", &ScatteringSolution::tail_ratio)
        .def_readonly("eta", &ScatteringSolution::eta)
        .def("scattered", [](const ScatteringSolution& s, std::array<double, 3> x) {
            return eval_scattered(vec(x), s);
        })
        .def("farfield_at", [](const ScatteringSolution& s, std::array<double, 3> d) {
            return farfield_at(s, vec(d).normalized());
        });

    py::class_<FarField>(m, "FarField")
        .def_property_readonly("directions", [](const FarField& f) { return directions(f.rule); })
        .def_property_readonly("weights", [](const FarField& f) { return f.rule.weights; })
        .def_property_readonly("values", &values)
        .def("l2_norm", &FarField::l2_norm);

    py::class_<EnergyBalance>(m, "EnergyBalance")
        .def_readonly("flux", &EnergyBalance::flux)
        .def_readonly("absorption", &EnergyBalance::absorption)
        .def_readonly("residual", &EnergyBalance::residual);

    m.def("solve", &solve_density, py::arg("ctx"), py::arg("geometry"), py::arg("impedance"),
          py::arg("options") = SolverOptions{}, py::call_guard<py::gil_scoped_release>());
    m.def("farfield", &farfield, py::arg("solution"), py::arg("order") = -1);
    m.def("mie_farfield", &mie_farfield, py::arg("ctx"), py::arg("radius"), py::arg("impedance"),
          py::arg("order") = 24);
    m.def("l2_distance", &l2_distance, py::arg("f"), py::arg("g"));
    m.def("energy_identity", py::overload_cast<const ScatteringSolution&, int>(&energy_identity),
          py::arg("solution"), py::arg("order") = -1);

    m.def(
        "carleman_suite",
        [](double rho, double d, std::uint64_t seed, int count, std::vector<double> multipliers,
           unsigned threads) {
            const CarlemanSetup s = make_carleman_setup(Vec3::Zero(), rho, d);
            CarlemanSuiteReport rep;
            {
                py::gil_scoped_release release;
                rep = carleman_suite(s, carleman_test_functions(seed, count), multipliers, {}, threads);
            }
            py::list cases;
            for (const auto& c : rep.cases)
                cases.append(py::dict(py::arg("function") = c.function, py::arg("multiplier") = c.multiplier,
                                      py::arg("log_lhs") = c.sides.log_lhs, py::arg("log_rhs") = c.sides.log_rhs,
                                      py::arg("holds") = c.sides.holds()));
            return py::dict(py::arg("lambda") = s.lambda_w, py::arg("tau") = s.tau, py::arg("cases") = cases,
                            py::arg("failures") = rep.failures,
                            py::arg("monotonicity_violations") = rep.monotonicity_violations);
        },
        py::arg("rho") = 1.0, py::arg("d") = 1.0, py::arg("seed") = 12345, py::arg("count") = 50,
        py::arg("multipliers") = std::vector<double>{1.0, 2.0, 4.0}, py::arg("threads") = 0);

    m.def(
        "three_sphere",
        [](double k, double r, std::uint64_t seed, int count) {
            const ThreeSphereReport rep = three_sphere_check(plane_wave_family(k, seed, count), Vec3::Zero(), r);
            return py::dict(py::arg("alpha_hat") = rep.alpha_hat, py::arg("C") = rep.C(),
                            py::arg("monotonicity_violations") = rep.monotonicity_violations,
                            py::arg("degenerate") = rep.degenerate);
        },
        py::arg("k") = 2.0, py::arg("r") = 0.2, py::arg("seed") = 7, py::arg("count") = 8);

    m.def("chain_ball_count", &chain_ball_count, py::arg("r"), py::arg("R"), py::arg("cone_half_angle") = kPi / 6.0);

    m.def("far_field_delta", &far_field_delta, py::arg("impedance"), py::arg("impedance_tilde"), py::arg("ctx"),
          py::arg("geometry"), py::arg("options") = SolverOptions{}, py::call_guard<py::gil_scoped_release>());
    m.def("theorem13_bound", &theorem13_bound, py::arg("delta"), py::arg("C"), py::arg("sigma"));
    m.def("bushuyev_theta", &bushuyev_theta, py::arg("delta"));
    m.def("prop41_bound", &prop41_bound, py::arg("fu_norm"), py::arg("C"), py::arg("sigma"));
    m.def(
        "prop41_minimizer",
        [](double C, double sigma, double N) {
            const Prop41Minimizer r = prop41_minimizer(C, sigma, N);
            return py::make_tuple(r.s_hat, r.residual);
        },
        py::arg("C"), py::arg("sigma"), py::arg("N"));

    m.def("default_perturbation_shape", &default_perturbation_shape);
    m.def(
        "stability_sweep",
        [](const ImpedanceField& base, const ImpedanceField& shape, std::vector<double> eps, const WaveContext& ctx,
           const ObstacleGeometry& geom, const SolverOptions& opts, std::vector<double> sigma_grid, unsigned threads) {
            StabilitySweep s;
            {
                py::gil_scoped_release release;
                s = stability_sweep(base, shape, eps, ctx, geom, opts, sigma_grid, threads);
            }
            py::list recs;
            for (const auto& r : s.records)
                recs.append(py::dict(py::arg("epsilon") = r.epsilon, py::arg("delta") = r.delta,
                                     py::arg("dsup") = r.dsup, py::arg("bound") = r.bound));
            return py::dict(py::arg("records") = recs, py::arg("C_fit") = s.C_fit,
                            py::arg("sigma_fit") = s.sigma_fit, py::arg("delta_monotone") = s.delta_monotone);
        },
        py::arg("base"), py::arg("shape"), py::arg("epsilons"), py::arg("ctx"), py::arg("geometry"),
        py::arg("options") = SolverOptions{}, py::arg("sigma_grid") = std::vector<double>{0.25, 0.5, 1.0, 2.0},
        py::arg("threads") = 1);

    m.def(
        "reconstruct",
        [](const FarField& data, const WaveContext& ctx, const ObstacleGeometry& geom, const ImpedanceField& prior,
           double reg, const SolverOptions& opts, int degree, int max_iterations) {
            ReconstructionOptions ro;
            ro.degree = degree;
            ro.max_iterations = max_iterations;
            ReconstructionResult r;
            {
                py::gil_scoped_release release;
                r = reconstruct(data, ctx, geom, prior, reg, opts, ro);
            }
            return py::dict(py::arg("impedance") = r.lambda, py::arg("misfit") = r.misfit,
                            py::arg("gradient_norm") = r.gradient_norm, py::arg("iterations") = r.iterations,
                            py::arg("converged") = r.converged);
        },
        py::arg("data"), py::arg("ctx"), py::arg("geometry"), py::arg("prior"), py::arg("reg"),
        py::arg("options") = SolverOptions{}, py::arg("degree") = 0, py::arg("max_iterations") = 50);
}
