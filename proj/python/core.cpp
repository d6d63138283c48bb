#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "annulus/commands.hpp"
#include "annulus/conevar.hpp"
#include "annulus/errors.hpp"
#include "annulus/orlicz.hpp"
#include "annulus/radial.hpp"
#include "annulus/stability.hpp"

namespace py = pybind11;
using namespace annulus;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const double> v) {
    Array a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

Array to_array(const Field2D& f) {
    Array a({static_cast<py::ssize_t>(f.nr), static_cast<py::ssize_t>(f.ntheta)});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    return a;
}

Field2D to_field(const Array& a, const Grid2D& g) {
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != g.nr() ||
        static_cast<std::size_t>(a.shape(1)) != g.ntheta())
        throw DomainError("field shape must be (nr, ntheta) of the grid");
    Field2D f(g);
    std::copy(a.data(), a.data() + a.size(), f.values.begin());
    return f;
}

py::dict profile_dict(const RadialProfile& p) {
    py::dict d;
    d["r"] = to_array(p.r);
    d["u"] = to_array(p.u);
    d["du"] = to_array(p.du);
    d["energy"] = p.energy;
    d["residual_inf"] = p.residual_inf;
    d["slope"] = p.slope;
    d["newton_iterations"] = p.newton_iterations;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Symmetry breaking for semilinear problems on annuli";

    static py::exception<SolverError> solver_error(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_AssertionError);
    py::register_exception<SaturationError>(m, "SaturationError", PyExc_OverflowError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const SolverError& e) {
            py::object err = solver_error;
            PyErr_SetObject(err.ptr(), py::make_tuple(e.what(), to_string(e.kind())).ptr());
        } catch (const DomainError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::class_<AnnulusSpec>(m, "Annulus")
        .def(py::init([](int N, double R0, double R1, double lam, bool truncated) {
                 AnnulusSpec a{N, R0, R1, lam, truncated};
                 a.validate();
                 return a;
             }),
             py::arg("N"), py::arg("R0"), py::arg("R1"), py::arg("lam") = 0.0, py::arg("truncated") = false)
        .def_readonly("N", &AnnulusSpec::N)
        .def_readonly("R0", &AnnulusSpec::R0)
        .def_readonly("R1", &AnnulusSpec::R1)
        .def_readonly("lam", &AnnulusSpec::lambda)
        .def_readonly("truncated", &AnnulusSpec::truncated)
        .def_property_readonly("volume", &AnnulusSpec::volume)
        .def("__repr__", [](const AnnulusSpec& a) {
            return "Annulus(N=" + std::to_string(a.N) + ", R0=" + py::repr(py::float_(a.R0)).cast<std::string>() +
                   ", R1=" + py::repr(py::float_(a.R1)).cast<std::string>() + ")";
        });

    py::class_<NonlinearitySpec>(m, "Nonlinearity")
        .def_static("power", [](double p, std::optional<double> pfrak) {
            auto s = NonlinearitySpec::power(p, pfrak.value_or(p));
            s.validate();
            return s;
        }, py::arg("p"), py::arg("pfrak") = py::none())
        .def_static("exponential", [](double beta, int m_) {
            auto s = NonlinearitySpec::exponential(beta, m_);
            s.validate();
            return s;
        }, py::arg("beta"), py::arg("m") = 1)
        .def_static("linear", [](double slope) { return NonlinearitySpec::linear(slope); }, py::arg("slope"))
        .def_property_readonly("family", &NonlinearitySpec::family_name)
        .def("f", [](const NonlinearitySpec& s, double r, double u) { return eval_f(s, r, u); })
        .def("F", [](const NonlinearitySpec& s, double r, double u) { return eval_F(s, r, u); });

    py::class_<Grid2D>(m, "Grid")
        .def(py::init([](const AnnulusSpec& a, std::size_t nr, std::size_t nt, const std::string& rule) {
                 return build_grid(a, nr, nt, parse_rule(rule));
             }),
             py::arg("annulus"), py::arg("nr"), py::arg("ntheta"), py::arg("rule") = "gll5")
        .def_property_readonly("shape", [](const Grid2D& g) { return py::make_tuple(g.nr(), g.ntheta()); })
        .def_property_readonly("r", [](const Grid2D& g) { return to_array(g.r_nodes()); })
        .def_property_readonly("theta", [](const Grid2D& g) { return to_array(g.theta_nodes()); })
        .def_property_readonly("weights", [](const Grid2D& g) {
            Field2D w(g);
            w.values = g.quad_weights;
            return to_array(w);
        })
        .def("integrate", [](const Grid2D& g, const Array& a) { return integrate(to_field(a, g), g); });

    m.def("solve_radial", [](const AnnulusSpec& a, const NonlinearitySpec& f, std::size_t nodes) {
        return profile_dict(solve_radial(a, f, nodes));
    }, py::arg("annulus"), py::arg("nonlinearity"), py::arg("nodes") = 2001);

    m.def("stability", [](const AnnulusSpec& a, const NonlinearitySpec& f, std::size_t nodes,
                          const Grid2D* grid) {
        const RadialProfile p = solve_radial(a, f, nodes);
        const StabilityReport r = symmetry_breaking_report(a, f, p, grid);
        py::dict d;
        d["H"] = r.H;
        d["delta_required"] = r.delta_required;
        d["delta_certified"] = r.delta_certified;
        d["sufficient_condition"] = r.sufficient_condition;
        d["D"] = r.D;
        d["angular_factor"] = r.angular_factor;
        d["second_variation"] = r.second_variation;
        d["verdict"] = to_string(r.verdict);
        d["second_variation_2d"] = r.second_variation_2d;
        d["cross_check"] = r.cross_check;
        return d;
    }, py::arg("annulus"), py::arg("nonlinearity"), py::arg("nodes") = 2001, py::arg("grid") = nullptr);

    m.def("mountain_pass", [](const Grid2D& g, const NonlinearitySpec& f, double tol, int max_iterations,
                              std::uint64_t seed) {
        MountainPassOptions o;
        o.tol = tol;
        o.max_iterations = max_iterations;
        o.seed = seed;
        MountainPassResult r;
        {
            py::gil_scoped_release release;
            r = mountain_pass(g, f, g.annulus, o);
        }
        py::dict d;
        d["u"] = to_array(r.u.field);
        d["energy"] = r.energy;
        d["grad_norm"] = r.grad_norm;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["stop_reason"] = r.stop_reason;
        d["is_radial"] = r.is_radial;
        d["radial_energy"] = r.radial_energy;
        d["seed_kind"] = r.seed_kind;
        return d;
    }, py::arg("grid"), py::arg("nonlinearity"), py::arg("tol") = 1e-6, py::arg("max_iterations") = 4000,
       py::arg("seed") = 1);

    m.def("energy", [](const Grid2D& g, const NonlinearitySpec& f, const Array& u) {
        return EnergyModel(g, f, g.annulus).energy(to_field(u, g));
    }, py::arg("grid"), py::arg("nonlinearity"), py::arg("u"));

    m.def("project_cone", [](const Grid2D& g, const Array& u) { return to_array(project_cone(to_field(u, g), g).field); },
          py::arg("grid"), py::arg("u"));
    m.def("in_cone", [](const Grid2D& g, const Array& u) { return in_cone(to_field(u, g)); }, py::arg("grid"),
          py::arg("u"));
    m.def("random_cone_field", [](const Grid2D& g, std::uint64_t seed) { return to_array(random_cone_field(g, seed)); },
          py::arg("grid"), py::arg("seed"));

    m.def("luxemburg_norm", [](const Grid2D& g, const Array& u, double tol) {
        return luxemburg_norm(to_field(u, g), g, tol).norm;
    }, py::arg("grid"), py::arg("u"), py::arg("tol") = 1e-10);
    m.def("tm_probe", [](const Grid2D& g, double alpha, int samples, std::uint64_t seed) {
        const TMProbeSummary s = tm_probe(g, alpha, samples, seed);
        py::dict d;
        d["alpha"] = s.alpha;
        d["max_modulus"] = s.max_modulus;
        d["mean_modulus"] = s.mean_modulus;
        d["saturated_count"] = s.saturated_count;
        d["values"] = to_array(s.values);
        return d;
    }, py::arg("grid"), py::arg("alpha"), py::arg("samples") = 64, py::arg("seed") = 1);

    m.def("run", [](const std::string& command, const std::string& config, const std::string& out, int jobs,
                    std::optional<std::uint64_t> seed) {
        CommandOptions o;
        o.out = out;
        o.jobs = jobs;
        o.seed = seed;
        const ConfigTable table = ConfigTable::parse(config);
        CommandResult r;
        {
            py::gil_scoped_release release;
            r = run_command(command, table, o);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["error_kind"] = r.error_kind;
        d["message"] = r.message;
        d["summary"] = r.summary;
        d["out_dir"] = r.out_dir.string();
        return d;
    }, py::arg("command"), py::arg("config"), py::arg("out"), py::arg("jobs") = 1, py::arg("seed") = py::none());

    m.def("version_info", &version_info);
    m.attr("__version__") = ANNULUS_VERSION;
}
