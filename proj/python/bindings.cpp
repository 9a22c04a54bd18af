#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "iss_parabolic/backstepping.hpp"
#include "iss_parabolic/errors.hpp"
#include "iss_parabolic/iss.hpp"
#include "iss_parabolic/monotone.hpp"
#include "iss_parabolic/scenario.hpp"
#include "iss_parabolic/solver.hpp"

namespace py = pybind11;
using namespace issp;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> states_array(const Trajectory& traj) {
    const auto rows = static_cast<py::ssize_t>(traj.size());
    const auto cols = static_cast<py::ssize_t>(traj.grid().n_nodes());
    py::array_t<double> out({rows, cols});
    auto m = out.mutable_unchecked<2>();
    for (py::ssize_t k = 0; k < rows; ++k) {
        const auto s = traj.state(static_cast<std::size_t>(k)).values();
        for (py::ssize_t i = 0; i < cols; ++i) {
            m(k, i) = s[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

py::array_t<double> kernel_array(const VolterraKernel& k) {
    const auto n = static_cast<py::ssize_t>(k.n_nodes());
    py::array_t<double> out({n, n});
    std::copy(k.samples().begin(), k.samples().end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Parabolic PDE simulation, monotone comparison and ISS certification";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidField>(m, "InvalidField", base.ptr());
    py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
    py::register_exception<MonotonicityLoss>(m, "MonotonicityLoss", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<SimulationError>(m, "SimulationError", base.ptr());
    py::register_exception<IncompatibleTrajectory>(m, "IncompatibleTrajectory", base.ptr());
    py::register_exception<IncompatibilityError>(m, "IncompatibilityError", base.ptr());
    py::register_exception<InapplicableEstimate>(m, "InapplicableEstimate", base.ptr());
    py::register_exception<EstimationError>(m, "EstimationError", base.ptr());
    py::register_exception<SynthesisError>(m, "SynthesisError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<Grid1D>(m, "Grid1D")
        .def(py::init<std::size_t, double, double>(), py::arg("n_interior"), py::arg("dt"),
             py::arg("t_final"))
        .def_property_readonly("n_interior", &Grid1D::n_interior)
        .def_property_readonly("n_nodes", &Grid1D::n_nodes)
        .def_property_readonly("h", &Grid1D::h)
        .def_property_readonly("dt", &Grid1D::dt)
        .def_property_readonly("t_final", &Grid1D::t_final)
        .def_property_readonly("steps", &Grid1D::steps)
        .def_property_readonly("z", [](const Grid1D& g) {
            std::vector<double> z(g.n_nodes());
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = g.z(i);
            return to_array(z);
        });

    py::class_<Field>(m, "Field")
        .def(py::init([](const Grid1D& g, std::vector<double> v) { return Field(g, std::move(v)); }),
             py::arg("grid"), py::arg("values"))
        .def_static("zeros", &Field::zeros)
        .def_static("constant", &Field::constant)
        .def_static("from_function", &Field::from_function)
        .def_property_readonly("grid", &Field::grid)
        .def_property_readonly("values", [](const Field& f) { return to_array(f.values()); })
        .def("__len__", &Field::size);

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("times", [](const Trajectory& t) { return to_array(t.times()); })
        .def_property_readonly("states", &states_array)
        .def_property_readonly("grid", &Trajectory::grid)
        .def("state", &Trajectory::state, py::return_value_policy::copy)
        .def("truncated", &Trajectory::truncated)
        .def("__len__", &Trajectory::size);

    m.def("norm_lp", py::overload_cast<const Field&, double>(&norm_lp), py::arg("x"), py::arg("p"));
    m.def("norm_weighted_sin", &norm_weighted_sin);
    m.def("norm_weighted_sup", &norm_weighted_sup, py::arg("x"), py::arg("theta"), py::arg("phi"));
    m.def("lp_functional", &lp_functional);
    m.def("fit_decay_rate", [](std::vector<double> t, std::vector<double> v) {
        return fit_decay_rate(t, v);
    });

    py::class_<BoundarySignal>(m, "BoundarySignal")
        .def_static("constant", &BoundarySignal::constant)
        .def_static("sampled", &BoundarySignal::sampled, py::arg("times"), py::arg("values"))
        .def("__call__", &BoundarySignal::operator())
        .def_property_readonly("sup_norm", &BoundarySignal::sup_norm)
        .def("shifted", &BoundarySignal::shifted);

    py::class_<ReactionBounds>(m, "ReactionBounds")
        .def(py::init<>())
        .def(py::init([](double k, double below) { return ReactionBounds{k, below}; }),
             py::arg("lipschitz_k"), py::arg("lipschitz_below"))
        .def_readwrite("lipschitz_k", &ReactionBounds::lipschitz_k)
        .def_readwrite("lipschitz_below", &ReactionBounds::lipschitz_below);

    py::class_<Reaction>(m, "Reaction")
        .def_static("none", &Reaction::none)
        .def_static("linear", &Reaction::linear)
        .def_static("custom", &Reaction::custom, py::arg("f"), py::arg("bounds"),
                    py::arg("uses_gradient") = false)
        .def("__call__", &Reaction::operator(), py::arg("z"), py::arg("w"), py::arg("xi") = 0.0);

    py::class_<SemilinearProblem>(m, "SemilinearProblem")
        .def(py::init<double, Reaction, Field, BoundarySignal, BoundarySignal>(), py::arg("a"),
             py::arg("reaction"), py::arg("initial"), py::arg("left"), py::arg("right"))
        .def_property_readonly("a", &SemilinearProblem::a)
        .def_property_readonly("grid", &SemilinearProblem::grid)
        .def("max_monotone_dt", &SemilinearProblem::max_monotone_dt);

    m.def("step", &step, py::arg("problem"), py::arg("state"), py::arg("t"), py::arg("dt"));
    m.def("simulate", &simulate, py::arg("problem"), py::arg("grid"),
          py::call_guard<py::gil_scoped_release>());
    m.def("residual", py::overload_cast<const SemilinearProblem&, const Trajectory&>(&residual));

    py::class_<OrderingReport>(m, "OrderingReport")
        .def_readonly("passed", &OrderingReport::pass)
        .def_readonly("worst_violation", &OrderingReport::worst_violation)
        .def_readonly("t", &OrderingReport::t)
        .def_readonly("z", &OrderingReport::z);
    m.def("check_ordering", &check_ordering, py::arg("low"), py::arg("high"),
          py::arg("tol") = kDefaultOrderingTol);

    py::class_<SandwichReport>(m, "SandwichReport")
        .def_readonly("passed", &SandwichReport::pass)
        .def_readonly("original", &SandwichReport::original)
        .def_readonly("lower", &SandwichReport::lower)
        .def_readonly("upper", &SandwichReport::upper)
        .def_readonly("low_side", &SandwichReport::low_side)
        .def_readonly("high_side", &SandwichReport::high_side);
    m.def("constant_reduction_experiment", &constant_reduction_experiment, py::arg("problem"),
          py::arg("grid"), py::arg("epsilon"), py::arg("tol") = kDefaultOrderingTol);

    py::enum_<EstimateId>(m, "EstimateId")
        .value("eq50", EstimateId::eq50)
        .value("eq51", EstimateId::eq51)
        .value("eq52", EstimateId::eq52)
        .value("eq53", EstimateId::eq53)
        .value("eq63", EstimateId::eq63)
        .value("generic", EstimateId::generic);

    py::class_<ISSReport>(m, "ISSReport")
        .def_readonly("id", &ISSReport::id)
        .def_readonly("margin", &ISSReport::margin)
        .def_readonly("tolerance", &ISSReport::tolerance)
        .def_readonly("passed", &ISSReport::pass)
        .def_readonly("parameters", &ISSReport::parameters)
        .def_property_readonly("t", [](const ISSReport& r) {
            std::vector<double> v;
            for (const auto& row : r.rows) v.push_back(row.t);
            return to_array(v);
        })
        .def_property_readonly("lhs", [](const ISSReport& r) {
            std::vector<double> v;
            for (const auto& row : r.rows) v.push_back(row.lhs);
            return to_array(v);
        })
        .def_property_readonly("rhs", [](const ISSReport& r) {
            std::vector<double> v;
            for (const auto& row : r.rows) v.push_back(row.rhs);
            return to_array(v);
        });

    m.def("check_eq50", &check_eq50, py::arg("problem"), py::arg("traj"),
          py::arg("tol") = kDefaultIssTol, py::arg("gain") = std::numbers::inv_pi);
    m.def("check_eq51", &check_eq51, py::arg("problem"), py::arg("traj"),
          py::arg("tol") = kDefaultIssTol, py::arg("gain") = std::numbers::inv_sqrt3);
    m.def("check_eq52", &check_eq52, py::arg("problem"), py::arg("traj"), py::arg("sigma"),
          py::arg("theta"), py::arg("tol") = kDefaultIssTol);

    py::class_<DecayCertificate>(m, "DecayCertificate")
        .def_readonly("p", &DecayCertificate::p)
        .def_readonly("functional_rate", &DecayCertificate::functional_rate)
        .def_readonly("norm_rate", &DecayCertificate::norm_rate)
        .def_readonly("measured_norm_rate", &DecayCertificate::measured_norm_rate)
        .def_readonly("derivative_margin", &DecayCertificate::derivative_margin)
        .def_readonly("passed", &DecayCertificate::pass);
    m.def("lyapunov_decay_certificate", &lyapunov_decay_certificate, py::arg("problem"),
          py::arg("grid"), py::arg("p"), py::arg("tol") = kDefaultIssTol);
    m.def("lyapunov_norm_rate", &lyapunov_norm_rate, py::arg("a"), py::arg("p"));

    py::class_<ExpIssConstants>(m, "ExpIssConstants")
        .def(py::init([](double m_, double s, double g) { return ExpIssConstants{m_, s, g}; }),
             py::arg("m"), py::arg("sigma"), py::arg("gamma"))
        .def_readwrite("m", &ExpIssConstants::m)
        .def_readwrite("sigma", &ExpIssConstants::sigma)
        .def_readwrite("gamma", &ExpIssConstants::gamma);
    m.def("estimate_exp_iss_constants",
          [](const std::vector<Trajectory>& runs, double p) { return estimate_exp_iss_constants(runs, p); },
          py::arg("scenarios"), py::arg("p"));
    m.def("check_eq53", &check_eq53, py::arg("traj"), py::arg("constants"), py::arg("p"),
          py::arg("tol") = kDefaultIssTol);

    py::enum_<ControlEnd>(m, "ControlEnd")
        .value("left", ControlEnd::left)
        .value("right", ControlEnd::right);

    py::class_<VolterraKernel>(m, "VolterraKernel")
        .def_property_readonly("lam", &VolterraKernel::lam)
        .def_property_readonly("samples", &kernel_array)
        .def_property_readonly("control_end", &VolterraKernel::control_end)
        .def_property_readonly("iterations", &VolterraKernel::iterations)
        .def("at", &VolterraKernel::at)
        .def("mirrored", &VolterraKernel::mirrored);
    m.def("solve_kernel", &solve_kernel, py::arg("a"), py::arg("k_reaction"), py::arg("grid"));
    m.def("solve_inverse_kernel", &solve_inverse_kernel, py::arg("direct"));
    m.def("apply_transform", &apply_transform, py::arg("kernel"), py::arg("y"));
    m.def("feedback", &feedback, py::arg("kernel"), py::arg("y"), py::arg("d"));

    py::class_<ClosedLoopRun>(m, "ClosedLoopRun")
        .def_readonly("y", &ClosedLoopRun::y)
        .def_readonly("x", &ClosedLoopRun::x)
        .def_readonly("disturbance", &ClosedLoopRun::disturbance)
        .def_readonly("control", &ClosedLoopRun::control);
    m.def("simulate_closed_loop",
          py::overload_cast<double, const VolterraKernel&, const Field&, const BoundarySignal&,
                            const Grid1D&>(&simulate_closed_loop),
          py::arg("a"), py::arg("kernel"), py::arg("y0"), py::arg("d"), py::arg("grid"));
    m.def("simulate_closed_loop",
          py::overload_cast<double, double, const Field&, const BoundarySignal&, const Grid1D&,
                            ControlEnd>(&simulate_closed_loop),
          py::arg("a"), py::arg("k_reaction"), py::arg("y0"), py::arg("d"), py::arg("grid"),
          py::arg("end") = ControlEnd::left);
    m.def("simulate_open_loop", &simulate_open_loop, py::arg("a"), py::arg("k_reaction"),
          py::arg("y0"), py::arg("grid"));

    py::class_<EquivalenceConstants>(m, "EquivalenceConstants")
        .def_readonly("k1", &EquivalenceConstants::k1)
        .def_readonly("k2", &EquivalenceConstants::k2)
        .def_readonly("min_ratio", &EquivalenceConstants::min_ratio)
        .def_readonly("max_ratio", &EquivalenceConstants::max_ratio);
    m.def("estimate_equivalence_constants", &estimate_equivalence_constants, py::arg("direct"),
          py::arg("inverse"), py::arg("p"));
    m.def(
        "certify_eq63",
        [](const Trajectory& y, std::vector<double> d, const EquivalenceConstants& eq,
           const ExpIssConstants& target, double p, double tol) {
            return certify_eq63(y, d, Eq63Constants{eq, target}, p, tol);
        },
        py::arg("y"), py::arg("disturbance"), py::arg("equivalence"), py::arg("target"),
        py::arg("p"), py::arg("tol") = kDefaultIssTol);

    py::class_<CheckOutcome>(m, "CheckOutcome")
        .def_readonly("id", &CheckOutcome::id)
        .def_readonly("passed", &CheckOutcome::pass)
        .def_readonly("margin", &CheckOutcome::margin);
    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("name", &ScenarioResult::name)
        .def_readonly("kind", &ScenarioResult::kind)
        .def_readonly("passed", &ScenarioResult::pass)
        .def_readonly("min_margin", &ScenarioResult::min_margin)
        .def_readonly("checks", &ScenarioResult::checks)
        .def_readonly("exit_code", &ScenarioResult::exit_code)
        .def_readonly("error", &ScenarioResult::error);

    auto make_options = [](const std::optional<std::filesystem::path>& out, std::optional<double> tol,
                           std::optional<std::uint64_t> seed, bool plots) {
        RunOptions o;
        o.out_root = resolve_out_root(out);
        o.tolerance = tol;
        o.seed = seed;
        o.plots = plots;
        return o;
    };
    m.def(
        "run_scenario_file",
        [make_options](const std::filesystem::path& file, std::optional<std::filesystem::path> out,
                       std::optional<double> tol, std::optional<std::uint64_t> seed, bool plots) {
            return run_scenario_file(file, make_options(out, tol, seed, plots));
        },
        py::arg("file"), py::arg("out") = py::none(), py::arg("tol") = py::none(),
        py::arg("seed") = py::none(), py::arg("plots") = true);
    m.def(
        "run_suite",
        [make_options](const std::filesystem::path& dir, std::optional<std::filesystem::path> out,
                       std::optional<double> tol, std::optional<std::uint64_t> seed, bool plots) {
            const auto r = run_suite(dir, make_options(out, tol, seed, plots));
            return py::make_tuple(r.exit_code, r.rows);
        },
        py::arg("dir"), py::arg("out") = py::none(), py::arg("tol") = py::none(),
        py::arg("seed") = py::none(), py::arg("plots") = true);
}
