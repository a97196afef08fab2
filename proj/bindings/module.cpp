#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polyhom/finite_temp.hpp"
#include "polyhom/studies.hpp"

#include <sstream>

namespace py = pybind11;
using namespace polyhom;

namespace {

Box box_from_pair(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Box b;
    b.lo = Vec(lo.size());
    b.hi = Vec(hi.size());
    for (long i = 0; i < lo.size(); ++i) {
        b.lo[static_cast<int>(i)] = lo[i];
        b.hi[static_cast<int>(i)] = hi[i];
    }
    return b;
}

PairPotential pair_from_dict(const py::dict& d) {
    std::ostringstream os;
    os << py::str(py::module_::import("json").attr("dumps")(d));
    return pair_from_json(nlohmann::json::parse(os.str()));
}

VolumetricPotential vol_from_dict(const py::object& d) {
    if (d.is_none()) return VolumetricPotential::none();
    std::ostringstream os;
    os << py::str(py::module_::import("json").attr("dumps")(d));
    return vol_from_json(nlohmann::json::parse(os.str()));
}

Eigen::MatrixXd positions_matrix(const ExtendedGraph& g) {
    Eigen::MatrixXd out(g.vertex_count(), g.dim());
    for (int i = 0; i < g.vertex_count(); ++i)
        for (int k = 0; k < g.dim(); ++k) out(i, k) = g.positions[i][k];
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "effective energy densities of discrete random polymer-chain networks";
    m.attr("__version__") = POLYHOM_VERSION;

    py::register_exception<GeneralPositionViolated>(m, "GeneralPositionViolated");
    py::register_exception<OutOfRange>(m, "OutOfRange");

    py::class_<ExtendedGraph>(m, "Graph")
        .def_property_readonly("positions", &positions_matrix)
        .def_property_readonly("edges",
                               [](const ExtendedGraph& g) { return g.edges; })
        .def_property_readonly("simplices",
                               [](const ExtendedGraph& g) { return g.simplices; })
        .def_property_readonly("volumetric_flags",
                               [](const ExtendedGraph& g) { return g.volumetric; })
        .def_property_readonly("fixture_only",
                               [](const ExtendedGraph& g) { return g.fixture_only; })
        .def_property_readonly(
            "window",
            [](const ExtendedGraph& g) {
                return py::make_tuple(Eigen::VectorXd(g.window.lo),
                                      Eigen::VectorXd(g.window.hi));
            })
        .def("__repr__", [](const ExtendedGraph& g) {
            return "<polyhom.Graph " + std::to_string(g.vertex_count()) + " vertices, " +
                   std::to_string(g.edges.size()) + " edges>";
        });

    m.def(
        "generate_graph",
        [](const py::dict& params, double window_side) {
            std::ostringstream os;
            os << py::str(py::module_::import("json").attr("dumps")(params));
            GraphParams p = params_from_json(nlohmann::json::parse(os.str()));
            return generate_graph(p, Box::cube(p.dimension, 0.0, window_side));
        },
        py::arg("params"), py::arg("window_side"),
        "draw an ensemble member on [0, window_side)^d");

    m.def(
        "lattice_fixture",
        [](const std::vector<int>& shape, double interaction_range, double spacing) {
            return lattice_fixture(shape, interaction_range, spacing);
        },
        py::arg("shape"), py::arg("interaction_range") = 2.0, py::arg("spacing") = 1.0,
        "deterministic unit-lattice fixture");

    m.def("load_graph", &load_graph, py::arg("path"));
    m.def("save_graph", &save_graph, py::arg("graph"), py::arg("path"));

    m.def(
        "validate_graph",
        [](const ExtendedGraph& g) {
            ValidationReport r = validate_graph(g);
            py::dict out;
            auto cond = [](const ValidationReport::Condition& c) {
                py::dict d;
                d["pass"] = c.pass;
                d["witness"] = c.witness;
                d["note"] = c.note;
                return d;
            };
            out["covering"] = cond(r.covering);
            out["separation"] = cond(r.separation);
            out["edge_range"] = cond(r.edge_range);
            out["corridor"] = cond(r.corridor);
            out["general_position"] = cond(r.general_position);
            out["pass"] = r.pass();
            return out;
        },
        py::arg("graph"));

    m.def("inverse_langevin", py::vectorize(inverse_langevin), py::arg("x"));
    m.def("langevin", py::vectorize(langevin), py::arg("t"));
    m.def(
        "kuhn_grun",
        [](double t, const std::string& mode) {
            return kuhn_grun(t, mode == "exact" ? KuhnGrunMode::Exact : KuhnGrunMode::P10);
        },
        py::arg("t"), py::arg("mode") = "p10");

    m.def(
        "hamiltonian",
        [](const ExtendedGraph& g, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
           const Eigen::MatrixXd& u_rows, const py::dict& pair, const py::object& vol,
           double clamp_width) {
            const int n = static_cast<int>(u_rows.cols());
            CellDomain dom = build_domain(g, box_from_pair(lo, hi), BoundaryMode::Clamped, n,
                                          clamp_width);
            if (u_rows.rows() != g.vertex_count())
                throw std::invalid_argument("one row of values per graph vertex");
            Eigen::VectorXd u(dom.dofs());
            for (int l = 0; l < dom.vertex_count(); ++l)
                u.segment(static_cast<long>(l) * n, n) =
                    u_rows.row(dom.vertices[l]).transpose();
            return hamiltonian(dom, u, pair_from_dict(pair), vol_from_dict(vol));
        },
        py::arg("graph"), py::arg("lo"), py::arg("hi"), py::arg("values"), py::arg("pair"),
        py::arg("vol") = py::none(), py::arg("clamp_width") = -1.0,
        "H over the box [lo, hi]; values indexed by graph vertex");

    m.def(
        "minimize_cell",
        [](const ExtendedGraph& g, const Eigen::MatrixXd& lam, const py::dict& pair,
           const py::object& vol, double clamp_width, int restarts, std::uint64_t seed,
           const std::string& boundary) {
            CellProblem prob;
            prob.graph = &g;
            prob.micro = g.window;
            prob.lambda = lam;
            prob.pair = pair_from_dict(pair);
            prob.vol = vol_from_dict(vol);
            prob.clamp_width = clamp_width;
            prob.mode = boundary == "soft" ? BoundaryMode::Soft : BoundaryMode::Clamped;
            MinimizeOptions mo;
            mo.restarts = restarts;
            mo.seed = seed;
            const MinimizationResult r = minimize_cell(prob, mo);
            py::dict out;
            out["density"] = r.density;
            out["energy"] = r.energy;
            out["grad_inf"] = r.grad_inf;
            out["restart_spread"] = r.restart_spread;
            out["converged"] = r.converged;
            return out;
        },
        py::arg("graph"), py::arg("lam"), py::arg("pair"), py::arg("vol") = py::none(),
        py::arg("clamp_width") = -1.0, py::arg("restarts") = 4, py::arg("seed") = 0,
        py::arg("boundary") = "clamped",
        "cell-problem minimization over the whole graph window");

    m.def(
        "gaussian_free_energy",
        [](const ExtendedGraph& g, const Eigen::MatrixXd& lam, const py::dict& pair,
           double beta, double clamp_width) {
            QuadraticModel model(g, g.window, pair_from_dict(pair), linear_datum(lam),
                                 clamp_width);
            const FreeEnergyEstimate est = gaussian_free_energy(model, beta);
            py::dict out;
            out["value"] = est.value;
            out["stderr"] = est.stderr_value;
            out["min_energy_density"] = model.min_energy() / model.domain_volume();
            out["free_dofs"] = model.free_dofs();
            return out;
        },
        py::arg("graph"), py::arg("lam"), py::arg("pair"), py::arg("beta"),
        py::arg("clamp_width") = -1.0, "exact Gaussian free energy of a quadratic model");

    m.def(
        "free_energy_ti",
        [](const ExtendedGraph& g, const Eigen::MatrixXd& lam, const py::dict& pair,
           const py::object& vol, double beta, double clamp_width, int nodes, int sweeps,
           std::uint64_t seed) {
            TiParams ti;
            ti.nodes = nodes;
            ti.chain.sweeps = sweeps;
            ti.chain.burnin = std::max(500, sweeps / 8);
            ti.chain.seed = seed;
            const FreeEnergyEstimate est =
                free_energy_ti(g, g.window, lam, beta, pair_from_dict(pair),
                               vol_from_dict(vol), ti, clamp_width);
            py::dict out;
            out["value"] = est.value;
            out["stderr"] = est.stderr_value;
            out["acceptance"] = est.acceptance_rate;
            out["min_ess"] = est.ess;
            return out;
        },
        py::arg("graph"), py::arg("lam"), py::arg("pair"), py::arg("vol") = py::none(),
        py::arg("beta") = 1.0, py::arg("clamp_width") = -1.0, py::arg("nodes") = 8,
        py::arg("sweeps") = 10000, py::arg("seed") = 0,
        "thermodynamic-integration free energy with a Gaussian reference");

    m.def(
        "fit_scaling",
        [](const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& sigma, const std::string& model) {
            std::vector<ScalingPoint> pts;
            for (std::size_t i = 0; i < x.size(); ++i)
                pts.push_back({x[i], y[i], i < sigma.size() ? sigma[i] : 1.0});
            const ScalingFit fit = fit_scaling(
                pts, model == "power-log" ? ScalingModel::PowerLog : ScalingModel::InverseL);
            py::dict out;
            out["a"] = fit.a;
            out["b"] = fit.b;
            out["residual"] = fit.residual;
            out["ratio_bounded"] = fit.ratio_bounded;
            out["outlier_free"] = fit.outlier_free;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("sigma") = std::vector<double>{},
        py::arg("model") = "inverse-L");

    m.def(
        "run_study",
        [](const py::dict& config) {
            std::ostringstream os;
            os << py::str(py::module_::import("json").attr("dumps")(config));
            StudyConfig cfg = study_config_from_json(nlohmann::json::parse(os.str()));
            StudyResult res = run_study(cfg);
            py::dict out;
            out["verdict"] = res.verdict;
            out["summary"] = py::module_::import("json").attr("loads")(res.summary.dump());
            out["csv"] = result_csv(res);
            return out;
        },
        py::arg("config"), "run a declarative study from a config dict");
}
