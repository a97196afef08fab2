// polyhom: effective energy densities of random polymer-chain networks.
//
// exit codes: 0 success, 1 scientific verdict failure, 2 usage error

#include <CLI11.hpp>

#include "polyhom/finite_temp.hpp"
#include "polyhom/studies.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace polyhom;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_sigint(int) { g_interrupted.store(true); }

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("config", "cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void apply_overrides(nlohmann::json& j, std::int64_t seed, const std::string& out) {
    if (seed >= 0) j["seeds"] = {static_cast<std::uint64_t>(seed)};
    if (!out.empty()) j["output"] = out;
}

int study_command(const std::string& config_path, std::int64_t seed, const std::string& out,
                  const std::string& forced_kind = "") {
    nlohmann::json j = load_json(config_path);
    if (!forced_kind.empty()) j["kind"] = forced_kind;
    apply_overrides(j, seed, out);
    StudyConfig cfg = study_config_from_json(j);
    StudyResult res = run_study(cfg, &g_interrupted);
    write_result_files(res, cfg.output_path);
    std::cout << result_csv(res);
    std::cout << "summary: " << res.summary.dump() << "\n";
    std::cout << "verdict: " << (res.verdict ? "pass" : "fail") << "\n";
    if (g_interrupted.load()) {
        std::cout << "interrupted: partial results checkpointed to " << cfg.output_path
                  << ".checkpoint.jsonl\n";
        return 1;
    }
    return res.verdict ? 0 : 1;
}

void save_deformation(const std::string& path, const Eigen::VectorXd& u, int n) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    nlohmann::json header{{"version", 1},
                          {"codomain", n},
                          {"values", u.size()},
                          {"order", "graph"},
                          {"dtype", "float64-le"}};
    out << header.dump() << "\n";
    out.write(reinterpret_cast<const char*>(u.data()),
              static_cast<std::streamsize>(u.size() * sizeof(double)));
}

Eigen::VectorXd load_deformation(const std::string& path, int* n_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header_line;
    std::getline(in, header_line);
    nlohmann::json header = nlohmann::json::parse(header_line);
    const long count = header.at("values").get<long>();
    if (n_out) *n_out = header.at("codomain").get<int>();
    Eigen::VectorXd u(count);
    in.read(reinterpret_cast<char*>(u.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated deformation file: " + path);
    return u;
}

struct SingleRunSetup {
    ExtendedGraph graph;
    Box domain;
    Eigen::MatrixXd lambda;
    PairPotential pair;
    VolumetricPotential vol;
    double clamp_width;
    StudyConfig cfg;
};

SingleRunSetup single_setup(const nlohmann::json& j) {
    SingleRunSetup s;
    s.cfg = study_config_from_json(j);
    const double side = s.cfg.windows.empty() ? 12.0 : s.cfg.windows[0];
    if (j.contains("graph_file"))
        s.graph = load_graph(j.at("graph_file").get<std::string>());
    else
        s.graph = study_graph(s.cfg, side, s.cfg.seeds[0]);
    s.domain = j.contains("graph_file") ? s.graph.window : study_domain(s.cfg, s.graph, side);
    s.lambda = s.cfg.lambdas.empty()
                   ? Eigen::MatrixXd::Identity(s.graph.dim(), s.graph.dim()).eval()
                   : s.cfg.lambdas[0];
    s.pair = pair_from_json(s.cfg.pair);
    s.vol = vol_from_json(s.cfg.vol);
    s.clamp_width = s.cfg.clamp_width;
    return s;
}

void write_single_result(const std::string& out, const nlohmann::json& row) {
    if (out.empty()) return;
    std::ofstream js(out + ".summary.json");
    js << row.dump(2) << "\n";
    std::ofstream csv(out + ".csv");
    csv.precision(17);
    std::string keys, vals;
    for (auto it = row.begin(); it != row.end(); ++it) {
        if (!keys.empty()) {
            keys += ",";
            vals += ",";
        }
        keys += it.key();
        vals += it.value().is_number() ? std::to_string(it.value().get<double>())
                                       : it.value().dump();
    }
    csv << keys << "\n" << vals << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, handle_sigint);

    CLI::App app{"effective energy densities of discrete random polymer-chain networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(POLYHOM_VERSION));

    int threads = 0;
    app.add_option("--threads", threads, "cap the worker pool (overrides POLYHOM_THREADS)");

    std::string config_path, out_path, in_path, deformation_path;
    std::int64_t seed_override = -1;

    // graph generate / validate
    auto* graph_cmd = app.add_subcommand("graph", "generate and validate networks");
    graph_cmd->require_subcommand(1);
    auto* gen = graph_cmd->add_subcommand("generate", "draw an ensemble member");
    gen->add_option("--config", config_path, "graph parameter file (JSON)")->required();
    gen->add_option("--out", out_path, "output graph file")->required();
    gen->add_option("--seed", seed_override, "override the rng seed");
    auto* val = graph_cmd->add_subcommand("validate", "check conditions (i)-(v)");
    val->add_option("file", in_path, "graph file")->required();

    // energy eval / grad-check
    auto* energy_cmd = app.add_subcommand("energy", "evaluate Hamiltonians");
    energy_cmd->require_subcommand(1);
    auto* eval = energy_cmd->add_subcommand("eval", "evaluate H on a deformation");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--deformation", deformation_path,
                     "binary snapshot; affine datum when omitted");
    eval->add_option("--out", out_path);
    auto* gradcheck = energy_cmd->add_subcommand("grad-check",
                                                 "finite-difference gradient check");
    gradcheck->add_option("--config", config_path)->required();
    gradcheck->add_option("--out", out_path);

    // zero-temp minimize / sweep
    auto* zt = app.add_subcommand("zero-temp", "zero-temperature estimators");
    zt->require_subcommand(1);
    auto* ztmin = zt->add_subcommand("minimize", "single cell-problem minimization");
    ztmin->add_option("--config", config_path)->required();
    ztmin->add_option("--out", out_path);
    ztmin->add_option("--out-deformation", deformation_path);
    ztmin->add_option("--seed", seed_override);
    auto* ztsweep = zt->add_subcommand("sweep", "window sweep with extrapolation");
    ztsweep->add_option("--config", config_path)->required();
    ztsweep->add_option("--out", out_path);
    ztsweep->add_option("--seed", seed_override);

    // free-energy exact / ti
    auto* fe = app.add_subcommand("free-energy", "finite-temperature estimators");
    fe->require_subcommand(1);
    auto* fe_exact = fe->add_subcommand("exact", "Gaussian closed form (quadratic model)");
    fe_exact->add_option("--config", config_path)->required();
    fe_exact->add_option("--out", out_path);
    auto* fe_ti = fe->add_subcommand("ti", "thermodynamic integration");
    fe_ti->add_option("--config", config_path)->required();
    fe_ti->add_option("--out", out_path);
    fe_ti->add_option("--seed", seed_override);

    // study-backed commands
    auto* phantom = app.add_subcommand("phantom-check", "phantom identity verdict");
    phantom->add_option("--config", config_path)->required();
    phantom->add_option("--out", out_path);
    auto* gap = app.add_subcommand("gap-sweep", "zero-temperature gap scaling in beta");
    gap->add_option("--config", config_path)->required();
    gap->add_option("--out", out_path);
    gap->add_option("--seed", seed_override);
    auto* twotemp = app.add_subcommand("two-temp", "two-temperature rescaling study");
    twotemp->add_option("--config", config_path)->required();
    twotemp->add_option("--out", out_path);
    twotemp->add_option("--seed", seed_override);
    auto* study = app.add_subcommand("study", "declarative sweeps");
    study->require_subcommand(1);
    auto* study_run = study->add_subcommand("run", "run a study config");
    study_run->add_option("--config", config_path)->required();
    study_run->add_option("--out", out_path);
    auto* poincare = app.add_subcommand("poincare", "discrete Poincare probe");
    poincare->add_option("--config", config_path)->required();
    poincare->add_option("--out", out_path);
    auto* rankone = app.add_subcommand("rank-one", "rank-one convexity probe");
    rankone->add_option("--config", config_path)->required();
    rankone->add_option("--out", out_path);
    rankone->add_option("--seed", seed_override);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help / --version
        app.exit(e);
        return 2;
    }

    if (threads > 0) setenv("POLYHOM_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (gen->parsed()) {
            nlohmann::json j = load_json(config_path);
            GraphParams params = params_from_json(j.contains("graph") ? j.at("graph") : j);
            if (seed_override >= 0) params.seed = static_cast<std::uint64_t>(seed_override);
            Box window;
            if (j.contains("window")) {
                const auto& w = j.at("window");
                const int d = params.dimension;
                window = Box::cube(d, 0.0, 1.0);
                for (int i = 0; i < d; ++i) {
                    window.lo[i] = w.at("lo").at(i).get<double>();
                    window.hi[i] = w.at("hi").at(i).get<double>();
                }
            } else {
                window = Box::cube(params.dimension, 0.0,
                                   j.value("window_side", 4.0 * params.interaction_range));
            }
            ExtendedGraph g = generate_graph(params, window);
            save_graph(g, out_path);
            std::cout << "generated " << g.vertex_count() << " vertices, "
                      << g.edges.size() << " edges, " << g.simplices.size()
                      << " simplices -> " << out_path << "\n";
            return 0;
        }

        if (val->parsed()) {
            if (!std::filesystem::exists(in_path)) {
                std::cerr << "error: file not found: " << in_path << "\n";
                return 2;
            }
            ExtendedGraph g = load_graph(in_path);
            ValidationReport rep = validate_graph(g);
            auto line = [](const char* name, const ValidationReport::Condition& c) {
                std::cout << name << ": " << (c.pass ? "pass" : "FAIL")
                          << " (witness " << c.witness << ", " << c.note << ")\n";
            };
            line("(i)   covering", rep.covering);
            line("(ii)  separation", rep.separation);
            line("(iii) edge range", rep.edge_range);
            line("(iv)  corridor", rep.corridor);
            line("(v)   general position", rep.general_position);
            std::cout << "verdict: " << (rep.pass() ? "pass" : "fail") << "\n";
            return rep.pass() ? 0 : 1;
        }

        if (eval->parsed() || gradcheck->parsed()) {
            SingleRunSetup s = single_setup(load_json(config_path));
            const int n = static_cast<int>(s.lambda.rows());
            CellDomain dom =
                build_domain(s.graph, s.domain, BoundaryMode::Clamped, n, s.clamp_width);
            Eigen::VectorXd u;
            if (eval->parsed() && !deformation_path.empty()) {
                int file_n = n;
                u = load_deformation(deformation_path, &file_n);
                if (file_n != n || u.size() != dom.dofs())
                    throw std::runtime_error("deformation does not match the domain");
            } else {
                u = datum_field(dom, linear_datum(s.lambda));
            }
            if (eval->parsed()) {
                const double h = hamiltonian(dom, u, s.pair, s.vol);
                nlohmann::json row{{"energy", h},
                                   {"density", h / dom.volume},
                                   {"volume", dom.volume},
                                   {"vertices", dom.vertex_count()}};
                std::cout << row.dump(2) << "\n";
                write_single_result(out_path, row);
                return 0;
            }
            // grad-check: randomized central differences against the
            // analytic gradient
            Rng rng(s.cfg.seeds[0]);
            Eigen::VectorXd base = u;
            double worst = 0.0;
            for (int rep = 0; rep < 20; ++rep) {
                Eigen::VectorXd x = base;
                for (long i = 0; i < x.size(); ++i) x[i] += 0.05 * rng.normal();
                const Eigen::VectorXd grad = hamiltonian_gradient(dom, x, s.pair, s.vol);
                const double scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
                for (int probe = 0; probe < 4; ++probe) {
                    if (dom.variable_locals.empty()) break;
                    const int k = static_cast<int>(rng.uniform_index(
                        static_cast<std::uint64_t>(dom.variable_locals.size())));
                    const long idx =
                        static_cast<long>(dom.variable_locals[k]) * n +
                        static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(n)));
                    const double h = 1e-5;
                    Eigen::VectorXd up = x, dn = x;
                    up[idx] += h;
                    dn[idx] -= h;
                    const double fd = (hamiltonian(dom, up, s.pair, s.vol) -
                                       hamiltonian(dom, dn, s.pair, s.vol)) /
                                      (2 * h);
                    worst = std::max(worst, std::abs(grad[idx] - fd) / scale);
                }
            }
            nlohmann::json row{{"max_rel_error", worst}, {"tolerance", 1e-6}};
            std::cout << row.dump(2) << "\n";
            write_single_result(out_path, row);
            return worst <= 1e-6 ? 0 : 1;
        }

        if (ztmin->parsed()) {
            nlohmann::json j = load_json(config_path);
            apply_overrides(j, seed_override, out_path);
            SingleRunSetup s = single_setup(j);
            CellProblem prob;
            prob.graph = &s.graph;
            prob.micro = s.domain;
            prob.lambda = s.lambda;
            prob.pair = s.pair;
            prob.vol = s.vol;
            prob.clamp_width = s.clamp_width;
            if (j.value("boundary", "clamped") == "soft") prob.mode = BoundaryMode::Soft;
            MinimizeOptions mo;
            mo.restarts = s.cfg.budgets.value("restarts", 8);
            mo.seed = s.cfg.seeds[0];
            const MinimizationResult res = minimize_cell(prob, mo);
            nlohmann::json row{{"density", res.density},
                               {"energy", res.energy},
                               {"grad_inf", res.grad_inf},
                               {"restart_spread", res.restart_spread},
                               {"best_restart", res.best_restart},
                               {"iterations", res.iterations}};
            std::cout << row.dump(2) << "\n";
            write_single_result(out_path, row);
            if (!deformation_path.empty())
                save_deformation(deformation_path, res.field,
                                 static_cast<int>(s.lambda.rows()));
            return 0;
        }

        if (ztsweep->parsed())
            return study_command(config_path, seed_override, out_path, "w-inf-convergence");

        if (fe_exact->parsed()) {
            SingleRunSetup s = single_setup(load_json(config_path));
            if (s.pair.kind != PairKind::Quadratic)
                throw std::runtime_error("free-energy exact requires the quadratic model");
            const double beta = s.cfg.budgets.value("beta", 1.0);
            QuadraticModel model(s.graph, s.domain, s.pair, linear_datum(s.lambda),
                                 s.clamp_width);
            const FreeEnergyEstimate est = gaussian_free_energy(model, beta);
            nlohmann::json row{{"value", est.value},
                               {"stderr", est.stderr_value},
                               {"method", est.method},
                               {"beta", beta},
                               {"free_dofs", model.free_dofs()}};
            std::cout << row.dump(2) << "\n";
            write_single_result(out_path, row);
            return 0;
        }

        if (fe_ti->parsed()) {
            nlohmann::json j = load_json(config_path);
            apply_overrides(j, seed_override, out_path);
            SingleRunSetup s = single_setup(j);
            const double beta = s.cfg.budgets.value("beta", 1.0);
            TiParams ti;
            ti.nodes = s.cfg.budgets.value("ti_nodes", 8);
            ti.chain.sweeps = s.cfg.budgets.value("chain_sweeps", 20000);
            ti.chain.burnin = s.cfg.budgets.value("chain_burnin", 3000);
            ti.chain.seed = s.cfg.seeds[0];
            const FreeEnergyEstimate est = free_energy_ti(
                s.graph, s.domain, s.lambda, beta, s.pair, s.vol, ti, s.clamp_width);
            nlohmann::json row{{"value", est.value},
                               {"stderr", est.stderr_value},
                               {"method", est.method},
                               {"beta", beta},
                               {"acceptance", est.acceptance_rate},
                               {"min_ess", est.ess}};
            std::cout << row.dump(2) << "\n";
            write_single_result(out_path, row);
            return 0;
        }

        if (phantom->parsed()) {
            const int code = study_command(config_path, -1, out_path, "phantom");
            if (code == 0) std::cout << "identity holds to 1e-10\n";
            return code;
        }
        if (gap->parsed())
            return study_command(config_path, seed_override, out_path, "beta-gap");
        if (twotemp->parsed())
            return study_command(config_path, seed_override, out_path, "two-temp");
        if (study_run->parsed()) return study_command(config_path, -1, out_path);
        if (poincare->parsed())
            return study_command(config_path, -1, out_path, "poincare");
        if (rankone->parsed())
            return study_command(config_path, seed_override, out_path, "rank-one");
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
