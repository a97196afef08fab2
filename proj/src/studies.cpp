#include "polyhom/studies.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace polyhom {

int thread_budget() {
    if (const char* env = std::getenv("POLYHOM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 4;
}

void parallel_for(int count, const std::function<void(int)>& body,
                  std::atomic<bool>* interrupted) {
    const int workers = std::min(thread_budget(), std::max(1, count));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) {
            if (interrupted && interrupted->load()) break;
            body(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            while (true) {
                if (interrupted && interrupted->load()) return;
                const int i = next.fetch_add(1);
                if (i >= count) return;
                body(i);
            }
        });
    for (auto& t : pool) t.join();
}

PairPotential pair_from_json(const nlohmann::json& j) {
    PairPotential p;
    const std::string kind = j.value("kind", "quadratic");
    if (kind == "quadratic") {
        p = PairPotential::quadratic(matrix_from_json(j.at("A")));
    } else if (kind == "kuhn-grun-p10" || kind == "kuhn-grun-exact") {
        p = PairPotential::kuhn_grun_p10(j.value("mean_monomers", 100.0),
                                         j.value("monomer_length", 0.1),
                                         j.value("prefactor", 1.0));
        if (kind == "kuhn-grun-exact") p.kind = PairKind::KuhnGrunExact;
    } else if (kind == "polynomial") {
        p.kind = PairKind::Polynomial;
        p.poly_coefficients = j.at("coefficients").get<std::vector<double>>();
        p.growth_exponent = j.value("growth_exponent", 2.0);
    } else {
        throw std::invalid_argument("unknown pair potential kind: " + kind);
    }
    p.stiffness_multiplier = j.value("stiffness_multiplier", 1.0);
    if (j.contains("stiff_vertices"))
        p.stiff_vertices = j.at("stiff_vertices").get<std::vector<std::uint32_t>>();
    return p;
}

VolumetricPotential vol_from_json(const nlohmann::json& j) {
    if (j.is_null() || j.value("kind", "none") == "none") return VolumetricPotential::none();
    return VolumetricPotential::convex_well(j.value("weight", 1.0), j.value("exponent", 5.0),
                                            j.value("c_neg", 1.0));
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const std::size_t rows = j.size();
    const std::size_t cols = j.at(0).size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t k = 0; k < cols; ++k) m(static_cast<long>(i), static_cast<long>(k)) =
            j.at(i).at(k).get<double>();
    return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (long i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (long k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig cfg;
    cfg.raw = j;
    cfg.kind = j.at("kind").get<std::string>();
    if (j.contains("graph")) cfg.graph = params_from_json(j.at("graph"));
    cfg.lattice_fixture = j.value("lattice_fixture", false);
    cfg.clamp_width = j.value("clamp_width", -1.0);
    cfg.pair = j.value("pair", nlohmann::json{{"kind", "quadratic"},
                                              {"A", {{1.0, 0.0}, {0.0, 1.0}}}});
    cfg.vol = j.value("vol", nlohmann::json{{"kind", "none"}});
    if (j.contains("lambdas"))
        for (const auto& lj : j.at("lambdas")) cfg.lambdas.push_back(matrix_from_json(lj));
    if (j.contains("windows")) cfg.windows = j.at("windows").get<std::vector<double>>();
    if (j.contains("grid")) cfg.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) cfg.seeds = {1};
    std::sort(cfg.seeds.begin(), cfg.seeds.end());
    if (std::adjacent_find(cfg.seeds.begin(), cfg.seeds.end()) != cfg.seeds.end())
        throw std::invalid_argument("seeds must be distinct");
    cfg.budgets = j.value("budgets", nlohmann::json::object());
    cfg.output_path = j.value("output", "study");
    return cfg;
}

StudyConfig load_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    return study_config_from_json(j);
}

std::uint64_t config_hash(const StudyConfig& cfg) {
    const std::string dump = cfg.raw.dump();
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ExtendedGraph study_graph(const StudyConfig& cfg, double window_side, std::uint64_t seed) {
    const int d = cfg.graph.dimension;
    if (cfg.lattice_fixture) {
        std::vector<int> shape(d, static_cast<int>(std::lround(window_side)));
        if (cfg.raw.contains("shape")) shape = cfg.raw.at("shape").get<std::vector<int>>();
        const double cw =
            cfg.clamp_width > 0 ? cfg.clamp_width : cfg.graph.interaction_range;
        const double range = std::max(cw, std::sqrt(static_cast<double>(d)) + 0.8);
        if (cfg.graph.jitter > 0)
            return jittered_fixture(shape, cfg.graph.jitter, seed, range);
        return lattice_fixture(shape, range);
    }
    GraphParams p = cfg.graph;
    p.seed = seed;
    const double cw = cfg.clamp_width > 0 ? cfg.clamp_width : p.interaction_range;
    const double S = std::max(4.0 * p.interaction_range, window_side + 2.0 * (cw + 1.5));
    return generate_graph(p, Box::cube(d, 0.0, S));
}

Box study_domain(const StudyConfig& cfg, const ExtendedGraph& g, double window_side) {
    if (cfg.lattice_fixture) return g.window;
    const int d = g.dim();
    Box b;
    b.lo = Vec(d);
    b.hi = Vec(d);
    for (int i = 0; i < d; ++i) {
        const double margin = 0.5 * ((g.window.hi[i] - g.window.lo[i]) - window_side);
        b.lo[i] = g.window.lo[i] + margin;
        b.hi[i] = b.lo[i] + window_side;
    }
    return b;
}

namespace {

struct Checkpoint {
    std::string path;
    std::uint64_t hash = 0;
    std::map<int, StudyRecord> done;
    std::mutex mu;

    void load() {
        std::ifstream in(path);
        if (!in) return;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || j.value("hash", 0ULL) != hash) continue;
            StudyRecord r;
            r.point_id = j.at("id").get<int>();
            const auto& rec = j.at("record");
            r.inputs = rec.value("inputs", nlohmann::json::object());
            r.value = rec.value("value", 0.0);
            r.stderr_value = rec.value("stderr", 0.0);
            r.ok = rec.value("ok", true);
            r.error = rec.value("error", "");
            r.diagnostics = rec.value("diagnostics", nlohmann::json::object());
            done[r.point_id] = std::move(r);
        }
    }

    void append(const StudyRecord& r) {
        std::lock_guard<std::mutex> lock(mu);
        std::ofstream out(path, std::ios::app);
        nlohmann::json j{{"hash", hash},
                         {"id", r.point_id},
                         {"record",
                          {{"inputs", r.inputs},
                           {"value", r.value},
                           {"stderr", r.stderr_value},
                           {"ok", r.ok},
                           {"error", r.error},
                           {"diagnostics", r.diagnostics}}}};
        out << j.dump() << "\n";
        done[r.point_id] = r;
    }

    bool has(int id) {
        std::lock_guard<std::mutex> lock(mu);
        return done.count(id) > 0;
    }
};

MinimizeOptions minimize_options(const StudyConfig& cfg) {
    MinimizeOptions mo;
    mo.restarts = cfg.budgets.value("restarts", 4);
    mo.sigma_init = cfg.budgets.value("sigma_init", 0.1);
    mo.tolerance = cfg.budgets.value("tolerance", -1.0);
    mo.max_iterations = cfg.budgets.value("max_iterations", 100000);
    return mo;
}

TiParams ti_params(const StudyConfig& cfg) {
    TiParams ti;
    ti.nodes = cfg.budgets.value("ti_nodes", 8);
    ti.chain.sweeps = cfg.budgets.value("chain_sweeps", 20000);
    ti.chain.burnin = cfg.budgets.value("chain_burnin", 3000);
    ti.chain.kernel = cfg.budgets.value("chain_kernel", std::string("langevin")) == "rwm"
                          ? ChainKernel::RandomWalk
                          : ChainKernel::Langevin;
    ti.chain.init_step = cfg.budgets.value("chain_step", 0.05);
    ti.min_ess = cfg.budgets.value("min_ess", 100.0);
    return ti;
}

using PointRunner = std::function<StudyRecord(int)>;

void run_points(const StudyConfig& cfg, int count, const PointRunner& runner,
                StudyResult& result, std::atomic<bool>* interrupted) {
    Checkpoint cp;
    cp.path = cfg.output_path + ".checkpoint.jsonl";
    cp.hash = config_hash(cfg);
    cp.load();

    std::vector<StudyRecord> records(static_cast<std::size_t>(count));
    std::vector<char> have(static_cast<std::size_t>(count), 0);
    {
        std::lock_guard<std::mutex> lock(cp.mu);
        for (auto& [id, rec] : cp.done)
            if (id >= 0 && id < count) {
                records[static_cast<std::size_t>(id)] = rec;
                have[static_cast<std::size_t>(id)] = 1;
            }
    }

    parallel_for(
        count,
        [&](int i) {
            if (have[static_cast<std::size_t>(i)]) return;
            StudyRecord r;
            try {
                r = runner(i);
            } catch (const std::exception& e) {
                r.ok = false;
                r.error = e.what();
            }
            r.point_id = i;
            cp.append(r);
            records[static_cast<std::size_t>(i)] = r;
            have[static_cast<std::size_t>(i)] = 1;
        },
        interrupted);

    for (int i = 0; i < count; ++i)
        if (have[static_cast<std::size_t>(i)])
            result.records.push_back(records[static_cast<std::size_t>(i)]);
}

// ---------------------------------------------------------------- phantom
void run_phantom(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    const double beta = cfg.budgets.value("beta", 1.0);
    const double tol = cfg.budgets.value("tolerance", 1e-10);
    if (cfg.lambdas.empty()) throw GridTooSmall("phantom study needs lambdas");
    if (cfg.windows.empty()) throw GridTooSmall("phantom study needs windows");
    PairPotential pair = pair_from_json(cfg.pair);
    if (pair.kind != PairKind::Quadratic)
        throw std::invalid_argument("phantom study requires the quadratic model");

    struct Point {
        double window;
        int lambda_idx;
    };
    std::vector<Point> pts;
    for (double w : cfg.windows)
        for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
            pts.push_back({w, static_cast<int>(li)});

    run_points(
        cfg, static_cast<int>(pts.size()),
        [&](int i) {
            const auto [w, li] = pts[static_cast<std::size_t>(i)];
            const Eigen::MatrixXd& lam = cfg.lambdas[static_cast<std::size_t>(li)];
            ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
            const Box dom = study_domain(cfg, g, w);
            const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(lam.rows(), lam.cols());
            QuadraticModel mA(g, dom, pair, linear_datum(lam), cfg.clamp_width);
            QuadraticModel m0(g, dom, pair, linear_datum(zero), cfg.clamp_width);
            const double lhs =
                gaussian_free_energy(mA, beta).value - gaussian_free_energy(m0, beta).value;
            const double rhs =
                (mA.min_energy() - m0.min_energy()) / mA.domain_volume();
            StudyRecord r;
            r.inputs = {{"window", w}, {"lambda", matrix_to_json(lam)}, {"beta", beta}};
            r.value = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
            r.diagnostics = {{"lhs", lhs}, {"rhs", rhs}, {"free_dofs", mA.free_dofs()}};
            return r;
        },
        res, intr);

    double worst = 0.0;
    bool all_ok = !res.records.empty();
    for (const auto& r : res.records) {
        if (!r.ok) all_ok = false;
        worst = std::max(worst, r.value);
    }
    res.summary = {{"worst_rel_diff", worst}, {"tolerance", tol}};
    res.verdict = all_ok && worst <= tol;
}

// ----------------------------------------------------------- w-inf sweep
void run_w_inf(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.windows.size() < 3)
        throw GridTooSmall("w-inf-convergence needs at least 3 window sizes");
    if (cfg.lambdas.empty()) throw GridTooSmall("w-inf-convergence needs lambdas");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    growth_check(pair, vol);

    struct Point {
        int lambda_idx;
        double window;
        std::uint64_t seed;
    };
    std::vector<Point> pts;
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
        for (double w : cfg.windows)
            for (std::uint64_t s : cfg.seeds) pts.push_back({static_cast<int>(li), w, s});

    const MinimizeOptions mo = minimize_options(cfg);
    run_points(
        cfg, static_cast<int>(pts.size()),
        [&](int i) {
            const auto [li, w, seed] = pts[static_cast<std::size_t>(i)];
            ExtendedGraph g = study_graph(cfg, w, seed);
            CellProblem prob;
            prob.graph = &g;
            prob.micro = study_domain(cfg, g, w);
            prob.lambda = cfg.lambdas[static_cast<std::size_t>(li)];
            prob.pair = pair;
            prob.vol = vol;
            prob.clamp_width = cfg.clamp_width;
            MinimizeOptions m = mo;
            m.seed = seed;
            const MinimizationResult r = minimize_cell(prob, m);
            StudyRecord rec;
            rec.inputs = {{"lambda_idx", li}, {"window", w}, {"seed", seed}};
            rec.value = r.density;
            rec.diagnostics = {{"restart_spread", r.restart_spread},
                               {"grad_inf", r.grad_inf},
                               {"iterations", r.iterations},
                               {"competitor", competitor_density(prob)}};
            return rec;
        },
        res, intr);

    // per-lambda extrapolation and Cauchy gaps
    nlohmann::json per_lambda = nlohmann::json::array();
    bool verdict = true;
    const double cauchy_tol = cfg.budgets.value("cauchy_tol", 0.02);
    const double spread_tol = cfg.budgets.value("spread_tol", 0.01);
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        std::vector<ScalingPoint> fit_pts;
        nlohmann::json rows = nlohmann::json::array();
        double worst_spread = 0.0;
        std::vector<double> means;
        for (double w : cfg.windows) {
            std::vector<double> vals;
            for (const auto& r : res.records) {
                if (!r.ok) continue;
                if (r.inputs.value("lambda_idx", -1) != static_cast<int>(li)) continue;
                if (r.inputs.value("window", 0.0) != w) continue;
                vals.push_back(r.value);
                worst_spread =
                    std::max(worst_spread, r.diagnostics.value("restart_spread", 0.0));
            }
            if (vals.empty()) {
                verdict = false;
                continue;
            }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            const double se =
                vals.size() > 1 ? std::sqrt(var / (static_cast<double>(vals.size()) *
                                                   (static_cast<double>(vals.size()) - 1)))
                                : 0.0;
            fit_pts.push_back({w, mean, se > 0 ? se : 1e-12});
            rows.push_back({{"window", w}, {"mean", mean}, {"stderr", se}});
            means.push_back(mean);
        }
        double cauchy = 0.0;
        if (means.size() >= 2) {
            cauchy = std::abs(means[means.size() - 1] - means[means.size() - 2]) /
                     std::max(std::abs(means.back()), 1e-300);
        }
        nlohmann::json entry{{"lambda_idx", li},
                             {"windows", rows},
                             {"cauchy_gap", cauchy},
                             {"restart_spread", worst_spread}};
        if (fit_pts.size() >= 4) {
            const ScalingFit fit = fit_scaling(fit_pts, ScalingModel::InverseL);
            entry["extrapolated"] = fit.a;
            entry["fit_residual"] = fit.residual;
        } else if (fit_pts.size() == 3) {
            // two-parameter fit through three points
            const ScalingFit fit = fit_scaling(
                {fit_pts[0], fit_pts[1], fit_pts[2], fit_pts[2]}, ScalingModel::InverseL);
            entry["extrapolated"] = fit.a;
            entry["fit_residual"] = fit.residual;
        }
        verdict = verdict && cauchy <= cauchy_tol && worst_spread <= spread_tol;
        per_lambda.push_back(std::move(entry));
    }
    res.summary = {{"per_lambda", per_lambda},
                   {"cauchy_tol", cauchy_tol},
                   {"spread_tol", spread_tol}};
    res.verdict = verdict && !res.records.empty();
}

// -------------------------------------------------------------- beta gap
void run_beta_gap(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.grid.size() < 4 || cfg.windows.empty())
        throw GridTooSmall("beta-gap needs a beta grid (>=4) and a window");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    const double w = cfg.windows[0];
    const double ratio_factor = cfg.budgets.value("ratio_factor", 3.0);

    GapSeries series;
    ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
    const Box dom = study_domain(cfg, g, w);
    const Eigen::MatrixXd lam = cfg.lambdas.empty()
                                    ? Eigen::MatrixXd::Identity(g.dim(), g.dim()).eval()
                                    : cfg.lambdas[0];
    if (pair.kind == PairKind::Quadratic) {
        QuadraticModel model(g, dom, pair, linear_datum(lam), cfg.clamp_width);
        series = gap_series_quadratic(model, cfg.grid);
    } else {
        TiParams ti = ti_params(cfg);
        ti.chain.seed = cfg.seeds[0];
        series = gap_series_mcmc(g, dom, lam, cfg.grid, pair, vol, ti, minimize_options(cfg),
                                 cfg.clamp_width);
    }
    (void)intr;
    for (std::size_t i = 0; i < series.points.size(); ++i) {
        const auto& p = series.points[i];
        StudyRecord r;
        r.point_id = static_cast<int>(i);
        r.inputs = {{"beta", p.beta}, {"window", w}};
        r.value = p.gap;
        r.stderr_value = p.stderr_value;
        r.diagnostics = {{"free_energy", p.free_energy},
                         {"ratio", p.ratio},
                         {"w_inf", series.w_inf_density}};
        res.records.push_back(r);
    }
    res.summary = {{"decreasing_abs", series.decreasing_abs},
                   {"ratio_spread", series.ratio_spread},
                   {"ratio_factor", ratio_factor},
                   {"w_inf", series.w_inf_density}};
    res.verdict = series.decreasing_abs && series.ratio_spread <= ratio_factor;
}

// --------------------------------------------------------- growth sandwich
void run_growth_sandwich(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.grid.empty() || cfg.windows.empty())
        throw GridTooSmall("growth-sandwich needs |Lambda| grid and a window");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    const double w = cfg.windows[0];
    const double p_exp = pair.growth_exponent;
    const MinimizeOptions mo = minimize_options(cfg);

    run_points(
        cfg, static_cast<int>(cfg.grid.size()),
        [&](int i) {
            const double mag = cfg.grid[static_cast<std::size_t>(i)];
            ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
            const int d = g.dim();
            const Eigen::MatrixXd lam =
                (mag / std::sqrt(static_cast<double>(d))) *
                Eigen::MatrixXd::Identity(d, d);
            CellProblem prob;
            prob.graph = &g;
            prob.micro = study_domain(cfg, g, w);
            prob.lambda = lam;
            prob.pair = pair;
            prob.vol = vol;
            prob.clamp_width = cfg.clamp_width;
            MinimizeOptions m = mo;
            m.seed = cfg.seeds[0];
            const MinimizationResult r = minimize_cell(prob, m);
            StudyRecord rec;
            rec.inputs = {{"lambda_norm", mag}, {"window", w}};
            rec.value = r.density;
            rec.diagnostics = {{"restart_spread", r.restart_spread}};
            return rec;
        },
        res, intr);

    // envelope constants: W <= C(1 + |L|^p) and c|L|^p - C <= W
    double c_upper = 0.0;
    double min_w = std::numeric_limits<double>::infinity();
    bool all_ok = !res.records.empty();
    for (const auto& r : res.records) {
        if (!r.ok) {
            all_ok = false;
            continue;
        }
        const double mag = r.inputs.value("lambda_norm", 1.0);
        c_upper = std::max(c_upper, r.value / (1.0 + std::pow(mag, p_exp)));
        min_w = std::min(min_w, r.value);
    }
    const double c_shift = std::max(0.0, -min_w) + 1e-12;
    double c_lower = std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        if (!r.ok) continue;
        const double mag = r.inputs.value("lambda_norm", 1.0);
        c_lower = std::min(c_lower, (r.value + c_shift) / std::pow(mag, p_exp));
    }
    bool bounds_hold = all_ok && c_lower > 0;
    for (const auto& r : res.records) {
        if (!r.ok) continue;
        const double mag = r.inputs.value("lambda_norm", 1.0);
        if (c_lower * std::pow(mag, p_exp) - c_shift > r.value + 1e-9) bounds_hold = false;
        if (r.value > c_upper * (1.0 + std::pow(mag, p_exp)) + 1e-9) bounds_hold = false;
    }
    res.summary = {{"p", p_exp},
                   {"c_lower", c_lower},
                   {"shift", c_shift},
                   {"c_upper", c_upper}};
    res.verdict = bounds_hold;
}

// ---------------------------------------------------------------- rank one
void run_rank_one(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.grid.size() < 3 || cfg.windows.empty() || cfg.lambdas.empty())
        throw GridTooSmall("rank-one needs a t grid (>=3), a window and a base lambda");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    const double w = cfg.windows[0];
    const Eigen::MatrixXd lam0 = cfg.lambdas[0];
    std::vector<double> avec = cfg.budgets.value("a", std::vector<double>{1.0, 0.0});
    std::vector<double> nvec = cfg.budgets.value("n", std::vector<double>{0.0, 1.0});
    Eigen::VectorXd a = Eigen::Map<Eigen::VectorXd>(avec.data(), avec.size());
    Eigen::VectorXd nd = Eigen::Map<Eigen::VectorXd>(nvec.data(), nvec.size());
    const Eigen::MatrixXd rank1 = a * nd.transpose();
    const MinimizeOptions mo = minimize_options(cfg);

    run_points(
        cfg, static_cast<int>(cfg.grid.size()),
        [&](int i) {
            const double t = cfg.grid[static_cast<std::size_t>(i)];
            const Eigen::MatrixXd lam = lam0 + t * rank1;
            std::vector<double> vals;
            for (std::uint64_t seed : cfg.seeds) {
                ExtendedGraph g = study_graph(cfg, w, seed);
                CellProblem prob;
                prob.graph = &g;
                prob.micro = study_domain(cfg, g, w);
                prob.lambda = lam;
                prob.pair = pair;
                prob.vol = vol;
                prob.clamp_width = cfg.clamp_width;
                MinimizeOptions m = mo;
                m.seed = seed;
                vals.push_back(minimize_cell(prob, m).density);
            }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            const double se =
                vals.size() > 1 ? std::sqrt(var / (static_cast<double>(vals.size()) *
                                                   (static_cast<double>(vals.size()) - 1)))
                                : 0.0;
            StudyRecord rec;
            rec.inputs = {{"t", t}};
            rec.value = mean;
            rec.stderr_value = se;
            return rec;
        },
        res, intr);

    // midpoint defects over consecutive triples
    std::vector<StudyRecord> sorted = res.records;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        return x.inputs.value("t", 0.0) < y.inputs.value("t", 0.0);
    });
    nlohmann::json defects = nlohmann::json::array();
    bool verdict = !sorted.empty();
    for (std::size_t i = 0; i + 2 < sorted.size(); ++i) {
        if (!sorted[i].ok || !sorted[i + 1].ok || !sorted[i + 2].ok) {
            verdict = false;
            continue;
        }
        const double t1 = sorted[i].inputs.value("t", 0.0);
        const double t2 = sorted[i + 1].inputs.value("t", 0.0);
        const double t3 = sorted[i + 2].inputs.value("t", 0.0);
        if (std::abs(0.5 * (t1 + t3) - t2) > 1e-9 * (std::abs(t3 - t1) + 1e-12)) continue;
        const double defect =
            0.5 * (sorted[i].value + sorted[i + 2].value) - sorted[i + 1].value;
        const double sigma = std::sqrt(
            0.25 * sorted[i].stderr_value * sorted[i].stderr_value +
            sorted[i + 1].stderr_value * sorted[i + 1].stderr_value +
            0.25 * sorted[i + 2].stderr_value * sorted[i + 2].stderr_value);
        // statistical floor: solver tolerance keeps exact-quadratic defects
        // from failing on roundoff
        const double floor_tol =
            cfg.budgets.value("defect_floor", 1e-8) *
            std::max(1.0, std::abs(sorted[i + 1].value));
        defects.push_back({{"t_mid", t2}, {"defect", defect}, {"sigma", sigma}});
        if (defect < -(2.0 * sigma + floor_tol)) verdict = false;
    }
    res.summary = {{"defects", defects}};
    res.verdict = verdict;
}

// ------------------------------------------------------------ subadditivity
void run_subadditivity(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.windows.empty() || cfg.lambdas.empty())
        throw GridTooSmall("subadditivity needs a window and lambdas");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    const double w = cfg.windows[0];
    std::vector<std::vector<int>> partitions;
    if (cfg.budgets.contains("partitions"))
        partitions = cfg.budgets.at("partitions").get<std::vector<std::vector<int>>>();
    else
        partitions = {{2, 2}, {4, 1}};
    const MinimizeOptions mo = minimize_options(cfg);
    const double slack_tol = cfg.budgets.value("slack_tol", 1e-8);

    struct Point {
        int lambda_idx;
        int partition_idx;
    };
    std::vector<Point> pts;
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
        for (std::size_t pi = 0; pi < partitions.size(); ++pi)
            pts.push_back({static_cast<int>(li), static_cast<int>(pi)});

    run_points(
        cfg, static_cast<int>(pts.size()),
        [&](int i) {
            const auto [li, pi] = pts[static_cast<std::size_t>(i)];
            ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
            const Box whole = study_domain(cfg, g, w);
            const std::vector<Box> parts =
                partition_box(whole, partitions[static_cast<std::size_t>(pi)]);
            MinimizeOptions m = mo;
            m.seed = cfg.seeds[0];
            const SubadditivityReport rep =
                subadditivity_check(g, whole, parts, cfg.lambdas[static_cast<std::size_t>(li)],
                                    pair, vol, m, cfg.clamp_width);
            StudyRecord rec;
            rec.inputs = {{"lambda_idx", li},
                          {"partition", partitions[static_cast<std::size_t>(pi)]}};
            rec.value = rep.slack;
            rec.diagnostics = {{"sigma_whole", rep.sigma_whole},
                               {"sigma_parts", rep.sigma_parts},
                               {"surface_term", rep.surface_term},
                               {"c_lambda", rep.c_lambda}};
            return rec;
        },
        res, intr);

    bool verdict = !res.records.empty();
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : res.records) {
        if (!r.ok) {
            verdict = false;
            continue;
        }
        const double scale = std::abs(r.diagnostics.value("sigma_whole", 0.0)) +
                             r.diagnostics.value("surface_term", 0.0) + 1.0;
        worst = std::min(worst, r.value / scale);
        if (r.value < -slack_tol * scale) verdict = false;
    }
    res.summary = {{"worst_relative_slack", worst}, {"slack_tol", slack_tol}};
    res.verdict = verdict;
}

// ------------------------------------------------------------ concentration
void run_concentration(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.grid.size() < 2 || cfg.windows.empty())
        throw GridTooSmall("concentration needs a beta grid (>=2) and a window");
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);
    const double w = cfg.windows[0];
    const double p = cfg.budgets.value("p", 2.0);
    const MinimizeOptions mo = minimize_options(cfg);

    run_points(
        cfg, static_cast<int>(cfg.grid.size()),
        [&](int i) {
            const double beta = cfg.grid[static_cast<std::size_t>(i)];
            ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
            const Box dom_box = study_domain(cfg, g, w);
            const Eigen::MatrixXd lam =
                cfg.lambdas.empty() ? Eigen::MatrixXd::Identity(g.dim(), g.dim()).eval()
                                    : cfg.lambdas[0];
            CellProblem prob;
            prob.graph = &g;
            prob.micro = dom_box;
            prob.lambda = lam;
            prob.pair = pair;
            prob.vol = vol;
            prob.clamp_width = cfg.clamp_width;
            MinimizeOptions m = mo;
            m.seed = cfg.seeds[0];
            const MinimizationResult min_res = minimize_cell(prob, m);

            ChainParams chain;
            chain.sweeps = cfg.budgets.value("chain_sweeps", 20000);
            chain.burnin = cfg.budgets.value("chain_burnin", 3000);
            chain.thin = cfg.budgets.value("chain_thin", 10);
            chain.seed = cfg.seeds[0];
            chain.stream = static_cast<std::uint64_t>(i) + 1;
            const GibbsRun run =
                sample_gibbs(g, dom_box, BoundaryMode::Clamped, linear_datum(lam), beta, pair,
                             vol, chain, static_cast<int>(lam.rows()), cfg.clamp_width);
            CellDomain dom = build_domain(g, dom_box, BoundaryMode::Clamped,
                                          static_cast<int>(lam.rows()), cfg.clamp_width);
            const double eps = 1.0 / w;
            const ConcentrationSummary cs =
                concentration_diagnostic(dom, run.samples, min_res.field, p, eps);
            StudyRecord rec;
            rec.inputs = {{"beta", beta}, {"window", w}};
            rec.value = cs.q95;
            rec.stderr_value = cs.q95_se;
            rec.diagnostics = {{"median", cs.median},
                               {"median_se", cs.median_se},
                               {"acceptance", run.acceptance},
                               {"samples", cs.count}};
            return rec;
        },
        res, intr);

    std::vector<StudyRecord> sorted = res.records;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
        return x.inputs.value("beta", 0.0) < y.inputs.value("beta", 0.0);
    });
    bool verdict = sorted.size() == cfg.grid.size();
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (!sorted[i].ok || !sorted[i - 1].ok) {
            verdict = false;
            continue;
        }
        const double allowance =
            2.0 * (sorted[i].stderr_value + sorted[i - 1].stderr_value);
        if (sorted[i].value > sorted[i - 1].value + allowance) verdict = false;
    }
    res.summary = {{"p", p}};
    res.verdict = verdict;
}

// ---------------------------------------------------------------- two temp
void run_two_temp(const StudyConfig& cfg, StudyResult& res, std::atomic<bool>* intr) {
    if (cfg.grid.size() < 3) throw GridTooSmall("two-temp needs an N1 grid (>=3)");
    for (double n1 : cfg.grid)
        if (n1 < 4.0) throw GridTooSmall("two-temp N1 grid values must be >= 4");
    if (cfg.windows.empty()) throw GridTooSmall("two-temp needs a window");
    const double n0 = cfg.budgets.value("n0", 100.0);
    const double beta0 = cfg.budgets.value("beta0", 1.0);
    const double w = cfg.windows[0];
    PairPotential pair = pair_from_json(cfg.pair);
    VolumetricPotential vol = vol_from_json(cfg.vol);

    ExtendedGraph g = study_graph(cfg, w, cfg.seeds[0]);
    const Box dom = study_domain(cfg, g, w);
    const int d = g.dim();
    const Eigen::MatrixXd lam = cfg.lambdas.empty()
                                    ? Eigen::MatrixXd::Identity(d, d).eval()
                                    : cfg.lambdas[0];

    // (a) exact identity on a quadratic stand-in
    const Eigen::MatrixXd A_tilde =
        cfg.budgets.contains("A_tilde") ? matrix_from_json(cfg.budgets.at("A_tilde"))
                                        : Eigen::MatrixXd::Identity(d, d).eval();
    const TwoTempIdentity exact =
        two_temperature_identity_exact(g, dom, A_tilde, lam, n0, beta0, cfg.clamp_width);

    // (a') TI identity on the configured potential
    TiParams ti = ti_params(cfg);
    ti.chain.seed = cfg.seeds[0];
    const TwoTempIdentity via_ti = two_temperature_identity_ti(
        g, dom, lam, n0, beta0, pair, vol, ti, cfg.clamp_width);

    // (b) scaling in N1
    const GapSeries scaling = two_temperature_scaling(g, dom, lam, cfg.grid, pair, vol, ti,
                                                      minimize_options(cfg), cfg.clamp_width);
    for (std::size_t i = 0; i < scaling.points.size(); ++i) {
        StudyRecord r;
        r.point_id = static_cast<int>(i);
        r.inputs = {{"n1", scaling.points[i].beta}};
        r.value = scaling.points[i].gap;
        r.stderr_value = scaling.points[i].stderr_value;
        r.diagnostics = {{"ratio", scaling.points[i].ratio}};
        res.records.push_back(r);
    }
    (void)intr;

    const double exact_tol = cfg.budgets.value("exact_tol", 1e-12);
    const double ratio_factor = cfg.budgets.value("ratio_factor", 10.0);
    const bool ti_ok = std::abs(via_ti.lhs - via_ti.rhs) <= 3.0 * via_ti.sigma + 1e-12;
    res.summary = {{"exact_lhs", exact.lhs},
                   {"exact_rhs", exact.rhs},
                   {"exact_rel_diff", exact.rel_diff},
                   {"ti_lhs", via_ti.lhs},
                   {"ti_rhs", via_ti.rhs},
                   {"ti_sigma", via_ti.sigma},
                   {"ratio_spread", scaling.ratio_spread},
                   {"n0", n0},
                   {"beta0", beta0}};
    res.verdict =
        exact.rel_diff <= exact_tol && ti_ok && scaling.ratio_spread <= ratio_factor;
}

}  // namespace

PoincareReport poincare_probe(const StudyConfig& cfg) {
    if (cfg.windows.size() < 2) throw GridTooSmall("poincare probe needs a window sweep");
    PoincareReport rep;
    const double p = cfg.budgets.value("p", 2.0);
    const int bumps = cfg.budgets.value("bumps", 6);
    for (double w : cfg.windows) {
        double max_ratio = 0.0;
        for (std::uint64_t seed : cfg.seeds) {
            ExtendedGraph g = study_graph(cfg, w, seed);
            const Box dom_box = study_domain(cfg, g, w);
            CellDomain dom = build_domain(g, dom_box, BoundaryMode::Soft, 1, cfg.clamp_width);
            const double eps = 1.0 / w;
            for (int b = 0; b < bumps; ++b) {
                // random low-mode bump, zero near the boundary band; the bump
                // family is keyed by (seed, bump) only so every window in the
                // sweep evaluates the same test functions
                Rng rng(seed, 0xB0B0 + static_cast<std::uint64_t>(b));
                const int d = g.dim();
                std::vector<int> modes(d);
                std::vector<double> amps(3);
                for (int i = 0; i < d; ++i)
                    modes[i] = 1 + static_cast<int>(rng.uniform_index(3));
                for (auto& a : amps) a = rng.uniform(0.5, 1.0);
                Eigen::VectorXd u(dom.dofs());
                for (int l = 0; l < dom.vertex_count(); ++l) {
                    const Vec& x = g.positions[dom.vertices[l]];
                    double v = amps[0];
                    for (int i = 0; i < d; ++i) {
                        const double t =
                            (x[i] - dom_box.lo[i]) / (dom_box.hi[i] - dom_box.lo[i]);
                        const double s = std::sin(std::numbers::pi * modes[i] *
                                                  std::clamp(t, 0.0, 1.0));
                        v *= s * s;
                    }
                    u[l] = v / eps;  // macro bump of unit amplitude
                }
                const DiscreteNorms norms = discrete_norms(dom, u, p);
                const double denom = (std::pow(norms.edge, p) + std::pow(eps, 1.0 - d)) /
                                     std::pow(eps, p);
                if (denom > 0)
                    max_ratio = std::max(max_ratio, std::pow(norms.vertex, p) / denom);
            }
        }
        rep.window_sides.push_back(w);
        rep.max_ratios.push_back(max_ratio);
    }
    double lo = 1e300, hi = 0.0;
    for (double r : rep.max_ratios) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    rep.spread = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    return rep;
}

StudyResult run_study(const StudyConfig& cfg, std::atomic<bool>* interrupted) {
    StudyResult res;
    res.kind = cfg.kind;
    res.hash = config_hash(cfg);
    res.version = POLYHOM_VERSION;
    // the growth hypotheses gate every estimator: a potential without a
    // finite two-sided sandwich fails here, not deep inside a sweep
    if (cfg.kind != "poincare")
        growth_check(pair_from_json(cfg.pair), vol_from_json(cfg.vol));
    if (cfg.kind == "phantom")
        run_phantom(cfg, res, interrupted);
    else if (cfg.kind == "w-inf-convergence")
        run_w_inf(cfg, res, interrupted);
    else if (cfg.kind == "beta-gap")
        run_beta_gap(cfg, res, interrupted);
    else if (cfg.kind == "growth-sandwich")
        run_growth_sandwich(cfg, res, interrupted);
    else if (cfg.kind == "rank-one")
        run_rank_one(cfg, res, interrupted);
    else if (cfg.kind == "subadditivity")
        run_subadditivity(cfg, res, interrupted);
    else if (cfg.kind == "concentration")
        run_concentration(cfg, res, interrupted);
    else if (cfg.kind == "two-temp")
        run_two_temp(cfg, res, interrupted);
    else if (cfg.kind == "poincare") {
        const PoincareReport rep = poincare_probe(cfg);
        for (std::size_t i = 0; i < rep.window_sides.size(); ++i) {
            StudyRecord r;
            r.point_id = static_cast<int>(i);
            r.inputs = {{"window", rep.window_sides[i]}};
            r.value = rep.max_ratios[i];
            res.records.push_back(r);
        }
        const double factor = cfg.budgets.value("spread_factor", 2.0);
        res.summary = {{"spread", rep.spread}, {"spread_factor", factor}};
        res.verdict = rep.spread <= factor;
    } else {
        throw std::invalid_argument("unknown study kind: " + cfg.kind);
    }
    return res;
}

std::string result_csv(const StudyResult& r) {
    // stable column order: point_id, sorted input keys, value, stderr, ok, error
    std::vector<std::string> keys;
    for (const auto& rec : r.records)
        for (auto it = rec.inputs.begin(); it != rec.inputs.end(); ++it)
            if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
                keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());

    std::ostringstream out;
    out.precision(17);
    out << "point_id";
    for (const auto& k : keys) out << "," << k;
    out << ",value,stderr,ok,error\n";
    std::vector<const StudyRecord*> sorted;
    for (const auto& rec : r.records) sorted.push_back(&rec);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->point_id < b->point_id; });
    for (const auto* rec : sorted) {
        out << rec->point_id;
        for (const auto& k : keys) {
            out << ",";
            if (rec->inputs.contains(k)) {
                const auto& v = rec->inputs.at(k);
                if (v.is_number())
                    out << v.get<double>();
                else
                    out << '"' << v.dump() << '"';
            }
        }
        out << "," << rec->value << "," << rec->stderr_value << "," << (rec->ok ? 1 : 0)
            << "," << rec->error << "\n";
    }
    return out.str();
}

void write_result_files(const StudyResult& r, const std::string& output_path) {
    {
        std::ofstream csv(output_path + ".csv");
        csv << result_csv(r);
    }
    nlohmann::json j{{"kind", r.kind},
                     {"config_hash", r.hash},
                     {"version", r.version},
                     {"summary", r.summary},
                     {"verdict", r.verdict},
                     {"points", r.records.size()}};
    std::ofstream js(output_path + ".summary.json");
    js << j.dump(2) << "\n";
}

}  // namespace polyhom
