// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
// Each criterion pins its own tolerances; estimator budgets are sized so the
// whole suite runs on a laptop in minutes.

#include "fixtures.hpp"
#include "polyhom/finite_temp.hpp"
#include "polyhom/studies.hpp"

#include <chrono>
#include <filesystem>
#include <cstdio>
#include <iostream>
#include <numbers>

using namespace polyhom;
using nlohmann::json;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] %2d. %-28s %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

json kuhn_grun_pair(double prefactor = 1.0) {
    return {{"kind", "kuhn-grun-p10"},
            {"mean_monomers", 100.0},
            {"monomer_length", 0.1},
            {"prefactor", prefactor}};
}

json generated_graph_block(double c0 = 6.05) {
    return {{"dimension", 2},      {"ensemble", "jittered-lattice"},
            {"jitter", 0.2},       {"hardcore_radius", 0.5},
            {"covering_radius", 1.0}, {"interaction_range", c0},
            {"monomer_length", 0.1}};
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// 1. Phantom identity on quadratic fixtures, windows 8-32, 5 data including
//    rank-one perturbations, relative tolerance 1e-10.
void criterion_phantom() {
    Timer t;
    json cfg{{"kind", "phantom"},
             {"lattice_fixture", true},
             {"graph", {{"dimension", 2}}},
             {"clamp_width", 2.0},
             {"pair", {{"kind", "quadratic"}, {"A", {{1.5, 0.3}, {0.3, 1.0}}}}},
             {"lambdas",
              {{{1.0, 0.0}, {0.0, 1.0}},
               {{1.4, 0.0}, {0.0, 0.7}},
               {{1.0, 0.35}, {0.0, 1.0}},    // I + 0.35 e1 (x) e2
               {{1.25, 0.25}, {0.25, 1.25}}, // I + 0.25 (e1+e2) (x) (e1+e2)
               {{0.8, 0.0}, {0.0, 1.3}}}},
             {"windows", {8.0, 16.0, 24.0, 32.0}},
             {"budgets", {{"beta", 2.0}, {"tolerance", 1e-10}}},
             {"output", "out/acceptance_phantom"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    report(1, "phantom identity", res.verdict,
           "worst rel diff " + fmt(res.summary.value("worst_rel_diff", 1.0)) + " <= 1e-10",
           t.seconds());
}

// 2. TI vs exact Gaussian on a quadratic target at twice the reference
//    stiffness: 20 seeds, coverage >= 95% at 3 sigma, stderr <= 1% of value.
void criterion_ti_oracle() {
    Timer t;
    const int n_seeds = 20;
    std::vector<int> covered(n_seeds, 0), tight(n_seeds, 0);
    std::vector<double> values(n_seeds, 0.0);
    parallel_for(n_seeds, [&](int s) {
        ExtendedGraph g = testfix::jittered_fixture(9, 0.15, 100 + s);
        Eigen::MatrixXd lam(2, 2);
        lam << 1.2, 0.1, 0.0, 0.9;
        PairPotential target = PairPotential::quadratic(2.0 * Eigen::MatrixXd::Identity(2, 2));
        QuadraticModel oracle(g, g.window, target, linear_datum(lam), 1.4);
        const double beta = 1.0;
        const double exact = gaussian_free_energy(oracle, beta).value;
        TiParams ti;
        ti.nodes = 8;
        ti.chain.sweeps = 24000;
        ti.chain.burnin = 3000;
        ti.chain.seed = 1000 + static_cast<std::uint64_t>(s);
        ti.c_ref = 1.0;  // target is exactly twice this
        const FreeEnergyEstimate est = free_energy_ti(g, g.window, lam, beta, target,
                                                      VolumetricPotential::none(), ti, 1.4);
        covered[s] = std::abs(est.value - exact) <= 3.0 * est.stderr_value ? 1 : 0;
        tight[s] = est.stderr_value <= 0.01 * std::abs(est.value) ? 1 : 0;
        values[s] = est.value;
    });
    int cov = 0, tgt = 0;
    for (int s = 0; s < n_seeds; ++s) {
        cov += covered[s];
        tgt += tight[s];
    }
    const bool pass = cov >= 19 && tgt == n_seeds;
    report(2, "TI-oracle equivalence", pass,
           "coverage " + std::to_string(cov) + "/20 at 3 sigma, stderr<=1%: " +
               std::to_string(tgt) + "/20",
           t.seconds());
}

// 3. Analytic gradient vs central differences (h = 1e-5), volumetric term
//    included, 50 random configurations, max relative error <= 1e-6.
void criterion_gradient() {
    Timer t;
    GraphParams p;
    p.dimension = 2;
    p.jitter = 0.2;
    p.hardcore_radius = 0.5;
    p.covering_radius = 1.0;
    p.interaction_range = 7.0;
    p.seed = 42;
    p.volumetric_fraction = 0.6;
    ExtendedGraph g = generate_graph(p, Box::cube(2, 0.0, 28.0));
    Box dom_box;
    dom_box.lo = Vec::Constant(2, 5.0);
    dom_box.hi = Vec::Constant(2, 23.0);
    CellDomain dom = build_domain(g, dom_box, BoundaryMode::Clamped, 2, 3.0);
    PairPotential pair = PairPotential::kuhn_grun_p10(100.0, 0.1);
    VolumetricPotential vol = VolumetricPotential::convex_well(0.8, 5.0);
    Eigen::MatrixXd lam(2, 2);
    lam << 1.15, 0.1, -0.05, 0.9;

    Rng rng(7);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd u = datum_field(dom, linear_datum(lam));
        for (long i = 0; i < u.size(); ++i) u[i] += 0.1 * rng.normal();
        const Eigen::VectorXd grad = hamiltonian_gradient(dom, u, pair, vol);
        const double scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
        for (int probe = 0; probe < 8; ++probe) {
            const int k = static_cast<int>(
                rng.uniform_index(static_cast<std::uint64_t>(dom.variable_locals.size())));
            const long idx = 2L * dom.variable_locals[k] +
                             static_cast<long>(rng.uniform_index(2));
            const double h = 1e-5;
            Eigen::VectorXd up = u, dn = u;
            up[idx] += h;
            dn[idx] -= h;
            const double fd =
                (hamiltonian(dom, up, pair, vol) - hamiltonian(dom, dn, pair, vol)) / (2 * h);
            worst = std::max(worst, std::abs(grad[idx] - fd) / scale);
        }
    }
    report(3, "gradient correctness", worst <= 1e-6,
           "max rel error " + fmt(worst) + " <= 1e-6 over 50 configs", t.seconds());
}

// 4. W-inf convergence for the kuhn-grun model, Lambda = diag(l, 1/l),
//    l in {1, 1.5, 2}: Cauchy gap of the two largest dyadic windows <= 2%,
//    restart spread <= 1%.
void criterion_w_inf() {
    Timer t;
    json cfg{{"kind", "w-inf-convergence"},
             {"graph", generated_graph_block()},
             {"pair", kuhn_grun_pair()},
             {"lambdas",
              {{{1.0, 0.0}, {0.0, 1.0}},
               {{1.5, 0.0}, {0.0, 1.0 / 1.5}},
               {{2.0, 0.0}, {0.0, 0.5}}}},
             {"windows", {16.0, 32.0, 64.0}},
             {"seeds", {1, 2}},
             {"budgets",
              {{"restarts", 4}, {"cauchy_tol", 0.02}, {"spread_tol", 0.01}}},
             {"output", "out/acceptance_winf"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    double worst_cauchy = 0.0, worst_spread = 0.0;
    for (const auto& entry : res.summary.value("per_lambda", json::array())) {
        worst_cauchy = std::max(worst_cauchy, entry.value("cauchy_gap", 1.0));
        worst_spread = std::max(worst_spread, entry.value("restart_spread", 1.0));
    }
    report(4, "zero-temperature convergence", res.verdict,
           "cauchy gap " + fmt(worst_cauchy) + " <= 0.02, spread " + fmt(worst_spread) +
               " <= 0.01",
           t.seconds());
}

// 5. log(beta)/beta gap scaling: closed form on the quadratic fixture and TI
//    on the physical kuhn-grun fixture, beta in {e, 10, 100, 1000}.
void criterion_gap_scaling() {
    Timer t;
    const std::vector<double> betas = {std::numbers::e, 10.0, 100.0, 1000.0};

    ExtendedGraph gq = testfix::jittered_fixture(10, 0.15, 21);
    Eigen::MatrixXd lam(2, 2);
    lam << 1.2, 0.1, 0.0, 0.9;
    PairPotential quad = PairPotential::quadratic(2.0 * Eigen::MatrixXd::Identity(2, 2));
    QuadraticModel model(gq, gq.window, quad, linear_datum(lam), 1.4);
    const GapSeries exact = gap_series_quadratic(model, betas);

    ExtendedGraph gk = testfix::jittered_fixture(8, 0.15, 23);
    TiParams ti;
    ti.nodes = 8;
    ti.chain.sweeps = 16000;
    ti.chain.burnin = 3000;
    ti.chain.seed = 5;
    MinimizeOptions mo;
    mo.restarts = 4;
    const GapSeries mcmc =
        gap_series_mcmc(gk, gk.window, lam, betas, PairPotential::kuhn_grun_p10(100, 0.1, 100.0),
                        VolumetricPotential::none(), ti, mo, 1.4);

    const bool pass = exact.decreasing_abs && exact.ratio_spread <= 3.0 &&
                      mcmc.decreasing_abs && mcmc.ratio_spread <= 3.0;
    report(5, "log(beta)/beta gap scaling", pass,
           "ratio spreads " + fmt(exact.ratio_spread) + " (exact), " +
               fmt(mcmc.ratio_spread) + " (TI) <= 3; both decreasing",
           t.seconds());
}

// 6. p-growth sandwich for W-inf over |Lambda| in {1..6}, p = 10.
void criterion_growth_sandwich() {
    Timer t;
    json cfg{{"kind", "growth-sandwich"},
             {"graph", generated_graph_block()},
             {"pair", kuhn_grun_pair()},
             {"windows", {24.0}},
             {"grid", {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}},
             {"seeds", {1}},
             {"budgets", {{"restarts", 3}}},
             {"output", "out/acceptance_growth"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    report(6, "p-growth sandwich", res.verdict,
           "c_lower " + fmt(res.summary.value("c_lower", 0.0)) + " > 0, c_upper " +
               fmt(res.summary.value("c_upper", 0.0)),
           t.seconds());
}

// 7. Rank-one midpoint convexity on a 5-point line through the identity.
void criterion_rank_one() {
    Timer t;
    json cfg{{"kind", "rank-one"},
             {"graph", generated_graph_block()},
             {"pair", kuhn_grun_pair()},
             {"lambdas", {{{1.0, 0.0}, {0.0, 1.0}}}},
             {"windows", {24.0}},
             {"grid", {-0.4, -0.2, 0.0, 0.2, 0.4}},
             {"seeds", {1, 2, 3}},
             {"budgets",
              {{"restarts", 3},
               {"a", {1.0, 0.0}},
               {"n", {0.0, 1.0}},
               {"defect_floor", 1e-8}}},
             {"output", "out/acceptance_rankone"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    double min_defect = std::numeric_limits<double>::infinity();
    int n_defects = 0;
    for (const auto& d : res.summary.value("defects", json::array())) {
        min_defect = std::min(min_defect, d.value("defect", 0.0));
        ++n_defects;
    }
    report(7, "rank-one midpoint convexity", res.verdict && n_defects == 3,
           "min defect " + fmt(min_defect) + " >= -2 sigma over " +
               std::to_string(n_defects) + " triples",
           t.seconds());
}

// 8. Graph axioms: 100 jittered-lattice and 20 hardcore-poisson members pass
//    conditions (i)-(v).
void criterion_graph_axioms() {
    Timer t;
    std::vector<int> ok_jit(100, 0), ok_poi(20, 0);
    parallel_for(100, [&](int s) {
        GraphParams p;
        p.dimension = 2;
        p.jitter = 0.2;
        p.hardcore_radius = 0.5;
        p.covering_radius = 1.0;
        p.interaction_range = 7.0;
        p.seed = static_cast<std::uint64_t>(s + 1);
        ExtendedGraph g = generate_graph(p, Box::cube(2, 0.0, 28.0));
        ok_jit[s] = validate_graph(g).pass() ? 1 : 0;
    });
    parallel_for(20, [&](int s) {
        GraphParams p;
        p.dimension = 2;
        p.ensemble = Ensemble::HardcorePoisson;
        p.hardcore_radius = 0.5;
        p.covering_radius = 1.0;
        p.interaction_range = 7.0;
        p.seed = static_cast<std::uint64_t>(s + 1);
        ExtendedGraph g = generate_graph(p, Box::cube(2, 0.0, 28.0));
        ok_poi[s] = validate_graph(g).pass() ? 1 : 0;
    });
    int jit = 0, poi = 0;
    for (int v : ok_jit) jit += v;
    for (int v : ok_poi) poi += v;
    report(8, "graph axioms", jit == 100 && poi == 20,
           "jittered " + std::to_string(jit) + "/100, poisson " + std::to_string(poi) + "/20",
           t.seconds());
}

// 9. Subadditivity with surface term on 2x2 and 4x1 partitions, quadratic and
//    kuhn-grun fixtures, slack >= -1e-8 * scale.
void criterion_subadditivity() {
    Timer t;
    bool all = true;
    double worst = std::numeric_limits<double>::infinity();
    for (const bool quadratic : {true, false}) {
        ExtendedGraph g = testfix::jittered_fixture(16, 0.2, 31);
        Eigen::MatrixXd lam(2, 2);
        lam << 1.3, 0.1, 0.0, 0.8;
        PairPotential pair =
            quadratic ? PairPotential::quadratic(Eigen::MatrixXd::Identity(2, 2))
                      : PairPotential::kuhn_grun_p10(100.0, 0.1);
        MinimizeOptions mo;
        mo.restarts = 2;
        for (const auto& counts : {std::vector<int>{2, 2}, std::vector<int>{4, 1}}) {
            const auto parts = partition_box(g.window, counts);
            const SubadditivityReport rep = subadditivity_check(
                g, g.window, parts, lam, pair, VolumetricPotential::none(), mo, 1.4);
            const double scale = std::abs(rep.sigma_whole) + rep.surface_term + 1.0;
            worst = std::min(worst, rep.slack / scale);
            if (rep.slack < -1e-8 * scale) all = false;
        }
    }
    report(9, "subadditivity", all, "worst relative slack " + fmt(worst) + " >= -1e-8",
           t.seconds());
}

// 10. Rescaling identity: exact Gaussian path to 1e-12 on the 20-vertex
//     fixture; TI path within 3 sigma.
void criterion_rescaling() {
    Timer t;
    ExtendedGraph g20 = lattice_fixture({5, 4}, 1.5);
    Eigen::MatrixXd lam(2, 2);
    lam << 1.2, 0.0, 0.1, 0.9;
    const double n0 = 100.0, beta0 = 2.0;
    const TwoTempIdentity exact = two_temperature_identity_exact(
        g20, g20.window, Eigen::MatrixXd::Identity(2, 2), lam, n0, beta0, 1.2);

    ExtendedGraph g = testfix::jittered_fixture(7, 0.15, 41);
    TiParams ti;
    ti.nodes = 8;
    ti.chain.sweeps = 12000;
    ti.chain.burnin = 2000;
    ti.chain.seed = 11;
    const TwoTempIdentity via_ti = two_temperature_identity_ti(
        g, g.window, Eigen::MatrixXd::Identity(2, 2), 50.0, 1.0,
        PairPotential::kuhn_grun_p10(50.0, 1.0 / std::sqrt(50.0)),
        VolumetricPotential::none(), ti, 1.4);
    const bool ti_ok = std::abs(via_ti.lhs - via_ti.rhs) <= 3.0 * via_ti.sigma + 1e-12;
    report(10, "rescaling identity", exact.rel_diff <= 1e-12 && ti_ok,
           "exact rel diff " + fmt(exact.rel_diff) + " <= 1e-12, TI |diff| " +
               fmt(std::abs(via_ti.lhs - via_ti.rhs)) + " <= 3 sigma (" +
               fmt(3.0 * via_ti.sigma) + ")",
           t.seconds());
}

// 11. Kuhn-Grun consistency: p10 coefficients to 1e-12 by polynomial
//     readback; inverse-Langevin round trip <= 1e-12 on 1000 grid points.
void criterion_kuhn_grun() {
    Timer t;
    // readback: solve the 5x5 Vandermonde system in s = t^2 in long double
    const int k = 5;
    long double V[5][6];
    for (int i = 0; i < k; ++i) {
        const double tt = 0.45 + 0.45 * i / (k - 1);
        const long double s = static_cast<long double>(tt) * tt;
        long double pw = 1.0L;
        for (int j = 0; j < k; ++j) {
            pw *= s;
            V[i][j] = pw;
        }
        V[i][k] = kuhn_grun(tt, KuhnGrunMode::P10);
    }
    for (int col = 0; col < k; ++col) {
        int piv = col;
        for (int r = col + 1; r < k; ++r)
            if (fabsl(V[r][col]) > fabsl(V[piv][col])) piv = r;
        for (int c = 0; c <= k; ++c) std::swap(V[piv][c], V[col][c]);
        for (int r = 0; r < k; ++r) {
            if (r == col) continue;
            const long double f = V[r][col] / V[col][col];
            for (int c = col; c <= k; ++c) V[r][c] -= f * V[col][c];
        }
    }
    const double expect[5] = {1.5, 0.45, 9.0 / 350.0, 81.0 / 7000.0, 243.0 / 673750.0};
    double worst_coeff = 0.0;
    for (int j = 0; j < k; ++j)
        worst_coeff = std::max(
            worst_coeff, std::abs(static_cast<double>(V[j][k] / V[j][j]) - expect[j]));

    double worst_rt = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = -0.999 + 1.998 * (i + 0.5) / 1000.0;
        worst_rt = std::max(worst_rt, std::abs(langevin(inverse_langevin(x)) - x));
    }
    report(11, "Kuhn-Grun consistency", worst_coeff <= 1e-12 && worst_rt <= 1e-12,
           "coeff err " + fmt(worst_coeff) + ", round trip " + fmt(worst_rt) + " <= 1e-12",
           t.seconds());
}

// 12. Gibbs concentration: 95th-percentile distance to the minimizer is
//     nonincreasing in beta across {1, 10, 100} within 2 stderr.
void criterion_concentration() {
    Timer t;
    json cfg{{"kind", "concentration"},
             {"lattice_fixture", true},
             {"graph", {{"dimension", 2}, {"jitter", 0.2}}},
             {"clamp_width", 1.4},
             {"pair", kuhn_grun_pair(100.0)},
             {"lambdas", {{{1.1, 0.0}, {0.0, 0.95}}}},
             {"windows", {10.0}},
             {"grid", {1.0, 10.0, 100.0}},
             {"seeds", {3}},
             {"budgets",
              {{"restarts", 2},
               {"p", 2.0},
               {"chain_sweeps", 30000},
               {"chain_burnin", 4000},
               {"chain_thin", 10}}},
             {"output", "out/acceptance_concentration"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    std::string q95s;
    for (const auto& r : res.records) q95s += fmt(r.value) + " ";
    report(12, "Gibbs concentration", res.verdict, "q95 by beta: " + q95s, t.seconds());
}

// 13. Discrete Poincare probe bounded within factor 2 across 4 dyadic
//     window sizes.
void criterion_poincare() {
    Timer t;
    json cfg{{"kind", "poincare"},
             {"lattice_fixture", true},
             {"graph", {{"dimension", 2}}},
             {"clamp_width", 1.5},
             {"windows", {8.0, 16.0, 32.0, 64.0}},
             {"seeds", {1, 2}},
             {"budgets", {{"p", 2.0}, {"bumps", 5}, {"spread_factor", 2.0}}},
             {"output", "out/acceptance_poincare"}};
    StudyResult res = run_study(study_config_from_json(cfg));
    report(13, "discrete Poincare probe", res.verdict,
           "ratio spread " + fmt(res.summary.value("spread", 0.0)) + " <= 2", t.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::create_directories("out");
    // acceptance always recomputes: drop checkpoints of previous runs
    for (const auto& entry : std::filesystem::directory_iterator("out")) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("acceptance_", 0) == 0 &&
            name.find(".checkpoint.jsonl") != std::string::npos)
            std::filesystem::remove(entry.path());
    }
    // optional single-criterion selection for debugging: acceptance [k]
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    using Fn = void (*)();
    const Fn criteria[] = {criterion_phantom,      criterion_ti_oracle,
                           criterion_gradient,     criterion_w_inf,
                           criterion_gap_scaling,  criterion_growth_sandwich,
                           criterion_rank_one,     criterion_graph_axioms,
                           criterion_subadditivity, criterion_rescaling,
                           criterion_kuhn_grun,    criterion_concentration,
                           criterion_poincare};
    Timer total;
    for (int i = 0; i < 13; ++i) {
        if (only > 0 && only != i + 1) continue;
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(i + 1, "criterion", false, std::string("exception: ") + e.what(), 0.0);
        }
    }
    std::printf("%d/13 criteria passed (%.1f s total)\n", 13 - g_failures - (only ? 12 : 0),
                total.seconds());
    return g_failures == 0 ? 0 : 1;
}
