#include "polyhom/minimize.hpp"
#include "polyhom/rng.hpp"

#include <cmath>
#include <deque>

namespace polyhom {

LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_grad,
    Eigen::VectorXd x, const LbfgsOptions& opts,
    const std::function<bool(Eigen::VectorXd&)>& projector) {
    const long n = x.size();
    LbfgsResult res;
    if (projector) projector(x);

    Eigen::VectorXd g(n), g_new(n), x_new(n);
    double f = value_grad(x, g);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const double ginf = g.lpNorm<Eigen::Infinity>();
        if (ginf <= opts.grad_tol_inf) {
            res.converged = true;
            break;
        }

        // two-loop recursion
        Eigen::VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            const double yy = y_hist.back().squaredNorm();
            if (yy > 0) gamma = s_hist.back().dot(y_hist.back()) / yy;
        }
        Eigen::VectorXd dir = gamma * q;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(dir);
            dir += (alpha[i] - beta) * s_hist[i];
        }
        dir = -dir;

        double slope = g.dot(dir);
        if (!(slope < 0)) {  // fall back to steepest descent
            dir = -g;
            slope = -g.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // backtracking Armijo line search; the acceptance test carries the
        // floating-point resolution of the energy, otherwise true descent
        // steps near the minimum are rejected once improvements drop below
        // the rounding noise of the big edge sums
        const double f_resolution = 1e-13 * (std::abs(f) + 1.0);
        double step = 1.0;
        bool accepted = false;
        bool projected = false;
        double f_new = f;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = x + step * dir;
            projected = projector ? projector(x_new) : false;
            f_new = value_grad(x_new, g_new);
            if (std::isfinite(f_new) &&
                f_new <= f + opts.armijo_c * step * slope + f_resolution) {
                accepted = true;
                break;
            }
            step *= opts.step_shrink;
        }
        if (!accepted) break;  // stalled at machine precision

        if (projected) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        } else {
            Eigen::VectorXd s_vec = x_new - x;
            Eigen::VectorXd y_vec = g_new - g;
            const double sy = s_vec.dot(y_vec);
            if (sy > 1e-12 * s_vec.norm() * y_vec.norm()) {
                s_hist.push_back(std::move(s_vec));
                y_hist.push_back(std::move(y_vec));
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > opts.memory) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
    }

    res.x = std::move(x);
    res.value = f;
    res.grad_inf = g.lpNorm<Eigen::Infinity>();
    res.iterations = it;
    if (res.grad_inf <= opts.grad_tol_inf) res.converged = true;
    return res;
}

DatumFn CellProblem::effective_datum() const {
    if (datum) return datum;
    if (lambda.size() == 0) throw std::invalid_argument("cell problem needs lambda or datum");
    return linear_datum(lambda);
}

double CellProblem::default_tolerance() const {
    const double lam = lambda.size() > 0 ? lambda.norm() : 1.0;
    const double p = pair.growth_exponent;
    return 1e-8 * (1.0 + std::pow(lam, p - 1.0));
}

namespace {

struct VariableMap {
    // pack/unpack the variable (free + soft) components of the full field
    const CellDomain* dom;

    Eigen::VectorXd pack(const Eigen::VectorXd& full) const {
        Eigen::VectorXd v(dom->variable_dofs());
        int k = 0;
        for (int l : dom->variable_locals)
            v.segment(static_cast<long>(k++) * dom->n, dom->n) =
                full.segment(static_cast<long>(l) * dom->n, dom->n);
        return v;
    }

    void unpack(const Eigen::VectorXd& v, Eigen::VectorXd& full) const {
        int k = 0;
        for (int l : dom->variable_locals)
            full.segment(static_cast<long>(l) * dom->n, dom->n) =
                v.segment(static_cast<long>(k++) * dom->n, dom->n);
    }
};

}  // namespace

MinimizationResult minimize_cell(const CellProblem& problem, const MinimizeOptions& opts) {
    const ExtendedGraph& g = *problem.graph;
    const int n = problem.codomain();
    CellDomain dom = build_domain(g, problem.micro, problem.mode, n, problem.clamp_width);
    const DatumFn datum = problem.effective_datum();
    Eigen::VectorXd base = datum_field(dom, datum);

    VariableMap vm{&dom};
    Eigen::VectorXd full = base;

    // Soft mode reparametrizes each soft vertex onto the open ball of radius
    // rho around its datum via u = c + rho * w / sqrt(1 + |w|^2), making the
    // constrained problem an unconstrained one in w. Free vertices keep
    // their plain coordinates.
    const bool soft = problem.mode == BoundaryMode::Soft;
    const double rho = 1.0 - opts.soft_margin;
    std::vector<char> is_soft(dom.variable_locals.size(), 0);
    if (soft)
        for (std::size_t k = 0; k < dom.variable_locals.size(); ++k)
            is_soft[k] = dom.roles[dom.variable_locals[k]] == VertexRole::SoftBoundary;
    const Eigen::VectorXd centers = vm.pack(base);

    auto to_field = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd u = v;
        if (soft)
            for (std::size_t k = 0; k < is_soft.size(); ++k) {
                if (!is_soft[k]) continue;
                const auto w = v.segment(static_cast<long>(k) * n, n);
                const double s = std::sqrt(1.0 + w.squaredNorm());
                u.segment(static_cast<long>(k) * n, n) =
                    centers.segment(static_cast<long>(k) * n, n) + (rho / s) * w;
            }
        return u;
    };
    auto from_field = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd v = u;
        if (soft)
            for (std::size_t k = 0; k < is_soft.size(); ++k) {
                if (!is_soft[k]) continue;
                const Eigen::VectorXd d =
                    (u.segment(static_cast<long>(k) * n, n) -
                     centers.segment(static_cast<long>(k) * n, n)) /
                    rho;
                const double r2 = std::min(d.squaredNorm(), 1.0 - 1e-12);
                v.segment(static_cast<long>(k) * n, n) = d / std::sqrt(1.0 - r2);
            }
        return v;
    };

    auto value_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
        vm.unpack(to_field(v), full);
        const double f = hamiltonian(dom, full, problem.pair, problem.vol);
        grad = vm.pack(hamiltonian_gradient(dom, full, problem.pair, problem.vol));
        if (soft)
            for (std::size_t k = 0; k < is_soft.size(); ++k) {
                if (!is_soft[k]) continue;
                const auto w = v.segment(static_cast<long>(k) * n, n);
                auto gk = grad.segment(static_cast<long>(k) * n, n);
                const double s = std::sqrt(1.0 + w.squaredNorm());
                // chain rule with J = rho (I/s - w w^T / s^3)
                gk = (rho / s) * (gk - (w.dot(gk) / (s * s)) * w).eval();
            }
        return f;
    };

    LbfgsOptions lopts;
    lopts.max_iterations = opts.max_iterations;
    lopts.grad_tol_inf = opts.tolerance > 0 ? opts.tolerance : problem.default_tolerance();

    MinimizationResult out;
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    bool any_converged = false;

    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Eigen::VectorXd u0 = vm.pack(base);
        if (r > 0) {
            Rng rng(opts.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(r));
            for (long i = 0; i < u0.size(); ++i) u0[i] += opts.sigma_init * rng.normal();
        }
        LbfgsResult lr = lbfgs_minimize(value_grad, from_field(u0), lopts);
        any_converged = any_converged || lr.converged;
        if (lr.value < best) {
            best = lr.value;
            out.energy = lr.value;
            out.grad_inf = lr.grad_inf;
            out.best_restart = r;
            out.iterations = lr.iterations;
            vm.unpack(to_field(lr.x), full);
            out.field = full;
            out.converged = lr.converged;
        }
        worst = std::max(worst, lr.value);
    }
    out.density = out.energy / dom.volume;
    out.restart_spread = (worst - best) / std::max(std::abs(best), 1e-300);
    if (!any_converged && opts.throw_on_failure)
        throw NotConverged("no restart reached the gradient tolerance; best density " +
                           std::to_string(out.density));
    return out;
}

double competitor_density(const CellProblem& problem) {
    CellDomain dom =
        build_domain(*problem.graph, problem.micro, problem.mode, problem.codomain(),
                     problem.clamp_width);
    const Eigen::VectorXd u = datum_field(dom, problem.effective_datum());
    return hamiltonian(dom, u, problem.pair, problem.vol) / dom.volume;
}

}  // namespace polyhom
