#include "polyhom/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace polyhom {

BatchMeansStats batch_means(const std::vector<double>& series, int min_batches) {
    BatchMeansStats st;
    const long n = static_cast<long>(series.size());
    if (n < 4) return st;
    int nb = std::max(min_batches, static_cast<int>(std::sqrt(static_cast<double>(n))));
    nb = std::min<long>(nb, n / 2);
    const long b = n / nb;
    nb = static_cast<int>(n / b);

    double total = 0.0;
    for (double v : series) total += v;
    st.mean = total / static_cast<double>(n);

    double var = 0.0;
    for (double v : series) var += (v - st.mean) * (v - st.mean);
    st.variance = var / static_cast<double>(n - 1);

    double bm_var = 0.0;
    double used_mean = 0.0;
    std::vector<double> bm(nb);
    for (int k = 0; k < nb; ++k) {
        double s = 0.0;
        for (long i = k * b; i < (k + 1) * b; ++i) s += series[static_cast<std::size_t>(i)];
        bm[k] = s / static_cast<double>(b);
        used_mean += bm[k];
    }
    used_mean /= nb;
    for (int k = 0; k < nb; ++k) bm_var += (bm[k] - used_mean) * (bm[k] - used_mean);
    bm_var /= std::max(1, nb - 1);

    st.batches = nb;
    st.stderr_mean = std::sqrt(bm_var / nb);
    const double asym_var = static_cast<double>(b) * bm_var;  // sigma^2_infinity estimate
    st.ess = asym_var > 0 ? static_cast<double>(n) * st.variance / asym_var
                          : static_cast<double>(n);
    st.ess = std::min(st.ess, static_cast<double>(n));
    return st;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(i);
    return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

GibbsChain::GibbsChain(ValueFn value, GradFn grad, double beta, Eigen::VectorXd x0,
                       const ChainParams& params, FeasibleFn feasible)
    : value_(std::move(value)),
      grad_(std::move(grad)),
      feasible_(std::move(feasible)),
      beta_(beta),
      params_(params),
      x_(std::move(x0)),
      step_(params.init_step),
      rng_(params.seed, 0x6B1B5C0DULL ^ params.stream) {
    if (beta_ <= 0) throw std::invalid_argument("beta must be positive");
    target_ = params.target_acceptance > 0
                  ? params.target_acceptance
                  : (params.kernel == ChainKernel::Langevin ? 0.574 : 0.234);
    h_ = value_(x_);
    if (!std::isfinite(h_)) throw ChainDiverged("initial energy not finite");
    h_guard_ = params_.overflow_factor * (std::abs(h_) + 1.0);
    if (params_.kernel == ChainKernel::Langevin) {
        if (!grad_) throw std::invalid_argument("Langevin kernel needs a gradient");
        g_ = grad_(x_);
    }
}

bool GibbsChain::sweep() {
    const long n = x_.size();
    bool accept = false;
    if (params_.kernel == ChainKernel::RandomWalk) {
        Eigen::VectorXd y(n);
        for (long i = 0; i < n; ++i) y[i] = x_[i] + step_ * rng_.normal();
        if (!feasible_ || feasible_(y)) {
            const double hy = value_(y);
            if (std::isfinite(hy) && hy <= h_guard_) {
                const double log_alpha = -beta_ * (hy - h_);
                if (log_alpha >= 0 || std::log(rng_.uniform() + 1e-300) < log_alpha) {
                    x_.swap(y);
                    h_ = hy;
                    accept = true;
                }
            }
        }
    } else {
        // MALA: y = x - tau beta grad H + sqrt(2 tau) xi, tau = step^2/2
        const double tau = 0.5 * step_ * step_;
        Eigen::VectorXd noise(n);
        for (long i = 0; i < n; ++i) noise[i] = rng_.normal();
        Eigen::VectorXd mean_fwd = x_ - tau * beta_ * g_;
        Eigen::VectorXd y = mean_fwd + std::sqrt(2.0 * tau) * noise;
        if (!feasible_ || feasible_(y)) {
            const double hy = value_(y);
            if (std::isfinite(hy) && hy <= h_guard_) {
                const Eigen::VectorXd gy = grad_(y);
                const Eigen::VectorXd mean_bwd = y - tau * beta_ * gy;
                const double log_q_fwd = -(y - mean_fwd).squaredNorm() / (4.0 * tau);
                const double log_q_bwd = -(x_ - mean_bwd).squaredNorm() / (4.0 * tau);
                const double log_alpha = -beta_ * (hy - h_) + log_q_bwd - log_q_fwd;
                if (log_alpha >= 0 || std::log(rng_.uniform() + 1e-300) < log_alpha) {
                    x_.swap(y);
                    g_ = gy;
                    h_ = hy;
                    accept = true;
                }
            }
        }
    }
    ++attempts_;
    if (accept) ++accepts_;

    if (adapting_) {
        adapt_window_hits_ += accept ? 1 : 0;
        if (++adapt_window_ >= 50) {
            const double rate = static_cast<double>(adapt_window_hits_) / adapt_window_;
            step_ *= std::exp(0.6 * (rate - target_));
            adapt_window_ = 0;
            adapt_window_hits_ = 0;
        }
    }
    return accept;
}

void GibbsChain::run_burnin() {
    adapting_ = true;
    for (int i = 0; i < params_.burnin; ++i) sweep();
    adapting_ = false;
    accepts_ = 0;
    attempts_ = 0;
}

GibbsRun sample_gibbs(const ExtendedGraph& g, const Box& micro, BoundaryMode mode,
                      const DatumFn& datum, double beta, const PairPotential& pair,
                      const VolumetricPotential& vol, const ChainParams& params, int codomain,
                      double clamp_width,
                      const std::function<void(const Eigen::VectorXd&)>& on_sample) {
    CellDomain dom = build_domain(g, micro, mode, codomain, clamp_width);
    Eigen::VectorXd base = datum_field(dom, datum);
    const int n = dom.n;

    std::vector<int> var_locals = dom.variable_locals;
    auto pack = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd v(dom.variable_dofs());
        for (std::size_t k = 0; k < var_locals.size(); ++k)
            v.segment(static_cast<long>(k) * n, n) =
                full.segment(static_cast<long>(var_locals[k]) * n, n);
        return v;
    };
    Eigen::VectorXd full = base;
    auto unpack = [&](const Eigen::VectorXd& v) {
        for (std::size_t k = 0; k < var_locals.size(); ++k)
            full.segment(static_cast<long>(var_locals[k]) * n, n) =
                v.segment(static_cast<long>(k) * n, n);
    };

    auto value = [&](const Eigen::VectorXd& v) {
        unpack(v);
        return hamiltonian(dom, full, pair, vol);
    };
    auto grad = [&](const Eigen::VectorXd& v) {
        unpack(v);
        return pack(hamiltonian_gradient(dom, full, pair, vol));
    };

    GibbsChain::FeasibleFn feasible;
    if (mode == BoundaryMode::Soft) {
        std::vector<int> soft_slots;
        for (std::size_t k = 0; k < var_locals.size(); ++k)
            if (dom.roles[var_locals[k]] == VertexRole::SoftBoundary)
                soft_slots.push_back(static_cast<int>(k));
        const Eigen::VectorXd centers = pack(base);
        feasible = [soft_slots, centers, n](const Eigen::VectorXd& v) {
            for (int k : soft_slots)
                if ((v.segment(static_cast<long>(k) * n, n) -
                     centers.segment(static_cast<long>(k) * n, n))
                        .norm() >= 1.0)
                    return false;
            return true;
        };
    }

    GibbsChain chain(value, grad, beta, pack(base), params, feasible);
    chain.run_burnin();

    GibbsRun run;
    std::vector<double> energies;
    energies.reserve(static_cast<std::size_t>(params.sweeps));
    for (int s = 0; s < params.sweeps; ++s) {
        chain.sweep();
        energies.push_back(chain.energy());
        if (s % params.thin == 0) {
            unpack(chain.state());
            if (on_sample)
                on_sample(full);
            else
                run.samples.push_back(full);
        }
    }
    run.acceptance = chain.acceptance_rate();
    run.step = chain.step_size();
    run.energy_stats = batch_means(energies);
    return run;
}

}  // namespace polyhom
