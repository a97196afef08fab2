#pragma once

#include "polyhom/hamiltonian.hpp"
#include "polyhom/rng.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace polyhom {

struct ChainDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ChainKernel { RandomWalk, Langevin };

struct ChainParams {
    ChainKernel kernel = ChainKernel::Langevin;
    int sweeps = 20000;  // kept sweeps after burn-in
    int burnin = 2000;
    int thin = 1;
    double init_step = 0.05;
    double target_acceptance = -1.0;  // <0: 0.234 random walk, 0.574 Langevin
    double overflow_factor = 1e3;     // reject H > factor*(H_initial + 1)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct BatchMeansStats {
    double mean = 0.0;
    double stderr_mean = 0.0;
    double variance = 0.0;  // marginal sample variance
    double ess = 0.0;
    int batches = 0;
};

// batch means with ~min(sqrt(n), n/min_batch_len) batches, at least `min_batches`
BatchMeansStats batch_means(const std::vector<double>& series, int min_batches = 50);

double percentile(std::vector<double> values, double q);

// All-coordinate Metropolis / Metropolis-adjusted Langevin chain on a vector
// state with unnormalized target exp(-beta H(x)). Step size is adapted toward
// the target acceptance during burn-in and then frozen.
class GibbsChain {
public:
    using ValueFn = std::function<double(const Eigen::VectorXd&)>;
    using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using FeasibleFn = std::function<bool(const Eigen::VectorXd&)>;

    GibbsChain(ValueFn value, GradFn grad, double beta, Eigen::VectorXd x0,
               const ChainParams& params, FeasibleFn feasible = nullptr);

    void run_burnin();
    // one proposal over all coordinates; returns true when accepted
    bool sweep();

    const Eigen::VectorXd& state() const { return x_; }
    double energy() const { return h_; }
    double acceptance_rate() const {
        return attempts_ > 0 ? static_cast<double>(accepts_) / attempts_ : 0.0;
    }
    double step_size() const { return step_; }

private:
    ValueFn value_;
    GradFn grad_;
    FeasibleFn feasible_;
    double beta_;
    ChainParams params_;
    Eigen::VectorXd x_, g_;
    double h_ = 0.0;
    double h_guard_ = 0.0;
    double step_ = 0.05;
    double target_ = 0.234;
    Rng rng_;
    long accepts_ = 0, attempts_ = 0;
    bool adapting_ = true;
    int adapt_window_hits_ = 0, adapt_window_ = 0;
};

// Gibbs sampling of a cell-problem Hamiltonian over the variable vertices.
// Soft mode rejects proposals leaving the unit ball around the datum, which
// is Metropolis for the density restricted to the admissible class.
struct GibbsRun {
    std::vector<Eigen::VectorXd> samples;  // thinned full fields
    double acceptance = 0.0;
    double step = 0.0;
    BatchMeansStats energy_stats;  // over the kept energy series
};

GibbsRun sample_gibbs(const ExtendedGraph& g, const Box& micro, BoundaryMode mode,
                      const DatumFn& datum, double beta, const PairPotential& pair,
                      const VolumetricPotential& vol, const ChainParams& params,
                      int codomain, double clamp_width = -1.0,
                      const std::function<void(const Eigen::VectorXd&)>& on_sample = nullptr);

}  // namespace polyhom
