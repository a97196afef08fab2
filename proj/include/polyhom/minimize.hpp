#pragma once

#include "polyhom/hamiltonian.hpp"

#include <Eigen/Dense>
#include <functional>

namespace polyhom {

struct NotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleBoundary : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LbfgsOptions {
    int max_iterations = 100000;
    double grad_tol_inf = 1e-8;  // sup-norm termination
    int memory = 12;
    double armijo_c = 1e-4;
    double step_shrink = 0.5;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_inf = 0.0;
    int iterations = 0;
    bool converged = false;
};

// limited-memory BFGS with backtracking line search; `projector`, when set,
// maps an iterate back into the feasible set (memory is reset whenever it
// actually moves the point)
LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& value_grad,
    Eigen::VectorXd x0, const LbfgsOptions& opts,
    const std::function<bool(Eigen::VectorXd&)>& projector = nullptr);

struct CellProblem {
    const ExtendedGraph* graph = nullptr;
    Box micro;  // D/eps in graph coordinates
    double epsilon = 1.0;
    Eigen::MatrixXd lambda;  // linear datum; ignored when datum is set
    DatumFn datum;
    BoundaryMode mode = BoundaryMode::Clamped;
    PairPotential pair;
    VolumetricPotential vol;
    double clamp_width = -1.0;
    int n = 0;  // defaults to lambda rows

    DatumFn effective_datum() const;
    int codomain() const { return n > 0 ? n : static_cast<int>(lambda.rows()); }
    // gradient tolerance 1e-8 (1 + |Lambda|^{p-1}); |Lambda| Frobenius
    double default_tolerance() const;
};

struct MinimizeOptions {
    int restarts = 8;
    double sigma_init = 0.1;       // scale of the Gaussian start perturbations
    double tolerance = -1.0;       // <0: CellProblem::default_tolerance()
    int max_iterations = 100000;
    std::uint64_t seed = 0;
    double soft_margin = 1e-6;     // open-ball projection margin in soft mode
    bool throw_on_failure = true;  // NotConverged when no restart converges
};

struct MinimizationResult {
    Eigen::VectorXd field;     // full field over the domain
    double energy = 0.0;
    double density = 0.0;      // energy / |D_eps|
    double grad_inf = 0.0;
    int best_restart = 0;
    int iterations = 0;
    double restart_spread = 0.0;  // (max - min)/max(|min|, 1e-300) over restarts
    bool converged = false;
};

MinimizationResult minimize_cell(const CellProblem& problem, const MinimizeOptions& opts = {});

// energy density of the datum itself (the affine competitor for linear data)
double competitor_density(const CellProblem& problem);

}  // namespace polyhom
