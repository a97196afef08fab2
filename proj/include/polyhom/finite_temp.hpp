#pragma once

#include "polyhom/minimize.hpp"
#include "polyhom/quadratic.hpp"
#include "polyhom/sampler.hpp"

namespace polyhom {

struct OverlapFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TiParams {
    int nodes = 8;  // Gauss-Legendre nodes on the coupling path
    ChainParams chain;
    double c_ref = -1.0;  // <0: from the pair curvature at the affine state
    double overlap_threshold = 25.0;
    double min_ess = 100.0;
    int max_extensions = 3;  // chain doublings allowed to reach the ESS floor
};

// Thermodynamic integration from an exactly solvable quadratic reference on
// the same graph and clamped data: F = F_ref + <H - H_ref>_lambda integrated
// over the Gauss-Legendre nodes, each node an independent chain.
FreeEnergyEstimate free_energy_ti(const ExtendedGraph& g, const Box& micro,
                                  const Eigen::MatrixXd& lambda, double beta,
                                  const PairPotential& pair, const VolumetricPotential& vol,
                                  const TiParams& params, double clamp_width = -1.0);

// reference stiffness: half the mean ray curvature of the pair potential at
// the affine increments
double reference_stiffness(const CellDomain& dom, const PairPotential& pair,
                           const Eigen::MatrixXd& lambda);

struct GapPoint {
    double beta = 0.0;
    double free_energy = 0.0;
    double stderr_value = 0.0;
    double gap = 0.0;    // free energy minus zero-temperature density
    double ratio = 0.0;  // gap / (log beta / beta)
};

struct GapSeries {
    std::vector<GapPoint> points;
    double w_inf_density = 0.0;
    bool decreasing_abs = false;   // |gap| decreasing along the beta grid
    double ratio_spread = 0.0;     // max|ratio| / min|ratio|
};

GapSeries gap_series_quadratic(const QuadraticModel& model, const std::vector<double>& betas);

GapSeries gap_series_mcmc(const ExtendedGraph& g, const Box& micro,
                          const Eigen::MatrixXd& lambda, const std::vector<double>& betas,
                          const PairPotential& pair, const VolumetricPotential& vol,
                          const TiParams& ti, const MinimizeOptions& mopts,
                          double clamp_width = -1.0);

struct ConcentrationSummary {
    double median = 0.0;
    double q95 = 0.0;
    double median_se = 0.0;  // spread of per-segment medians
    double q95_se = 0.0;
    int count = 0;
};

// eps-rescaled lp distances of Gibbs samples to a reference field:
// eps^(1 + d/p) * (sum_x |u(x) - u*(x)|^p)^(1/p)
ConcentrationSummary concentration_diagnostic(const CellDomain& dom,
                                              const std::vector<Eigen::VectorXd>& samples,
                                              const Eigen::VectorXd& reference, double p,
                                              double eps, int segments = 8);

struct TwoTempIdentity {
    double lhs = 0.0;       // free energy of the physical Hamiltonian at beta0
    double rhs = 0.0;       // (N0/beta0) * free energy of the normalized one at N0
    double rel_diff = 0.0;
    double sigma = 0.0;     // combined stderr (0 on the exact path)
};

// finite-size rescaling identity: H0 = (N0/beta0) Htilde makes both sides of
// the free energy computation agree; exact path uses Gaussian models
TwoTempIdentity two_temperature_identity_exact(const ExtendedGraph& g, const Box& micro,
                                               const Eigen::MatrixXd& A_tilde,
                                               const Eigen::MatrixXd& lambda, double n0,
                                               double beta0, double clamp_width = -1.0);

TwoTempIdentity two_temperature_identity_ti(const ExtendedGraph& g, const Box& micro,
                                            const Eigen::MatrixXd& lambda, double n0,
                                            double beta0, const PairPotential& pair_tilde,
                                            const VolumetricPotential& vol_tilde,
                                            const TiParams& params, double clamp_width = -1.0);

// |W^{0,infty} - W^{0,N1}| against log(N1)/N1 across a grid of N1 values
GapSeries two_temperature_scaling(const ExtendedGraph& g, const Box& micro,
                                  const Eigen::MatrixXd& lambda,
                                  const std::vector<double>& n1_grid,
                                  const PairPotential& pair_tilde,
                                  const VolumetricPotential& vol_tilde, const TiParams& ti,
                                  const MinimizeOptions& mopts, double clamp_width = -1.0);

}  // namespace polyhom
