#pragma once

#include "polyhom/minimize.hpp"
#include "polyhom/quadratic.hpp"

namespace polyhom {

struct PartitionInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WindowEstimate {
    double side = 0.0;           // micro window side length
    double mean_density = 0.0;   // across seeds
    double stderr_density = 0.0;
    double restart_spread = 0.0; // worst across seeds
    std::vector<double> densities;
};

struct WInfEstimate {
    std::vector<WindowEstimate> windows;
    double extrapolated = 0.0;   // a from density = a + b/L
    double slope = 0.0;          // b
    double fit_residual = 0.0;
    double cauchy_gap = 0.0;     // |density(L_max) - density(L_max/2)| relative
};

struct WInfParams {
    std::vector<double> window_sides;  // micro sides, >= 3 dyadic values
    std::vector<std::uint64_t> seeds;
    MinimizeOptions minimize;
    double clamp_width = -1.0;
    // graph factory: build the ensemble member for (side, seed); the window
    // must contain the micro domain plus a clamp-width margin
    std::function<ExtendedGraph(double side, std::uint64_t seed)> make_graph;
    // domain placement within the generated graph window
    std::function<Box(const ExtendedGraph&, double side)> place_domain;
};

WInfEstimate estimate_w_inf(const Eigen::MatrixXd& lambda, const PairPotential& pair,
                            const VolumetricPotential& vol, const WInfParams& params);

struct SubadditivityReport {
    double sigma_whole = 0.0;          // min energy on I
    double sigma_parts = 0.0;          // sum of part minima
    double surface_term = 0.0;         // C_Lambda * sum H^{d-1}(bd I_i \ bd I)
    double slack = 0.0;                // parts + surface - whole, expected >= 0
    double c_lambda = 0.0;
    std::vector<double> part_densities;
};

// splits I into a grid of half-open boxes given per-axis counts
std::vector<Box> partition_box(const Box& box, const std::vector<int>& counts);

SubadditivityReport subadditivity_check(const ExtendedGraph& g, const Box& whole,
                                        const std::vector<Box>& parts,
                                        const Eigen::MatrixXd& lambda,
                                        const PairPotential& pair,
                                        const VolumetricPotential& vol,
                                        const MinimizeOptions& opts,
                                        double clamp_width = -1.0);

struct RankOnePoint {
    double t = 0.0;
    double value = 0.0;
    double stderr_value = 0.0;
};

struct RankOneReport {
    std::vector<RankOnePoint> points;
    // midpoint convexity defects g((t1+t3)/2) - (g(t1)+g(t3))/2 for each
    // consecutive triple with its combined stderr
    std::vector<double> defects;
    std::vector<double> defect_sigmas;
    double min_defect = 0.0;
};

using DensityEstimator =
    std::function<std::pair<double, double>(const Eigen::MatrixXd& lambda)>;

RankOneReport rank_one_probe(const Eigen::MatrixXd& lambda0, const Eigen::VectorXd& a,
                             const Eigen::VectorXd& direction, const std::vector<double>& ts,
                             const DensityEstimator& estimator);

}  // namespace polyhom
