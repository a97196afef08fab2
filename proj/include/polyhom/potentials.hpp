#pragma once

#include "polyhom/geometry.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace polyhom {

struct OutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateEdge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SandwichViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Langevin function coth(t) - 1/t, series-stabilized near zero.
double langevin(double t);

// Inverse Langevin on (-1,1): Newton from the Pade guess x(3-x^2)/(1-x^2)
// with a bisection fallback; |langevin(theta) - x| <= 1e-12.
double inverse_langevin(double x);

enum class KuhnGrunMode { Exact, P10 };

// Single-chain entropy per monomer: exact form t*theta + log(theta/sinh theta)
// (t < 1) or its degree-10 even polynomial surrogate.
double kuhn_grun(double t, KuhnGrunMode mode);
double kuhn_grun_derivative(double t, KuhnGrunMode mode);

// p10 coefficients of t^2, t^4, ..., t^10
const std::array<double, 5>& kuhn_grun_p10_coefficients();

enum class PairKind { Quadratic, KuhnGrunP10, KuhnGrunExact, Polynomial };

struct PairPotential {
    PairKind kind = PairKind::Quadratic;

    // quadratic: f(z, xi) = <xi, A xi>
    Eigen::MatrixXd A;

    // kuhn-grun: f(z, xi) = prefactor * (N_xy/N0) f^(p)(lambda / sqrt(N_xy)),
    // lambda = |xi|/|z|, N_xy = (|z|/monomer_length)^2
    double mean_monomers = 100.0;   // N0
    double monomer_length = 0.1;
    double growth_exponent = 10.0;  // p (only p = 10 has a closed surrogate)
    double prefactor = 1.0;         // N0/beta0 for the physical two-temperature form

    // polynomial in |xi|: f = sum_k coeffs[k] |xi|^k
    std::vector<double> poly_coefficients;

    // per-edge stiffness hook: edges with a flagged endpoint are multiplied
    std::vector<std::uint32_t> stiff_vertices;
    double stiffness_multiplier = 1.0;

    bool frame_indifferent() const { return kind != PairKind::Quadratic || is_isotropic(); }
    bool is_isotropic() const;

    double edge_multiplier(int a, int b) const;

    static PairPotential quadratic(const Eigen::MatrixXd& A);
    static PairPotential kuhn_grun_p10(double mean_monomers, double monomer_length,
                                       double prefactor = 1.0);
};

// energy of one edge with reference offset z and increment xi
double pair_energy(const PairPotential& pot, const Vec& z, const Vec& xi,
                   double multiplier = 1.0);
// d(pair_energy)/d(xi)
Vec pair_gradient(const PairPotential& pot, const Vec& z, const Vec& xi,
                  double multiplier = 1.0);
// second derivative along a ray |xi| = t for isotropic kinds; for the
// quadratic kind returns twice the mean eigenvalue of A
double pair_ray_curvature(const PairPotential& pot, const Vec& z, double t);

enum class VolumetricKind { None, ConvexWell };

struct VolumetricPotential {
    VolumetricKind kind = VolumetricKind::None;
    double weight = 1.0;    // beta0/(N0*K) in the physical form
    double c_neg = 1.0;     // orientation-reversal penalty coefficient
    double exponent = 5.0;  // p/d growth of the negative branch

    double value(double t) const;
    double derivative(double t) const;

    static VolumetricPotential none() { return {}; }
    static VolumetricPotential convex_well(double weight, double exponent, double c_neg = 1.0);
};

struct GrowthReport {
    double c2_lower = 0.0, cp_lower = 0.0;   // C2|x|^2 + Cp|x|^p <= f
    double c2_upper = 0.0, cp_upper = 0.0;   // f <= C2'|x|^2 + Cp'|x|^p
    double p = 2.0;
    bool quadratic_only = false;             // Cp fit degenerated
    bool scaling_consistent = true;          // kuhn-grun: C2 within factor 4 of 3/(2 N0)
    double scaling_ratio = 1.0;
    std::string note;
};

// Fits the tightest two-sided growth constants of the pair potential on a
// grid of increment magnitudes in (0, xi_max]. Throws SandwichViolated when
// the fitted constants diverge under grid refinement (no finite sandwich).
GrowthReport growth_check(const PairPotential& pot, const VolumetricPotential& vol,
                          double xi_max = 8.0, int grid_points = 160);

}  // namespace polyhom
