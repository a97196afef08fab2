#pragma once

#include "polyhom/hamiltonian.hpp"

#include <Eigen/Sparse>

namespace polyhom {

struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadratic-Hamiltonian network under clamped boundary data: the reduced
// stiffness K over free degrees of freedom (H(u_hat + v) = H(u_hat) + v'Kv),
// the exact minimizer, and the log-determinant needed for the Gaussian
// partition function. K does not depend on the boundary datum.
class QuadraticModel {
public:
    QuadraticModel(const ExtendedGraph& g, const Box& micro, const PairPotential& pair,
                   const DatumFn& datum, double clamp_width = -1.0);

    const CellDomain& domain() const { return dom_; }
    const Eigen::VectorXd& minimizer() const { return u_hat_; }
    double min_energy() const { return h_min_; }
    int free_dofs() const { return m_; }
    double log_det_K() const { return log_det_; }  // log det of the reduced K
    double domain_volume() const { return dom_.volume; }

    // H(u) for an arbitrary full field (pair part only; the model is quadratic)
    double energy(const Eigen::VectorXd& u) const;

    // v' K v for a free-dof vector
    double fluctuation_energy(const Eigen::VectorXd& v) const;

    // sample u_hat + v with v ~ N(0, (2 beta K)^{-1}) is not provided here;
    // samplers run on the generic Hamiltonian instead.

    const Eigen::SparseMatrix<double>& stiffness() const { return K_; }
    double min_eigenvalue_bound() const;  // smallest diagonal of the LLT factor, squared

private:
    CellDomain dom_;
    PairPotential pair_;
    Eigen::SparseMatrix<double> K_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    Eigen::VectorXd u_hat_;
    double h_min_ = 0.0;
    double log_det_ = 0.0;
    double min_l_diag_ = 0.0;
    int m_ = 0;
};

struct FreeEnergyEstimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::string method;  // exact-gaussian | ti-mcmc | minimization
    // provenance
    double epsilon = 1.0;
    double beta = 0.0;
    double window = 0.0;
    std::uint64_t seed = 0;
    // chain diagnostics (MCMC methods)
    double acceptance_rate = 0.0;
    double ess = 0.0;
};

// Exact Helmholtz free energy density of the quadratic model at inverse
// temperature beta: H_min/|D_eps| + (log det(beta K) - m log pi)/(2 beta |D_eps|).
FreeEnergyEstimate gaussian_free_energy(const QuadraticModel& model, double beta);

}  // namespace polyhom
