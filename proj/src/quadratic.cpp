#include "polyhom/quadratic.hpp"

#include <cmath>
#include <numbers>

namespace polyhom {

QuadraticModel::QuadraticModel(const ExtendedGraph& g, const Box& micro,
                               const PairPotential& pair, const DatumFn& datum,
                               double clamp_width)
    : dom_(build_domain(g, micro, BoundaryMode::Clamped, static_cast<int>(pair.A.rows()),
                        clamp_width)),
      pair_(pair) {
    if (pair.kind != PairKind::Quadratic)
        throw std::invalid_argument("QuadraticModel requires a quadratic pair potential");
    const int n = dom_.n;
    m_ = dom_.variable_dofs();

    // slot of each variable vertex in the reduced system
    std::vector<int> slot(dom_.vertex_count(), -1);
    for (std::size_t k = 0; k < dom_.variable_locals.size(); ++k)
        slot[dom_.variable_locals[k]] = static_cast<int>(k);

    Eigen::VectorXd u0 = datum_field(dom_, datum);

    // H(u) = sum_e mult <u_a - u_b, A (u_a - u_b)>; assemble the variable
    // block K and the coupling to clamped values as a right-hand side
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    const Eigen::MatrixXd& A = pair_.A;
    for (std::size_t e = 0; e < dom_.edges.size(); ++e) {
        const auto [la, lb] = dom_.edges[e];
        const double mult = pair_.edge_multiplier(dom_.vertices[la], dom_.vertices[lb]);
        const Eigen::MatrixXd Am = mult * A;
        const int sa = slot[la], sb = slot[lb];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double a = Am(i, j);
                if (a == 0.0) continue;
                if (sa >= 0 && sb >= 0) {
                    trip.emplace_back(sa * n + i, sa * n + j, a);
                    trip.emplace_back(sb * n + i, sb * n + j, a);
                    trip.emplace_back(sa * n + i, sb * n + j, -a);
                    trip.emplace_back(sb * n + i, sa * n + j, -a);
                } else if (sa >= 0) {
                    trip.emplace_back(sa * n + i, sa * n + j, a);
                    rhs[sa * n + i] += a * u0[static_cast<long>(lb) * n + j];
                } else if (sb >= 0) {
                    trip.emplace_back(sb * n + i, sb * n + j, a);
                    rhs[sb * n + i] += a * u0[static_cast<long>(la) * n + j];
                }
            }
    }
    K_.resize(m_, m_);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    if (m_ > 0) {
        llt_.compute(K_);
        if (llt_.info() != Eigen::Success)
            throw NotPositiveDefinite(
                "reduced stiffness is not positive definite (free component detached "
                "from the clamped boundary)");
        const Eigen::VectorXd v = llt_.solve(rhs);
        // stationarity: K u_v = rhs (rhs already carries the A-weighted
        // clamped neighbor values)
        u_hat_ = u0;
        for (std::size_t k = 0; k < dom_.variable_locals.size(); ++k)
            u_hat_.segment(static_cast<long>(dom_.variable_locals[k]) * n, n) =
                v.segment(static_cast<long>(k) * n, n);
        log_det_ = 0.0;
        min_l_diag_ = std::numeric_limits<double>::infinity();
        const Eigen::SparseMatrix<double> L = llt_.matrixL();
        for (int i = 0; i < m_; ++i) {
            const double di = L.coeff(i, i);
            log_det_ += 2.0 * std::log(di);
            min_l_diag_ = std::min(min_l_diag_, di);
        }
    } else {
        u_hat_ = u0;
        log_det_ = 0.0;
    }
    h_min_ = energy(u_hat_);
}

double QuadraticModel::energy(const Eigen::VectorXd& u) const {
    return hamiltonian(dom_, u, pair_, VolumetricPotential::none());
}

double QuadraticModel::fluctuation_energy(const Eigen::VectorXd& v) const {
    return v.dot(K_ * v);
}

double QuadraticModel::min_eigenvalue_bound() const {
    if (m_ == 0) return 0.0;
    return min_l_diag_ * min_l_diag_;
}

FreeEnergyEstimate gaussian_free_energy(const QuadraticModel& model, double beta) {
    if (beta <= 0) throw std::invalid_argument("beta must be positive");
    FreeEnergyEstimate est;
    est.method = "exact-gaussian";
    est.beta = beta;
    est.window = model.domain_volume();
    const double m = static_cast<double>(model.free_dofs());
    const double log_det_beta_k = m * std::log(beta) + model.log_det_K();
    est.value = model.min_energy() / model.domain_volume() +
                (log_det_beta_k - m * std::log(std::numbers::pi)) /
                    (2.0 * beta * model.domain_volume());
    est.stderr_value = 0.0;
    return est;
}

}  // namespace polyhom
