#include "polyhom/hamiltonian.hpp"

#include <cmath>
#include <map>

namespace polyhom {

DatumFn linear_datum(const Eigen::MatrixXd& lambda) {
    return [lambda](const Vec& x) -> Vec {
        Vec out(lambda.rows());
        out = lambda * x;
        return out;
    };
}

DatumFn laminate_datum(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& normal, double amp, double period) {
    return [=](const Vec& x) -> Vec {
        const double s = normal.dot(x);
        // integral of the alternating sign over [0, s], sawtooth profile
        const double t = s / period - std::floor(s / period);
        const double saw = (t < 0.5 ? t : 1.0 - t) * period;
        Vec out(lambda.rows());
        out = lambda * x + amp * saw * a;
        return out;
    };
}

CellDomain build_domain(const ExtendedGraph& g, const Box& micro, BoundaryMode mode, int n,
                        double clamp_width) {
    if (micro.dim() != g.dim()) throw DimensionMismatch("domain/graph dimension mismatch");
    CellDomain dom;
    dom.graph = &g;
    dom.micro = micro;
    dom.mode = mode;
    dom.n = n;
    dom.clamp_width = clamp_width > 0 ? clamp_width : g.params.interaction_range;
    dom.volume = micro.volume();

    dom.local_of.assign(g.vertex_count(), -1);
    for (int v = 0; v < g.vertex_count(); ++v) {
        if (!micro.contains_closed(g.positions[v])) continue;
        dom.local_of[v] = static_cast<int>(dom.vertices.size());
        dom.vertices.push_back(v);
        const bool band = micro.boundary_distance(g.positions[v]) <= dom.clamp_width;
        dom.roles.push_back(!band ? VertexRole::Free
                                  : (mode == BoundaryMode::Clamped ? VertexRole::Clamped
                                                                   : VertexRole::SoftBoundary));
    }
    for (int l = 0; l < dom.vertex_count(); ++l)
        if (dom.roles[l] != VertexRole::Clamped) dom.variable_locals.push_back(l);

    for (const auto& [a, b] : g.edges) {
        const int la = dom.local_of[a], lb = dom.local_of[b];
        if (la < 0 || lb < 0) continue;
        dom.edges.push_back({la, lb});
        dom.edge_offsets.push_back(g.positions[a] - g.positions[b]);
    }

    // volumetric bookkeeping: interior cells and their overlap weights
    dom.vol_cells = interior_voronoi_cells(g, micro);
    std::map<int, int> simplex_slot;
    const int d = g.dim();
    for (int ci : dom.vol_cells) {
        dom.cell_volumes.push_back(g.cells1[ci].volume);
        std::vector<std::pair<int, double>> weights;
        for (const auto& ov : g.overlaps1[ci]) {
            auto it = simplex_slot.find(ov.simplex);
            int slot;
            if (it == simplex_slot.end()) {
                slot = static_cast<int>(dom.vol_simplices.size());
                simplex_slot.emplace(ov.simplex, slot);
                CellDomain::VolSimplex vs;
                const Simplex& s = g.simplices[ov.simplex];
                Mat M(d, d);
                for (int k = 1; k <= d; ++k)
                    M.col(k - 1) = g.positions[s[k]] - g.positions[s[0]];
                vs.ref_det = M.determinant();
                for (int v : s) {
                    const int lv = dom.local_of[v];
                    if (lv < 0)
                        throw MissingVertexValue(
                            "interior cell touches a simplex outside the domain");
                    vs.locals.push_back(lv);
                }
                dom.vol_simplices.push_back(std::move(vs));
            } else {
                slot = it->second;
            }
            weights.push_back({slot, ov.volume});
        }
        dom.cell_weights.push_back(std::move(weights));
    }
    return dom;
}

Eigen::VectorXd datum_field(const CellDomain& dom, const DatumFn& datum) {
    Eigen::VectorXd u(dom.dofs());
    for (int l = 0; l < dom.vertex_count(); ++l) {
        const Vec val = datum(dom.graph->positions[dom.vertices[l]]);
        if (val.size() != dom.n) throw DimensionMismatch("datum dimension mismatch");
        u.segment(static_cast<long>(l) * dom.n, dom.n) = val;
    }
    return u;
}

namespace {

// determinant of the deformed difference matrix for one volumetric simplex
double simplex_det(const CellDomain& dom, const Eigen::VectorXd& u,
                   const CellDomain::VolSimplex& vs, Mat* m_out = nullptr) {
    const int d = static_cast<int>(vs.locals.size()) - 1;
    Mat M(dom.n, d);
    for (int k = 1; k <= d; ++k)
        M.col(k - 1) = dom.at(u, vs.locals[k]) - dom.at(u, vs.locals[0]);
    if (m_out) *m_out = M;
    return M.determinant();
}

// cofactor matrix: d(det M)/dM, dimensions up to 3
Mat cofactor_matrix(const Mat& M) {
    const int d = static_cast<int>(M.rows());
    Mat C(d, d);
    if (d == 1) {
        C(0, 0) = 1.0;
    } else if (d == 2) {
        C(0, 0) = M(1, 1);
        C(0, 1) = -M(1, 0);
        C(1, 0) = -M(0, 1);
        C(1, 1) = M(0, 0);
    } else {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
                const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
                C(i, j) = M(i1, j1) * M(i2, j2) - M(i1, j2) * M(i2, j1);
            }
    }
    return C;
}

}  // namespace

double cell_average_determinant(const CellDomain& dom, const Eigen::VectorXd& u, int vol_cell) {
    double s = 0.0;
    for (const auto& [slot, w] : dom.cell_weights[vol_cell]) {
        const auto& vs = dom.vol_simplices[slot];
        s += w * simplex_det(dom, u, vs) / vs.ref_det;
    }
    return s / dom.cell_volumes[vol_cell];
}

double volumetric_energy(const CellDomain& dom, const Eigen::VectorXd& u,
                         const VolumetricPotential& vol) {
    if (vol.kind == VolumetricKind::None) return 0.0;
    if (dom.n != dom.graph->dim())
        throw DimensionMismatch("volumetric term requires n = d");
    double h = 0.0;
    for (std::size_t c = 0; c < dom.vol_cells.size(); ++c)
        h += dom.cell_volumes[c] * vol.value(cell_average_determinant(dom, u, static_cast<int>(c)));
    return h;
}

double hamiltonian(const CellDomain& dom, const Eigen::VectorXd& u, const PairPotential& pair,
                   const VolumetricPotential& vol) {
    if (u.size() != dom.dofs()) throw MissingVertexValue("field size does not match domain");
    double h = 0.0;
    for (std::size_t e = 0; e < dom.edges.size(); ++e) {
        const auto [la, lb] = dom.edges[e];
        const Vec xi = dom.at(u, la) - dom.at(u, lb);
        const double mult =
            pair.edge_multiplier(dom.vertices[la], dom.vertices[lb]);
        h += pair_energy(pair, dom.edge_offsets[e], xi, mult);
    }
    return h + volumetric_energy(dom, u, vol);
}

Eigen::VectorXd hamiltonian_gradient(const CellDomain& dom, const Eigen::VectorXd& u,
                                     const PairPotential& pair,
                                     const VolumetricPotential& vol) {
    if (u.size() != dom.dofs()) throw MissingVertexValue("field size does not match domain");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dom.dofs());
    const int n = dom.n;
    for (std::size_t e = 0; e < dom.edges.size(); ++e) {
        const auto [la, lb] = dom.edges[e];
        const Vec xi = dom.at(u, la) - dom.at(u, lb);
        const double mult =
            pair.edge_multiplier(dom.vertices[la], dom.vertices[lb]);
        const Vec g = pair_gradient(pair, dom.edge_offsets[e], xi, mult);
        grad.segment(static_cast<long>(la) * n, n) += g;
        grad.segment(static_cast<long>(lb) * n, n) -= g;
    }

    if (vol.kind != VolumetricKind::None) {
        if (n != dom.graph->dim()) throw DimensionMismatch("volumetric term requires n = d");
        const int d = n;
        for (std::size_t c = 0; c < dom.vol_cells.size(); ++c) {
            const double s = cell_average_determinant(dom, u, static_cast<int>(c));
            const double dw = vol.derivative(s);  // |C1| * W'(s) * d s, |C1| cancels
            if (dw == 0.0) continue;
            for (const auto& [slot, w] : dom.cell_weights[c]) {
                const auto& vs = dom.vol_simplices[slot];
                Mat M(d, d);
                simplex_det(dom, u, vs, &M);
                const Mat C = cofactor_matrix(M);
                const double factor = dw * w / vs.ref_det;
                Vec base_accum = Vec::Zero(d);
                for (int k = 1; k <= d; ++k) {
                    const Vec gk = factor * C.col(k - 1);
                    grad.segment(static_cast<long>(vs.locals[k]) * n, n) += gk;
                    base_accum += gk;
                }
                grad.segment(static_cast<long>(vs.locals[0]) * n, n) -= base_accum;
            }
        }
    }

    for (int l = 0; l < dom.vertex_count(); ++l)
        if (dom.roles[l] == VertexRole::Clamped)
            grad.segment(static_cast<long>(l) * n, n).setZero();
    return grad;
}

DiscreteNorms discrete_norms(const CellDomain& dom, const Eigen::VectorXd& u, double p,
                             const Box* region) {
    DiscreteNorms out;
    double sv = 0.0, se = 0.0;
    for (int l = 0; l < dom.vertex_count(); ++l) {
        const Vec& x = dom.graph->positions[dom.vertices[l]];
        if (region && !region->contains(x)) continue;
        sv += std::pow(dom.at(u, l).norm(), p);
    }
    for (std::size_t e = 0; e < dom.edges.size(); ++e) {
        const auto [la, lb] = dom.edges[e];
        if (region) {
            const Vec& xa = dom.graph->positions[dom.vertices[la]];
            const Vec& xb = dom.graph->positions[dom.vertices[lb]];
            if (!region->contains(xa) || !region->contains(xb)) continue;
        }
        se += std::pow((dom.at(u, la) - dom.at(u, lb)).norm(), p);
    }
    out.vertex = std::pow(sv, 1.0 / p);
    out.edge = std::pow(se, 1.0 / p);
    return out;
}

}  // namespace polyhom
