#pragma once

#include "polyhom/graph.hpp"
#include "polyhom/potentials.hpp"

#include <Eigen/Dense>
#include <functional>

namespace polyhom {

struct MissingVertexValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BoundaryMode { Clamped, Soft };

enum class VertexRole : std::uint8_t { Free, SoftBoundary, Clamped };

// boundary datum in micro coordinates, x -> (1/eps) phi(eps x)
using DatumFn = std::function<Vec(const Vec&)>;

DatumFn linear_datum(const Eigen::MatrixXd& lambda);

// Piecewise-affine laminate in direction `normal`: gradient alternates
// between lambda + amp*a(x)n and lambda - amp*a(x)n with period `period`.
DatumFn laminate_datum(const Eigen::MatrixXd& lambda, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& normal, double amp, double period);

// Assembled finite window of a cell problem: vertices of D_eps, roles from
// the clamp band dist(x, bd D_eps) <= C0, in-domain edges, and the interior
// volumetric cells with their simplex overlap weights.
struct CellDomain {
    const ExtendedGraph* graph = nullptr;
    Box micro;  // D/eps
    BoundaryMode mode = BoundaryMode::Clamped;
    int n = 0;             // codomain dimension
    double clamp_width = 0.0;
    double volume = 0.0;   // |D_eps|

    std::vector<int> vertices;   // global vertex ids, graph order
    std::vector<int> local_of;   // global -> local index or -1
    std::vector<VertexRole> roles;
    std::vector<int> variable_locals;  // free + soft-boundary vertices

    std::vector<std::pair<int, int>> edges;  // local indices
    std::vector<Vec> edge_offsets;           // x_a - x_b per edge

    struct VolSimplex {
        std::vector<int> locals;  // d+1 local vertex ids
        double ref_det = 0.0;     // det(x_1-x_0 | ... | x_d-x_0)
    };
    std::vector<VolSimplex> vol_simplices;
    std::vector<int> vol_cells;  // indices into graph.cells1
    // per vol cell: (vol_simplex index, |T cap C1|) and |C1|
    std::vector<std::vector<std::pair<int, double>>> cell_weights;
    std::vector<double> cell_volumes;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int dofs() const { return n * vertex_count(); }
    int variable_dofs() const { return n * static_cast<int>(variable_locals.size()); }

    Eigen::Ref<const Eigen::VectorXd> at(const Eigen::VectorXd& u, int local) const {
        return u.segment(static_cast<long>(local) * n, n);
    }
};

// clamp_width < 0 uses the graph interaction range C0
CellDomain build_domain(const ExtendedGraph& g, const Box& micro, BoundaryMode mode, int n,
                        double clamp_width = -1.0);

// full field sampled from the datum (the affine competitor for linear data)
Eigen::VectorXd datum_field(const CellDomain& dom, const DatumFn& datum);

double hamiltonian(const CellDomain& dom, const Eigen::VectorXd& u, const PairPotential& pair,
                   const VolumetricPotential& vol);

// gradient over all vertices, zeroed at clamped ones
Eigen::VectorXd hamiltonian_gradient(const CellDomain& dom, const Eigen::VectorXd& u,
                                     const PairPotential& pair, const VolumetricPotential& vol);

// cell-averaged determinant of the piecewise affine interpolation
double cell_average_determinant(const CellDomain& dom, const Eigen::VectorXd& u, int vol_cell);

double volumetric_energy(const CellDomain& dom, const Eigen::VectorXd& u,
                         const VolumetricPotential& vol);

struct DiscreteNorms {
    double vertex = 0.0;  // (sum |u(x)|^p)^(1/p)
    double edge = 0.0;    // (sum_edges |u(x)-u(y)|^p)^(1/p)
};

// norms over the vertices/edges of `dom` lying in `region` (defaults to all)
DiscreteNorms discrete_norms(const CellDomain& dom, const Eigen::VectorXd& u, double p,
                             const Box* region = nullptr);

}  // namespace polyhom
