#pragma once

#include "polyhom/delaunay.hpp"
#include "polyhom/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace polyhom {

struct WindowTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoveringRepairFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Ensemble { JitteredLattice, HardcorePoisson };

struct GraphParams {
    int dimension = 2;
    double covering_radius = 1.0;    // R
    double hardcore_radius = 0.5;    // r
    double interaction_range = 6.5;  // C0, edges are no longer than this
    double monomer_length = 0.1;     // monomer size, sets N_xy = (|x-y|/l)^2
    Ensemble ensemble = Ensemble::JitteredLattice;
    double jitter = 0.2;              // uniform in [-a,a]^d per lattice site
    double volumetric_fraction = 1.0; // Bernoulli(q) flags before covering repair
    std::uint64_t seed = 0;

    // throws std::invalid_argument when r, R, C0 or the jitter amplitude
    // violate the admissibility constraints (r > 0, R >= r/2, 6R < C0,
    // a < (1-r)/2 for the unit lattice)
    void validate() const;
};

struct VoronoiCell {
    int site = -1;                  // index into the generating point list
    std::vector<Halfspace> planes;  // active bisector and window planes
    std::vector<Vec> vertices;
    double volume = 0.0;
    bool interior = false;  // cell provably inside the window (dist to boundary > R)
};

struct CellOverlap {
    int simplex = -1;
    double volume = 0.0;
};

struct ExtendedGraph {
    GraphParams params;
    Box window;
    std::vector<Vec> positions;               // vertex set L
    std::vector<std::uint8_t> volumetric;     // flags S; L1 = flagged subset
    std::vector<std::pair<int, int>> edges;   // canonical i < j, |x-y| <= C0
    std::vector<Simplex> simplices;           // Delaunay tessellation of L1
    std::vector<VoronoiCell> cells;           // Voronoi of L, one per vertex
    std::vector<VoronoiCell> cells1;          // Voronoi of L1, in L1 order
    std::vector<int> l1_index;                // vertex -> position in cells1, or -1
    std::vector<std::vector<CellOverlap>> overlaps1;  // per L1 cell: |T cap C1|
    std::vector<std::vector<int>> adjacency;
    bool fixture_only = false;  // deterministic lattice: excluded from condition (v)

    int dim() const { return params.dimension; }
    int vertex_count() const { return static_cast<int>(positions.size()); }
    std::vector<int> l1_vertices() const;
};

struct ValidationReport {
    struct Condition {
        bool pass = false;
        double witness = 0.0;
        std::string note;
    };
    Condition covering;          // (i)  max covering gap vs R
    Condition separation;        // (ii) min pairwise distance vs r
    Condition edge_range;        // (iii) longest edge vs C0
    Condition corridor;          // (iv) sampled corridor connectivity
    Condition general_position;  // (v)  circumsphere clearance vs tol

    bool pass() const {
        return covering.pass && separation.pass && edge_range.pass && corridor.pass &&
               general_position.pass;
    }
};

ExtendedGraph generate_graph(const GraphParams& params, const Box& window);

// Deterministic unit-lattice fixture with an explicit interaction range;
// bypasses the 6R < C0 parameter constraint so small clamped bands can be
// exercised at desk scale. shape[i] = vertex count along axis i.
ExtendedGraph lattice_fixture(const std::vector<int>& shape, double interaction_range,
                              double spacing = 1.0);

// Jittered-lattice fixture assembled directly: Delaunay edges and
// tessellation of the jittered sites, explicit interaction range, no window
// size constraint. Used for desk-scale estimator fixtures.
ExtendedGraph jittered_fixture(const std::vector<int>& shape, double amplitude,
                               std::uint64_t seed, double interaction_range,
                               double spacing = 1.0);

// Assemble a graph from explicit combinatorics (fixture/deserialization
// path): recomputes Voronoi cells, overlaps and adjacency.
ExtendedGraph assemble_graph(GraphParams params, Box window, std::vector<Vec> positions,
                             std::vector<std::uint8_t> volumetric,
                             std::vector<std::pair<int, int>> edges,
                             std::vector<Simplex> simplices, bool fixture_only = true);

ValidationReport validate_graph(const ExtendedGraph& g, std::uint64_t sample_seed = 12345,
                                int corridor_samples = 200);

// Voronoi cells of `points` clipped to `window`. neighbor_radius bounds the
// distance at which bisectors may still be active (pass the covering radius
// R when the points are Delone; defaults to the window diameter).
std::vector<VoronoiCell> voronoi_cells(const std::vector<Vec>& points, const Box& window,
                                       double neighbor_radius = -1.0);

// Indices into cells1 of the interior volumetric cells for the micro domain:
// cells all of whose positively-overlapping simplices lie inside the box.
std::vector<int> interior_voronoi_cells(const ExtendedGraph& g, const Box& micro_domain);

nlohmann::json graph_to_json(const ExtendedGraph& g);
ExtendedGraph graph_from_json(const nlohmann::json& j);
void save_graph(const ExtendedGraph& g, const std::string& path);
ExtendedGraph load_graph(const std::string& path);

nlohmann::json params_to_json(const GraphParams& p);
GraphParams params_from_json(const nlohmann::json& j);

}  // namespace polyhom
