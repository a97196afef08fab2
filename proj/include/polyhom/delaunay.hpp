#pragma once

#include "polyhom/geometry.hpp"

#include <stdexcept>
#include <vector>

namespace polyhom {

struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeneralPositionViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Simplex = std::vector<int>;  // d+1 vertex indices, sorted

// Delaunay tessellation by incremental insertion (Bowyer-Watson), d <= 3.
// After construction every simplex is verified against all non-member points:
// signed circumsphere clearance below -tol_gp*radius, a clearance within
// tol_gp*radius of zero, or an affinely dependent simplex throws
// GeneralPositionViolated. tol_gp is relative to the circumradius.
std::vector<Simplex> delaunay(const std::vector<Vec>& points, int dim, double tol_gp = 1e-9);

// smallest |signed clearance| over all (simplex, non-member point) pairs,
// scaled by the circumradius; used by the graph validator
double min_circumsphere_clearance(const std::vector<Vec>& points,
                                  const std::vector<Simplex>& simplices);

// Kuhn triangulation of an integer grid: the deterministic Delaunay
// tie-break for the cubic lattice (cells split along the main diagonal from
// the lexicographically smallest corner). `shape[i]` counts vertices per
// axis; vertex index is row-major.
std::vector<Simplex> lattice_triangulation(const std::vector<int>& shape);

std::vector<std::pair<int, int>> simplex_edges(const std::vector<Simplex>& simplices);

}  // namespace polyhom
