#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace polyhom {

// Small dynamic vectors/matrices capped at dimension 3 (stack-allocated).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

// Axis-aligned half-open box [lo, hi).
struct Box {
    Vec lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }

    double volume() const {
        double v = 1.0;
        for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
        return v;
    }

    bool contains(const Vec& x) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lo[i] || x[i] >= hi[i]) return false;
        return true;
    }

    // closed membership with tolerance; used for domain vertex selection so
    // fixtures whose vertices sit exactly on the upper face are included
    bool contains_closed(const Vec& x, double tol = 1e-9) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        return true;
    }

    // distance to the boundary, positive inside, negative outside
    double boundary_distance(const Vec& x) const {
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dim(); ++i) {
            m = std::min(m, x[i] - lo[i]);
            m = std::min(m, hi[i] - x[i]);
        }
        return m;
    }

    double diameter() const { return (hi - lo).norm(); }

    Box scaled(double s) const { return Box{lo * s, hi * s}; }

    static Box cube(int d, double lo_, double hi_) {
        Box b;
        b.lo = Vec::Constant(d, lo_);
        b.hi = Vec::Constant(d, hi_);
        return b;
    }
};

// Closed half-space {x : n.x <= c}.
struct Halfspace {
    Vec normal;
    double offset;

    double signed_excess(const Vec& x) const { return normal.dot(x) - offset; }
};

std::vector<Halfspace> box_halfspaces(const Box& box);

// Bisector half-space of the segment [site, other], containing site.
Halfspace bisector(const Vec& site, const Vec& other);

// Bounded convex polytope given as an intersection of half-spaces, d <= 3.
// Vertices are enumerated from d-subsets of active planes; volume in d = 3
// uses the face fan around the centroid.
struct Polytope {
    int dim = 0;
    std::vector<Halfspace> planes;
    std::vector<Vec> vertices;  // deduplicated
    double volume = 0.0;
    bool empty() const { return vertices.empty(); }
};

Polytope make_polytope(std::vector<Halfspace> planes, int dim, double scale_hint = 1.0);

// Volume of the intersection of a d-simplex with a set of half-spaces.
double clipped_simplex_volume(const std::vector<Vec>& simplex_vertices,
                              const std::vector<Halfspace>& clip, double scale_hint = 1.0);

// Half-space representation of a nondegenerate d-simplex.
std::vector<Halfspace> simplex_halfspaces(const std::vector<Vec>& verts);

double simplex_volume(const std::vector<Vec>& verts);

struct Circumsphere {
    Vec center;
    double radius = 0.0;
    bool degenerate = false;  // affinely dependent vertices
};

Circumsphere circumsphere(const std::vector<Vec>& verts);

// Uniform spatial hash over a box, used for neighbor and covering queries.
class CellList {
public:
    CellList(const std::vector<Vec>& points, const Box& box, double cell_size);

    // indices of points within `radius` of x (superset-filtered exactly)
    std::vector<int> neighbors(const Vec& x, double radius) const;

    // distance to the nearest point (and its index); index -1 when empty
    std::pair<double, int> nearest(const Vec& x) const;

private:
    const std::vector<Vec>& points_;
    Box box_;
    double cell_ = 1.0;
    Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1> ncell_;
    std::vector<std::vector<int>> bins_;
    int dim_ = 0;

    long flat_index(const Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1>& c) const;
    Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1> cell_of(const Vec& x) const;
};

// volume of the unit ball in dimension d
double unit_ball_volume(int d);

}  // namespace polyhom
