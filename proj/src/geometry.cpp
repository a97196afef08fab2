#include "polyhom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace polyhom {

std::vector<Halfspace> box_halfspaces(const Box& box) {
    const int d = box.dim();
    std::vector<Halfspace> hs;
    hs.reserve(2 * d);
    for (int i = 0; i < d; ++i) {
        Vec n = Vec::Zero(d);
        n[i] = 1.0;
        hs.push_back({n, box.hi[i]});
        hs.push_back({-n, -box.lo[i]});
    }
    return hs;
}

Halfspace bisector(const Vec& site, const Vec& other) {
    Vec n = other - site;
    const double c = 0.5 * (other.squaredNorm() - site.squaredNorm());
    return {n, c};
}

namespace {

// closed-form solve of A x = b for d <= 3 with a relative determinant guard;
// returns false for (near-)singular systems
bool solve_small(const Mat& A, const Vec& b, int d, Vec& x, double guard = 1e-10) {
    if (d == 1) {
        const double det = A(0, 0);
        if (std::abs(det) <= guard * (std::abs(A(0, 0)) + 1e-300)) return false;
        x[0] = b[0] / det;
        return true;
    }
    if (d == 2) {
        const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
        const double scale = A.row(0).norm() * A.row(1).norm();
        if (std::abs(det) <= guard * (scale + 1e-300)) return false;
        x[0] = (b[0] * A(1, 1) - b[1] * A(0, 1)) / det;
        x[1] = (A(0, 0) * b[1] - A(1, 0) * b[0]) / det;
        return true;
    }
    const double c00 = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
    const double c01 = A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2);
    const double c02 = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
    const double det = A(0, 0) * c00 + A(0, 1) * c01 + A(0, 2) * c02;
    const double scale = A.row(0).norm() * A.row(1).norm() * A.row(2).norm();
    if (std::abs(det) <= guard * (scale + 1e-300)) return false;
    const double c10 = A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2);
    const double c11 = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
    const double c12 = A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1);
    const double c20 = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
    const double c21 = A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2);
    const double c22 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    x[0] = (c00 * b[0] + c10 * b[1] + c20 * b[2]) / det;
    x[1] = (c01 * b[0] + c11 * b[1] + c21 * b[2]) / det;
    x[2] = (c02 * b[0] + c12 * b[1] + c22 * b[2]) / det;
    return true;
}

// enumerate d-subsets of planes, solve for candidate vertices, keep feasible
std::vector<Vec> enumerate_vertices(const std::vector<Halfspace>& planes, int d, double tol) {
    const int m = static_cast<int>(planes.size());
    std::vector<Vec> verts;

    Mat A(d, d);
    Vec b(d), x(d);
    auto try_subset = [&](const int* sel) {
        for (int i = 0; i < d; ++i) {
            A.row(i) = planes[sel[i]].normal.transpose();
            b[i] = planes[sel[i]].offset;
        }
        if (!solve_small(A, b, d, x)) return;
        for (const auto& h : planes) {
            const double scale = std::max(1.0, x.norm()) * std::max(1.0, h.normal.norm());
            if (h.signed_excess(x) > tol * scale) return;
        }
        verts.push_back(x);
    };

    int sel[3];
    if (d == 1) {
        for (int i = 0; i < m; ++i) {
            sel[0] = i;
            try_subset(sel);
        }
    } else if (d == 2) {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                sel[0] = i;
                sel[1] = j;
                try_subset(sel);
            }
    } else if (d == 3) {
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                for (int k = j + 1; k < m; ++k) {
                    sel[0] = i;
                    sel[1] = j;
                    sel[2] = k;
                    try_subset(sel);
                }
    } else {
        throw std::invalid_argument("polytope vertex enumeration supports d <= 3");
    }

    // deduplicate
    std::vector<Vec> unique;
    for (const auto& v : verts) {
        bool dup = false;
        for (const auto& u : unique)
            if ((u - v).norm() < 10 * tol * std::max(1.0, v.norm())) {
                dup = true;
                break;
            }
        if (!dup) unique.push_back(v);
    }
    return unique;
}

double polygon_area(std::vector<Vec> verts) {
    if (verts.size() < 3) return 0.0;
    Vec c = Vec::Zero(2);
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(verts.size());
    std::sort(verts.begin(), verts.end(), [&](const Vec& a, const Vec& b) {
        return std::atan2(a[1] - c[1], a[0] - c[0]) < std::atan2(b[1] - c[1], b[0] - c[0]);
    });
    double area = 0.0;
    const int n = static_cast<int>(verts.size());
    for (int i = 0; i < n; ++i) {
        const Vec& a = verts[i];
        const Vec& b = verts[(i + 1) % n];
        area += a[0] * b[1] - b[0] * a[1];
    }
    return 0.5 * std::abs(area);
}

// volume of a 3D polytope from its planes and vertex set: fan each face
// (vertices lying on an active plane, sorted around the face centroid)
// into triangles and sum signed tetrahedra against the body centroid
double polyhedron_volume(const std::vector<Halfspace>& planes, const std::vector<Vec>& verts,
                         double tol) {
    if (verts.size() < 4) return 0.0;
    Vec c = Vec::Zero(3);
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(verts.size());

    double vol = 0.0;
    for (const auto& h : planes) {
        const double nn = h.normal.norm();
        if (nn < tol) continue;
        std::vector<Vec> face;
        for (const auto& v : verts) {
            const double scale = std::max(1.0, v.norm()) * std::max(1.0, nn);
            if (std::abs(h.signed_excess(v)) <= 20 * tol * scale) face.push_back(v);
        }
        if (face.size() < 3) continue;
        Vec fc = Vec::Zero(3);
        for (const auto& v : face) fc += v;
        fc /= static_cast<double>(face.size());
        // in-plane basis
        Eigen::Vector3d n3(h.normal[0], h.normal[1], h.normal[2]);
        n3.normalize();
        Eigen::Vector3d e1 = n3.unitOrthogonal();
        Eigen::Vector3d e2 = n3.cross(e1);
        std::sort(face.begin(), face.end(), [&](const Vec& a, const Vec& b) {
            Eigen::Vector3d da(a[0] - fc[0], a[1] - fc[1], a[2] - fc[2]);
            Eigen::Vector3d db(b[0] - fc[0], b[1] - fc[1], b[2] - fc[2]);
            return std::atan2(da.dot(e2), da.dot(e1)) < std::atan2(db.dot(e2), db.dot(e1));
        });
        const int k = static_cast<int>(face.size());
        for (int i = 0; i < k; ++i) {
            Eigen::Vector3d a(face[i][0] - c[0], face[i][1] - c[1], face[i][2] - c[2]);
            const Vec& w = face[(i + 1) % k];
            Eigen::Vector3d b(w[0] - c[0], w[1] - c[1], w[2] - c[2]);
            Eigen::Vector3d f(fc[0] - c[0], fc[1] - c[1], fc[2] - c[2]);
            vol += std::abs(f.dot(a.cross(b))) / 6.0;
        }
    }
    return vol;
}

}  // namespace

Polytope make_polytope(std::vector<Halfspace> planes, int dim, double scale_hint) {
    Polytope p;
    p.dim = dim;
    const double tol = 1e-9 * std::max(1.0, scale_hint);
    p.vertices = enumerate_vertices(planes, dim, tol);
    p.planes = std::move(planes);
    if (p.vertices.empty()) return p;
    if (dim == 1) {
        double lo = p.vertices[0][0], hi = lo;
        for (const auto& v : p.vertices) {
            lo = std::min(lo, v[0]);
            hi = std::max(hi, v[0]);
        }
        p.volume = hi - lo;
    } else if (dim == 2) {
        p.volume = polygon_area(p.vertices);
    } else {
        p.volume = polyhedron_volume(p.planes, p.vertices, tol);
    }
    return p;
}

std::vector<Halfspace> simplex_halfspaces(const std::vector<Vec>& verts) {
    const int d = static_cast<int>(verts[0].size());
    if (static_cast<int>(verts.size()) != d + 1)
        throw std::invalid_argument("simplex needs d+1 vertices");
    std::vector<Halfspace> hs;
    hs.reserve(d + 1);
    for (int skip = 0; skip <= d; ++skip) {
        // facet spanned by all vertices except `skip`
        std::vector<Vec> facet;
        for (int i = 0; i <= d; ++i)
            if (i != skip) facet.push_back(verts[i]);
        Vec n(d);
        if (d == 1) {
            n[0] = 1.0;
        } else if (d == 2) {
            Vec e = facet[1] - facet[0];
            n[0] = -e[1];
            n[1] = e[0];
        } else {
            Eigen::Vector3d e1(facet[1][0] - facet[0][0], facet[1][1] - facet[0][1],
                               facet[1][2] - facet[0][2]);
            Eigen::Vector3d e2(facet[2][0] - facet[0][0], facet[2][1] - facet[0][1],
                               facet[2][2] - facet[0][2]);
            Eigen::Vector3d nx = e1.cross(e2);
            n << nx[0], nx[1], nx[2];
        }
        double c = n.dot(facet[0]);
        if (n.dot(verts[skip]) > c) {  // orient so the opposite vertex is inside
            n = -n;
            c = -c;
        }
        hs.push_back({n, c});
    }
    return hs;
}

double simplex_volume(const std::vector<Vec>& verts) {
    const int d = static_cast<int>(verts[0].size());
    Mat M(d, d);
    for (int i = 0; i < d; ++i) M.col(i) = verts[i + 1] - verts[0];
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    return std::abs(M.determinant()) / fact;
}

double clipped_simplex_volume(const std::vector<Vec>& simplex_vertices,
                              const std::vector<Halfspace>& clip, double scale_hint) {
    std::vector<Halfspace> planes = simplex_halfspaces(simplex_vertices);
    planes.insert(planes.end(), clip.begin(), clip.end());
    return make_polytope(std::move(planes), static_cast<int>(simplex_vertices[0].size()),
                         scale_hint)
        .volume;
}

Circumsphere circumsphere(const std::vector<Vec>& verts) {
    const int d = static_cast<int>(verts[0].size());
    Circumsphere cs;
    Mat A(d, d);
    Vec b(d), x(d);
    for (int i = 0; i < d; ++i) {
        A.row(i) = 2.0 * (verts[i + 1] - verts[0]).transpose();
        b[i] = verts[i + 1].squaredNorm() - verts[0].squaredNorm();
    }
    double diam = 0.0;
    for (int i = 1; i <= d; ++i) diam = std::max(diam, (verts[i] - verts[0]).norm());
    if (!solve_small(A, b, d, x, 1e-12)) {
        cs.degenerate = true;
        cs.center = verts[0];
        cs.radius = 0.0;
        return cs;
    }
    cs.center = x;
    cs.radius = (cs.center - verts[0]).norm();
    // guard against blow-up from near-degenerate input
    if (!std::isfinite(cs.radius) || cs.radius > 1e12 * std::max(1.0, diam)) cs.degenerate = true;
    return cs;
}

CellList::CellList(const std::vector<Vec>& points, const Box& box, double cell_size)
    : points_(points), box_(box), cell_(cell_size), dim_(box.dim()) {
    ncell_.resize(dim_);
    long total = 1;
    for (int i = 0; i < dim_; ++i) {
        ncell_[i] = std::max(1, static_cast<int>(std::ceil((box.hi[i] - box.lo[i]) / cell_)));
        total *= ncell_[i];
    }
    bins_.resize(static_cast<std::size_t>(total));
    for (int p = 0; p < static_cast<int>(points.size()); ++p)
        bins_[static_cast<std::size_t>(flat_index(cell_of(points[p])))].push_back(p);
}

Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1> CellList::cell_of(const Vec& x) const {
    Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1> c(dim_);
    for (int i = 0; i < dim_; ++i) {
        int ci = static_cast<int>(std::floor((x[i] - box_.lo[i]) / cell_));
        c[i] = std::clamp(ci, 0, ncell_[i] - 1);
    }
    return c;
}

long CellList::flat_index(const Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1>& c) const {
    long f = 0;
    for (int i = 0; i < dim_; ++i) f = f * ncell_[i] + c[i];
    return f;
}

std::vector<int> CellList::neighbors(const Vec& x, double radius) const {
    const int reach = std::max(1, static_cast<int>(std::ceil(radius / cell_)));
    auto c0 = cell_of(x);
    std::vector<int> out;
    Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 3, 1> c(dim_);
    std::vector<int> lo(dim_), hi(dim_);
    for (int i = 0; i < dim_; ++i) {
        lo[i] = std::max(0, c0[i] - reach);
        hi[i] = std::min(ncell_[i] - 1, c0[i] + reach);
    }
    std::vector<int> cur(lo);
    while (true) {
        for (int i = 0; i < dim_; ++i) c[i] = cur[i];
        for (int p : bins_[static_cast<std::size_t>(flat_index(c))])
            if ((points_[p] - x).norm() <= radius) out.push_back(p);
        int k = dim_ - 1;
        while (k >= 0) {
            if (++cur[k] <= hi[k]) break;
            cur[k] = lo[k];
            --k;
        }
        if (k < 0) break;
    }
    return out;
}

std::pair<double, int> CellList::nearest(const Vec& x) const {
    double radius = cell_;
    const double dmax = box_.diameter() + cell_;
    while (radius <= 2 * dmax) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int p : neighbors(x, radius)) {
            const double d = (points_[p] - x).norm();
            if (d < best) {
                best = d;
                arg = p;
            }
        }
        if (arg >= 0) return {best, arg};
        radius *= 2;
    }
    return {std::numeric_limits<double>::infinity(), -1};
}

double unit_ball_volume(int d) {
    const double pi = std::numbers::pi;
    switch (d) {
        case 1: return 2.0;
        case 2: return pi;
        case 3: return 4.0 * pi / 3.0;
        default: return std::pow(pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    }
}

}  // namespace polyhom
