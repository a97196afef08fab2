#include "polyhom/delaunay.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace polyhom {

namespace {

struct WorkSimplex {
    Simplex v;       // indices into the working point array
    Vec center;
    double radius2 = 0.0;
    bool alive = true;
};

WorkSimplex make_work(const std::vector<Vec>& pts, Simplex v) {
    WorkSimplex s;
    std::sort(v.begin(), v.end());
    s.v = std::move(v);
    std::vector<Vec> verts;
    for (int i : s.v) verts.push_back(pts[i]);
    Circumsphere cs = circumsphere(verts);
    if (cs.degenerate) {
        s.alive = false;  // sliver; caller decides
        s.center = verts[0];
        s.radius2 = 0.0;
        return s;
    }
    s.center = cs.center;
    s.radius2 = cs.radius * cs.radius;
    return s;
}

std::vector<Simplex> delaunay_1d(const std::vector<Vec>& points, double tol_gp) {
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return points[a][0] < points[b][0]; });
    std::vector<Simplex> out;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double gap = points[order[i + 1]][0] - points[order[i]][0];
        if (gap < tol_gp)
            throw GeneralPositionViolated("coincident points in 1d input");
        out.push_back({std::min(order[i], order[i + 1]), std::max(order[i], order[i + 1])});
    }
    return out;
}

}  // namespace

std::vector<Simplex> delaunay(const std::vector<Vec>& points, int dim, double tol_gp) {
    const int n = static_cast<int>(points.size());
    if (n < dim + 1) throw DegenerateInput("need at least d+1 points");
    if (dim == 1) return delaunay_1d(points, tol_gp);
    if (dim > 3) throw std::invalid_argument("delaunay supports d <= 3");

    // working point array: input points then d+1 super-simplex vertices
    std::vector<Vec> pts = points;
    Vec lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec mid = 0.5 * (lo + hi);
    const double ext = std::max((hi - lo).norm(), 1.0);
    const double S = 200.0 * ext;

    if (dim == 2) {
        Vec a(2), b(2), c(2);
        a << mid[0], mid[1] + 2 * S;
        b << mid[0] - 1.8 * S, mid[1] - S;
        c << mid[0] + 1.8 * S, mid[1] - S;
        pts.push_back(a);
        pts.push_back(b);
        pts.push_back(c);
    } else {
        Vec a(3), b(3), c(3), d(3);
        a << mid[0] + 3 * S, mid[1], mid[2];
        b << mid[0] - S, mid[1] + 2.8 * S, mid[2];
        c << mid[0] - S, mid[1] - 1.4 * S, mid[2] + 2.4 * S;
        d << mid[0] - S, mid[1] - 1.4 * S, mid[2] - 2.4 * S;
        pts.push_back(a);
        pts.push_back(b);
        pts.push_back(c);
        pts.push_back(d);
    }

    std::vector<WorkSimplex> tris;
    {
        Simplex super(dim + 1);
        std::iota(super.begin(), super.end(), n);
        WorkSimplex s0 = make_work(pts, super);
        if (!s0.alive) throw std::logic_error("super simplex degenerate");
        tris.push_back(std::move(s0));
    }

    for (int p = 0; p < n; ++p) {
        const Vec& x = pts[p];
        // simplices whose circumsphere strictly contains x (small inward slack
        // keeps near-ties out; the final verification settles exact status)
        std::vector<int> bad;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            if (!tris[t].alive) continue;
            const double d2 = (x - tris[t].center).squaredNorm();
            if (d2 < tris[t].radius2 * (1.0 - 1e-12)) bad.push_back(t);
        }
        if (bad.empty())
            throw GeneralPositionViolated("insertion found no containing circumsphere");

        // boundary facets appear exactly once among bad simplices
        std::map<Simplex, int> facet_count;
        for (int t : bad) {
            const Simplex& v = tris[t].v;
            for (int skip = 0; skip <= dim; ++skip) {
                Simplex f;
                for (int i = 0; i <= dim; ++i)
                    if (i != skip) f.push_back(v[i]);
                facet_count[f] += 1;
            }
            tris[t].alive = false;
        }
        for (const auto& [facet, cnt] : facet_count) {
            if (cnt != 1) continue;
            Simplex v = facet;
            v.push_back(p);
            WorkSimplex s = make_work(pts, v);
            if (!s.alive) {
                // point exactly on a boundary facet plane: tie
                throw GeneralPositionViolated("degenerate simplex during insertion");
            }
            tris.push_back(std::move(s));
        }
    }

    std::vector<Simplex> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (*std::max_element(t.v.begin(), t.v.end()) >= n) continue;  // touches super
        out.push_back(t.v);
    }
    if (out.empty()) throw GeneralPositionViolated("all points affinely dependent");

    // empty-circumsphere verification with relative tolerance
    const double worst = min_circumsphere_clearance(points, out);
    if (worst < tol_gp)
        throw GeneralPositionViolated("circumsphere clearance below tolerance: " +
                                      std::to_string(worst));
    return out;
}

double min_circumsphere_clearance(const std::vector<Vec>& points,
                                  const std::vector<Simplex>& simplices) {
    if (simplices.empty()) return 0.0;
    const int dim = static_cast<int>(points[0].size());
    Vec lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Box bb{lo - Vec::Constant(dim, 1.0), hi + Vec::Constant(dim, 1.0)};
    CellList cl(points, bb, std::max(1.0, bb.diameter() / 64.0));

    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : simplices) {
        std::vector<Vec> verts;
        for (int i : s) verts.push_back(points[i]);
        Circumsphere cs = circumsphere(verts);
        if (cs.degenerate) return -1.0;
        const double margin = std::max(1e-7, 1e-3 * cs.radius);
        for (int q : cl.neighbors(cs.center, cs.radius + margin)) {
            if (std::find(s.begin(), s.end(), q) != s.end()) continue;
            const double clearance = ((points[q] - cs.center).norm() - cs.radius) / cs.radius;
            worst = std::min(worst, std::abs(clearance));
            if (clearance < -1e-7) return clearance;  // inside: not Delaunay / cospherical
        }
    }
    return worst;
}

std::vector<Simplex> lattice_triangulation(const std::vector<int>& shape) {
    const int dim = static_cast<int>(shape.size());
    std::vector<long> stride(dim, 1);
    for (int i = dim - 2; i >= 0; --i) stride[i] = stride[i + 1] * shape[i + 1];
    auto flat = [&](const std::vector<int>& z) {
        long f = 0;
        for (int i = 0; i < dim; ++i) f += stride[i] * z[i];
        return static_cast<int>(f);
    };

    for (int i = 0; i < dim; ++i)
        if (shape[i] < 2) return {};

    std::vector<Simplex> out;
    std::vector<int> z(dim, 0);
    auto emit_cell = [&](const std::vector<int>& base) {
        if (dim == 1) {
            out.push_back({flat(base), flat({base[0] + 1})});
            return;
        }
        std::vector<int> axes(dim);
        std::iota(axes.begin(), axes.end(), 0);
        // one simplex per axis permutation: walk from the cell's smallest
        // corner to the main diagonal end one axis at a time
        std::sort(axes.begin(), axes.end());
        do {
            Simplex s;
            std::vector<int> cur = base;
            s.push_back(flat(cur));
            for (int a : axes) {
                cur[a] += 1;
                s.push_back(flat(cur));
            }
            std::sort(s.begin(), s.end());
            out.push_back(std::move(s));
        } while (std::next_permutation(axes.begin(), axes.end()));
    };

    while (true) {
        emit_cell(z);
        int k = dim - 1;
        while (k >= 0) {
            if (++z[k] < shape[k] - 1) break;
            z[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    // dedupe (2d cells emit each triangle once, but keep this safe for 3d)
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::pair<int, int>> simplex_edges(const std::vector<Simplex>& simplices) {
    std::set<std::pair<int, int>> seen;
    for (const auto& s : simplices)
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                seen.insert({std::min(s[i], s[j]), std::max(s[i], s[j])});
    return {seen.begin(), seen.end()};
}

}  // namespace polyhom
