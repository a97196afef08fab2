#include <doctest.h>

#include "polyhom/delaunay.hpp"
#include "polyhom/rng.hpp"

#include <set>

using namespace polyhom;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

// brute-force empty-circumsphere check over all point/simplex pairs
bool is_delaunay(const std::vector<Vec>& pts, const std::vector<Simplex>& simplices,
                 double tol) {
    for (const auto& s : simplices) {
        std::vector<Vec> verts;
        for (int i : s) verts.push_back(pts[i]);
        Circumsphere cs = circumsphere(verts);
        if (cs.degenerate) return false;
        for (int q = 0; q < static_cast<int>(pts.size()); ++q) {
            if (std::find(s.begin(), s.end(), q) != s.end()) continue;
            if ((pts[q] - cs.center).norm() < cs.radius * (1.0 - tol)) return false;
        }
    }
    return true;
}
}  // namespace

TEST_CASE("single triangle") {
    std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(0, 1)};
    auto tris = delaunay(pts, 2);
    REQUIRE(tris.size() == 1);
    CHECK(tris[0] == Simplex{0, 1, 2});
}

TEST_CASE("too few points") {
    std::vector<Vec> pts = {v2(0, 0), v2(1, 0)};
    CHECK_THROWS_AS(delaunay(pts, 2), DegenerateInput);
}

TEST_CASE("jittered unit square picks the near diagonal") {
    // with a tiny jitter the four points are no longer cocircular and the
    // triangulation must split along the diagonal favored by the
    // circumcircle test; the oracle tries both diagonals by brute force
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)};
        for (auto& p : pts) {
            p[0] += rng.uniform(-1e-2, 1e-2);
            p[1] += rng.uniform(-1e-2, 1e-2);
        }
        auto tris = delaunay(pts, 2);
        REQUIRE(tris.size() == 2);
        CHECK(is_delaunay(pts, tris, 1e-12));

        // oracle: of the two diagonal splits, exactly the Delaunay one passes
        const std::vector<std::vector<Simplex>> splits = {
            {{0, 1, 2}, {0, 2, 3}},  // diagonal 0-2
            {{0, 1, 3}, {1, 2, 3}},  // diagonal 1-3
        };
        int valid = -1;
        for (int k = 0; k < 2; ++k)
            if (is_delaunay(pts, splits[k], 1e-12)) valid = k;
        REQUIRE(valid >= 0);
        std::set<Simplex> got(tris.begin(), tris.end());
        std::set<Simplex> want(splits[valid].begin(), splits[valid].end());
        CHECK(got == want);
    }
}

TEST_CASE("exactly cocircular points rejected") {
    std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)};
    CHECK_THROWS_AS(delaunay(pts, 2), GeneralPositionViolated);
}

TEST_CASE("random 2d sets are delaunay and tile their hull") {
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<Vec> pts;
        for (int i = 0; i < 40; ++i) pts.push_back(v2(rng.uniform(0, 8), rng.uniform(0, 8)));
        auto tris = delaunay(pts, 2);
        CHECK(is_delaunay(pts, tris, 1e-9));
        // partition property: a point drawn inside one triangle lies in no
        // other, and arbitrary points lie in at most one
        auto count_containing = [&](const Vec& q, double margin) {
            int containing = 0;
            for (const auto& t : tris) {
                std::vector<Vec> verts = {pts[t[0]], pts[t[1]], pts[t[2]]};
                bool inside = true;
                for (const auto& h : simplex_halfspaces(verts))
                    if (h.signed_excess(q) > margin) inside = false;
                if (inside) ++containing;
            }
            return containing;
        };
        for (int s = 0; s < 100; ++s) {
            const auto& t = tris[rng.uniform_index(tris.size())];
            double w0 = rng.uniform(0.05, 0.9);
            double w1 = rng.uniform(0.05, 0.95 - w0);
            const Vec q = (w0 * pts[t[0]] + w1 * pts[t[1]] +
                           (1.0 - w0 - w1) * pts[t[2]])
                              .eval();
            CHECK(count_containing(q, 1e-9) == 1);
        }
        for (int s = 0; s < 100; ++s) {
            const Vec q = v2(rng.uniform(0, 8), rng.uniform(0, 8));
            CHECK(count_containing(q, -1e-9) <= 1);
        }
    }
}

TEST_CASE("1d delaunay is consecutive segments") {
    std::vector<Vec> pts;
    Vec p(1);
    for (double x : {3.0, 1.0, 2.0, 0.0}) {
        p[0] = x;
        pts.push_back(p);
    }
    auto segs = delaunay(pts, 1);
    REQUIRE(segs.size() == 3);
    CHECK(segs[0] == Simplex{1, 3});
    CHECK(segs[1] == Simplex{1, 2});
    CHECK(segs[2] == Simplex{0, 2});
}

TEST_CASE("3d delaunay on random points") {
    Rng rng(5);
    std::vector<Vec> pts;
    for (int i = 0; i < 25; ++i) {
        Vec p(3);
        p << rng.uniform(0, 4), rng.uniform(0, 4), rng.uniform(0, 4);
        pts.push_back(p);
    }
    auto tets = delaunay(pts, 3);
    CHECK(tets.size() > 10);
    CHECK(is_delaunay(pts, tets, 1e-9));
}

TEST_CASE("lattice triangulation covers the grid") {
    auto tris = lattice_triangulation({4, 4});
    CHECK(tris.size() == 2 * 3 * 3);  // two triangles per cell
    double area = 0.0;
    for (const auto& t : tris) {
        std::vector<Vec> verts;
        for (int i : t) verts.push_back(v2(i % 4, i / 4));
        area += simplex_volume(verts);
    }
    CHECK(area == doctest::Approx(9.0));

    auto tets = lattice_triangulation({3, 3, 3});
    CHECK(tets.size() == 6 * 8);  // six tetrahedra per cube
    double vol = 0.0;
    for (const auto& t : tets) {
        std::vector<Vec> verts;
        for (int i : t) {
            Vec p(3);
            p << (i / 9), (i / 3) % 3, i % 3;
            verts.push_back(p);
        }
        vol += simplex_volume(verts);
    }
    CHECK(vol == doctest::Approx(8.0));
}

TEST_CASE("lattice triangulation is a valid delaunay tie-break") {
    // circumspheres may touch other lattice points but must not strictly
    // contain any
    auto tris = lattice_triangulation({3, 3});
    std::vector<Vec> pts;
    for (int i = 0; i < 9; ++i) pts.push_back(v2(i % 3, i / 3));
    for (const auto& t : tris) {
        std::vector<Vec> verts = {pts[t[0]], pts[t[1]], pts[t[2]]};
        Circumsphere cs = circumsphere(verts);
        for (int q = 0; q < 9; ++q) {
            if (std::find(t.begin(), t.end(), q) != t.end()) continue;
            CHECK((pts[q] - cs.center).norm() >= cs.radius * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("simplex edge extraction") {
    auto edges = simplex_edges({{0, 1, 2}, {1, 2, 3}});
    CHECK(edges.size() == 5);
}
