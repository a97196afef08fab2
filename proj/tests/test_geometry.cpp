#include <doctest.h>

#include "polyhom/geometry.hpp"
#include "polyhom/rng.hpp"

using namespace polyhom;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}
Vec v3(double x, double y, double z) {
    Vec v(3);
    v << x, y, z;
    return v;
}
}  // namespace

TEST_CASE("box basics") {
    Box b = Box::cube(2, 0.0, 4.0);
    CHECK(b.volume() == doctest::Approx(16.0));
    CHECK(b.contains(v2(0.0, 3.999)));
    CHECK_FALSE(b.contains(v2(4.0, 1.0)));       // half-open
    CHECK(b.contains_closed(v2(4.0, 1.0)));
    CHECK(b.boundary_distance(v2(1.0, 2.0)) == doctest::Approx(1.0));
}

TEST_CASE("polytope from box halfspaces") {
    Box b = Box::cube(2, -1.0, 2.0);
    Polytope p = make_polytope(box_halfspaces(b), 2);
    CHECK(p.vertices.size() == 4);
    CHECK(p.volume == doctest::Approx(9.0));
}

TEST_CASE("halfspace clip of a square, analytic") {
    // clip x + y <= 1 off the unit square: remaining area = 1/2
    auto planes = box_halfspaces(Box::cube(2, 0.0, 1.0));
    Vec n = v2(1.0, 1.0);
    planes.push_back({n, 1.0});
    Polytope p = make_polytope(planes, 2);
    CHECK(p.volume == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("3d cube and clipped corner") {
    Polytope cube = make_polytope(box_halfspaces(Box::cube(3, 0.0, 2.0)), 3);
    CHECK(cube.volume == doctest::Approx(8.0).epsilon(1e-9));
    // cutting the corner at x+y+z <= 1 leaves 8 - 1/6
    auto planes = box_halfspaces(Box::cube(3, 0.0, 2.0));
    planes.push_back({v3(-1.0, -1.0, -1.0), -1.0});  // x+y+z >= 1
    Polytope cut = make_polytope(planes, 3);
    CHECK(cut.volume == doctest::Approx(8.0 - 1.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("simplex volume and halfspace form") {
    std::vector<Vec> tri = {v2(0, 0), v2(1, 0), v2(0, 1)};
    CHECK(simplex_volume(tri) == doctest::Approx(0.5));
    Polytope p = make_polytope(simplex_halfspaces(tri), 2);
    CHECK(p.volume == doctest::Approx(0.5).epsilon(1e-12));

    std::vector<Vec> tet = {v3(0, 0, 0), v3(2, 0, 0), v3(0, 3, 0), v3(0, 0, 4)};
    CHECK(simplex_volume(tet) == doctest::Approx(4.0));
    Polytope q = make_polytope(simplex_halfspaces(tet), 3);
    CHECK(q.volume == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("clipped simplex volume vs monte carlo") {
    // random triangles clipped by random half-planes, checked against a
    // sampling oracle
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Vec> tri(3);
        for (auto& p : tri) p = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (simplex_volume(tri) < 0.05) continue;
        Vec n = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        if (n.norm() < 0.1) continue;
        const double c = rng.uniform(-0.5, 0.5);
        const double vol = clipped_simplex_volume(tri, {{n, c}});

        // oracle: rejection sampling over the triangle's bounding box
        Vec lo = tri[0].cwiseMin(tri[1]).cwiseMin(tri[2]);
        Vec hi = tri[0].cwiseMax(tri[1]).cwiseMax(tri[2]);
        auto inside_tri = [&](const Vec& x) {
            for (const auto& h : simplex_halfspaces(tri))
                if (h.signed_excess(x) > 1e-12) return false;
            return true;
        };
        const int samples = 200000;
        long hits = 0;
        Rng mc(100 + rep);
        for (int s = 0; s < samples; ++s) {
            Vec x = v2(mc.uniform(lo[0], hi[0]), mc.uniform(lo[1], hi[1]));
            if (inside_tri(x) && n.dot(x) <= c) ++hits;
        }
        const double box_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        const double mc_vol = box_area * static_cast<double>(hits) / samples;
        const double sigma = box_area * std::sqrt(0.25 / samples);
        CHECK(std::abs(vol - mc_vol) < 5 * sigma + 1e-4);
    }
}

TEST_CASE("circumsphere of right triangle") {
    std::vector<Vec> tri = {v2(0, 0), v2(2, 0), v2(0, 2)};
    Circumsphere cs = circumsphere(tri);
    CHECK_FALSE(cs.degenerate);
    CHECK(cs.center[0] == doctest::Approx(1.0));
    CHECK(cs.center[1] == doctest::Approx(1.0));
    CHECK(cs.radius == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("degenerate circumsphere flagged") {
    std::vector<Vec> collinear = {v2(0, 0), v2(1, 1), v2(2, 2)};
    CHECK(circumsphere(collinear).degenerate);
}

TEST_CASE("cell list neighbors match brute force") {
    Rng rng(42);
    std::vector<Vec> pts;
    Box box = Box::cube(2, 0.0, 10.0);
    for (int i = 0; i < 300; ++i) pts.push_back(v2(rng.uniform(0, 10), rng.uniform(0, 10)));
    CellList cl(pts, box, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        Vec q = v2(rng.uniform(0, 10), rng.uniform(0, 10));
        const double radius = rng.uniform(0.3, 3.0);
        auto got = cl.neighbors(q, radius);
        std::sort(got.begin(), got.end());
        std::vector<int> want;
        for (int i = 0; i < 300; ++i)
            if ((pts[i] - q).norm() <= radius) want.push_back(i);
        CHECK(got == want);
    }
}

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(3.14159265358979));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.18879020478639));
}
