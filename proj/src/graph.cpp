#include "polyhom/graph.hpp"
#include "polyhom/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>

namespace polyhom {

void GraphParams::validate() const {
    if (dimension < 1 || dimension > 3)
        throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (hardcore_radius <= 0) throw std::invalid_argument("hard-core radius r must be positive");
    if (covering_radius < 0.5 * hardcore_radius)
        throw std::invalid_argument("covering radius R must satisfy R >= r/2");
    if (6.0 * covering_radius >= interaction_range)
        throw std::invalid_argument("interaction range must satisfy 6R < C0");
    if (monomer_length <= 0) throw std::invalid_argument("monomer length must be positive");
    if (volumetric_fraction <= 0.0 || volumetric_fraction > 1.0)
        throw std::invalid_argument("volumetric fraction q must lie in (0,1]");
    if (ensemble == Ensemble::JitteredLattice) {
        if (jitter < 0) throw std::invalid_argument("jitter amplitude must be nonnegative");
        if (jitter > 0 && jitter >= 0.5 * (1.0 - hardcore_radius))
            throw std::invalid_argument("jitter must satisfy a < (1-r)/2 for the unit lattice");
    }
}

std::vector<int> ExtendedGraph::l1_vertices() const {
    std::vector<int> out;
    for (int i = 0; i < vertex_count(); ++i)
        if (volumetric[i]) out.push_back(i);
    return out;
}

namespace {

std::vector<Vec> jittered_lattice_positions(const GraphParams& p, const Box& window,
                                            std::vector<std::vector<int>>* grid_coords) {
    const int d = p.dimension;
    std::vector<int> lo(d), count(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = static_cast<int>(std::ceil(window.lo[i]));
        const int hi = static_cast<int>(std::ceil(window.hi[i]));  // z < hi
        count[i] = hi - lo[i];
        if (count[i] <= 0) throw WindowTooSmall("window contains no lattice sites");
    }
    std::vector<Vec> pts;
    std::vector<int> z(d, 0);
    while (true) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = lo[i] + z[i];
        if (p.jitter > 0) {
            // jitter stream keyed by lattice coordinates: stationary by construction
            std::uint64_t key = 0;
            for (int i = 0; i < d; ++i)
                key = key * 0x100000001b3ULL + static_cast<std::uint64_t>(lo[i] + z[i] + 1000003);
            Rng jit(p.seed, key);
            for (int i = 0; i < d; ++i) x[i] += jit.uniform(-p.jitter, p.jitter);
        }
        if (grid_coords) {
            std::vector<int> zz(d);
            for (int i = 0; i < d; ++i) zz[i] = z[i];
            grid_coords->push_back(zz);
        }
        pts.push_back(x);
        int k = d - 1;
        while (k >= 0) {
            if (++z[k] < count[k]) break;
            z[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return pts;
}

std::vector<Vec> hardcore_poisson_positions(const GraphParams& p, const Box& window) {
    const int d = p.dimension;
    const double r = p.hardcore_radius;
    // sequential adsorption at high candidate intensity; near-saturated
    // packings have covering radius close to r
    const double intensity = 8.0 / (unit_ball_volume(d) * std::pow(r, d));
    const double mean = intensity * window.volume();
    Rng rng(p.seed, 0xB0551ED5);
    // Poisson draw via inversion on exp; mean is large, use normal approx guard
    long n_cand = static_cast<long>(std::floor(mean + std::sqrt(mean) * rng.normal() + 0.5));
    if (n_cand < 1) n_cand = 1;

    std::vector<Vec> accepted;
    Box padded = window;
    CellList* cl = nullptr;
    std::vector<Vec> store;
    store.reserve(static_cast<std::size_t>(n_cand) / 4);
    // rebuild the cell list occasionally; queries dominate otherwise
    auto rebuild = [&]() {
        delete cl;
        cl = store.empty() ? nullptr : new CellList(store, padded, std::max(r, 1e-3));
    };
    long since = 0;
    for (long k = 0; k < n_cand; ++k) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(window.lo[i], window.hi[i]);
        bool ok = true;
        if (cl) {
            for (int q : cl->neighbors(x, r)) {
                (void)q;
                ok = false;
                break;
            }
        }
        if (ok)
            for (std::size_t q = store.size() - std::min<std::size_t>(since, store.size());
                 q < store.size(); ++q)
                if ((store[q] - x).norm() < r) {
                    ok = false;
                    break;
                }
        if (ok) {
            store.push_back(x);
            ++since;
            if (since >= 256) {
                rebuild();
                since = 0;
            }
        }
    }
    delete cl;
    return store;
}

// Covering probes live on a grid of spacing r/4 over the window eroded by R:
// the finite surrogate of condition (i). A probe at least R from the boundary
// has its covering point of the infinite graph inside the window, so the
// eroded check agrees with the infinite one; closer to the boundary coverage
// is one-sided by construction.
template <class Fn>
void for_each_covering_probe(const Box& window, double r, double R, Fn&& fn) {
    const int d = window.dim();
    const double step = r / 4.0;
    const double erode = R;
    std::vector<int> counts(d);
    for (int i = 0; i < d; ++i)
        counts[i] = std::max(1, static_cast<int>(std::ceil(
                                    (window.hi[i] - window.lo[i] - 2 * erode) / step)));
    std::vector<int> z(d, 0);
    while (true) {
        Vec probe(d);
        for (int i = 0; i < d; ++i)
            probe[i] = std::min(window.lo[i] + erode + (z[i] + 0.5) * step,
                                window.hi[i] - erode);
        fn(probe);
        int k = d - 1;
        while (k >= 0) {
            if (++z[k] < counts[k]) break;
            z[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
}

// Bernoulli(q) volumetric flags, then greedy repair: flag the nearest
// unflagged vertex to any probe farther than R from the flagged set.
std::vector<std::uint8_t> draw_and_repair_flags(const GraphParams& p, const Box& window,
                                                const std::vector<Vec>& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<std::uint8_t> flags(n, 0);
    Rng rng(p.seed, 0xF1A65);
    for (int i = 0; i < n; ++i) flags[i] = rng.uniform() < p.volumetric_fraction ? 1 : 0;

    CellList cl(pts, window, std::max(p.covering_radius, p.hardcore_radius));
    const double R = p.covering_radius;

    for_each_covering_probe(window, p.hardcore_radius, R, [&](const Vec& probe) {
        bool covered = false;
        double best_unflagged = std::numeric_limits<double>::infinity();
        int arg_unflagged = -1;
        for (int q : cl.neighbors(probe, R)) {
            if (flags[q]) {
                covered = true;
                break;
            }
            const double dist = (pts[q] - probe).norm();
            if (dist < best_unflagged) {
                best_unflagged = dist;
                arg_unflagged = q;
            }
        }
        if (!covered) {
            if (arg_unflagged < 0)
                throw CoveringRepairFailed("no vertex within R of probe point");
            flags[arg_unflagged] = 1;
        }
    });
    return flags;
}

std::vector<std::vector<CellOverlap>> compute_overlaps(const std::vector<VoronoiCell>& cells1,
                                                       const std::vector<Vec>& positions,
                                                       const std::vector<Simplex>& simplices,
                                                       int dim) {
    std::vector<Vec> centroids;
    std::vector<double> reach(simplices.size(), 0.0);
    centroids.reserve(simplices.size());
    for (std::size_t t = 0; t < simplices.size(); ++t) {
        Vec c = Vec::Zero(dim);
        for (int v : simplices[t]) c += positions[v];
        c /= static_cast<double>(simplices[t].size());
        for (int v : simplices[t]) reach[t] = std::max(reach[t], (positions[v] - c).norm());
        centroids.push_back(c);
    }

    std::vector<std::vector<CellOverlap>> out(cells1.size());
    std::vector<Vec> verts;
    std::vector<Halfspace> cut;
    for (std::size_t ci = 0; ci < cells1.size(); ++ci) {
        const VoronoiCell& cell = cells1[ci];
        if (cell.vertices.empty()) continue;
        const Vec& site = positions[cell.site];
        double cell_reach = 0.0;
        for (const auto& v : cell.vertices) cell_reach = std::max(cell_reach, (v - site).norm());
        const double tol = 1e-12 * std::max(1.0, cell.volume);
        for (std::size_t t = 0; t < simplices.size(); ++t) {
            if ((centroids[t] - site).norm() > reach[t] + cell_reach + 1e-9) continue;
            verts.clear();
            for (int v : simplices[t]) verts.push_back(positions[v]);
            // keep only cell planes that actually cut the simplex's bounding
            // sphere; a plane separating the whole simplex kills the overlap
            cut.clear();
            bool separated = false;
            for (const auto& h : cell.planes) {
                const double margin = reach[t] * h.normal.norm() + 1e-12;
                const double excess = h.signed_excess(centroids[t]);
                if (excess > margin) {
                    separated = true;
                    break;
                }
                if (excess > -margin) cut.push_back(h);
            }
            if (separated) continue;
            const double vol = cut.empty()
                                   ? simplex_volume(verts)
                                   : clipped_simplex_volume(verts, cut, cell_reach + 1.0);
            if (vol > tol)
                out[ci].push_back({static_cast<int>(t), vol});
        }
    }
    return out;
}

void finalize_graph(ExtendedGraph& g) {
    const int d = g.params.dimension;
    g.cells = voronoi_cells(g.positions, g.window, g.params.covering_radius);

    std::vector<int> l1 = g.l1_vertices();
    std::vector<Vec> pts1;
    pts1.reserve(l1.size());
    for (int i : l1) pts1.push_back(g.positions[i]);
    g.cells1 = voronoi_cells(pts1, g.window, g.params.covering_radius);
    for (auto& c : g.cells1) c.site = l1[c.site];  // back to global vertex index
    g.l1_index.assign(g.positions.size(), -1);
    for (std::size_t k = 0; k < l1.size(); ++k) g.l1_index[l1[k]] = static_cast<int>(k);

    // simplices are stored with global vertex indices
    g.overlaps1 = compute_overlaps(g.cells1, g.positions, g.simplices, d);

    g.adjacency.assign(g.positions.size(), {});
    for (const auto& [a, b] : g.edges) {
        g.adjacency[a].push_back(b);
        g.adjacency[b].push_back(a);
    }
}

std::vector<Simplex> map_indices(const std::vector<Simplex>& simplices,
                                 const std::vector<int>& to_global) {
    std::vector<Simplex> out;
    out.reserve(simplices.size());
    for (const auto& s : simplices) {
        Simplex m;
        for (int v : s) m.push_back(to_global[v]);
        std::sort(m.begin(), m.end());
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

std::vector<VoronoiCell> voronoi_cells(const std::vector<Vec>& points, const Box& window,
                                       double neighbor_radius) {
    const int d = window.dim();
    double R = neighbor_radius > 0 ? neighbor_radius : window.diameter();
    std::vector<VoronoiCell> cells(points.size());
    if (points.empty()) return cells;
    CellList cl(points, window, std::max(2.0 * R / 8.0, 1e-3));
    const auto window_planes = box_halfspaces(window);
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
        VoronoiCell c;
        c.site = i;
        // deep-interior cells are contained in B_R, so active bisector
        // partners sit within 2R; near the window boundary coverage is
        // one-sided and cells can reach further. Start from the 2R plane
        // set and add farther bisectors only when they cut the computed
        // polytope (checked against its vertices), recomputing until stable.
        const bool deep = window.boundary_distance(points[i]) > 2.0 * R;
        std::vector<Halfspace> planes;
        std::vector<int> far_candidates;
        for (int q : cl.neighbors(points[i], 4.0 * R + 1e-9)) {
            if (q == i) continue;
            if ((points[q] - points[i]).norm() <= 2.0 * R + 1e-9)
                planes.push_back(bisector(points[i], points[q]));
            else if (!deep)
                far_candidates.push_back(q);
        }
        planes.insert(planes.end(), window_planes.begin(), window_planes.end());
        Polytope poly = make_polytope(std::move(planes), d, std::max(1.0, R));
        for (int pass = 0; pass < 4 && !far_candidates.empty(); ++pass) {
            std::vector<Halfspace> extra;
            for (int q : far_candidates) {
                const Halfspace h = bisector(points[i], points[q]);
                for (const auto& v : poly.vertices)
                    if (h.signed_excess(v) >
                        1e-9 * std::max(1.0, v.norm()) * h.normal.norm()) {
                        extra.push_back(h);
                        break;
                    }
            }
            if (extra.empty()) break;
            std::vector<Halfspace> all = poly.planes;
            all.insert(all.end(), extra.begin(), extra.end());
            poly = make_polytope(std::move(all), d, std::max(1.0, R));
        }
        c.volume = poly.volume;
        c.vertices = std::move(poly.vertices);
        // keep only planes active at some vertex (pruned representation)
        for (const auto& h : poly.planes) {
            bool active = false;
            for (const auto& v : c.vertices) {
                const double scale =
                    std::max(1.0, v.norm()) * std::max(1.0, h.normal.norm());
                if (std::abs(h.signed_excess(v)) <= 1e-7 * scale) {
                    active = true;
                    break;
                }
            }
            if (active) c.planes.push_back(h);
        }
        // interior cells carry the Delone sandwich: beyond 2R from the
        // boundary every cell point is two-sidedly covered
        c.interior = deep;
        cells[i] = std::move(c);
    }
    return cells;
}

ExtendedGraph generate_graph(const GraphParams& params, const Box& window) {
    params.validate();
    if (window.dim() != params.dimension)
        throw std::invalid_argument("window dimension mismatch");
    for (int i = 0; i < window.dim(); ++i)
        if (window.hi[i] - window.lo[i] < 4.0 * params.interaction_range)
            throw WindowTooSmall("window side lengths must be at least 4*C0");

    ExtendedGraph g;
    g.params = params;
    g.window = window;

    const bool lattice_fixture_path =
        params.ensemble == Ensemble::JitteredLattice && params.jitter == 0.0 &&
        params.dimension >= 2;

    std::vector<std::vector<int>> grid;
    if (params.ensemble == Ensemble::JitteredLattice)
        g.positions = jittered_lattice_positions(params, window, &grid);
    else
        g.positions = hardcore_poisson_positions(params, window);

    if (g.positions.size() < static_cast<std::size_t>(params.dimension + 1))
        throw WindowTooSmall("window holds fewer than d+1 vertices");

    std::vector<Simplex> full_simplices;
    if (lattice_fixture_path) {
        if (params.volumetric_fraction < 1.0)
            throw std::invalid_argument(
                "zero-jitter lattice fixture requires q = 1 (ties in the Delaunay of a "
                "proper lattice subset are not tie-broken)");
        std::vector<int> shape(params.dimension);
        for (int i = 0; i < params.dimension; ++i) {
            int mx = 0;
            for (const auto& z : grid) mx = std::max(mx, z[i]);
            shape[i] = mx + 1;
        }
        full_simplices = lattice_triangulation(shape);
        g.fixture_only = true;
    } else {
        full_simplices = delaunay(g.positions, params.dimension);
    }

    for (const auto& [a, b] : simplex_edges(full_simplices))
        if ((g.positions[a] - g.positions[b]).norm() <= params.interaction_range)
            g.edges.push_back({a, b});

    g.volumetric = draw_and_repair_flags(params, window, g.positions);

    const bool all_flagged =
        std::all_of(g.volumetric.begin(), g.volumetric.end(), [](auto f) { return f != 0; });
    if (all_flagged) {
        g.simplices = full_simplices;
    } else {
        std::vector<int> l1 = g.l1_vertices();
        std::vector<Vec> pts1;
        for (int i : l1) pts1.push_back(g.positions[i]);
        if (lattice_fixture_path)
            throw std::invalid_argument("lattice fixture requires all vertices volumetric");
        g.simplices = map_indices(delaunay(pts1, params.dimension), l1);
    }

    finalize_graph(g);
    return g;
}

ExtendedGraph lattice_fixture(const std::vector<int>& shape, double interaction_range,
                              double spacing) {
    const int d = static_cast<int>(shape.size());
    ExtendedGraph g;
    g.params.dimension = d;
    g.params.ensemble = Ensemble::JitteredLattice;
    g.params.jitter = 0.0;
    g.params.hardcore_radius = spacing;
    g.params.covering_radius = spacing * std::sqrt(static_cast<double>(d)) / 2.0 * 1.0001;
    g.params.interaction_range = interaction_range;
    g.params.volumetric_fraction = 1.0;
    g.fixture_only = d >= 2;

    // vertex-centered window: each lattice site owns one unit cell, so the
    // window volume equals the vertex count times spacing^d
    g.window.lo = Vec::Constant(d, -0.5 * spacing);
    g.window.hi = Vec::Constant(d, 0.0);
    for (int i = 0; i < d; ++i) g.window.hi[i] = (shape[i] - 0.5) * spacing;

    std::vector<int> z(d, 0);
    while (true) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = z[i] * spacing;
        g.positions.push_back(x);
        int k = d - 1;
        while (k >= 0) {
            if (++z[k] < shape[k]) break;
            z[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    g.volumetric.assign(g.positions.size(), 1);

    std::vector<Simplex> simplices =
        d == 1 ? delaunay(g.positions, 1) : lattice_triangulation(shape);
    for (const auto& [a, b] : simplex_edges(simplices))
        if ((g.positions[a] - g.positions[b]).norm() <= interaction_range)
            g.edges.push_back({a, b});
    g.simplices = std::move(simplices);

    finalize_graph(g);
    return g;
}

ExtendedGraph jittered_fixture(const std::vector<int>& shape, double amplitude,
                               std::uint64_t seed, double interaction_range, double spacing) {
    const int d = static_cast<int>(shape.size());
    GraphParams p;
    p.dimension = d;
    p.jitter = amplitude;
    p.hardcore_radius = spacing * (1.0 - 2.0 * amplitude) * (1.0 - 1e-9);
    p.covering_radius = spacing * (1.0 + 2.0 * amplitude) * std::sqrt(d) / 2.0;
    p.interaction_range = interaction_range;
    p.seed = seed;

    std::vector<Vec> pts;
    Rng rng(seed, 0xF17);
    std::vector<int> z(d, 0);
    while (true) {
        Vec v(d);
        for (int i = 0; i < d; ++i)
            v[i] = spacing * (z[i] + rng.uniform(-amplitude, amplitude));
        pts.push_back(v);
        int k = d - 1;
        while (k >= 0) {
            if (++z[k] < shape[k]) break;
            z[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    std::vector<Simplex> simplices = delaunay(pts, d);
    std::vector<std::pair<int, int>> edges;
    for (const auto& [a, b] : simplex_edges(simplices))
        if ((pts[a] - pts[b]).norm() <= interaction_range) edges.push_back({a, b});
    Box win;
    win.lo = Vec::Constant(d, -0.5 * spacing);
    win.hi = Vec(d);
    for (int i = 0; i < d; ++i) win.hi[i] = spacing * (shape[i] - 0.5);
    std::vector<std::uint8_t> flags(pts.size(), 1);
    return assemble_graph(std::move(p), std::move(win), std::move(pts), std::move(flags),
                          std::move(edges), std::move(simplices), false);
}

ExtendedGraph assemble_graph(GraphParams params, Box window, std::vector<Vec> positions,
                             std::vector<std::uint8_t> volumetric,
                             std::vector<std::pair<int, int>> edges,
                             std::vector<Simplex> simplices, bool fixture_only) {
    ExtendedGraph g;
    g.params = std::move(params);
    g.window = std::move(window);
    g.positions = std::move(positions);
    g.volumetric = std::move(volumetric);
    g.edges = std::move(edges);
    g.simplices = std::move(simplices);
    g.fixture_only = fixture_only;
    finalize_graph(g);
    return g;
}

std::vector<int> interior_voronoi_cells(const ExtendedGraph& g, const Box& micro_domain) {
    std::vector<int> out;
    for (std::size_t ci = 0; ci < g.cells1.size(); ++ci) {
        if (g.overlaps1[ci].empty()) continue;
        bool inside = true;
        double covered = 0.0;
        for (const auto& ov : g.overlaps1[ci]) {
            covered += ov.volume;
            for (int v : g.simplices[ov.simplex])
                if (!micro_domain.contains_closed(g.positions[v])) {
                    inside = false;
                    break;
                }
            if (!inside) break;
        }
        // a cell at the tessellated hull is touched by simplices that do not
        // exist in the finite window; on the infinite graph those would lie
        // outside D_eps, so the cell is not interior
        if (covered < g.cells1[ci].volume * (1.0 - 1e-8)) inside = false;
        if (inside) out.push_back(static_cast<int>(ci));
    }
    return out;
}

ValidationReport validate_graph(const ExtendedGraph& g, std::uint64_t sample_seed,
                                int corridor_samples) {
    ValidationReport rep;
    const auto& p = g.params;
    const int n = g.vertex_count();

    // (i) covering of the (eroded) window by L1, probed at spacing r/4
    {
        std::vector<int> l1 = g.l1_vertices();
        std::vector<Vec> pts1;
        for (int i : l1) pts1.push_back(g.positions[i]);
        CellList cl(pts1, g.window, std::max(p.covering_radius, p.hardcore_radius));
        double worst = 0.0;
        for_each_covering_probe(g.window, p.hardcore_radius, p.covering_radius,
                                [&](const Vec& probe) {
                                    worst = std::max(worst, cl.nearest(probe).first);
                                });
        rep.covering = {worst <= p.covering_radius + 1e-12, worst, "max covering gap"};
    }

    // (ii) hard-core separation
    {
        CellList cl(g.positions, g.window, std::max(p.hardcore_radius, 1e-3));
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            for (int q : cl.neighbors(g.positions[i], p.hardcore_radius * 2))
                if (q != i) worst = std::min(worst, (g.positions[q] - g.positions[i]).norm());
        rep.separation = {worst >= p.hardcore_radius - 1e-12, worst, "min pairwise distance"};
    }

    // (iii) edge range
    {
        double worst = 0.0;
        for (const auto& [a, b] : g.edges)
            worst = std::max(worst, (g.positions[a] - g.positions[b]).norm());
        rep.edge_range = {worst <= p.interaction_range + 1e-12, worst, "longest edge"};
    }

    // (iv) corridor connectivity on a seeded sample of vertex pairs: a path
    // must exist through vertices within C0 of the segment [x,y]
    {
        Rng rng(sample_seed, 0xC0881D08);
        int failures = 0;
        const double C0 = p.interaction_range;
        for (int s = 0; s < corridor_samples; ++s) {
            const int a = static_cast<int>(rng.uniform_index(n));
            const int b = static_cast<int>(rng.uniform_index(n));
            if (a == b) continue;
            const Vec& xa = g.positions[a];
            const Vec& xb = g.positions[b];
            const Vec dir = xb - xa;
            const double len2 = dir.squaredNorm();
            auto in_corridor = [&](const Vec& q) {
                double t = len2 > 0 ? (q - xa).dot(dir) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                return (q - (xa + t * dir)).norm() <= C0 + 1e-12;
            };
            // breadth-first search restricted to the corridor
            std::vector<std::uint8_t> seen(n, 0);
            std::deque<int> queue{a};
            seen[a] = 1;
            bool reached = false;
            while (!queue.empty()) {
                const int v = queue.front();
                queue.pop_front();
                if (v == b) {
                    reached = true;
                    break;
                }
                for (int w : g.adjacency[v]) {
                    if (seen[w] || !in_corridor(g.positions[w])) continue;
                    seen[w] = 1;
                    queue.push_back(w);
                }
            }
            if (!reached) ++failures;
        }
        rep.corridor = {failures == 0, static_cast<double>(failures),
                        "corridor path failures out of " + std::to_string(corridor_samples)};
    }

    // (v) general position of L1 via circumsphere clearance
    if (g.fixture_only) {
        rep.general_position = {true, 0.0, "fixture-only graph: condition (v) skipped"};
    } else {
        std::vector<int> l1 = g.l1_vertices();
        std::vector<Vec> pts1;
        for (int i : l1) pts1.push_back(g.positions[i]);
        std::vector<int> back(g.vertex_count(), -1);
        for (std::size_t k = 0; k < l1.size(); ++k) back[l1[k]] = static_cast<int>(k);
        std::vector<Simplex> local = g.simplices;
        for (auto& s : local)
            for (auto& v : s) v = back[v];
        const double clearance = min_circumsphere_clearance(pts1, local);
        rep.general_position = {clearance >= 1e-9, clearance,
                                "min relative circumsphere clearance"};
    }

    return rep;
}

namespace {

nlohmann::json vec_to_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const nlohmann::json& a) {
    Vec v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
    return v;
}

}  // namespace

nlohmann::json params_to_json(const GraphParams& p) {
    return nlohmann::json{
        {"dimension", p.dimension},
        {"covering_radius", p.covering_radius},
        {"hardcore_radius", p.hardcore_radius},
        {"interaction_range", p.interaction_range},
        {"monomer_length", p.monomer_length},
        {"ensemble", p.ensemble == Ensemble::JitteredLattice ? "jittered-lattice"
                                                             : "hardcore-poisson"},
        {"jitter", p.jitter},
        {"volumetric_fraction", p.volumetric_fraction},
        {"seed", p.seed},
    };
}

GraphParams params_from_json(const nlohmann::json& j) {
    GraphParams p;
    p.dimension = j.value("dimension", 2);
    p.covering_radius = j.value("covering_radius", 1.0);
    p.hardcore_radius = j.value("hardcore_radius", 0.5);
    p.interaction_range = j.value("interaction_range", 6.5);
    p.monomer_length = j.value("monomer_length", 0.1);
    const std::string e = j.value("ensemble", "jittered-lattice");
    if (e == "jittered-lattice")
        p.ensemble = Ensemble::JitteredLattice;
    else if (e == "hardcore-poisson")
        p.ensemble = Ensemble::HardcorePoisson;
    else
        throw std::invalid_argument("unknown ensemble: " + e);
    p.jitter = j.value("jitter", 0.2);
    p.volumetric_fraction = j.value("volumetric_fraction", 1.0);
    p.seed = j.value("seed", static_cast<std::uint64_t>(0));
    return p;
}

nlohmann::json graph_to_json(const ExtendedGraph& g) {
    nlohmann::json j;
    j["version"] = 1;
    j["params"] = params_to_json(g.params);
    j["window"] = {{"lo", vec_to_json(g.window.lo)}, {"hi", vec_to_json(g.window.hi)}};
    j["fixture_only"] = g.fixture_only;
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& x : g.positions) pos.push_back(vec_to_json(x));
    j["positions"] = std::move(pos);
    j["volumetric_flags"] = g.volumetric;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    j["edges"] = std::move(edges);
    j["simplices"] = g.simplices;
    return j;
}

ExtendedGraph graph_from_json(const nlohmann::json& j) {
    if (j.value("version", 0) != 1) throw std::invalid_argument("unsupported graph version");
    ExtendedGraph g;
    g.params = params_from_json(j.at("params"));
    g.window.lo = vec_from_json(j.at("window").at("lo"));
    g.window.hi = vec_from_json(j.at("window").at("hi"));
    g.fixture_only = j.value("fixture_only", false);
    for (const auto& a : j.at("positions")) g.positions.push_back(vec_from_json(a));
    g.volumetric = j.at("volumetric_flags").get<std::vector<std::uint8_t>>();
    for (const auto& e : j.at("edges")) g.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    g.simplices = j.at("simplices").get<std::vector<Simplex>>();
    finalize_graph(g);
    return g;
}

void save_graph(const ExtendedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << graph_to_json(g).dump(2) << "\n";
}

ExtendedGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return graph_from_json(j);
}

}  // namespace polyhom
