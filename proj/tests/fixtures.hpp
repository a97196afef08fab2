#pragma once

#include "polyhom/graph.hpp"
#include "polyhom/rng.hpp"

// shared desk-scale fixtures for the test suites

namespace polyhom::testfix {

// 1d chain 0..n-1 with window [0, n-1]: |D_eps| equals the edge count
inline ExtendedGraph chain_graph(int nodes) {
    GraphParams p;
    p.dimension = 1;
    p.hardcore_radius = 0.9;
    p.covering_radius = 0.51;
    p.interaction_range = 1.5;
    std::vector<Vec> pts;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < nodes; ++i) {
        Vec v(1);
        v << static_cast<double>(i);
        pts.push_back(v);
        if (i > 0) edges.push_back({i - 1, i});
    }
    std::vector<Simplex> segs;
    for (int i = 0; i + 1 < nodes; ++i) segs.push_back({i, i + 1});
    Box win;
    win.lo = Vec::Constant(1, 0.0);
    win.hi = Vec::Constant(1, static_cast<double>(nodes - 1));
    return assemble_graph(p, win, pts, std::vector<std::uint8_t>(nodes, 1), edges, segs);
}

// square jittered lattice fixture from the library builder
inline ExtendedGraph jittered_fixture(int side, double amplitude, std::uint64_t seed,
                                      double interaction_range = 2.0) {
    return polyhom::jittered_fixture({side, side}, amplitude, seed, interaction_range);
}

}  // namespace polyhom::testfix
