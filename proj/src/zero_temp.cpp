#include "polyhom/zero_temp.hpp"
#include "polyhom/scaling_fit.hpp"

#include <cmath>

namespace polyhom {

WInfEstimate estimate_w_inf(const Eigen::MatrixXd& lambda, const PairPotential& pair,
                            const VolumetricPotential& vol, const WInfParams& params) {
    if (params.window_sides.size() < 3)
        throw std::invalid_argument("need at least 3 window sides for extrapolation");
    if (params.seeds.empty()) throw std::invalid_argument("need at least one seed");

    WInfEstimate out;
    for (double side : params.window_sides) {
        WindowEstimate we;
        we.side = side;
        for (std::uint64_t seed : params.seeds) {
            ExtendedGraph g = params.make_graph(side, seed);
            CellProblem prob;
            prob.graph = &g;
            prob.micro = params.place_domain(g, side);
            prob.lambda = lambda;
            prob.mode = BoundaryMode::Clamped;
            prob.pair = pair;
            prob.vol = vol;
            prob.clamp_width = params.clamp_width;
            MinimizeOptions mo = params.minimize;
            mo.seed = seed;
            const MinimizationResult res = minimize_cell(prob, mo);
            we.densities.push_back(res.density);
            we.restart_spread = std::max(we.restart_spread, res.restart_spread);
        }
        double mean = 0.0;
        for (double v : we.densities) mean += v;
        mean /= static_cast<double>(we.densities.size());
        double var = 0.0;
        for (double v : we.densities) var += (v - mean) * (v - mean);
        we.mean_density = mean;
        we.stderr_density =
            we.densities.size() > 1
                ? std::sqrt(var / (static_cast<double>(we.densities.size()) *
                                   (static_cast<double>(we.densities.size()) - 1.0)))
                : 0.0;
        out.windows.push_back(std::move(we));
    }

    // Richardson-style fit density(L) = a + b/L, weighted by seed scatter
    {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
        for (const auto& w : out.windows) {
            const double sig = w.stderr_density > 0 ? w.stderr_density : 1e-12;
            const double wt = 1.0 / (sig * sig);
            const double r = 1.0 / w.side;
            s0 += wt;
            s1 += wt * r;
            s2 += wt * r * r;
            t0 += wt * w.mean_density;
            t1 += wt * r * w.mean_density;
        }
        const double det = s0 * s2 - s1 * s1;
        if (std::abs(det) < 1e-14 * std::max(1.0, s0 * s2))
            throw std::invalid_argument("window schedule too degenerate for the 1/L fit");
        out.extrapolated = (s2 * t0 - s1 * t1) / det;
        out.slope = (s0 * t1 - s1 * t0) / det;
        double chi2 = 0.0;
        for (const auto& w : out.windows) {
            const double sig = w.stderr_density > 0 ? w.stderr_density : 1e-12;
            const double z = (w.mean_density - out.extrapolated - out.slope / w.side) / sig;
            chi2 += z * z;
        }
        out.fit_residual = std::sqrt(chi2 / static_cast<double>(out.windows.size()));
    }

    const auto& last = out.windows[out.windows.size() - 1];
    const auto& prev = out.windows[out.windows.size() - 2];
    out.cauchy_gap = std::abs(last.mean_density - prev.mean_density) /
                     std::max(std::abs(last.mean_density), 1e-300);
    return out;
}

std::vector<Box> partition_box(const Box& box, const std::vector<int>& counts) {
    const int d = box.dim();
    if (static_cast<int>(counts.size()) != d)
        throw PartitionInvalid("counts must match the box dimension");
    for (int c : counts)
        if (c < 1) throw PartitionInvalid("counts must be positive");
    std::vector<Box> parts;
    std::vector<int> idx(d, 0);
    while (true) {
        Box b;
        b.lo = Vec(d);
        b.hi = Vec(d);
        for (int i = 0; i < d; ++i) {
            const double w = (box.hi[i] - box.lo[i]) / counts[i];
            b.lo[i] = box.lo[i] + idx[i] * w;
            b.hi[i] = box.lo[i] + (idx[i] + 1) * w;
        }
        parts.push_back(b);
        int k = d - 1;
        while (k >= 0) {
            if (++idx[k] < counts[k]) break;
            idx[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return parts;
}

namespace {

// H^{d-1}(bd part \ bd whole)
double interior_surface(const Box& part, const Box& whole) {
    const int d = part.dim();
    double area = 0.0;
    for (int i = 0; i < d; ++i) {
        double face = 1.0;
        for (int j = 0; j < d; ++j)
            if (j != i) face *= part.hi[j] - part.lo[j];
        if (std::abs(part.lo[i] - whole.lo[i]) > 1e-12) area += face;
        if (std::abs(part.hi[i] - whole.hi[i]) > 1e-12) area += face;
    }
    return area;
}

}  // namespace

SubadditivityReport subadditivity_check(const ExtendedGraph& g, const Box& whole,
                                        const std::vector<Box>& parts,
                                        const Eigen::MatrixXd& lambda,
                                        const PairPotential& pair,
                                        const VolumetricPotential& vol,
                                        const MinimizeOptions& opts, double clamp_width) {
    // parts must tile the whole box
    double vol_sum = 0.0;
    for (const auto& p : parts) vol_sum += p.volume();
    if (std::abs(vol_sum - whole.volume()) > 1e-9 * whole.volume())
        throw PartitionInvalid("parts do not partition the box");

    auto minimize_on = [&](const Box& box) {
        CellProblem prob;
        prob.graph = &g;
        prob.micro = box;
        prob.lambda = lambda;
        prob.mode = BoundaryMode::Clamped;
        prob.pair = pair;
        prob.vol = vol;
        prob.clamp_width = clamp_width;
        return minimize_cell(prob, opts);
    };

    SubadditivityReport rep;
    const MinimizationResult whole_res = minimize_on(whole);
    rep.sigma_whole = whole_res.energy;

    double surface = 0.0;
    for (const auto& p : parts) {
        const MinimizationResult r = minimize_on(p);
        rep.sigma_parts += r.energy;
        rep.part_densities.push_back(r.density);
        surface += interior_surface(p, whole);
    }

    // C_Lambda = C(|Lambda|^p + 1) with C from the fitted upper growth
    const GrowthReport growth = growth_check(pair, vol);
    const double c_upper = std::max({growth.c2_upper, growth.cp_upper, 1e-12});
    const double p_exp = pair.growth_exponent;
    rep.c_lambda = c_upper * (std::pow(lambda.norm(), p_exp) + 1.0);
    rep.surface_term = rep.c_lambda * surface;
    rep.slack = rep.sigma_parts + rep.surface_term - rep.sigma_whole;
    return rep;
}

RankOneReport rank_one_probe(const Eigen::MatrixXd& lambda0, const Eigen::VectorXd& a,
                             const Eigen::VectorXd& direction, const std::vector<double>& ts,
                             const DensityEstimator& estimator) {
    if (a.norm() == 0 || direction.norm() == 0)
        throw std::invalid_argument("rank-one direction must be nonzero");
    RankOneReport rep;
    const Eigen::MatrixXd rank1 = a * direction.transpose();
    for (double t : ts) {
        const auto [value, se] = estimator((lambda0 + t * rank1).eval());
        rep.points.push_back({t, value, se});
    }
    rep.min_defect = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 2 < rep.points.size(); ++i) {
        const auto& p1 = rep.points[i];
        const auto& p2 = rep.points[i + 1];
        const auto& p3 = rep.points[i + 2];
        // only exact midpoints qualify
        if (std::abs(0.5 * (p1.t + p3.t) - p2.t) > 1e-9 * (std::abs(p3.t - p1.t) + 1e-12))
            continue;
        const double defect = 0.5 * (p1.value + p3.value) - p2.value;
        const double sigma = std::sqrt(0.25 * p1.stderr_value * p1.stderr_value +
                                       p2.stderr_value * p2.stderr_value +
                                       0.25 * p3.stderr_value * p3.stderr_value);
        rep.defects.push_back(defect);
        rep.defect_sigmas.push_back(sigma);
        rep.min_defect = std::min(rep.min_defect, defect);
    }
    if (rep.defects.empty()) rep.min_defect = 0.0;
    return rep;
}

}  // namespace polyhom
