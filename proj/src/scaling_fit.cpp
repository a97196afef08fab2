#include "polyhom/scaling_fit.hpp"

#include <cmath>
#include <limits>

namespace polyhom {

ScalingFit fit_scaling(const std::vector<ScalingPoint>& points, ScalingModel model,
                       double bounded_ratio_factor) {
    if (points.size() < 4) throw IllConditionedFit("need at least 4 points");
    ScalingFit fit;
    fit.model = model;

    auto weight = [](const ScalingPoint& p) {
        const double s = p.sigma > 0 ? p.sigma : 1e-12;
        return 1.0 / (s * s);
    };

    if (model == ScalingModel::PowerLog) {
        // y = a * log(x)/x through the origin of the regressor
        double num = 0.0, den = 0.0;
        for (const auto& p : points) {
            if (p.x <= 0) throw IllConditionedFit("power-log model needs x > 0");
            const double r = std::log(p.x) / p.x;
            num += weight(p) * r * p.y;
            den += weight(p) * r * r;
        }
        if (den <= 0 || !std::isfinite(den))
            throw IllConditionedFit("degenerate regressor in power-log fit");
        fit.a = num / den;
    } else {
        // y = a + b/x
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
        for (const auto& p : points) {
            if (p.x == 0) throw IllConditionedFit("inverse-L model needs x != 0");
            const double w = weight(p);
            const double r = 1.0 / p.x;
            s0 += w;
            s1 += w * r;
            s2 += w * r * r;
            t0 += w * p.y;
            t1 += w * r * p.y;
        }
        const double det = s0 * s2 - s1 * s1;
        if (std::abs(det) < 1e-14 * std::max(1.0, s0 * s2))
            throw IllConditionedFit("inverse-L normal equations singular");
        fit.a = (s2 * t0 - s1 * t1) / det;
        fit.b = (s0 * t1 - s1 * t0) / det;
    }

    double chi2 = 0.0;
    for (const auto& p : points) {
        const double pred = model == ScalingModel::PowerLog
                                ? fit.a * std::log(p.x) / p.x
                                : fit.a + fit.b / p.x;
        const double s = p.sigma > 0 ? p.sigma : 1e-12;
        const double z = (p.y - pred) / s;
        fit.standardized_residuals.push_back(z);
        chi2 += z * z;
        if (std::abs(z) > 5.0) fit.outlier_free = false;
    }
    fit.residual = std::sqrt(chi2 / static_cast<double>(points.size()));

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : points) {
        if (p.x <= 1.0) continue;  // log x / x changes sign at 1
        const double ratio = std::abs(p.y / (std::log(p.x) / p.x));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    fit.ratio_spread = lo > 0 && std::isfinite(lo) ? hi / lo : 0.0;
    fit.ratio_bounded = fit.ratio_spread <= bounded_ratio_factor;
    return fit;
}

}  // namespace polyhom
