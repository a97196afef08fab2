#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace polyhom {

struct IllConditionedFit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScalingPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

enum class ScalingModel { PowerLog, InverseL };

struct ScalingFit {
    ScalingModel model;
    double a = 0.0;  // InverseL: y = a + b/x; PowerLog: y = a log(x)/x (b unused)
    double b = 0.0;
    double residual = 0.0;  // weighted rms residual
    std::vector<double> standardized_residuals;
    bool ratio_bounded = true;  // max/min of y/(log x / x) within the factor
    double ratio_spread = 0.0;
    bool outlier_free = true;  // no |standardized residual| above 5
};

// weighted least squares of the two scaling forms; >= 4 points required
ScalingFit fit_scaling(const std::vector<ScalingPoint>& points, ScalingModel model,
                       double bounded_ratio_factor = 3.0);

}  // namespace polyhom
