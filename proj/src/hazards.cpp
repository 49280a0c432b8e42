#include "crcop/hazards.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crcop {

namespace {

void require_positive_time(double t) {
    if (!(t > 0.0)) {
        std::ostringstream msg;
        msg << "hazard: t = " << t << " must be positive";
        throw std::domain_error(msg.str());
    }
}

double dot(std::span<const double> z, const std::vector<double>& coeffs) {
    if (z.size() != coeffs.size())
        throw std::invalid_argument("covariate dimension does not match coefficient vector");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += z[i] * coeffs[i];
    return acc;
}

} // namespace

void MarginalHazardSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("marginal hazard: scale/rate must be positive");
    if (baseline == BaselineFamily::weibull && (!(shape > 0.0) || !std::isfinite(shape)))
        throw std::invalid_argument("marginal hazard: Weibull shape must be positive");
    for (double c : coeffs)
        if (!std::isfinite(c)) throw std::invalid_argument("marginal hazard: non-finite coefficient");
}

double covariate_factor(const MarginalHazardSpec& spec, std::span<const double> z) {
    return std::exp(dot(z, spec.coeffs));
}

double baseline_hazard(const MarginalHazardSpec& spec, double t) {
    require_positive_time(t);
    if (spec.baseline == BaselineFamily::exponential) return spec.scale;
    return spec.shape * spec.scale * std::pow(spec.scale * t, spec.shape - 1.0);
}

double baseline_cumulative_hazard(const MarginalHazardSpec& spec, double t) {
    require_positive_time(t);
    if (spec.baseline == BaselineFamily::exponential) return spec.scale * t;
    return std::pow(spec.scale * t, spec.shape);
}

double hazard(const MarginalHazardSpec& spec, double t, std::span<const double> z) {
    return baseline_hazard(spec, t) * covariate_factor(spec, z);
}

double cumulative_hazard(const MarginalHazardSpec& spec, double t, std::span<const double> z) {
    return baseline_cumulative_hazard(spec, t) * covariate_factor(spec, z);
}

double survival(const MarginalHazardSpec& spec, double t, std::span<const double> z) {
    return std::exp(-cumulative_hazard(spec, t, z));
}

double inverse_survival(const MarginalHazardSpec& spec, double s, std::span<const double> z) {
    if (!(s > 0.0 && s < 1.0)) {
        std::ostringstream msg;
        msg << "inverse_survival: s = " << s << " outside (0, 1)";
        throw std::domain_error(msg.str());
    }
    const double target = -std::log(s) / covariate_factor(spec, z);
    if (spec.baseline == BaselineFamily::exponential) return target / spec.scale;
    return std::pow(target, 1.0 / spec.shape) / spec.scale;
}

} // namespace crcop
