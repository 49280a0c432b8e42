#pragma once

#include <span>
#include <vector>

namespace crcop {

enum class BaselineFamily { exponential, weibull };

/// Proportional-hazards marginal: baseline hazard times exp(z . coeffs).
/// The exponential baseline has constant hazard `scale`; the Weibull
/// baseline has hazard shape * scale * (scale * t)^(shape - 1) and
/// cumulative hazard (scale * t)^shape, so both invert in closed form.
struct MarginalHazardSpec {
    BaselineFamily baseline = BaselineFamily::exponential;
    double scale = 1.0;
    double shape = 1.0; // ignored for exponential
    std::vector<double> coeffs;

    void validate() const;
};

/// exp(z . coeffs), the covariate function phi(z).
double covariate_factor(const MarginalHazardSpec& spec, std::span<const double> z);

/// Baseline hazard and cumulative baseline hazard at t > 0.
double baseline_hazard(const MarginalHazardSpec& spec, double t);
double baseline_cumulative_hazard(const MarginalHazardSpec& spec, double t);

double hazard(const MarginalHazardSpec& spec, double t, std::span<const double> z);
double cumulative_hazard(const MarginalHazardSpec& spec, double t, std::span<const double> z);
double survival(const MarginalHazardSpec& spec, double t, std::span<const double> z);

/// The t with survival(t | z) = s, exact for both baselines.
double inverse_survival(const MarginalHazardSpec& spec, double s, std::span<const double> z);

} // namespace crcop
