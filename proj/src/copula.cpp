#include "crcop/copula.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crcop/numerics.hpp"

namespace crcop {

namespace {

// Below this value a Clayton parameter behaves as exact independence.
constexpr double kClaytonIndependenceEps = 1e-12;

void require_probability(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream msg;
        msg << "copula: " << name << " = " << x << " outside [0, 1]";
        throw std::domain_error(msg.str());
    }
}

void require_interior(double x, const char* name) {
    if (!(x > 0.0 && x < 1.0)) {
        std::ostringstream msg;
        msg << "copula: " << name << " = " << x << " outside open interval (0, 1)";
        throw std::domain_error(msg.str());
    }
}

double gumbel_cdf(double theta, double u, double v) {
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    const double lu = -std::log(u);
    const double lv = -std::log(v);
    const double log_sum = log_add_exp(theta * std::log(lu), theta * std::log(lv));
    return std::exp(-std::exp(log_sum / theta));
}

double gumbel_partial_u(double theta, double u, double v) {
    const double lu = -std::log(u);
    const double lv = -std::log(v);
    const double log_sum = log_add_exp(theta * std::log(lu), theta * std::log(lv));
    const double log_deriv = -std::exp(log_sum / theta) + (1.0 / theta - 1.0) * log_sum +
                             (theta - 1.0) * std::log(lu) + lu;
    return std::exp(log_deriv);
}

double clayton_cdf(double theta, double u, double v) {
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    const double w = std::pow(u, -theta) + std::pow(v, -theta) - 1.0;
    return std::pow(w, -1.0 / theta);
}

double clayton_partial_u(double theta, double u, double v) {
    const double w = std::pow(u, -theta) + std::pow(v, -theta) - 1.0;
    // C^(1+theta) * u^(-theta-1)
    return std::pow(w, -1.0 / theta - 1.0) * std::pow(u, -theta - 1.0);
}

} // namespace

void CopulaSpec::validate() const {
    switch (family) {
        case CopulaFamily::independence:
        case CopulaFamily::frechet_upper:
            return;
        case CopulaFamily::gumbel:
            if (!(theta >= 1.0) || !std::isfinite(theta))
                throw std::invalid_argument("Gumbel copula requires theta >= 1");
            return;
        case CopulaFamily::clayton:
            if (!(theta >= 0.0) || !std::isfinite(theta))
                throw std::invalid_argument("Clayton copula restricted to theta >= 0");
            return;
    }
    throw std::invalid_argument("unknown copula family");
}

double copula_cdf(const CopulaSpec& spec, double u, double v) {
    spec.validate();
    require_probability(u, "u");
    require_probability(v, "v");
    switch (spec.family) {
        case CopulaFamily::independence:
            return u * v;
        case CopulaFamily::gumbel:
            return gumbel_cdf(spec.theta, u, v);
        case CopulaFamily::clayton:
            if (spec.theta < kClaytonIndependenceEps) return u * v;
            return clayton_cdf(spec.theta, u, v);
        case CopulaFamily::frechet_upper:
            return std::min(u, v);
    }
    return 0.0;
}

double copula_partial(const CopulaSpec& spec, double u, double v, int arg) {
    spec.validate();
    if (arg != 1 && arg != 2) throw std::invalid_argument("copula_partial: arg must be 1 or 2");
    require_interior(u, "u");
    require_interior(v, "v");
    if (arg == 2) std::swap(u, v); // every family here is exchangeable
    switch (spec.family) {
        case CopulaFamily::independence:
            return v;
        case CopulaFamily::gumbel:
            return gumbel_partial_u(spec.theta, u, v);
        case CopulaFamily::clayton:
            if (spec.theta < kClaytonIndependenceEps) return v;
            return clayton_partial_u(spec.theta, u, v);
        case CopulaFamily::frechet_upper:
            if (u == v) return 0.5;
            return u < v ? 1.0 : 0.0;
    }
    return 0.0;
}

double kendall_tau(const CopulaSpec& spec) {
    spec.validate();
    switch (spec.family) {
        case CopulaFamily::independence:
            return 0.0;
        case CopulaFamily::gumbel:
            return 1.0 - 1.0 / spec.theta;
        case CopulaFamily::clayton:
            return spec.theta / (spec.theta + 2.0);
        case CopulaFamily::frechet_upper:
            return 1.0;
    }
    return 0.0;
}

double conditional_quantile(const CopulaSpec& spec, double u, double p) {
    spec.validate();
    require_interior(u, "u");
    require_interior(p, "p");
    switch (spec.family) {
        case CopulaFamily::independence:
            return p;
        case CopulaFamily::frechet_upper:
            return u; // V = U almost surely
        default:
            break;
    }
    if (spec.family == CopulaFamily::clayton && spec.theta < kClaytonIndependenceEps) return p;
    // The u-partial of C is already a CDF in v for these families (its value
    // at v = 1 is exactly 1), so invert it directly.
    const auto conditional = [&](double v) { return copula_partial(spec, u, v, 1) - p; };
    const double lo = 1e-15;
    const double hi = 1.0 - 1e-15;
    return find_root(conditional, lo, hi, 1e-10);
}

} // namespace crcop
