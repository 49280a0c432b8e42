#include "crcop/structural.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crcop/numerics.hpp"

namespace crcop {

namespace {

void require_risk(int risk) {
    if (risk != 1 && risk != 2) throw std::invalid_argument("risk index must be 1 or 2");
}

void require_positive_time(double t, const char* name) {
    if (!(t > 0.0)) {
        std::ostringstream msg;
        msg << name << " = " << t << " must be positive";
        throw std::domain_error(msg.str());
    }
}

double dot(std::span<const double> z, const std::vector<double>& b) {
    if (z.size() != b.size())
        throw std::invalid_argument("covariate dimension does not match coefficient vector");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) acc += z[i] * b[i];
    return acc;
}

// Log marginal hazard and log marginal cumulative hazard at (t, z).
struct MarginalLogs {
    double log_hazard;
    double log_cumulative;
};

MarginalLogs marginal_logs(const StructuralParams& p, int risk, double t,
                           std::span<const double> z) {
    const double scale = risk == 1 ? p.beta01 : p.beta02();
    const double zb = dot(z, risk == 1 ? p.beta11 : p.beta12);
    const double log_st = std::log(scale * t);
    return {std::log(p.shape * scale) + (p.shape - 1.0) * log_st + zb, p.shape * log_st + zb};
}

// log[(Lambda_1^theta + Lambda_2^theta)] at a common time, or at separate
// times for the joint survival.
double log_power_sum(const StructuralParams& p, double t1, double t2, std::span<const double> z) {
    const double l1 = marginal_logs(p, 1, t1, z).log_cumulative;
    const double l2 = marginal_logs(p, 2, t2, z).log_cumulative;
    return log_add_exp(p.theta * l1, p.theta * l2);
}

// gamma + z.(beta12 - beta11) * theta; the log of eta(varsigma, z)^theta.
double log_eta_pow_theta(const StructuralParams& p, std::span<const double> z) {
    return p.gamma + (dot(z, p.beta12) - dot(z, p.beta11)) * p.theta;
}

} // namespace

double StructuralParams::beta02() const {
    return std::exp(varsigma() / shape) * beta01;
}

MarginalHazardSpec StructuralParams::marginal(int risk) const {
    require_risk(risk);
    MarginalHazardSpec spec;
    spec.baseline = baseline;
    spec.scale = risk == 1 ? beta01 : beta02();
    spec.shape = shape;
    spec.coeffs = risk == 1 ? beta11 : beta12;
    return spec;
}

void StructuralParams::validate() const {
    if (!(theta >= 1.0) || !std::isfinite(theta))
        throw std::invalid_argument("structural model requires Gumbel theta >= 1");
    if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
    if (!(beta01 > 0.0) || !std::isfinite(beta01))
        throw std::invalid_argument("beta01 must be positive");
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw std::invalid_argument("baseline shape must be positive");
    if (beta11.size() != beta12.size())
        throw std::invalid_argument("beta11 and beta12 must have equal dimension");
    for (double b : beta11)
        if (!std::isfinite(b)) throw std::invalid_argument("non-finite beta11 coefficient");
    for (double b : beta12)
        if (!std::isfinite(b)) throw std::invalid_argument("non-finite beta12 coefficient");
}

double joint_survival(const StructuralParams& p, double t1, double t2,
                      std::span<const double> z) {
    p.validate();
    require_positive_time(t1, "t1");
    require_positive_time(t2, "t2");
    return std::exp(-std::exp(log_power_sum(p, t1, t2, z) / p.theta));
}

double overall_survival(const StructuralParams& p, double t, std::span<const double> z) {
    return joint_survival(p, t, t, z);
}

double log_subdensity(const StructuralParams& p, int risk, double t, std::span<const double> z) {
    p.validate();
    require_risk(risk);
    require_positive_time(t, "t");
    const MarginalLogs mj = marginal_logs(p, risk, t, z);
    const double log_m = log_power_sum(p, t, t, z);
    return -std::exp(log_m / p.theta) + (1.0 / p.theta - 1.0) * log_m +
           (p.theta - 1.0) * mj.log_cumulative + mj.log_hazard;
}

double subdensity(const StructuralParams& p, int risk, double t, std::span<const double> z) {
    return std::exp(log_subdensity(p, risk, t, z));
}

double implied_csh(const StructuralParams& p, int risk, double t, std::span<const double> z) {
    p.validate();
    require_risk(risk);
    require_positive_time(t, "t");
    // f_j / S with the overall survival cancelled analytically before
    // exponentiating, so the ratio stays finite far into the tail.
    const MarginalLogs mj = marginal_logs(p, risk, t, z);
    const double log_m = log_power_sum(p, t, t, z);
    return std::exp((1.0 / p.theta - 1.0) * log_m + (p.theta - 1.0) * mj.log_cumulative +
                    mj.log_hazard);
}

double implied_csh_baseline(const StructuralParams& p, int risk, double t) {
    p.validate();
    require_risk(risk);
    require_positive_time(t, "t");
    const MarginalHazardSpec mj = p.marginal(risk);
    const MarginalHazardSpec m1 = p.marginal(1);
    const double ratio = baseline_cumulative_hazard(mj, t) / baseline_cumulative_hazard(m1, t);
    return baseline_hazard(mj, t) * std::pow(ratio, p.theta - 1.0);
}

double implied_csh_separable(const StructuralParams& p, int risk, double t,
                             std::span<const double> z) {
    return implied_csh_baseline(p, risk, t) * map_structural_to_reduced(p, z)[risk - 1];
}

double implied_csh_clayton(double clayton_theta, const MarginalHazardSpec& m1,
                           const MarginalHazardSpec& m2, int risk, double t,
                           std::span<const double> z) {
    if (!(clayton_theta >= 0.0) || !std::isfinite(clayton_theta))
        throw std::invalid_argument("Clayton theta must be >= 0");
    require_risk(risk);
    m1.validate();
    m2.validate();
    require_positive_time(t, "t");
    const MarginalHazardSpec& mj = risk == 1 ? m1 : m2;
    const double log_lambda =
        std::log(baseline_hazard(mj, t)) + std::log(covariate_factor(mj, z));
    if (clayton_theta < 1e-12) return std::exp(log_lambda); // independence
    const double big_lambda1 = cumulative_hazard(m1, t, z);
    const double big_lambda2 = cumulative_hazard(m2, t, z);
    // log(e^a + e^b - 1) with a, b >= 0.
    const double lse = log_add_exp(clayton_theta * big_lambda1, clayton_theta * big_lambda2);
    const double log_w = lse + std::log1p(-std::exp(-lse));
    const double big_lambda_j = risk == 1 ? big_lambda1 : big_lambda2;
    return std::exp(-log_w + clayton_theta * big_lambda_j + log_lambda);
}

double implied_sdh(const StructuralParams& p, int risk, double t, std::span<const double> z) {
    p.validate();
    require_risk(risk);
    require_positive_time(t, "t");
    const MarginalLogs mj = marginal_logs(p, risk, t, z);
    const double q = risk == 1 ? log_eta_pow_theta(p, z) : -log_eta_pow_theta(p, z);
    const double log_phi_tilde = softplus(q) / p.theta;
    const double log_shrunk_survival = -std::exp(mj.log_cumulative + log_phi_tilde);
    // d_j = lambda_j * phi_tilde * E / (phi_tilde^theta - 1 + E) with
    // E = exp(-Lambda_j * phi_tilde) and phi_tilde^theta - 1 = e^q.
    return std::exp(mj.log_hazard + log_phi_tilde + log_shrunk_survival -
                    log_add_exp(q, log_shrunk_survival));
}

std::array<double, 2> map_structural_to_reduced(const StructuralParams& p,
                                                std::span<const double> z) {
    p.validate();
    const double zb11 = dot(z, p.beta11);
    const double zb12 = dot(z, p.beta12);
    const double shared = (1.0 / p.theta - 1.0) * softplus(p.gamma + (zb12 - zb11) * p.theta);
    const double psi1 = std::exp(zb11 + shared);
    const double psi2 = std::exp(zb11 * (1.0 - p.theta) + zb12 * p.theta + shared);
    return {psi1, psi2};
}

double local_lhr(const StructuralParams& p, int risk, double z) {
    p.validate();
    require_risk(risk);
    if (p.beta11.size() != 1)
        throw std::invalid_argument("local_lhr is defined for a scalar covariate");
    const double b11 = p.beta11[0];
    const double b12 = p.beta12[0];
    const double diff = b12 - b11;
    const double q = p.gamma + z * diff * p.theta;
    const double weight = 1.0 / (1.0 + std::exp(-q));
    const double shared = -(p.theta - 1.0) * diff * weight;
    if (risk == 1) return b11 + shared;
    return b11 * (1.0 - p.theta) + b12 * p.theta + shared;
}

double average_lhr(const StructuralParams& p, int risk, double z_mean, double z_sd,
                   int n_quadrature) {
    if (n_quadrature < 8)
        throw std::invalid_argument("average_lhr requires at least 8 quadrature nodes");
    if (!(z_sd > 0.0)) throw std::invalid_argument("average_lhr requires z_sd > 0");
    return gauss_hermite_expectation([&](double z) { return local_lhr(p, risk, z); }, z_mean,
                                     z_sd, n_quadrature);
}

double full_loglik(const StructuralParams& p, const Dataset& data) {
    p.validate();
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.status[i] != 1 && data.status[i] != 2) {
            std::ostringstream msg;
            msg << "full_loglik: observation " << i << " has status " << data.status[i]
                << "; censored rows are not supported";
            throw std::invalid_argument(msg.str());
        }
        const double log_f = log_subdensity(p, data.status[i], data.time[i], data.z(i));
        if (!std::isfinite(log_f)) {
            std::ostringstream msg;
            msg << "full_loglik: non-finite log-density at observation " << i
                << " (t = " << data.time[i] << ", delta = " << data.status[i] << ")";
            throw std::runtime_error(msg.str());
        }
        ll += log_f;
    }
    return ll;
}

} // namespace crcop
