#include "crcop/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

#include "crcop/copula.hpp"

namespace crcop {

void DgpConfig::validate() const {
    params.validate();
    if (n < 1) throw std::invalid_argument("DgpConfig: n must be at least 1");
    if (!(z_dist.sd > 0.0)) throw std::invalid_argument("DgpConfig: covariate sd must be positive");
    if (censor_rate && !(*censor_rate > 0.0))
        throw std::invalid_argument("DgpConfig: censoring rate must be positive");
}

double sample_positive_stable(double alpha, Rng& rng) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("positive stable requires alpha in (0, 1)");
    const double pi = 3.1415926535897932384626433832795;
    const double u = rng.uniform();
    const double w = rng.exponential();
    // log a(u); evaluated in logs because the exponents blow up as alpha -> 1.
    const double log_a = std::log(std::sin((1.0 - alpha) * pi * u)) +
                         (alpha / (1.0 - alpha)) * std::log(std::sin(alpha * pi * u)) -
                         (1.0 / (1.0 - alpha)) * std::log(std::sin(pi * u));
    return std::exp(((1.0 - alpha) / alpha) * (log_a - std::log(w)));
}

std::pair<double, double> sample_latent_pair(const StructuralParams& params,
                                             std::span<const double> z, Rng& rng,
                                             PairSampler method) {
    params.validate();
    const MarginalHazardSpec m1 = params.marginal(1);
    const MarginalHazardSpec m2 = params.marginal(2);
    double u1 = 0.0;
    double u2 = 0.0;
    if (params.theta == 1.0) {
        u1 = rng.uniform();
        u2 = rng.uniform();
    } else if (method == PairSampler::frailty) {
        const double stable = sample_positive_stable(1.0 / params.theta, rng);
        u1 = std::exp(-std::pow(rng.exponential() / stable, 1.0 / params.theta));
        u2 = std::exp(-std::pow(rng.exponential() / stable, 1.0 / params.theta));
    } else {
        u1 = rng.uniform();
        u2 = conditional_quantile(CopulaSpec::gumbel(params.theta), u1, rng.uniform());
    }
    return {inverse_survival(m1, u1, z), inverse_survival(m2, u2, z)};
}

Dataset sample_dataset(const DgpConfig& cfg, PairSampler method) {
    cfg.validate();
    Rng rng(cfg.seed);
    Dataset data;
    data.n_covariates = cfg.params.beta11.size();
    std::vector<double> zrow(data.n_covariates);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        for (double& zk : zrow) zk = rng.normal(cfg.z_dist.mean, cfg.z_dist.sd);
        auto [t1, t2] = sample_latent_pair(cfg.params, zrow, rng, method);
        while (t1 == t2) { // measure-zero event; redraw and keep count
            ++data.tie_redraws;
            std::tie(t1, t2) = sample_latent_pair(cfg.params, zrow, rng, method);
        }
        double t = std::min(t1, t2);
        int delta = t1 < t2 ? 1 : 2;
        if (cfg.censor_rate) {
            const double c = rng.exponential() / *cfg.censor_rate;
            if (c < t) {
                t = c;
                delta = 0;
            }
        }
        data.append(t, delta, zrow);
    }
    return data;
}

} // namespace crcop
