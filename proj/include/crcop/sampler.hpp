#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "crcop/dataset.hpp"
#include "crcop/rng.hpp"
#include "crcop/structural.hpp"

namespace crcop {

struct ZDist {
    double mean = 0.0;
    double sd = 2.0;
};

/// Data-generating configuration: structural parameters, sample size, the
/// Gaussian covariate law, optional independent exponential censoring and
/// the stream seed.
struct DgpConfig {
    StructuralParams params;
    std::size_t n = 100;
    ZDist z_dist;
    std::optional<double> censor_rate;
    std::uint64_t seed = 1;

    void validate() const;
};

/// How latent Gumbel-dependent uniforms are produced. The frailty route
/// draws a positive-stable mixing variable and two exponentials; the
/// inversion route draws U1 and inverts the conditional distribution of V
/// given U1. Both sample the same law and cross-validate each other.
enum class PairSampler { frailty, inversion };

/// Positive stable variate with Laplace transform exp(-s^alpha),
/// 0 < alpha < 1 (Kanter's representation, evaluated in log space).
double sample_positive_stable(double alpha, Rng& rng);

/// Latent duration pair (T1, T2) for covariate row z.
std::pair<double, double> sample_latent_pair(const StructuralParams& params,
                                             std::span<const double> z, Rng& rng,
                                             PairSampler method = PairSampler::frailty);

/// Competing-risks sample: z_i ~ N(mean, sd^2), latent pair, observed
/// minimum and risk indicator, optional censoring. Deterministic in
/// cfg.seed; exact latent ties are redrawn and counted in
/// Dataset::tie_redraws.
Dataset sample_dataset(const DgpConfig& cfg, PairSampler method = PairSampler::frailty);

} // namespace crcop
