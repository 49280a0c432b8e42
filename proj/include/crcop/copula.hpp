#pragma once

namespace crcop {

enum class CopulaFamily { independence, gumbel, clayton, frechet_upper };

/// Bivariate copula with an optional dependence parameter. Gumbel requires
/// theta >= 1 (theta = 1 is the independence member); Clayton is restricted
/// to theta >= 0, with theta = 0 read as independence. The Frechet upper
/// bound min(u, v) is the comonotone limit and has no parameter.
struct CopulaSpec {
    CopulaFamily family = CopulaFamily::independence;
    double theta = 0.0;

    static CopulaSpec independence() { return {CopulaFamily::independence, 0.0}; }
    static CopulaSpec gumbel(double theta) { return {CopulaFamily::gumbel, theta}; }
    static CopulaSpec clayton(double theta) { return {CopulaFamily::clayton, theta}; }
    static CopulaSpec frechet_upper() { return {CopulaFamily::frechet_upper, 0.0}; }

    void validate() const;
};

/// C(u, v; theta) for u, v in [0, 1].
double copula_cdf(const CopulaSpec& spec, double u, double v);

/// Partial derivative of C with respect to argument `arg` (1 or 2),
/// for u, v strictly inside (0, 1).
double copula_partial(const CopulaSpec& spec, double u, double v, int arg);

/// Population Kendall rank correlation of the copula.
double kendall_tau(const CopulaSpec& spec);

/// Quantile of V given U = u: the v with P(V <= v | U = u) = p, where the
/// conditional distribution is the u-partial of C normalised to a CDF in v.
/// Families without a closed-form inverse are solved by bracketed
/// root-finding to absolute tolerance 1e-10.
double conditional_quantile(const CopulaSpec& spec, double u, double p);

} // namespace crcop
