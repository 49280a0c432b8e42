#include <doctest.h>

#include <array>
#include <cmath>
#include <stdexcept>

#include "crcop/estimation.hpp"
#include "crcop/numerics.hpp"
#include "crcop/stats.hpp"

using namespace crcop;

namespace {

StructuralParams design_params(double theta) {
    StructuralParams p;
    p.theta = theta;
    p.gamma = 0.5;
    p.beta01 = 1.0;
    p.beta11 = {1.0};
    p.beta12 = {2.0};
    return p;
}

Dataset simulate(double theta, std::size_t n, std::uint64_t seed) {
    DgpConfig cfg;
    cfg.params = design_params(theta);
    cfg.n = n;
    cfg.seed = seed;
    return sample_dataset(cfg);
}

// Restructured design matrix for a generic Cox fit: columns
// (1{J=2}, z 1{J=1}, z 1{J=2}) so the coefficients are (gamma, b11, b12).
struct RestructuredDesign {
    std::vector<double> times;
    std::vector<int> events;
    std::vector<double> x;
};

RestructuredDesign lunn_mcneil_design(const RestructuredDataset& rd) {
    RestructuredDesign d;
    for (std::size_t i = 0; i < rd.size(); ++i) {
        d.times.push_back(rd.time[i]);
        d.events.push_back(rd.event[i]);
        const double z = rd.z(i)[0];
        const bool second = rd.risk[i] == 2;
        d.x.push_back(second ? 1.0 : 0.0);
        d.x.push_back(second ? 0.0 : z);
        d.x.push_back(second ? z : 0.0);
    }
    return d;
}

} // namespace

TEST_CASE("restructure follows the duplication scheme") {
    Dataset data;
    data.n_covariates = 1;
    const std::array<double, 1> za{0.3};
    const std::array<double, 1> zb{-1.2};
    data.append(1.5, 1, za);
    data.append(2.5, 2, zb);
    const RestructuredDataset rd = restructure(data);
    REQUIRE(rd.size() == 4);
    CHECK(rd.risk == std::vector<int>{1, 2, 1, 2});
    CHECK(rd.event == std::vector<int>{1, 0, 0, 1});
    CHECK(rd.time == std::vector<double>{1.5, 1.5, 2.5, 2.5});
    CHECK(rd.z(0)[0] == 0.3);
    CHECK(rd.z(1)[0] == 0.3);
    CHECK(rd.orig_index == std::vector<std::size_t>{0, 0, 1, 1});

    Dataset censored;
    censored.n_covariates = 1;
    censored.append(1.0, 0, za);
    censored.append(2.0, 0, zb);
    const RestructuredDataset rdc = restructure(censored);
    for (int e : rdc.event) CHECK(e == 0);

    Dataset empty;
    empty.n_covariates = 1;
    CHECK(restructure(empty).size() == 0);
}

TEST_CASE("restructure round-trips through unrestructure") {
    const Dataset data = [] {
        DgpConfig cfg;
        cfg.params = design_params(2.0);
        cfg.n = 150;
        cfg.seed = 8;
        cfg.censor_rate = 0.4;
        return sample_dataset(cfg);
    }();
    const Dataset back = unrestructure(restructure(data));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.time[i] == data.time[i]);
        CHECK(back.status[i] == data.status[i]);
        CHECK(back.z(i)[0] == data.z(i)[0]);
    }
}

TEST_CASE("partial likelihood closed-form value for a single observation") {
    Dataset data;
    data.n_covariates = 1;
    const std::array<double, 1> z0{0.0};
    data.append(1.0, 1, z0);
    const RestructuredDataset rd = restructure(data);
    const std::array<double, 1> b{0.0};
    // Both rows share the risk set; with gamma = 0 and A = 1 the event row
    // contributes log(1/2).
    CHECK(structural_partial_loglik(1.0, 0.0, b, b, rd) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("at theta = 1 the partial likelihood is a Cox partial likelihood") {
    const Dataset data = simulate(1.0, 120, 21);
    const RestructuredDataset rd = restructure(data);
    const RestructuredDesign design = lunn_mcneil_design(rd);
    for (const auto& p : {std::array<double, 3>{0.0, 0.0, 0.0},
                          std::array<double, 3>{0.3, 0.8, 1.7},
                          std::array<double, 3>{-0.5, 1.2, -0.4}}) {
        const std::array<double, 1> b11{p[1]};
        const std::array<double, 1> b12{p[2]};
        const double ours = structural_partial_loglik(1.0, p[0], b11, b12, rd);
        const std::array<double, 3> beta{p[0], p[1], p[2]};
        const double cox = cox_partial_loglik(beta, design.times, design.events, design.x, 3);
        CHECK(ours == doctest::Approx(cox).epsilon(1e-10));
    }
}

TEST_CASE("partial likelihood depends on time ranks only") {
    const Dataset data = simulate(2.0, 100, 33);
    const RestructuredDataset rd = restructure(data);
    Dataset shifted = data;
    for (double& t : shifted.time) t += 5.0;
    Dataset cubed = data;
    for (double& t : cubed.time) t = t * t * t;
    const std::array<double, 1> b11{0.9};
    const std::array<double, 1> b12{1.8};
    const double base = structural_partial_loglik(2.0, 0.4, b11, b12, rd);
    CHECK(structural_partial_loglik(2.0, 0.4, b11, b12, restructure(shifted)) ==
          doctest::Approx(base).epsilon(1e-12));
    CHECK(structural_partial_loglik(2.0, 0.4, b11, b12, restructure(cubed)) ==
          doctest::Approx(base).epsilon(1e-12));

    Dataset no_events;
    no_events.n_covariates = 1;
    const std::array<double, 1> z0{0.0};
    no_events.append(1.0, 0, z0);
    CHECK_THROWS_AS(
        structural_partial_loglik(2.0, 0.4, b11, b12, restructure(no_events)),
        std::invalid_argument);
}

TEST_CASE("profile fit at theta = 1 equals an independent Cox fit on the "
          "restructured data") {
    const Dataset data = simulate(1.0, 400, 55);
    FitOptions opts;
    opts.fixed_theta = 1.0;
    const FitResult joint = fit_structural(data, opts);
    REQUIRE(joint.converged);

    const RestructuredDesign design = lunn_mcneil_design(restructure(data));
    const FitResult cox =
        cox_fit(design.times, design.events, design.x, 3, {"gamma", "beta11", "beta12"});
    REQUIRE(cox.converged);
    for (const char* name : {"gamma", "beta11", "beta12"}) {
        CHECK(joint.at(name).estimate ==
              doctest::Approx(cox.at(name).estimate).epsilon(1e-6));
        CHECK(joint.at(name).se == doctest::Approx(cox.at(name).se).epsilon(1e-3));
    }

    // Against per-risk Cox fits the agreement is statistical, not exact:
    // the joint likelihood ties the risks through the shared baseline.
    const FitResult cox1 = fit_cox_csh(data, 1);
    const FitResult cox2 = fit_cox_csh(data, 2);
    CHECK(std::abs(joint.at("beta11").estimate - cox1.at("alpha11").estimate) <
          3.0 * cox1.at("alpha11").se);
    CHECK(std::abs(joint.at("beta12").estimate - cox2.at("alpha12").estimate) <
          3.0 * cox2.at("alpha12").se);
    CHECK(std::abs(joint.at("beta11").estimate - cox1.at("alpha11").estimate) > 1e-8);
}

TEST_CASE("structural fit recovers the generating parameters") {
    const Dataset data = simulate(2.0, 2000, 77);
    const FitResult fit = fit_structural(data);
    REQUIRE(fit.converged);
    REQUIRE(fit.has_covariance);
    CHECK(std::abs(fit.at("tau").estimate - 0.5) < 3.0 * fit.at("tau").se);
    CHECK(std::abs(fit.at("gamma").estimate - 0.5) < 3.0 * fit.at("gamma").se);
    CHECK(std::abs(fit.at("beta11").estimate - 1.0) < 3.0 * fit.at("beta11").se);
    CHECK(std::abs(fit.at("beta12").estimate - 2.0) < 3.0 * fit.at("beta12").se);
    CHECK(fit.at("varsigma").estimate ==
          doctest::Approx(fit.at("gamma").estimate / fit.at("theta").estimate));

    // First-order condition at the reported optimum.
    const RestructuredDataset rd = restructure(data);
    const double theta_hat = fit.at("theta").estimate;
    const std::vector<double> x0{std::log(theta_hat - 1.0 + 1e-6), fit.at("gamma").estimate,
                                 fit.at("beta11").estimate, fit.at("beta12").estimate};
    const auto negated = [&](const std::vector<double>& v) {
        const std::array<double, 1> b11{v[2]};
        const std::array<double, 1> b12{v[3]};
        return -structural_partial_loglik(1.0 - 1e-6 + std::exp(v[0]), v[1], b11, b12, rd);
    };
    for (double g : fd_gradient(negated, x0, 1e-5)) CHECK(std::abs(g) < 1e-4);

    // Reported covariance is symmetric positive semi-definite.
    const std::size_t d = fit.cov_names.size();
    REQUIRE(fit.covariance.size() == d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(fit.covariance[i * d + j] ==
                  doctest::Approx(fit.covariance[j * d + i]).epsilon(1e-9));
    for (double eig : symmetric_eigenvalues(fit.covariance, static_cast<int>(d)))
        CHECK(eig > -1e-8);
}

TEST_CASE("structural fit requires events of both risks") {
    Dataset data;
    data.n_covariates = 1;
    const std::array<double, 1> z0{0.1};
    data.append(1.0, 1, z0);
    data.append(2.0, 1, z0);
    CHECK_THROWS_AS(fit_structural(data), std::invalid_argument);
}

TEST_CASE("independence data drives tau-hat to the boundary") {
    // Either xi runs to -inf (tau-hat pinned at 0 with a degenerate interval)
    // or the estimate stays a small positive wobble whose interval covers 0.
    for (std::uint64_t seed : {13, 130, 1300}) {
        const Dataset data = simulate(1.0, 4000, seed);
        const FitResult fit = fit_structural(data);
        const double tau_hat = fit.at("tau").estimate;
        CHECK(tau_hat < 0.3);
        CHECK((tau_hat < 0.02 || fit.at("tau").ci_lo <= 0.0));
    }
}

TEST_CASE("cause-specific Cox fit recovers marginal effects under independence") {
    const Dataset data = simulate(1.0, 4000, 91);
    const FitResult fit1 = fit_cox_csh(data, 1);
    const FitResult fit2 = fit_cox_csh(data, 2);
    REQUIRE(fit1.converged);
    REQUIRE(fit2.converged);
    CHECK(std::abs(fit1.at("alpha11").estimate - 1.0) < 3.0 * fit1.at("alpha11").se);
    CHECK(std::abs(fit2.at("alpha12").estimate - 2.0) < 3.0 * fit2.at("alpha12").se);

    Dataset no_risk2;
    no_risk2.n_covariates = 1;
    const std::array<double, 1> z0{0.0};
    no_risk2.append(1.0, 1, z0);
    CHECK_THROWS_AS(fit_cox_csh(no_risk2, 2), std::invalid_argument);
}

TEST_CASE("full MLE recovers parameters and agrees with the partial likelihood") {
    const Dataset data = simulate(2.0, 1000, 3);
    const FitResult mle = fit_full_mle(data);
    REQUIRE(mle.converged);
    REQUIRE(mle.has_covariance);
    CHECK(std::abs(mle.at("theta").estimate - 2.0) < 3.0 * mle.at("theta").se);
    CHECK(std::abs(mle.at("gamma").estimate - 0.5) < 3.0 * mle.at("gamma").se);
    CHECK(std::abs(mle.at("beta11").estimate - 1.0) < 3.0 * mle.at("beta11").se);
    CHECK(std::abs(mle.at("beta12").estimate - 2.0) < 3.0 * mle.at("beta12").se);
    CHECK(std::abs(mle.at("beta01").estimate - 1.0) < 3.0 * mle.at("beta01").se);

    const FitResult pl = fit_structural(data);
    for (const char* name : {"theta", "gamma", "beta11", "beta12"}) {
        const double gap = std::abs(pl.at(name).estimate - mle.at(name).estimate);
        CHECK(gap < 3.0 * (pl.at(name).se + mle.at(name).se));
    }

    Dataset censored;
    censored.n_covariates = 1;
    const std::array<double, 1> z0{0.0};
    censored.append(1.0, 0, z0);
    CHECK_THROWS_AS(fit_full_mle(censored), std::invalid_argument);
}

TEST_CASE("coverage study: report identities and degenerate replication counts") {
    DgpConfig cfg;
    cfg.params = design_params(2.0);
    cfg.n = 120;
    cfg.seed = 2027;
    const StudyReport two = coverage_study(cfg, 2, StudyEstimator::partial_likelihood, 1);
    for (const auto& row : two.rows) {
        if (row.n_converged == 2) CHECK(row.sb + row.var == doctest::Approx(row.mse).epsilon(1e-12));
    }
    const StudyReport one = coverage_study(cfg, 1, StudyEstimator::partial_likelihood, 1);
    CHECK(one.to_csv().find("NA") != std::string::npos);
    CHECK(std::isnan(one.at("tau").var));
}

TEST_CASE("coverage study is deterministic and thread-count independent") {
    DgpConfig cfg;
    cfg.params = design_params(2.0);
    cfg.n = 100;
    cfg.seed = 404;
    const StudyReport serial = coverage_study(cfg, 8, StudyEstimator::partial_likelihood, 1);
    const StudyReport threaded = coverage_study(cfg, 8, StudyEstimator::partial_likelihood, 2);
    CHECK(serial.to_csv() == threaded.to_csv());
    const StudyReport again = coverage_study(cfg, 8, StudyEstimator::partial_likelihood, 2);
    CHECK(again.to_csv() == threaded.to_csv());
}

TEST_CASE("averaged LHR matches Cox fits only in the small-dispersion limit") {
    const StructuralParams p = design_params(2.0);
    const auto cox_mean = [&](double sd, int risk) {
        std::vector<double> estimates;
        for (std::uint64_t r = 0; r < 20; ++r) {
            DgpConfig cfg;
            cfg.params = p;
            cfg.n = 5000;
            cfg.z_dist.sd = sd;
            cfg.seed = replication_seed(606, r);
            const FitResult fit = fit_cox_csh(sample_dataset(cfg), risk);
            if (fit.converged)
                estimates.push_back(fit.at(risk == 1 ? "alpha11" : "alpha12").estimate);
        }
        REQUIRE(estimates.size() >= 18);
        return mean(estimates);
    };
    // As sd -> 0 both collapse to the pointwise LHR at the covariate mean.
    CHECK(std::abs(cox_mean(0.2, 1) - average_lhr(p, 1, 0.0, 0.2)) < 0.05);
    CHECK(std::abs(cox_mean(0.2, 2) - average_lhr(p, 2, 0.0, 0.2)) < 0.05);
    // At sd = 2 the fitted coefficient has already drifted well away from the
    // density-averaged LHR: the reduced-form value is not a stable summary.
    CHECK(std::abs(cox_mean(2.0, 1) - average_lhr(p, 1, 0.0, 2.0)) > 0.2);
}

TEST_CASE("censored observations enter risk sets without numerator terms") {
    DgpConfig cfg;
    cfg.params = design_params(2.0);
    cfg.n = 900;
    cfg.seed = 5150;
    cfg.censor_rate = 0.5;
    const Dataset data = sample_dataset(cfg);
    std::size_t censored = 0;
    for (int s : data.status) censored += s == 0;
    REQUIRE(censored > 100);
    const FitResult fit = fit_structural(data);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.at("beta11").estimate - 1.0) < 3.0 * fit.at("beta11").se);
    CHECK(std::abs(fit.at("beta12").estimate - 2.0) < 3.0 * fit.at("beta12").se);

    // Dropping the censored rows changes the risk sets, so the censored rows
    // are not inert.
    Dataset uncensored;
    uncensored.n_covariates = 1;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data.status[i] != 0) uncensored.append(data.time[i], data.status[i], data.z(i));
    const RestructuredDataset rd_all = restructure(data);
    const RestructuredDataset rd_events = restructure(uncensored);
    const std::array<double, 1> b11{1.0};
    const std::array<double, 1> b12{2.0};
    CHECK(structural_partial_loglik(2.0, 0.5, b11, b12, rd_all) !=
          doctest::Approx(structural_partial_loglik(2.0, 0.5, b11, b12, rd_events)));
}

TEST_CASE("vector covariates flow through the partial likelihood fit") {
    DgpConfig cfg;
    cfg.params = design_params(2.0);
    cfg.params.beta11 = {1.0, -0.5};
    cfg.params.beta12 = {2.0, 0.3};
    cfg.n = 1500;
    cfg.seed = 6161;
    const Dataset data = sample_dataset(cfg);
    REQUIRE(data.n_covariates == 2);
    const FitResult fit = fit_structural(data);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.at("beta11_1").estimate - 1.0) < 3.0 * fit.at("beta11_1").se);
    CHECK(std::abs(fit.at("beta11_2").estimate - (-0.5)) < 3.0 * fit.at("beta11_2").se);
    CHECK(std::abs(fit.at("beta12_1").estimate - 2.0) < 3.0 * fit.at("beta12_1").se);
    CHECK(std::abs(fit.at("beta12_2").estimate - 0.3) < 3.0 * fit.at("beta12_2").se);
}
