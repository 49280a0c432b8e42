#include "crcop/estimation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "crcop/numerics.hpp"
#include "crcop/stats.hpp"

namespace crcop {

namespace {

constexpr double kThetaEps = 1e-6;
constexpr double kBadObjective = 1e300;
constexpr double kZ95 = 1.959963984540054; // 97.5% normal quantile

double theta_from_xi(double xi) { return 1.0 - kThetaEps + std::exp(xi); }

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Streaming log-sum-exp accumulator for risk-set sums.
struct LogSumExp {
    double max_lp = -std::numeric_limits<double>::infinity();
    double sum = 0.0;

    void add(double lp) {
        if (sum == 0.0) {
            max_lp = lp;
            sum = 1.0;
        } else if (lp <= max_lp) {
            sum += std::exp(lp - max_lp);
        } else {
            sum = sum * std::exp(max_lp - lp) + 1.0;
            max_lp = lp;
        }
    }

    double value() const { return max_lp + std::log(sum); }
};

std::vector<std::size_t> descending_time_order(std::span<const double> times) {
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    return order;
}

// Evaluates the restructured-data partial log likelihood with a cached time
// ordering, so repeated calls during optimisation cost O(n) each.
class PartialLikelihoodEvaluator {
  public:
    explicit PartialLikelihoodEvaluator(const RestructuredDataset& rd)
        : rd_(rd), order_(descending_time_order(rd.time)) {
        for (int e : rd.event) n_events_ += e;
    }

    std::size_t n_events() const { return n_events_; }

    double operator()(double theta, double gamma, std::span<const double> b11,
                      std::span<const double> b12) const {
        const std::size_t n = rd_.size();
        std::vector<double> lp(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto z = rd_.z(i);
            const double zb11 = dot(z, b11);
            const double zb12 = dot(z, b12);
            const double log_a = (1.0 / theta - 1.0) * softplus(gamma + (zb12 - zb11) * theta);
            if (rd_.risk[i] == 1)
                lp[i] = zb11 + log_a;
            else
                lp[i] = gamma + (1.0 - theta) * zb11 + theta * zb12 + log_a;
        }
        double ll = 0.0;
        LogSumExp risk_set;
        std::size_t pos = 0;
        while (pos < n) {
            std::size_t end = pos;
            const double t = rd_.time[order_[pos]];
            while (end < n && rd_.time[order_[end]] == t) ++end;
            for (std::size_t k = pos; k < end; ++k) risk_set.add(lp[order_[k]]);
            const double denom = risk_set.value();
            for (std::size_t k = pos; k < end; ++k) {
                const std::size_t i = order_[k];
                if (rd_.event[i]) ll += lp[i] - denom;
            }
            pos = end;
        }
        return ll;
    }

  private:
    const RestructuredDataset& rd_;
    std::vector<std::size_t> order_;
    std::size_t n_events_ = 0;
};

// ---------------------------------------------------------------------------
// Shared optimisation harness: Nelder-Mead, one perturbed restart, then a few
// Newton polish steps off the finite-difference derivatives.

struct MaximizeOutcome {
    std::vector<double> x;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string note;
};

MaximizeOutcome maximize_loglik(const std::function<double(const std::vector<double>&)>& loglik,
                                const std::vector<double>& start, const FitOptions& opts) {
    const auto negated = [&](const std::vector<double>& v) {
        const double value = loglik(v);
        return std::isfinite(value) ? -value : kBadObjective;
    };
    SimplexOptions simplex;
    simplex.max_iter = opts.max_iter;
    SimplexResult first = nelder_mead(negated, start, simplex);
    std::vector<double> perturbed = first.x;
    for (double& v : perturbed) v = std::abs(v) > 1e-8 ? 1.1 * v : 0.1;
    SimplexResult second = nelder_mead(negated, perturbed, simplex);

    MaximizeOutcome out;
    const SimplexResult& best = second.fmin < first.fmin ? second : first;
    out.x = best.x;
    out.loglik = -best.fmin;
    out.iterations = first.iterations + second.iterations;
    out.converged = first.converged || second.converged;
    if (best.fmin >= 0.5 * kBadObjective) {
        out.converged = false;
        out.note = "objective not finite anywhere the search reached";
        return out;
    }

    const int d = static_cast<int>(out.x.size());
    double fbest = best.fmin;
    for (int step = 0; step < 3; ++step) {
        const std::vector<double> grad = fd_gradient(negated, out.x, 1e-5);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < 1e-9) break;
        const std::vector<double> hess = fd_hessian(negated, out.x, opts.hessian_step);
        const auto hess_inv = invert_matrix(hess, d);
        if (!hess_inv) break;
        std::vector<double> direction(d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) direction[i] -= (*hess_inv)[i * d + j] * grad[j];
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 20; ++halving, scale *= 0.5) {
            std::vector<double> candidate = out.x;
            for (int i = 0; i < d; ++i) candidate[i] += scale * direction[i];
            const double fc = negated(candidate);
            if (fc < fbest) {
                out.x = candidate;
                fbest = fc;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    out.loglik = -fbest;
    if (!out.converged) out.note = "optimizer failed to converge within max iterations";
    return out;
}

ParamEstimate make_estimate(std::string name, double value, double se) {
    ParamEstimate p;
    p.name = std::move(name);
    p.estimate = value;
    p.se = se;
    if (std::isfinite(se)) {
        p.ci_lo = value - kZ95 * se;
        p.ci_hi = value + kZ95 * se;
    }
    return p;
}

std::string indexed_name(const std::string& base, std::size_t k, std::size_t dim) {
    if (dim == 1) return base;
    return base + "_" + std::to_string(k + 1);
}

std::string format_cell(double v) {
    if (std::isnan(v)) return "NA";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

} // namespace

// ---------------------------------------------------------------------------
// Restructuring

RestructuredDataset restructure(const Dataset& data) {
    data.validate();
    RestructuredDataset rd;
    rd.n_covariates = data.n_covariates;
    const std::size_t n = data.size();
    rd.orig_index.reserve(2 * n);
    rd.risk.reserve(2 * n);
    rd.event.reserve(2 * n);
    rd.time.reserve(2 * n);
    rd.covariates.reserve(2 * n * data.n_covariates);
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = data.z(i);
        for (int j = 1; j <= 2; ++j) {
            rd.orig_index.push_back(i);
            rd.risk.push_back(j);
            rd.event.push_back(data.status[i] == j ? 1 : 0);
            rd.time.push_back(data.time[i]);
            rd.covariates.insert(rd.covariates.end(), z.begin(), z.end());
        }
    }
    return rd;
}

Dataset unrestructure(const RestructuredDataset& rd) {
    if (rd.size() % 2 != 0)
        throw std::invalid_argument("unrestructure: expected an even number of rows");
    const std::size_t n = rd.size() / 2;
    Dataset data;
    data.n_covariates = rd.n_covariates;
    data.time.assign(n, 0.0);
    data.status.assign(n, 0);
    data.covariates.assign(n * rd.n_covariates, 0.0);
    std::vector<int> seen(n, 0);
    for (std::size_t r = 0; r < rd.size(); ++r) {
        const std::size_t i = rd.orig_index[r];
        if (i >= n) throw std::invalid_argument("unrestructure: original index out of range");
        if (seen[i] == 0) {
            data.time[i] = rd.time[r];
            const auto z = rd.z(r);
            std::copy(z.begin(), z.end(), data.covariates.begin() + i * rd.n_covariates);
        } else if (data.time[i] != rd.time[r]) {
            throw std::invalid_argument("unrestructure: rows of one observation disagree on time");
        }
        ++seen[i];
        if (rd.event[r]) data.status[i] = rd.risk[r];
    }
    for (int count : seen)
        if (count != 2)
            throw std::invalid_argument("unrestructure: each observation needs exactly 2 rows");
    return data;
}

double structural_partial_loglik(double theta, double gamma, std::span<const double> beta11,
                                 std::span<const double> beta12, const RestructuredDataset& rd) {
    if (beta11.size() != rd.n_covariates || beta12.size() != rd.n_covariates)
        throw std::invalid_argument("structural_partial_loglik: coefficient dimension mismatch");
    const PartialLikelihoodEvaluator evaluator(rd);
    if (evaluator.n_events() == 0)
        throw std::invalid_argument("structural_partial_loglik: no event rows");
    const double value = evaluator(theta, gamma, beta11, beta12);
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "structural_partial_loglik: non-finite value at theta=" << theta
            << " gamma=" << gamma << " beta11=(";
        for (double b : beta11) msg << b << ",";
        msg << ") beta12=(";
        for (double b : beta12) msg << b << ",";
        msg << ")";
        throw std::runtime_error(msg.str());
    }
    return value;
}

// ---------------------------------------------------------------------------
// Cox partial likelihood (Breslow ties), Newton iterations

namespace {

struct CoxEval {
    double loglik;
    std::vector<double> grad;
    std::vector<double> hess; // of the log likelihood (negative definite)
};

CoxEval cox_evaluate(std::span<const double> beta, std::span<const double> times,
                     std::span<const int> events, std::span<const double> x, std::size_t d,
                     const std::vector<std::size_t>& order, bool want_derivs) {
    const std::size_t n = times.size();
    CoxEval out{0.0, std::vector<double>(want_derivs ? d : 0, 0.0),
                std::vector<double>(want_derivs ? d * d : 0, 0.0)};
    std::vector<double> lp(n);
    for (std::size_t i = 0; i < n; ++i) lp[i] = dot({x.data() + i * d, d}, beta);

    double max_lp = -std::numeric_limits<double>::infinity();
    double s0 = 0.0;
    std::vector<double> s1(d, 0.0);
    std::vector<double> s2(d * d, 0.0);
    const auto add_row = [&](std::size_t i) {
        const double* xi = x.data() + i * d;
        if (s0 != 0.0 && lp[i] > max_lp) {
            const double rescale = std::exp(max_lp - lp[i]);
            s0 *= rescale;
            for (double& v : s1) v *= rescale;
            for (double& v : s2) v *= rescale;
            max_lp = lp[i];
        } else if (s0 == 0.0) {
            max_lp = lp[i];
        }
        const double w = std::exp(lp[i] - max_lp);
        s0 += w;
        if (want_derivs) {
            for (std::size_t a = 0; a < d; ++a) {
                s1[a] += w * xi[a];
                for (std::size_t b = 0; b < d; ++b) s2[a * d + b] += w * xi[a] * xi[b];
            }
        }
    };

    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        const double t = times[order[pos]];
        while (end < n && times[order[end]] == t) ++end;
        for (std::size_t k = pos; k < end; ++k) add_row(order[k]);
        const double log_denom = max_lp + std::log(s0);
        for (std::size_t k = pos; k < end; ++k) {
            const std::size_t i = order[k];
            if (!events[i]) continue;
            out.loglik += lp[i] - log_denom;
            if (want_derivs) {
                const double* xi = x.data() + i * d;
                for (std::size_t a = 0; a < d; ++a) {
                    const double mean_a = s1[a] / s0;
                    out.grad[a] += xi[a] - mean_a;
                    for (std::size_t b = 0; b < d; ++b)
                        out.hess[a * d + b] -= s2[a * d + b] / s0 - mean_a * (s1[b] / s0);
                }
            }
        }
        pos = end;
    }
    return out;
}

} // namespace

double cox_partial_loglik(std::span<const double> beta, std::span<const double> times,
                          std::span<const int> events, std::span<const double> x,
                          std::size_t n_covariates) {
    const auto order = descending_time_order(times);
    return cox_evaluate(beta, times, events, x, n_covariates, order, false).loglik;
}

FitResult cox_fit(std::span<const double> times, std::span<const int> events,
                  std::span<const double> x, std::size_t n_covariates,
                  const std::vector<std::string>& names, const FitOptions& opts) {
    const std::size_t n = times.size();
    const std::size_t d = n_covariates;
    if (events.size() != n || x.size() != n * d)
        throw std::invalid_argument("cox_fit: inconsistent input sizes");
    std::size_t n_events = 0;
    for (int e : events) n_events += e != 0;
    if (n_events == 0) throw std::invalid_argument("cox_fit: no events");

    const auto order = descending_time_order(times);
    std::vector<double> beta(d, 0.0);
    CoxEval eval = cox_evaluate(beta, times, events, x, d, order, true);
    FitResult result;
    bool converged = false;
    int iter = 0;
    for (; iter < std::max(opts.max_iter, 100); ++iter) {
        double gmax = 0.0;
        for (double g : eval.grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < 1e-9) {
            converged = true;
            break;
        }
        std::vector<double> neg_hess(d * d);
        for (std::size_t k = 0; k < d * d; ++k) neg_hess[k] = -eval.hess[k];
        const auto info_inv = invert_matrix(neg_hess, static_cast<int>(d));
        if (!info_inv) {
            result.diagnostic = "cox_fit: singular information matrix";
            break;
        }
        std::vector<double> step(d, 0.0);
        double step_rel = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) step[a] += (*info_inv)[a * d + b] * eval.grad[b];
            step_rel = std::max(step_rel, std::abs(step[a]) / (1.0 + std::abs(beta[a])));
        }
        // Near the optimum the log-likelihood gain drops below the floating
        // point noise floor before the gradient does; the Newton decrement is
        // the scale-free stopping quantity.
        if (step_rel < 1e-9) {
            converged = true;
            break;
        }
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving, scale *= 0.5) {
            std::vector<double> candidate(d);
            for (std::size_t a = 0; a < d; ++a) candidate[a] = beta[a] + scale * step[a];
            const CoxEval trial = cox_evaluate(candidate, times, events, x, d, order, true);
            if (std::isfinite(trial.loglik) && trial.loglik > eval.loglik) {
                beta = std::move(candidate);
                eval = trial;
                improved = true;
                break;
            }
        }
        if (!improved) {
            converged = step_rel < 1e-6;
            if (!converged) result.diagnostic = "cox_fit: line search stalled";
            break;
        }
    }

    for (double b : beta) {
        if (std::abs(b) > 50.0) {
            converged = false;
            result.diagnostic = "cox_fit: estimate diverged (possible separation)";
        }
    }

    std::vector<double> neg_hess(d * d);
    for (std::size_t k = 0; k < d * d; ++k) neg_hess[k] = -eval.hess[k];
    const auto covariance = invert_matrix(neg_hess, static_cast<int>(d));
    result.loglik = eval.loglik;
    result.converged = converged;
    result.iterations = iter;
    for (std::size_t a = 0; a < d; ++a) {
        const std::string name = a < names.size() ? names[a] : indexed_name("coef", a, d);
        double se = std::numeric_limits<double>::quiet_NaN();
        if (covariance && (*covariance)[a * d + a] > 0.0)
            se = std::sqrt((*covariance)[a * d + a]);
        result.params.push_back(make_estimate(name, beta[a], se));
        result.cov_names.push_back(name);
    }
    if (covariance) {
        result.covariance = *covariance;
        result.has_covariance = true;
    }
    return result;
}

FitResult fit_cox_csh(const Dataset& data, int risk, const FitOptions& opts) {
    if (risk != 1 && risk != 2) throw std::invalid_argument("fit_cox_csh: risk must be 1 or 2");
    data.validate();
    std::vector<int> events(data.size());
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        events[i] = data.status[i] == risk ? 1 : 0;
        count += events[i];
    }
    if (count == 0) {
        std::ostringstream msg;
        msg << "fit_cox_csh: no events of risk " << risk;
        throw std::invalid_argument(msg.str());
    }
    std::vector<std::string> names;
    for (std::size_t k = 0; k < data.n_covariates; ++k)
        names.push_back(indexed_name("alpha1" + std::to_string(risk), k, data.n_covariates));
    return cox_fit(data.time, events, data.covariates, data.n_covariates, names, opts);
}

// ---------------------------------------------------------------------------
// Structural partial-likelihood fit

FitResult fit_structural(const Dataset& data, const FitOptions& opts) {
    data.validate();
    std::size_t events1 = 0;
    std::size_t events2 = 0;
    for (int s : data.status) {
        events1 += s == 1;
        events2 += s == 2;
    }
    if (events1 == 0 || events2 == 0)
        throw std::invalid_argument("fit_structural: need at least one event of each risk");

    const RestructuredDataset rd = restructure(data);
    const PartialLikelihoodEvaluator evaluator(rd);
    const std::size_t d = data.n_covariates;
    const bool free_theta = !opts.fixed_theta.has_value();
    const std::size_t offset = free_theta ? 2 : 1; // position of beta11 block
    const std::size_t n_vars = offset + 2 * d;

    const auto unpack_theta = [&](const std::vector<double>& v) {
        return free_theta ? theta_from_xi(v[0]) : *opts.fixed_theta;
    };
    const auto loglik = [&](const std::vector<double>& v) -> double {
        if (free_theta && v[0] > 50.0) return -kBadObjective;
        const double theta = unpack_theta(v);
        const double gamma = v[offset - 1];
        return evaluator(theta, gamma, {v.data() + offset, d}, {v.data() + offset + d, d});
    };

    const MaximizeOutcome opt = maximize_loglik(loglik, std::vector<double>(n_vars, 0.0), opts);

    const double theta_hat = unpack_theta(opt.x);
    const double gamma_hat = opt.x[offset - 1];
    const double tau_hat = 1.0 - 1.0 / theta_hat;
    const double varsigma_hat = gamma_hat / theta_hat;

    FitResult result;
    result.loglik = opt.loglik;
    result.converged = opt.converged;
    result.iterations = opt.iterations;
    result.diagnostic = opt.note;

    // Standard errors come from the observed information on the natural
    // (theta, gamma, beta) scale. The xi scale is only a search device; at a
    // theta-boundary fit its Hessian degenerates while the natural-scale
    // information stays finite.
    const auto natural_full_neg = [&](const std::vector<double>& v) {
        if (!(v[0] > 1e-3)) return kBadObjective;
        const double value = evaluator(v[0], v[1], {v.data() + 2, d}, {v.data() + 2 + d, d});
        return std::isfinite(value) ? -value : kBadObjective;
    };
    std::vector<double> natural_x = opt.x; // (gamma, betas) when theta is fixed
    if (free_theta) natural_x[0] = theta_hat;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double se_theta = nan, se_tau = nan, se_gamma = nan, se_varsigma = nan;
    std::vector<double> se_beta(2 * d, nan);
    std::optional<std::vector<double>> covariance;
    {
        const auto hess_fn = [&](const std::vector<double>& v) {
            if (free_theta) return natural_full_neg(v);
            std::vector<double> full(v.size() + 1);
            full[0] = *opts.fixed_theta;
            std::copy(v.begin(), v.end(), full.begin() + 1);
            return natural_full_neg(full);
        };
        const std::vector<double> hess = fd_hessian(hess_fn, natural_x, opts.hessian_step);
        covariance = invert_matrix(hess, static_cast<int>(natural_x.size()));
        if (covariance)
            for (std::size_t i = 0; i < natural_x.size(); ++i)
                if (!((*covariance)[i * natural_x.size() + i] > 0.0)) covariance.reset();
        if (!covariance && result.diagnostic.empty())
            result.diagnostic = "information matrix not positive definite; covariance omitted";
    }
    if (covariance) {
        const std::size_t nv = natural_x.size();
        const auto v = [&](std::size_t i, std::size_t j) { return (*covariance)[i * nv + j]; };
        const std::size_t g = free_theta ? 1 : 0; // gamma position
        se_gamma = std::sqrt(v(g, g));
        for (std::size_t k = 0; k < 2 * d; ++k)
            se_beta[k] = std::sqrt(v(g + 1 + k, g + 1 + k));
        if (free_theta) {
            se_theta = std::sqrt(v(0, 0));
            se_tau = se_theta / (theta_hat * theta_hat);
            const double a = -gamma_hat / (theta_hat * theta_hat);
            const double b = 1.0 / theta_hat;
            const double var_vs = a * a * v(0, 0) + 2.0 * a * b * v(0, 1) + b * b * v(1, 1);
            se_varsigma = var_vs > 0.0 ? std::sqrt(var_vs) : nan;
        } else {
            se_varsigma = se_gamma / theta_hat;
        }
        result.covariance = *covariance;
        result.has_covariance = true;
    }

    result.params.push_back(make_estimate("tau", tau_hat, se_tau));
    result.params.push_back(make_estimate("theta", theta_hat, se_theta));
    result.params.push_back(make_estimate("gamma", gamma_hat, se_gamma));
    result.params.push_back(make_estimate("varsigma", varsigma_hat, se_varsigma));
    if (free_theta) result.cov_names.push_back("theta");
    result.cov_names.push_back("gamma");
    for (std::size_t k = 0; k < d; ++k) {
        const std::string name = indexed_name("beta11", k, d);
        result.params.push_back(make_estimate(name, opt.x[offset + k], se_beta[k]));
        result.cov_names.push_back(name);
    }
    for (std::size_t k = 0; k < d; ++k) {
        const std::string name = indexed_name("beta12", k, d);
        result.params.push_back(make_estimate(name, opt.x[offset + d + k], se_beta[d + k]));
        result.cov_names.push_back(name);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Full parametric maximum likelihood oracle

FitResult fit_full_mle(const Dataset& data, const FitOptions& opts) {
    data.validate();
    std::size_t events1 = 0;
    std::size_t events2 = 0;
    for (int s : data.status) {
        if (s == 0)
            throw std::invalid_argument("fit_full_mle: censored rows are not supported");
        events1 += s == 1;
        events2 += s == 2;
    }
    if (events1 == 0 || events2 == 0)
        throw std::invalid_argument("fit_full_mle: need at least one event of each risk");

    const std::size_t d = data.n_covariates;
    const std::size_t n_vars = 3 + 2 * d; // xi, gamma, log beta01, beta11, beta12
    const auto loglik = [&](const std::vector<double>& v) -> double {
        if (v[0] > 50.0 || std::abs(v[2]) > 300.0) return -kBadObjective;
        StructuralParams p;
        p.theta = theta_from_xi(v[0]);
        p.gamma = v[1];
        p.beta01 = std::exp(v[2]);
        p.beta11.assign(v.begin() + 3, v.begin() + 3 + d);
        p.beta12.assign(v.begin() + 3 + d, v.end());
        try {
            return full_loglik(p, data);
        } catch (const std::exception&) {
            return -kBadObjective;
        }
    };

    const MaximizeOutcome opt = maximize_loglik(loglik, std::vector<double>(n_vars, 0.0), opts);

    const double theta_hat = theta_from_xi(opt.x[0]);
    const double gamma_hat = opt.x[1];
    const double beta01_hat = std::exp(opt.x[2]);
    const double tau_hat = 1.0 - 1.0 / theta_hat;

    FitResult result;
    result.loglik = opt.loglik;
    result.converged = opt.converged;
    result.iterations = opt.iterations;
    result.diagnostic = opt.note;

    // Observed information on the natural (theta, gamma, beta01, betas)
    // scale, as in fit_structural.
    // Probes below theta = 1 are clamped to the model boundary; a fit sitting
    // at the boundary then yields a flat direction and the covariance is
    // omitted rather than fabricated.
    const auto natural_neg = [&](const std::vector<double>& v) {
        if (!(v[2] > 0.0)) return kBadObjective;
        StructuralParams p;
        p.theta = std::max(v[0], 1.0);
        p.gamma = v[1];
        p.beta01 = v[2];
        p.beta11.assign(v.begin() + 3, v.begin() + 3 + d);
        p.beta12.assign(v.begin() + 3 + d, v.end());
        try {
            return -full_loglik(p, data);
        } catch (const std::exception&) {
            return kBadObjective;
        }
    };
    std::vector<double> natural_x{theta_hat, gamma_hat, beta01_hat};
    natural_x.insert(natural_x.end(), opt.x.begin() + 3, opt.x.end());

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double se_theta = nan, se_tau = nan, se_gamma = nan, se_varsigma = nan, se_beta01 = nan;
    std::vector<double> se_beta(2 * d, nan);
    {
        const std::vector<double> hess = fd_hessian(natural_neg, natural_x, opts.hessian_step);
        auto covariance = invert_matrix(hess, static_cast<int>(n_vars));
        if (covariance)
            for (std::size_t i = 0; i < n_vars; ++i)
                if (!((*covariance)[i * n_vars + i] > 0.0)) covariance.reset();
        if (covariance) {
            const auto v = [&](std::size_t i, std::size_t j) { return (*covariance)[i * n_vars + j]; };
            se_theta = std::sqrt(v(0, 0));
            se_tau = se_theta / (theta_hat * theta_hat);
            se_gamma = std::sqrt(v(1, 1));
            se_beta01 = std::sqrt(v(2, 2));
            const double a = -gamma_hat / (theta_hat * theta_hat);
            const double b = 1.0 / theta_hat;
            const double var_vs = a * a * v(0, 0) + 2.0 * a * b * v(0, 1) + b * b * v(1, 1);
            se_varsigma = var_vs > 0.0 ? std::sqrt(var_vs) : nan;
            for (std::size_t k = 0; k < 2 * d; ++k) se_beta[k] = std::sqrt(v(3 + k, 3 + k));
            result.covariance = *covariance;
            result.has_covariance = true;
        } else if (result.diagnostic.empty()) {
            result.diagnostic = "information matrix not positive definite; covariance omitted";
        }
    }

    result.params.push_back(make_estimate("tau", tau_hat, se_tau));
    result.params.push_back(make_estimate("theta", theta_hat, se_theta));
    result.params.push_back(make_estimate("gamma", gamma_hat, se_gamma));
    result.params.push_back(make_estimate("varsigma", gamma_hat / theta_hat, se_varsigma));
    result.params.push_back(make_estimate("beta01", beta01_hat, se_beta01));
    result.cov_names = {"theta", "gamma", "beta01"};
    for (std::size_t k = 0; k < d; ++k) {
        const std::string name = indexed_name("beta11", k, d);
        result.params.push_back(make_estimate(name, opt.x[3 + k], se_beta[k]));
        result.cov_names.push_back(name);
    }
    for (std::size_t k = 0; k < d; ++k) {
        const std::string name = indexed_name("beta12", k, d);
        result.params.push_back(make_estimate(name, opt.x[3 + d + k], se_beta[d + k]));
        result.cov_names.push_back(name);
    }
    return result;
}

const ParamEstimate& FitResult::at(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return p;
    throw std::out_of_range("FitResult: no parameter named " + name);
}

// ---------------------------------------------------------------------------
// Monte Carlo coverage study

const StudyRow& StudyReport::at(const std::string& parameter) const {
    for (const auto& row : rows)
        if (row.parameter == parameter) return row;
    throw std::out_of_range("StudyReport: no row for parameter " + parameter);
}

std::string StudyReport::to_csv() const {
    std::ostringstream out;
    out << "parameter,truth,sb,var,mse,cp,n_converged\n";
    for (const auto& row : rows) {
        out << row.parameter << ',' << format_cell(row.truth) << ',' << format_cell(row.sb) << ','
            << format_cell(row.var) << ',' << format_cell(row.mse) << ',' << format_cell(row.cp)
            << ',' << row.n_converged << "\n";
    }
    return out.str();
}

std::string StudyReport::to_text() const {
    std::ostringstream out;
    out << "parameter      truth          SB         VAR         MSE      CP   n_conv\n";
    for (const auto& row : rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-10s %9.4f  %10.3e  %10s  %10s  %6s  %6zu\n",
                      row.parameter.c_str(), row.truth, row.sb, format_cell(row.var).c_str(),
                      format_cell(row.mse).c_str(), format_cell(row.cp).c_str(), row.n_converged);
        out << line;
    }
    out << "replications: " << reps << ", excluded (non-converged): " << n_excluded << "\n";
    return out.str();
}

StudyReport coverage_study(const DgpConfig& cfg, std::size_t reps, StudyEstimator estimator,
                           std::size_t threads) {
    cfg.validate();
    if (reps < 1) throw std::invalid_argument("coverage_study: reps must be at least 1");
    if (cfg.params.beta11.size() != 1)
        throw std::invalid_argument("coverage_study tracks the scalar-covariate parameter set");

    constexpr std::size_t kTracked = 4;
    const std::array<const char*, kTracked> names{"tau", "gamma", "beta11", "beta12"};
    const std::array<double, kTracked> truths{1.0 - 1.0 / cfg.params.theta, cfg.params.gamma,
                                              cfg.params.beta11[0], cfg.params.beta12[0]};

    struct RepOutcome {
        bool ok = false;
        std::array<double, kTracked> estimate{};
        std::array<bool, kTracked> covered{};
    };
    std::vector<RepOutcome> outcomes(reps);

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= reps) return;
            DgpConfig rep_cfg = cfg;
            rep_cfg.seed = replication_seed(cfg.seed, r);
            RepOutcome& slot = outcomes[r];
            try {
                const Dataset data = sample_dataset(rep_cfg);
                const FitResult fit = estimator == StudyEstimator::partial_likelihood
                                          ? fit_structural(data)
                                          : fit_full_mle(data);
                if (!fit.converged || !fit.has_covariance) continue;
                bool usable = true;
                RepOutcome candidate;
                for (std::size_t k = 0; k < kTracked; ++k) {
                    const ParamEstimate& p = fit.at(names[k]);
                    if (!std::isfinite(p.estimate) || !std::isfinite(p.se)) {
                        usable = false;
                        break;
                    }
                    candidate.estimate[k] = p.estimate;
                    candidate.covered[k] = p.ci_lo <= truths[k] && truths[k] <= p.ci_hi;
                }
                if (!usable) continue;
                candidate.ok = true;
                slot = candidate;
            } catch (const std::exception&) {
                // excluded and counted below
            }
        }
    };

    std::size_t n_threads = threads > 0 ? threads : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min<std::size_t>(n_threads, reps);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    StudyReport report;
    report.reps = reps;
    for (std::size_t k = 0; k < kTracked; ++k) {
        std::vector<double> estimates;
        std::size_t covered = 0;
        for (const auto& rep : outcomes) {
            if (!rep.ok) continue;
            estimates.push_back(rep.estimate[k]);
            covered += rep.covered[k];
        }
        StudyRow row;
        row.parameter = names[k];
        row.truth = truths[k];
        row.n_converged = estimates.size();
        if (!estimates.empty()) {
            const double avg = mean(estimates);
            row.sb = (avg - truths[k]) * (avg - truths[k]);
            double mse = 0.0;
            for (double e : estimates) mse += (e - truths[k]) * (e - truths[k]);
            row.mse = mse / estimates.size();
            row.var = estimates.size() > 1 ? population_variance(estimates)
                                           : std::numeric_limits<double>::quiet_NaN();
            row.cp = static_cast<double>(covered) / estimates.size();
        } else {
            row.sb = row.var = row.mse = row.cp = std::numeric_limits<double>::quiet_NaN();
        }
        report.rows.push_back(std::move(row));
    }
    report.n_excluded = reps - report.rows.front().n_converged;
    return report;
}

} // namespace crcop
