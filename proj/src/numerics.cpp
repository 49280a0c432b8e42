#include "crcop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace crcop {

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double softplus(double x) {
    if (x > 36.0) return x + std::exp(-x);
    if (x < -36.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        std::ostringstream msg;
        msg << "find_root: no sign change on bracket [" << lo << ", " << hi << "], f=(" << flo
            << ", " << fhi << ")";
        throw std::runtime_error(msg.str());
    }
    // Bisection with a secant proposal accepted only when it stays well
    // inside the current bracket; every third step is a plain bisection so
    // the bracket width is guaranteed to halve often enough.
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        double x = mid;
        const double denom = fhi - flo;
        if (denom != 0.0 && iter % 3 != 2) {
            const double secant = lo - flo * (hi - lo) / denom;
            if (secant > lo + 0.01 * (hi - lo) && secant < hi - 0.01 * (hi - lo)) x = secant;
        }
        const double fx = f(x);
        if (fx == 0.0 || hi - lo < tol) return x;
        if ((fx > 0.0) == (fhi > 0.0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        if (hi - lo < tol) return 0.5 * (lo + hi);
    }
    return 0.5 * (lo + hi);
}

namespace {

// Gauss-Kronrod 15-point nodes on [-1, 1] (positive half) with the embedded
// 7-point Gauss rule on the odd-indexed nodes.
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double integral;
    double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kKronrodNodes[i]);
        fv[14 - i] = f(c + h * kKronrodNodes[i]);
    }
    fv[7] = f(c);
    double kronrod = 0.0;
    for (int i = 0; i < 7; ++i) kronrod += kKronrodWeights[i] * (fv[i] + fv[14 - i]);
    kronrod += kKronrodWeights[7] * fv[7];
    double gauss = kGaussWeights[3] * fv[7];
    for (int i = 0; i < 3; ++i) gauss += kGaussWeights[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int depth) {
    const PanelResult r = gk15(f, a, b);
    if (r.error <= abs_tol || depth >= 48) return r.integral;
    const double c = 0.5 * (a + b);
    return integrate_adaptive(f, a, c, 0.5 * abs_tol, depth + 1) +
           integrate_adaptive(f, c, b, 0.5 * abs_tol, depth + 1);
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    return integrate_adaptive(f, a, b, abs_tol, 0);
}

double integrate_to_infinity(const std::function<double(double)>& f, double a, double abs_tol,
                             double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("integrate_to_infinity: scale must be > 0");
    const auto mapped = [&](double u) {
        const double one_minus = 1.0 - u;
        const double t = a + scale * u / one_minus;
        return f(t) * scale / (one_minus * one_minus);
    };
    // The u=1 endpoint is never evaluated by the open-ended Kronrod nodes.
    return integrate_adaptive(mapped, 0.0, 1.0, abs_tol, 0);
}

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sqrt_pi = 1.7724538509055160272981674833411;
    // Roots of H_n by Newton iteration, largest to smallest, with standard
    // asymptotic initial guesses; symmetric pairs filled together.
    double z = 0.0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Recurrence for orthonormal Hermite polynomials.
            double p1 = 1.0 / std::sqrt(sqrt_pi);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

double gauss_hermite_expectation(const std::function<double(double)>& g, double mean, double sd,
                                 int n) {
    const GaussHermiteRule rule = gauss_hermite(n);
    const double inv_sqrt_pi = 0.56418958354775628694807945156077;
    const double scale = sd * 1.4142135623730950488016887242097;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * g(mean + scale * rule.nodes[i]);
    return sum * inv_sqrt_pi;
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          const std::vector<double>& x0, const SimplexOptions& opts) {
    const int n = static_cast<int>(x0.size());
    std::vector<std::vector<double>> verts(n + 1, x0);
    for (int i = 0; i < n; ++i)
        verts[i + 1][i] += (x0[i] != 0.0) ? opts.init_step * std::abs(x0[i]) : opts.init_step;
    std::vector<double> fv(n + 1);
    for (int i = 0; i <= n; ++i) fv[i] = f(verts[i]);

    const auto order = [&]() {
        std::vector<int> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> v2(n + 1);
        std::vector<double> f2(n + 1);
        for (int k = 0; k <= n; ++k) {
            v2[k] = verts[idx[k]];
            f2[k] = fv[idx[k]];
        }
        verts.swap(v2);
        fv.swap(f2);
    };

    SimplexResult result;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        order();
        const double fspread = std::abs(fv[n] - fv[0]);
        const double fscale = std::max(1.0, std::abs(fv[0]));
        double diameter = 0.0;
        for (int i = 0; i < n; ++i)
            diameter = std::max(diameter, std::abs(verts[n][i] - verts[0][i]));
        if (fspread <= opts.f_tol * fscale && diameter <= opts.x_tol) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) centroid[i] += verts[k][i] / n;

        const auto blend = [&](const std::vector<double>& from, double coef) {
            std::vector<double> p(n);
            for (int i = 0; i < n; ++i) p[i] = centroid[i] + coef * (from[i] - centroid[i]);
            return p;
        };

        const std::vector<double> xr = blend(verts[n], -1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const std::vector<double> xe = blend(verts[n], -2.0);
            const double fe = f(xe);
            if (fe < fr) {
                verts[n] = xe;
                fv[n] = fe;
            } else {
                verts[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            verts[n] = xr;
            fv[n] = fr;
        } else {
            const bool outside = fr < fv[n];
            const std::vector<double> xc = blend(verts[n], outside ? -0.5 : 0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[n])) {
                verts[n] = xc;
                fv[n] = fc;
            } else {
                for (int k = 1; k <= n; ++k) {
                    for (int i = 0; i < n; ++i)
                        verts[k][i] = verts[0][i] + 0.5 * (verts[k][i] - verts[0][i]);
                    fv[k] = f(verts[k]);
                }
            }
        }
    }
    order();
    result.x = verts[0];
    result.fmin = fv[0];
    result.iterations = iter;
    return result;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double step) {
    const int d = static_cast<int>(x.size());
    std::vector<double> g(d);
    std::vector<double> p = x;
    for (int i = 0; i < d; ++i) {
        const double h = std::max(step, step * std::abs(x[i]));
        p[i] = x[i] + h;
        const double fp = f(p);
        p[i] = x[i] - h;
        const double fm = f(p);
        p[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

std::vector<double> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, double step) {
    const int d = static_cast<int>(x.size());
    std::vector<double> h(d);
    for (int i = 0; i < d; ++i) h[i] = std::max(step, step * std::abs(x[i]));
    std::vector<double> hess(d * d, 0.0);
    const double f0 = f(x);
    std::vector<double> p = x;
    for (int i = 0; i < d; ++i) {
        p[i] = x[i] + h[i];
        const double fp = f(p);
        p[i] = x[i] - h[i];
        const double fm = f(p);
        p[i] = x[i];
        hess[i * d + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            p[i] = x[i] + h[i];
            p[j] = x[j] + h[j];
            const double fpp = f(p);
            p[j] = x[j] - h[j];
            const double fpm = f(p);
            p[i] = x[i] - h[i];
            const double fmm = f(p);
            p[j] = x[j] + h[j];
            const double fmp = f(p);
            p[i] = x[i];
            p[j] = x[j];
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    return hess;
}

std::optional<std::vector<double>> invert_matrix(std::vector<double> m, int d) {
    std::vector<double> inv(d * d, 0.0);
    for (int i = 0; i < d; ++i) inv[i * d + i] = 1.0;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r)
            if (std::abs(m[r * d + col]) > std::abs(m[pivot * d + col])) pivot = r;
        const double pval = m[pivot * d + col];
        if (!std::isfinite(pval) || std::abs(pval) < 1e-300) return std::nullopt;
        if (pivot != col) {
            for (int c = 0; c < d; ++c) {
                std::swap(m[pivot * d + c], m[col * d + c]);
                std::swap(inv[pivot * d + c], inv[col * d + c]);
            }
        }
        const double scale = 1.0 / m[col * d + col];
        for (int c = 0; c < d; ++c) {
            m[col * d + c] *= scale;
            inv[col * d + c] *= scale;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            const double factor = m[r * d + col];
            if (factor == 0.0) continue;
            for (int c = 0; c < d; ++c) {
                m[r * d + c] -= factor * m[col * d + c];
                inv[r * d + c] -= factor * inv[col * d + c];
            }
        }
    }
    for (double v : inv)
        if (!std::isfinite(v)) return std::nullopt;
    return inv;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> m, int d) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += m[i * d + j] * m[i * d + j];
        if (off < 1e-30) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = m[p * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = m[p * d + p];
                const double aqq = m[q * d + q];
                const double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(phi);
                const double s = std::sin(phi);
                for (int k = 0; k < d; ++k) {
                    const double akp = m[k * d + p];
                    const double akq = m[k * d + q];
                    m[k * d + p] = c * akp - s * akq;
                    m[k * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = m[p * d + k];
                    const double aqk = m[q * d + k];
                    m[p * d + k] = c * apk - s * aqk;
                    m[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(d);
    for (int i = 0; i < d; ++i) eig[i] = m[i * d + i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

} // namespace crcop
