#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace crcop {

/// Root of a continuous monotone function on a bracketing interval [lo, hi],
/// located by bisection-safeguarded interpolation to absolute tolerance
/// `tol` in the argument. Throws std::runtime_error (with the bracketing
/// state in the message) when the bracket is invalid or fails to shrink.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Adaptive Gauss-Kronrod (15-7) quadrature of f over [a, b] with absolute
/// tolerance `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Integral of f over [a, +inf), mapped to a finite interval via
/// t = a + scale * u/(1-u). `scale` should be of the order of the
/// integrand's mass location so the mapped panels resolve it.
double integrate_to_infinity(const std::function<double(double)>& f, double a, double abs_tol,
                             double scale = 1.0);

/// Nodes and weights for n-point Gauss-Hermite quadrature with weight
/// exp(-x^2): integral f(x) exp(-x^2) dx ~= sum w_i f(x_i).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

/// Expectation of g(Z) for Z ~ N(mean, sd^2) by n-point Gauss-Hermite.
double gauss_hermite_expectation(const std::function<double(double)>& g, double mean, double sd,
                                 int n);

struct SimplexOptions {
    int max_iter = 2000;
    double f_tol = 1e-10;      // relative objective spread across the simplex
    double x_tol = 1e-8;       // simplex diameter
    double init_step = 0.25;   // initial vertex offset per coordinate
};

struct SimplexResult {
    std::vector<double> x;
    double fmin = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Nelder-Mead minimisation of f from x0.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          const std::vector<double>& x0, const SimplexOptions& opts = {});

/// Central finite-difference gradient with per-coordinate step
/// max(step, step * |x_i|).
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double step = 1e-4);

/// Central finite-difference Hessian (symmetrised), row-major d x d.
std::vector<double> fd_hessian(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, double step = 1e-4);

/// Inverse of a d x d matrix (row-major) by Gauss-Jordan with partial
/// pivoting; nullopt when numerically singular.
std::optional<std::vector<double>> invert_matrix(std::vector<double> m, int d);

/// Eigenvalues of a symmetric d x d matrix (row-major) by cyclic Jacobi
/// rotations, ascending.
std::vector<double> symmetric_eigenvalues(std::vector<double> m, int d);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

} // namespace crcop
