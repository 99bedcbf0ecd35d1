#ifndef GPAMR_TEST_ORACLES_HPP
#define GPAMR_TEST_ORACLES_HPP

// Independent reference implementations used only by tests.  Nothing here
// shares code with the library paths it checks.

#include <span>
#include <vector>

namespace oracles {

// Dense Gaussian elimination with partial pivoting.
std::vector<double> ge_solve(std::vector<double> A, std::vector<double> b, int n);

// Least squares through the normal equations M^T M x = M^T b.
std::vector<double> normal_equations(const std::vector<double>& M, int rows, int cols,
                                     const std::vector<double>& b);

// erf via long-double Maclaurin series (small x) / Lentz continued fraction
// for erfc (large x); good to ~1e-17 absolute.
long double erf_series(long double x);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Double cell average of exp(-(u-v)^2/(2 l^2)) over two unit-width cells
// with centers delta apart (normalized by dx), by tensor quadrature.
double quad_integrated_cov(double delta, double ell_over_dx, int nodes = 48);

// Coarse-cell x fine-cell average, fine cell of width 1/ratio centered at
// delta from the coarse center.
double quad_cross_cov(double delta, double ell_over_dx, int ratio, int nodes = 48);

// All eigenvalues of a symmetric matrix by inertia bisection on
// det(A - mu I): LDL^T pivot signs count eigenvalues below mu.
std::vector<double> eig_bisection(const std::vector<double>& A, int n,
                                  double tol = 1e-13);

// 1D exact cell average of exp(-c (x-x0)^2) over [a, b].
double gaussian_cell_average(double a, double b, double c, double x0);

// Deterministic xorshift generator for reproducible random tests.
struct Rng {
    unsigned long long s;
    explicit Rng(unsigned long long seed) : s(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
    double uniform(double lo = 0.0, double hi = 1.0);
};

} // namespace oracles

#endif
