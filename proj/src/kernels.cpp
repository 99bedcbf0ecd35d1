#include "gpamr/kernels.hpp"
#include "gpamr/smallmat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace gpamr::kernels {

namespace {

// The closed forms are evaluated through one implementation templated on
// the float type.  The weight factory instantiates it at long double: the
// kernel matrices it feeds into Cholesky carry condition numbers around
// 1e10 at ell/dx = 12, so entry rounding at double would surface in the
// solved weights.
template <class Real>
constexpr Real sqrt_pi_v = Real(1.77245385090551602729816748334114518L);
template <class Real>
constexpr Real inv_sqrt_pi_v = Real(0.56418958354775628694807945156077258L);

template <class Real> Real erf_of(Real z) {
    if constexpr (std::is_same_v<Real, double>)
        return smallmat::erf(z);
    else
        return std::erf(z);
}

// Second antiderivative of exp(-t^2) up to scaling:
// d^2/dt^2 [ sqrt(pi) l^2 psi(t/(sqrt(2) l)) ] = exp(-t^2/(2 l^2)).
template <class Real> Real psi(Real z) {
    return z * erf_of(z) + std::exp(-z * z) * inv_sqrt_pi_v<Real>;
}

template <class Real> Real binom(int n, int k) {
    Real r = 1;
    for (int i = 1; i <= k; ++i) r = r * Real(n - k + i) / Real(i);
    return r;
}

template <class Real> Real guard_factor(Real f, const char* what) {
    if (f < 0) {
        if (f > Real(-1e-15)) return 0;
        throw std::runtime_error(std::string(what) + ": negative factor " +
                                 std::to_string(static_cast<double>(f)));
    }
    return f;
}

// Even Taylor coefficients of psi; fact_nm1 carries (n-1)! across calls.
template <class Real> Real psi_coeff(int n, Real& fact_nm1) {
    const Real c = (Real(2) / (fact_nm1 * Real(2 * n - 1)) - Real(1) / (fact_nm1 * Real(n))) *
                   inv_sqrt_pi_v<Real>;
    fact_nm1 *= Real(n);
    return (n % 2 == 1) ? c : -c;
}

constexpr int kSeriesMax = 40;

// Series form of the psi bracket, used when every psi argument is small and
// the direct combination would cancel: sum_n c_n eps^(2n-2) * 2 *
// sum_j C(2n,2j) u^(2n-2j) w_j.  Every inner term has one sign.
template <class Real> Real bracket_series(Real delta, Real eps, const Real* w2j) {
    const Real u2 = delta * delta;
    Real u2pow[kSeriesMax + 1];
    u2pow[0] = 1;
    for (int k = 1; k <= kSeriesMax; ++k) u2pow[k] = u2pow[k - 1] * u2;

    Real sum = 0, fact = 1;
    Real eps_pow = 1; // eps^(2n-2)
    for (int n = 1; n <= kSeriesMax; ++n) {
        const Real cn = psi_coeff(n, fact);
        Real g = 0;
        for (int j = 1; j <= n; ++j)
            g += binom<Real>(2 * n, 2 * j) * u2pow[n - j] * w2j[j];
        g *= 2;
        const Real term = Real(0.5) * sqrt_pi_v<Real> * cn * eps_pow * g;
        sum += term;
        if (std::abs(term) < Real(1e-19) * std::abs(sum)) break;
        eps_pow *= eps * eps;
    }
    return sum;
}

template <class Real> Real integrated_1d(Real delta, Real ell_over_dx) {
    delta = std::abs(delta); // both brackets are even in delta
    const Real eps = Real(1) / (std::sqrt(Real(2)) * ell_over_dx);
    if (eps * (delta + 1) < Real(0.35)) {
        Real w[kSeriesMax + 1];
        for (int j = 0; j <= kSeriesMax; ++j) w[j] = 1;
        return guard_factor(bracket_series(delta, eps, w), "integrated_cov");
    }
    const Real l2 = ell_over_dx * ell_over_dx;
    const Real zp = (delta + 1) * eps;
    const Real zm = (delta - 1) * eps;
    const Real z0 = delta * eps;
    const Real f = sqrt_pi_v<Real> * l2 * (psi(zp) + psi(zm) - 2 * psi(z0));
    return guard_factor(f, "integrated_cov");
}

template <class Real> Real cross_1d(Real delta, Real ell_over_dx, int ratio) {
    if (ratio == 1) return integrated_1d(delta, ell_over_dx);
    delta = std::abs(delta);
    const Real eps = Real(1) / (std::sqrt(Real(2)) * ell_over_dx);
    if (eps * (delta + 1) < Real(0.35)) {
        const Real a = Real(0.5), b = Real(0.5) / Real(ratio);
        Real apb[kSeriesMax + 1], amb[kSeriesMax + 1], w[kSeriesMax + 1];
        apb[0] = amb[0] = 1;
        for (int j = 1; j <= kSeriesMax; ++j) {
            apb[j] = apb[j - 1] * (a + b) * (a + b);
            amb[j] = amb[j - 1] * (a - b) * (a - b);
        }
        for (int j = 0; j <= kSeriesMax; ++j) w[j] = apb[j] - amb[j];
        return guard_factor(Real(ratio) * bracket_series(delta, eps, w), "cross_cov");
    }
    const Real l2 = ell_over_dx * ell_over_dx;
    const Real lo = Real(ratio - 1) / Real(2 * ratio);
    const Real hi = Real(ratio + 1) / Real(2 * ratio);
    // Signs follow the convolution of the two cell indicators; the series
    // path and the quadrature oracle both confirm this arrangement.
    const Real f = Real(ratio) * sqrt_pi_v<Real> * l2 *
                   (psi((delta + hi) * eps) - psi((delta + lo) * eps) -
                    psi((delta - lo) * eps) + psi((delta - hi) * eps));
    return guard_factor(f, "cross_cov");
}

} // namespace

double se_kernel(std::span<const double> x, std::span<const double> y,
                 const KernelParams& p) {
    double d2 = 0.0;
    for (int d = 0; d < p.dim; ++d) d2 += (x[d] - y[d]) * (x[d] - y[d]);
    return std::exp(-d2 / (2.0 * p.ell * p.ell));
}

double se_kernel_sigma(std::span<const double> x, std::span<const double> y,
                       const KernelParams& p) {
    double d2 = 0.0;
    for (int d = 0; d < p.dim; ++d) d2 += (x[d] - y[d]) * (x[d] - y[d]);
    return std::exp(-d2 / (2.0 * p.sigma_shock * p.sigma_shock));
}

double integrated_cov_1d(double delta, double ell_over_dx) {
    return integrated_1d<double>(delta, ell_over_dx);
}

double cross_cov_1d(double delta, double ell_over_dx, int ratio) {
    return cross_1d<double>(delta, ell_over_dx, ratio);
}

long double integrated_cov_1d_ld(long double delta, long double ell_over_dx) {
    return integrated_1d<long double>(delta, ell_over_dx);
}

long double cross_cov_1d_ld(long double delta, long double ell_over_dx, int ratio) {
    return cross_1d<long double>(delta, ell_over_dx, ratio);
}

double integrated_cov(std::span<const double> delta, const KernelParams& p) {
    double f = 1.0;
    for (int d = 0; d < p.dim; ++d) f *= integrated_cov_1d(delta[d], p.ell / p.dx[d]);
    return f;
}

double integrated_cov_sigma(std::span<const double> delta, const KernelParams& p) {
    double f = 1.0;
    for (int d = 0; d < p.dim; ++d)
        f *= integrated_cov_1d(delta[d], p.sigma_shock / p.dx[d]);
    return f;
}

double cross_cov(std::span<const double> delta_star, const KernelParams& p) {
    double f = 1.0;
    for (int d = 0; d < p.dim; ++d)
        f *= cross_cov_1d(delta_star[d], p.ell / p.dx[d], p.ratio[d]);
    return f;
}

} // namespace gpamr::kernels
