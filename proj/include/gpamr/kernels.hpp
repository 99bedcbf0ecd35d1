#ifndef GPAMR_KERNELS_HPP
#define GPAMR_KERNELS_HPP

#include <array>
#include <span>

namespace gpamr::kernels {

/// Hyperparameters and grid metrics for one kernel family.  Lengths are
/// absolute; the per-dimension factors only ever see ell/dx[d].  The prior
/// amplitude is fixed to 1 and the prior mean to 0: neither survives into
/// the posterior-mean weights.
struct KernelParams {
    int dim = 2;
    double ell = 1.0;         // long correlation length (interpolation)
    double sigma_shock = 1.0; // short correlation length (shock detection)
    std::array<double, 3> dx = {1.0, 1.0, 1.0};
    std::array<int, 3> ratio = {2, 2, 2};
};

/// Squared-exponential covariance of two points (physical coordinates).
double se_kernel(std::span<const double> x, std::span<const double> y,
                 const KernelParams& p);

/// One dimension of the cell-average/cell-average covariance: both cells of
/// unit width (in units of dx), centers delta apart.
double integrated_cov_1d(double delta, double ell_over_dx);

/// One dimension of the coarse-cell/fine-cell covariance: coarse cell of
/// unit width, fine cell of width 1/ratio centered delta away.
double cross_cov_1d(double delta, double ell_over_dx, int ratio);

/// Cell-average covariance C_kh for same-level cells; delta is the
/// normalized center offset per dimension.  Product over dimensions.
double integrated_cov(std::span<const double> delta, const KernelParams& p);

/// Coarse-to-fine covariance T_k* ; delta_star = (x_* - x_k)/dx per
/// dimension, the fine cell width is dx/ratio.
double cross_cov(std::span<const double> delta_star, const KernelParams& p);

/// Same integrals with the short length sigma_shock in place of ell.
double integrated_cov_sigma(std::span<const double> delta, const KernelParams& p);
double se_kernel_sigma(std::span<const double> x, std::span<const double> y,
                       const KernelParams& p);

/// Extended-precision evaluations for the one-time weight factory.  The
/// factory's kernel matrices reach condition numbers near 1e10, so entry
/// rounding at double would leak into the solved weights.
long double integrated_cov_1d_ld(long double delta, long double ell_over_dx);
long double cross_cov_1d_ld(long double delta, long double ell_over_dx, int ratio);

} // namespace gpamr::kernels

#endif
