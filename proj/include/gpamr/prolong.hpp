#ifndef GPAMR_PROLONG_HPP
#define GPAMR_PROLONG_HPP

#include "gpamr/weights.hpp"

#include <span>
#include <vector>

namespace gpamr::prolong {

using weights::GpConfig;
using weights::ProlongWeights;

/// Fine values for one coarse cell, ordered like FinePointSet.
struct ProlongResult {
    std::vector<double> fine_values;
    bool used_weno = false;
    double alpha = 0.0;
};

/// Smoothness switch of the central substencil window: the sigma-model
/// quadratic form over the squared arithmetic mean.
double compute_alpha(std::span<const double> window, const ProlongWeights& W,
                     const GpConfig& cfg);

/// Single-stencil posterior-mean prediction: one dot product per fine point.
void prolong_linear_into(std::span<const double> window, const ProlongWeights& W,
                         std::span<double> out);
ProlongResult prolong_linear(std::span<const double> window, const ProlongWeights& W);

/// Multi-substencil blend with WENO-JS style nonlinear weights built from
/// the GP smoothness indicators.
void prolong_weno_into(std::span<const double> window, const ProlongWeights& W,
                       const GpConfig& cfg, std::span<double> out);
ProlongResult prolong_weno(std::span<const double> window, const ProlongWeights& W,
                           const GpConfig& cfg);

/// alpha-gated dispatch: linear when alpha <= alpha_c, WENO otherwise.
ProlongResult prolong_cell(std::span<const double> window, const ProlongWeights& W,
                           const GpConfig& cfg);
bool prolong_cell_into(std::span<const double> window, const ProlongWeights& W,
                       const GpConfig& cfg, std::span<double> out,
                       double* alpha_out = nullptr);

/// Conservative-linear baseline with the monotonized central limiter.
void prolong_mc_linear_into(std::span<const double> window, const ProlongWeights& W,
                            std::span<double> out);
ProlongResult prolong_mc_linear(std::span<const double> window, const ProlongWeights& W);

/// Per-substencil GP predictions (diagnostic / test hook).
std::vector<double> substencil_predictions(std::span<const double> window,
                                           const ProlongWeights& W, int fine_index);
std::vector<double> substencil_betas(std::span<const double> window,
                                     const ProlongWeights& W);

/// Arithmetic mean of one fine block; pairs mirrored entries first so
/// symmetric reconstructions restrict back exactly.
double restrict_mean(std::span<const double> fine_values);

} // namespace gpamr::prolong

#endif
