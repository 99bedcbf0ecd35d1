#ifndef GPAMR_WEIGHTS_HPP
#define GPAMR_WEIGHTS_HPP

#include "gpamr/kernels.hpp"
#include "gpamr/stencil.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace gpamr::weights {

enum class DataMode { pointwise, cell_averaged };

/// Everything tunable in one place.  ell/sigma bind to the coarse grid of
/// the level being prolonged from; sigma_factor <= 0 selects the dimension
/// default (3 below 3D, 1.5 in 3D).
struct GpConfig {
    int dim = 2;
    std::array<int, 3> ratio = {2, 2, 1};
    DataMode mode = DataMode::cell_averaged;
    double ell_factor = 12.0;
    double sigma_factor = -1.0;
    double alpha_c = 100.0;
    double eps = 1e-36;
    double p = 2.0;
    double eps2 = 1e-36;
    std::array<double, 3> dx = {1.0, 1.0, 1.0};

    double min_dx() const;
    double sigma_factor_effective() const;
    double ell() const { return ell_factor * min_dx(); }
    double sigma() const { return sigma_factor_effective() * min_dx(); }
    kernels::KernelParams kernel_params() const;
};

/// Immutable run-time table: one weight vector per fine point over the
/// total stencil, one per fine point per substencil, the gamma linear
/// weights tying them together, and the scaled eigenvectors of the
/// sigma-kernel matrix for beta/alpha.
struct ProlongWeights {
    GpConfig config;
    stencil::StencilGeometry geometry;
    stencil::FinePointSet fine_points;

    std::vector<std::vector<double>> w_total;            // [fine][M]
    std::vector<std::vector<std::vector<double>>> w_sub; // [fine][sub][2D+1]
    std::vector<std::vector<double>> gamma;              // [fine][sub]
    std::vector<double> gamma_residual;                  // [fine]
    std::vector<std::vector<double>> beta_vectors;       // [2D+1] rows u_i = v_i/sqrt(lambda_i)
    std::vector<double> sigma_eigenvalues;               // ascending

    // Gather maps resolved once so the run-time path is pure indexing.
    std::vector<std::vector<int>> sub_to_total; // [sub][pos] -> total index
    int center_index = -1;
    std::vector<int> face_neighbor_index; // lo_d at 2d, hi_d at 2d+1
};

std::vector<std::vector<double>> build_total_weights(const GpConfig& cfg,
                                                     const stencil::StencilGeometry& geom,
                                                     const stencil::FinePointSet& fp);

std::vector<std::vector<std::vector<double>>>
build_sub_weights(const GpConfig& cfg, const stencil::StencilGeometry& geom,
                  const stencil::FinePointSet& fp);

void build_gamma(const std::vector<std::vector<double>>& w_total,
                 const std::vector<std::vector<std::vector<double>>>& w_sub,
                 const stencil::StencilGeometry& geom,
                 std::vector<std::vector<double>>& gamma,
                 std::vector<double>& residual);

void build_beta_vectors(const GpConfig& cfg, const stencil::StencilGeometry& geom,
                        std::vector<std::vector<double>>& vectors,
                        std::vector<double>& eigenvalues);

/// One full factory pass (no cache).
ProlongWeights build_prolong_weights(const GpConfig& cfg);

/// Process-wide cache keyed on (dim, ratio, mode, ell/dx, sigma/dx);
/// check-then-publish under a mutex, at most one build per key.
std::shared_ptr<const ProlongWeights> get_weights(const GpConfig& cfg);
long weights_build_count();

/// Substencil sigma-kernel matrix as a flat row-major block, exposed for
/// tests that compare the m copies.
std::vector<double> substencil_sigma_matrix(const GpConfig& cfg,
                                            const stencil::StencilGeometry& geom, int m);
std::vector<double> substencil_ell_matrix(const GpConfig& cfg,
                                          const stencil::StencilGeometry& geom, int m);

/// JSON dump used by the weights subcommand and for cross-language checks.
std::string weights_to_json(const ProlongWeights& w, int indent = 2);

} // namespace gpamr::weights

#endif
