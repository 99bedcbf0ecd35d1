#include "gpamr/weights.hpp"
#include "gpamr/errors.hpp"
#include "gpamr/smallmat.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>

namespace gpamr::weights {

using smallmat::SymMatrix;
using stencil::Offset;

double GpConfig::min_dx() const {
    double m = dx[0];
    for (int d = 1; d < dim; ++d) m = std::min(m, dx[d]);
    return m;
}

double GpConfig::sigma_factor_effective() const {
    if (sigma_factor > 0.0) return sigma_factor;
    return dim == 3 ? 1.5 : 3.0;
}

kernels::KernelParams GpConfig::kernel_params() const {
    kernels::KernelParams p;
    p.dim = dim;
    p.ell = ell();
    p.sigma_shock = sigma();
    p.dx = dx;
    p.ratio = ratio;
    return p;
}

namespace {

using ld = long double;

// The factory works in extended precision end to end and rounds only the
// stored tables; at ell/dx = 12 the kernel matrices are ill-conditioned
// enough that double intermediates would show up in the weights.
struct CholLd {
    int n;
    std::vector<ld> L;

    explicit CholLd(const std::vector<ld>& A, int order) : n(order), L(order * order, 0.0L) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) {
                ld s = A[i * n + j];
                for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
                if (i == j) {
                    if (s <= 0.0L)
                        throw NotPositiveDefinite("weights factory: pivot " +
                                                  std::to_string(i) + " is " +
                                                  std::to_string((double)s));
                    L[i * n + j] = std::sqrt(s);
                } else {
                    L[i * n + j] = s / L[j * n + j];
                }
            }
        }
    }

    std::vector<ld> solve(const std::vector<ld>& b) const {
        std::vector<ld> x = b;
        for (int i = 0; i < n; ++i) {
            ld s = x[i];
            for (int k = 0; k < i; ++k) s -= L[i * n + k] * x[k];
            x[i] = s / L[i * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            ld s = x[i];
            for (int k = i + 1; k < n; ++k) s -= L[k * n + i] * x[k];
            x[i] = s / L[i * n + i];
        }
        return x;
    }
};

ld point_factor_ld(ld delta, ld ell_over_dx) {
    const ld z = delta / ell_over_dx;
    return std::exp(-0.5L * z * z);
}

std::vector<ld> kernel_matrix_ld(const GpConfig& cfg, const std::vector<Offset>& cells) {
    const int n = static_cast<int>(cells.size());
    std::vector<ld> K(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            ld v = 1.0L;
            for (int d = 0; d < cfg.dim; ++d) {
                const ld delta = cells[j][d] - cells[i][d];
                const ld lod = (ld)cfg.ell() / (ld)cfg.dx[d];
                v *= (cfg.mode == DataMode::pointwise)
                         ? point_factor_ld(delta, lod)
                         : kernels::integrated_cov_1d_ld(delta, lod);
            }
            K[i * n + j] = v;
        }
    return K;
}

std::vector<ld> prediction_ld(const GpConfig& cfg, const std::vector<Offset>& cells,
                              const std::array<double, 3>& fine_offset) {
    std::vector<ld> k(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
        ld v = 1.0L;
        for (int d = 0; d < cfg.dim; ++d) {
            const ld delta = (ld)fine_offset[d] - (ld)cells[i][d];
            const ld lod = (ld)cfg.ell() / (ld)cfg.dx[d];
            v *= (cfg.mode == DataMode::pointwise)
                     ? point_factor_ld(delta, lod)
                     : kernels::cross_cov_1d_ld(delta, lod, cfg.ratio[d]);
        }
        k[i] = v;
    }
    return k;
}

// Fine points come in reflection orbits; one solve per orbit, mirrored
// copies elsewhere so the stored weights are symmetric bit for bit.
struct Orbits {
    int dim;
    std::array<int, 3> ratio;
    std::vector<int> rep;                   // representative fine index
    std::vector<std::array<bool, 3>> flip;  // axes reflected relative to rep

    Orbits(int d, const std::array<int, 3>& r, int count) : dim(d), ratio(r) {
        rep.resize(count);
        flip.resize(count);
        for (int f = 0; f < count; ++f) {
            int rem = f, rindex = 0, stride = 1;
            std::array<bool, 3> fl = {false, false, false};
            for (int k = 0; k < dim; ++k) {
                const int m = rem % ratio[k];
                rem /= ratio[k];
                int mr = m;
                if (m > ratio[k] - 1 - m) {
                    mr = ratio[k] - 1 - m;
                    fl[k] = true;
                }
                rindex += mr * stride;
                stride *= ratio[k];
            }
            rep[f] = rindex;
            flip[f] = fl;
        }
    }
};

int reflected_total_index(const stencil::StencilGeometry& geom, int t,
                          const std::array<bool, 3>& flip) {
    Offset o = geom.total_offsets[t];
    for (int d = 0; d < 3; ++d)
        if (flip[d]) o[d] = -o[d];
    return geom.total_index(o);
}

Offset sub_center(const stencil::StencilGeometry& geom, int m) {
    return geom.sub_offsets[m][geom.sub_size() / 2];
}

int reflected_sub_index(const stencil::StencilGeometry& geom, int m,
                        const std::array<bool, 3>& flip) {
    Offset c = sub_center(geom, m);
    for (int d = 0; d < 3; ++d)
        if (flip[d]) c[d] = -c[d];
    for (int k = 0; k < geom.num_sub(); ++k)
        if (sub_center(geom, k) == c) return k;
    return -1;
}

int reflected_pos_index(const stencil::StencilGeometry& geom, int m, int p, int mstar,
                        const std::array<bool, 3>& flip) {
    Offset o = geom.sub_offsets[m][p];
    for (int d = 0; d < 3; ++d)
        if (flip[d]) o[d] = -o[d];
    const auto& cells = geom.sub_offsets[mstar];
    for (int q = 0; q < static_cast<int>(cells.size()); ++q)
        if (cells[q] == o) return q;
    return -1;
}

SymMatrix to_double(const std::vector<ld>& A, int n) {
    SymMatrix M(n);
    for (int i = 0; i < n * n; ++i) M.a[i] = static_cast<double>(A[i]);
    return M;
}

} // namespace

std::vector<double> substencil_sigma_matrix(const GpConfig& cfg,
                                            const stencil::StencilGeometry& geom,
                                            int m) {
    GpConfig c = cfg;
    c.ell_factor = cfg.sigma_factor_effective();
    return to_double(kernel_matrix_ld(c, geom.sub_offsets[m]), geom.sub_size()).a;
}

std::vector<double> substencil_ell_matrix(const GpConfig& cfg,
                                          const stencil::StencilGeometry& geom,
                                          int m) {
    return to_double(kernel_matrix_ld(cfg, geom.sub_offsets[m]), geom.sub_size()).a;
}

std::vector<std::vector<double>> build_total_weights(const GpConfig& cfg,
                                                     const stencil::StencilGeometry& geom,
                                                     const stencil::FinePointSet& fp) {
    const auto K = kernel_matrix_ld(cfg, geom.total_offsets);
    const CholLd chol(K, geom.total_size());
    const Orbits orbits(cfg.dim, cfg.ratio, fp.count());

    std::vector<std::vector<double>> w(fp.count());
    for (int f = 0; f < fp.count(); ++f) {
        if (orbits.rep[f] != f) continue;
        const auto x = chol.solve(prediction_ld(cfg, geom.total_offsets, fp.offsets[f]));
        w[f].assign(x.begin(), x.end());
    }
    for (int f = 0; f < fp.count(); ++f) {
        if (orbits.rep[f] == f) continue;
        const auto& src = w[orbits.rep[f]];
        w[f].resize(geom.total_size());
        for (int t = 0; t < geom.total_size(); ++t)
            w[f][t] = src[reflected_total_index(geom, t, orbits.flip[f])];
    }
    return w;
}

std::vector<std::vector<std::vector<double>>>
build_sub_weights(const GpConfig& cfg, const stencil::StencilGeometry& geom,
                  const stencil::FinePointSet& fp) {
    const auto Km = kernel_matrix_ld(cfg, geom.sub_offsets[0]);
    const CholLd chol(Km, geom.sub_size()); // every C_m is the same matrix
    const Orbits orbits(cfg.dim, cfg.ratio, fp.count());

    std::vector<std::vector<std::vector<double>>> w(
        fp.count(), std::vector<std::vector<double>>(geom.num_sub()));
    for (int f = 0; f < fp.count(); ++f) {
        if (orbits.rep[f] != f) continue;
        for (int m = 0; m < geom.num_sub(); ++m) {
            const auto x = chol.solve(prediction_ld(cfg, geom.sub_offsets[m], fp.offsets[f]));
            w[f][m].assign(x.begin(), x.end());
        }
    }
    for (int f = 0; f < fp.count(); ++f) {
        if (orbits.rep[f] == f) continue;
        const auto& src = w[orbits.rep[f]];
        for (int m = 0; m < geom.num_sub(); ++m) {
            const int mstar = reflected_sub_index(geom, m, orbits.flip[f]);
            w[f][m].resize(geom.sub_size());
            for (int p = 0; p < geom.sub_size(); ++p)
                w[f][m][p] =
                    src[mstar][reflected_pos_index(geom, m, p, mstar, orbits.flip[f])];
        }
    }
    return w;
}

void build_gamma(const std::vector<std::vector<double>>& w_total,
                 const std::vector<std::vector<std::vector<double>>>& w_sub,
                 const stencil::StencilGeometry& geom,
                 std::vector<std::vector<double>>& gamma,
                 std::vector<double>& residual) {
    const int nf = static_cast<int>(w_total.size());
    const int M = geom.total_size();
    const int ns = geom.num_sub();
    gamma.assign(nf, {});
    residual.assign(nf, 0.0);
    for (int f = 0; f < nf; ++f) {
        smallmat::RectMatrix A(M, ns);
        for (int t = 0; t < M; ++t)
            for (const auto& [m, p] : geom.membership[t]) A(t, m) = w_sub[f][m][p];
        auto sol = smallmat::lstsq_qr(A, w_total[f]);
        gamma[f] = std::move(sol.x);
        residual[f] = sol.residual;
    }
}

void build_beta_vectors(const GpConfig& cfg, const stencil::StencilGeometry& geom,
                        std::vector<std::vector<double>>& vectors,
                        std::vector<double>& eigenvalues) {
    SymMatrix A(geom.sub_size());
    A.a = substencil_sigma_matrix(cfg, geom, 0);
    const auto es = smallmat::sym_eigen(A);
    for (double lam : es.values)
        if (lam <= 0.0)
            throw NotPositiveDefinite("build_beta_vectors: sigma-kernel eigenvalue " +
                                      std::to_string(lam));
    vectors.clear();
    for (size_t i = 0; i < es.values.size(); ++i) {
        std::vector<double> u = es.vectors[i];
        const double inv = 1.0 / std::sqrt(es.values[i]);
        for (double& e : u) e *= inv;
        vectors.push_back(std::move(u));
    }
    eigenvalues = es.values;
}

ProlongWeights build_prolong_weights(const GpConfig& cfg) {
    ProlongWeights W;
    W.config = cfg;
    W.geometry = stencil::build_geometry(cfg.dim);
    W.fine_points = stencil::fine_points(cfg.dim, cfg.ratio);

    W.sub_to_total.resize(W.geometry.num_sub());
    for (int m = 0; m < W.geometry.num_sub(); ++m) {
        W.sub_to_total[m].resize(W.geometry.sub_size());
        for (int p = 0; p < W.geometry.sub_size(); ++p)
            W.sub_to_total[m][p] = W.geometry.total_index(W.geometry.sub_offsets[m][p]);
    }
    W.center_index = W.geometry.total_index({0, 0, 0});
    for (int d = 0; d < cfg.dim; ++d) {
        Offset lo{0, 0, 0}, hi{0, 0, 0};
        lo[d] = -1;
        hi[d] = +1;
        W.face_neighbor_index.push_back(W.geometry.total_index(lo));
        W.face_neighbor_index.push_back(W.geometry.total_index(hi));
    }

    bool identity = true;
    for (int d = 0; d < cfg.dim; ++d) identity = identity && cfg.ratio[d] == 1;
    if (identity) {
        // No refinement: the prolongation is the identity and the gamma
        // system is rank one (every substencil predicts the cell by
        // itself), so write the exact tables directly.
        W.w_total.assign(1, std::vector<double>(W.geometry.total_size(), 0.0));
        W.w_total[0][W.center_index] = 1.0;
        W.w_sub.assign(1, std::vector<std::vector<double>>(
                              W.geometry.num_sub(),
                              std::vector<double>(W.geometry.sub_size(), 0.0)));
        for (int m = 0; m < W.geometry.num_sub(); ++m) {
            for (int p = 0; p < W.geometry.sub_size(); ++p)
                if (W.sub_to_total[m][p] == W.center_index) W.w_sub[0][m][p] = 1.0;
        }
        W.gamma.assign(1, std::vector<double>(W.geometry.num_sub(),
                                              1.0 / W.geometry.num_sub()));
        W.gamma_residual.assign(1, 0.0);
    } else {
        W.w_total = build_total_weights(cfg, W.geometry, W.fine_points);
        W.w_sub = build_sub_weights(cfg, W.geometry, W.fine_points);
        build_gamma(W.w_total, W.w_sub, W.geometry, W.gamma, W.gamma_residual);
    }
    build_beta_vectors(cfg, W.geometry, W.beta_vectors, W.sigma_eigenvalues);
    return W;
}

namespace {

struct CacheKey {
    int dim;
    std::array<int, 3> ratio;
    int mode;
    std::array<double, 3> ell_over_dx;
    std::array<double, 3> sigma_over_dx;

    bool operator<(const CacheKey& o) const {
        return std::tie(dim, ratio, mode, ell_over_dx, sigma_over_dx) <
               std::tie(o.dim, o.ratio, o.mode, o.ell_over_dx, o.sigma_over_dx);
    }
};

CacheKey make_key(const GpConfig& cfg) {
    CacheKey k{};
    k.dim = cfg.dim;
    k.ratio = {1, 1, 1};
    k.mode = static_cast<int>(cfg.mode);
    k.ell_over_dx = {0.0, 0.0, 0.0};
    k.sigma_over_dx = {0.0, 0.0, 0.0};
    for (int d = 0; d < cfg.dim; ++d) {
        k.ratio[d] = cfg.ratio[d];
        k.ell_over_dx[d] = cfg.ell() / cfg.dx[d];
        k.sigma_over_dx[d] = cfg.sigma() / cfg.dx[d];
    }
    return k;
}

std::mutex g_cache_mutex;
std::map<CacheKey, std::shared_ptr<const ProlongWeights>> g_cache;
std::atomic<long> g_build_count{0};

} // namespace

std::shared_ptr<const ProlongWeights> get_weights(const GpConfig& cfg) {
    const CacheKey key = make_key(cfg);
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
    g_build_count.fetch_add(1);
    auto w = std::make_shared<const ProlongWeights>(build_prolong_weights(cfg));
    g_cache.emplace(key, w);
    return w;
}

long weights_build_count() { return g_build_count.load(); }

std::string weights_to_json(const ProlongWeights& w, int indent) {
    nlohmann::json j;
    const GpConfig& c = w.config;
    j["config"] = {
        {"dim", c.dim},
        {"ratio", {c.ratio[0], c.ratio[1], c.ratio[2]}},
        {"mode", c.mode == DataMode::pointwise ? "point" : "cell"},
        {"ell_factor", c.ell_factor},
        {"sigma_factor", c.sigma_factor_effective()},
        {"alpha_c", c.alpha_c},
        {"eps", c.eps},
        {"p", c.p},
        {"eps2", c.eps2},
        {"dx", {c.dx[0], c.dx[1], c.dx[2]}},
    };
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& o : w.fine_points.offsets) {
        nlohmann::json pt = nlohmann::json::array();
        for (int d = 0; d < c.dim; ++d) pt.push_back(o[d]);
        pts.push_back(pt);
    }
    j["fine_points"] = pts;
    j["w_total"] = w.w_total;
    j["w_sub"] = w.w_sub;
    j["gamma"] = w.gamma;
    j["gamma_residual"] = w.gamma_residual;
    j["sigma_eigenvalues"] = w.sigma_eigenvalues;
    j["beta_vectors"] = w.beta_vectors;
    return j.dump(indent);
}

} // namespace gpamr::weights
