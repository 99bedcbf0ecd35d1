#include "gpamr/prolong.hpp"

#include <cmath>

namespace gpamr::prolong {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// f restricted to substencil m, in substencil order.
void gather_sub(std::span<const double> window, const ProlongWeights& W, int m,
                double* out) {
    const auto& map = W.sub_to_total[m];
    for (size_t p = 0; p < map.size(); ++p) out[p] = window[map[p]];
}

double beta_of(const ProlongWeights& W, std::span<const double> fm) {
    double beta = 0.0;
    for (const auto& u : W.beta_vectors) {
        const double t = dot(u, fm);
        beta += t * t;
    }
    return beta;
}

} // namespace

double compute_alpha(std::span<const double> window, const ProlongWeights& W,
                     const GpConfig& cfg) {
    const int ns = W.geometry.sub_size();
    double f1[7];
    gather_sub(window, W, 0, f1);
    double mean = 0.0;
    for (int p = 0; p < ns; ++p) mean += f1[p];
    mean /= ns;
    const double num = beta_of(W, std::span<const double>(f1, ns));
    return num / (mean * mean + cfg.eps2);
}

void prolong_linear_into(std::span<const double> window, const ProlongWeights& W,
                         std::span<double> out) {
    for (int f = 0; f < W.fine_points.count(); ++f)
        out[f] = dot(W.w_total[f], window);
}

ProlongResult prolong_linear(std::span<const double> window, const ProlongWeights& W) {
    ProlongResult r;
    r.fine_values.resize(W.fine_points.count());
    prolong_linear_into(window, W, r.fine_values);
    return r;
}

std::vector<double> substencil_betas(std::span<const double> window,
                                     const ProlongWeights& W) {
    const int ns = W.geometry.sub_size();
    std::vector<double> betas(W.geometry.num_sub());
    double fm[7];
    for (int m = 0; m < W.geometry.num_sub(); ++m) {
        gather_sub(window, W, m, fm);
        betas[m] = beta_of(W, std::span<const double>(fm, ns));
    }
    return betas;
}

std::vector<double> substencil_predictions(std::span<const double> window,
                                           const ProlongWeights& W, int fine_index) {
    const int ns = W.geometry.sub_size();
    std::vector<double> pred(W.geometry.num_sub());
    double fm[7];
    for (int m = 0; m < W.geometry.num_sub(); ++m) {
        gather_sub(window, W, m, fm);
        pred[m] = dot(W.w_sub[fine_index][m], std::span<const double>(fm, ns));
    }
    return pred;
}

void prolong_weno_into(std::span<const double> window, const ProlongWeights& W,
                       const GpConfig& cfg, std::span<double> out) {
    const int nsub = W.geometry.num_sub();
    const int ns = W.geometry.sub_size();

    // One beta and one gathered window per substencil; both are shared by
    // every fine point of this cell.
    double fm[7][7];
    double beta[7];
    for (int m = 0; m < nsub; ++m) {
        gather_sub(window, W, m, fm[m]);
        beta[m] = beta_of(W, std::span<const double>(fm[m], ns));
    }

    for (int f = 0; f < W.fine_points.count(); ++f) {
        double wt[7];
        double sum = 0.0;
        for (int m = 0; m < nsub; ++m) {
            wt[m] = W.gamma[f][m] / std::pow(cfg.eps + beta[m], cfg.p);
            sum += wt[m];
        }
        double omega[7];
        double partial = 0.0;
        for (int m = 0; m < nsub - 1; ++m) {
            omega[m] = wt[m] / sum;
            partial += omega[m];
        }
        omega[nsub - 1] = 1.0 - partial; // keeps the normalized sum at exactly 1

        double value = 0.0;
        for (int m = 0; m < nsub; ++m)
            value += omega[m] * dot(W.w_sub[f][m], std::span<const double>(fm[m], ns));
        out[f] = value;
    }
}

ProlongResult prolong_weno(std::span<const double> window, const ProlongWeights& W,
                           const GpConfig& cfg) {
    ProlongResult r;
    r.used_weno = true;
    r.alpha = compute_alpha(window, W, cfg);
    r.fine_values.resize(W.fine_points.count());
    prolong_weno_into(window, W, cfg, r.fine_values);
    return r;
}

bool prolong_cell_into(std::span<const double> window, const ProlongWeights& W,
                       const GpConfig& cfg, std::span<double> out, double* alpha_out) {
    const double alpha = compute_alpha(window, W, cfg);
    if (alpha_out) *alpha_out = alpha;
    if (alpha > cfg.alpha_c) {
        prolong_weno_into(window, W, cfg, out);
        return true;
    }
    prolong_linear_into(window, W, out);
    return false;
}

ProlongResult prolong_cell(std::span<const double> window, const ProlongWeights& W,
                           const GpConfig& cfg) {
    ProlongResult r;
    r.fine_values.resize(W.fine_points.count());
    r.used_weno = prolong_cell_into(window, W, cfg, r.fine_values, &r.alpha);
    return r;
}

void prolong_mc_linear_into(std::span<const double> window, const ProlongWeights& W,
                            std::span<double> out) {
    const int dim = W.geometry.dim;
    const double c = window[W.center_index];

    double slope[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) {
        const double lo = window[W.face_neighbor_index[2 * d]];
        const double hi = window[W.face_neighbor_index[2 * d + 1]];
        const double dc = 0.5 * (hi - lo);
        const double dp = 2.0 * (hi - c);
        const double dm = 2.0 * (c - lo);
        slope[d] = (dp * dm > 0.0)
                       ? std::copysign(std::min({std::abs(dc), std::abs(dp), std::abs(dm)}), dc)
                       : 0.0;
    }

    // Fine offsets mirror under full index reversal, so emit values in
    // coupled pairs whose sum is 2c with no residue: 2c - hi is exact for
    // any |inc| <= |c|, which keeps the restriction an identity.
    const int n = W.fine_points.count();
    for (int f = 0; f < n / 2; ++f) {
        const auto& o = W.fine_points.offsets[f];
        double inc = 0.0;
        for (int d = 0; d < dim; ++d) inc += slope[d] * o[d];
        const double hi = c + std::abs(inc);
        const double lo = 2.0 * c - hi;
        out[f] = inc >= 0.0 ? hi : lo;
        out[n - 1 - f] = inc >= 0.0 ? lo : hi;
    }
    if (n % 2) out[n / 2] = c;
}

ProlongResult prolong_mc_linear(std::span<const double> window, const ProlongWeights& W) {
    ProlongResult r;
    r.fine_values.resize(W.fine_points.count());
    prolong_mc_linear_into(window, W, r.fine_values);
    return r;
}

double restrict_mean(std::span<const double> fine_values) {
    const int n = static_cast<int>(fine_values.size());
    if (n == 1) return fine_values[0];

    // Mirror-image entries first: symmetric data cancels before any
    // rounding at mixed magnitudes can creep in.  Then a tree reduction so
    // power-of-two blocks of equal sums stay exact.
    std::vector<double> s;
    s.reserve((n + 1) / 2);
    for (int i = 0; i < n / 2; ++i) s.push_back(fine_values[i] + fine_values[n - 1 - i]);
    const bool odd = (n % 2) != 0;

    while (s.size() > 1) {
        std::vector<double> next;
        next.reserve((s.size() + 1) / 2);
        for (size_t i = 0; i + 1 < s.size(); i += 2) next.push_back(s[i] + s[i + 1]);
        if (s.size() % 2) next.push_back(s.back());
        s.swap(next);
    }
    double total = s.empty() ? 0.0 : s[0];
    if (odd) total += fine_values[n / 2];
    return total / n;
}

} // namespace gpamr::prolong
