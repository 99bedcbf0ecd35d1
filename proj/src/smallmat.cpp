#include "gpamr/smallmat.hpp"
#include "gpamr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gpamr::smallmat {

Cholesky::Cholesky(const SymMatrix& A) : n_(A.n), L_(static_cast<size_t>(A.n) * A.n, 0.0) {
    // Classic in-place LL^T on the lower triangle.
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (int k = 0; k < j; ++k)
                s -= L_[static_cast<size_t>(i) * n_ + k] * L_[static_cast<size_t>(j) * n_ + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) +
                                              " is " + std::to_string(s));
                L_[static_cast<size_t>(i) * n_ + j] = std::sqrt(s);
            } else {
                L_[static_cast<size_t>(i) * n_ + j] = s / L_[static_cast<size_t>(j) * n_ + j];
            }
        }
    }
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
    std::vector<double> x(b.begin(), b.end());
    // L y = b
    for (int i = 0; i < n_; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k)
            s -= L_[static_cast<size_t>(i) * n_ + k] * x[k];
        x[i] = s / L_[static_cast<size_t>(i) * n_ + i];
    }
    // L^T x = y
    for (int i = n_ - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n_; ++k)
            s -= L_[static_cast<size_t>(k) * n_ + i] * x[k];
        x[i] = s / L_[static_cast<size_t>(i) * n_ + i];
    }
    return x;
}

std::vector<double> cholesky_solve(const SymMatrix& A, std::span<const double> b) {
    return Cholesky(A).solve(b);
}

LstsqResult lstsq_qr(const RectMatrix& M, std::span<const double> b) {
    const int m = M.rows, n = M.cols;
    RectMatrix A = M;
    std::vector<double> rhs(b.begin(), b.end());

    double max_colnorm = 0.0;
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += A(i, j) * A(i, j);
        max_colnorm = std::max(max_colnorm, std::sqrt(s));
    }
    const double rank_tol = 1e-12 * max_colnorm;

    std::vector<double> v(m);
    for (int k = 0; k < n; ++k) {
        double normx = 0.0;
        for (int i = k; i < m; ++i) normx += A(i, k) * A(i, k);
        normx = std::sqrt(normx);
        if (normx < rank_tol)
            throw RankDeficient("lstsq_qr: column " + std::to_string(k) +
                                " below rank tolerance");

        const double rkk = -std::copysign(normx, A(k, k));
        for (int i = k; i < m; ++i) v[i] = A(i, k);
        v[k] -= rkk;
        double vnorm2 = 0.0;
        for (int i = k; i < m; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 > 0.0) {
            for (int j = k; j < n; ++j) {
                double dot = 0.0;
                for (int i = k; i < m; ++i) dot += v[i] * A(i, j);
                const double f = 2.0 * dot / vnorm2;
                for (int i = k; i < m; ++i) A(i, j) -= f * v[i];
            }
            double dot = 0.0;
            for (int i = k; i < m; ++i) dot += v[i] * rhs[i];
            const double f = 2.0 * dot / vnorm2;
            for (int i = k; i < m; ++i) rhs[i] -= f * v[i];
        }
        A(k, k) = rkk;
        if (std::abs(rkk) < rank_tol)
            throw RankDeficient("lstsq_qr: R diagonal " + std::to_string(k) +
                                " below rank tolerance");
    }

    LstsqResult out;
    out.x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[i];
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * out.x[j];
        out.x[i] = s / A(i, i);
    }
    double rr = 0.0;
    for (int i = n; i < m; ++i) rr += rhs[i] * rhs[i];
    out.residual = std::sqrt(rr);
    return out;
}

EigenSystem sym_eigen(const SymMatrix& A) {
    const int n = A.n;
    SymMatrix W = A;
    std::vector<std::vector<double>> V(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) V[i][i] = 1.0; // V[i] will become eigenvector i

    double normf = 0.0;
    for (double e : A.a) normf += e * e;
    normf = std::sqrt(normf);

    auto offdiag = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) s += W(p, q) * W(p, q);
        return std::sqrt(2.0 * s);
    };

    const int max_sweeps = 100;
    int sweep = 0;
    while (offdiag() > 1e-14 * normf && normf > 0.0) {
        if (++sweep > max_sweeps)
            throw NoConvergence("sym_eigen: no convergence after " +
                                std::to_string(max_sweeps) + " sweeps");
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (W(p, q) == 0.0) continue;
                const double theta = (W(q, q) - W(p, p)) / (2.0 * W(p, q));
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double wpq = W(p, q);
                W(p, p) -= t * wpq;
                W(q, q) += t * wpq;
                W(p, q) = 0.0;
                W(q, p) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double wrp = W(r, p), wrq = W(r, q);
                        W(r, p) = W(p, r) = wrp - s * (wrq + tau * wrp);
                        W(r, q) = W(q, r) = wrq + s * (wrp - tau * wrq);
                    }
                    const double vrp = V[p][r], vrq = V[q][r];
                    V[p][r] = vrp - s * (vrq + tau * vrp);
                    V[q][r] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return W(i, i) < W(j, j); });

    EigenSystem es;
    es.values.resize(n);
    es.vectors.resize(n);
    for (int i = 0; i < n; ++i) {
        es.values[i] = W(order[i], order[i]);
        es.vectors[i] = V[order[i]];
    }
    return es;
}

// Rational minimax approximations in the style of W. J. Cody's CALERF:
// three branches, each good to ~1e-16 relative before the exp factor.
namespace {

constexpr double kErfA[5] = {3.16112374387056560e+00, 1.13864154151050156e+02,
                             3.77485237685302021e+02, 3.20937758913846947e+03,
                             1.85777706184603153e-01};
constexpr double kErfB[4] = {2.36012909523441209e+01, 2.44024637934444173e+02,
                             1.28261652607737228e+03, 2.84423683343917062e+03};
constexpr double kErfC[9] = {5.64188496988670089e-01, 8.88314979438837594e+00,
                             6.61191906371416295e+01, 2.98635138197400131e+02,
                             8.81952221241769090e+02, 1.71204761263407058e+03,
                             2.05107837782607147e+03, 1.23033935479799725e+03,
                             2.15311535474403846e-08};
constexpr double kErfD[8] = {1.57449261107098347e+01, 1.17693950891312499e+02,
                             5.37181101862009858e+02, 1.62138957456669019e+03,
                             3.29079923573345963e+03, 4.36261909014324716e+03,
                             3.43936767414372164e+03, 1.23033935480374942e+03};
constexpr double kErfP[6] = {3.05326634961232344e-01, 3.60344899949804439e-01,
                             1.25781726111229246e-01, 1.60837851487422766e-02,
                             6.58749161529837803e-04, 1.63153871373020978e-02};
constexpr double kErfQ[5] = {2.56852019228982242e+00, 1.87295284992346047e+00,
                             5.27905102951428412e-01, 6.05183413124413191e-02,
                             2.33520497626869185e-03};

constexpr double kInvSqrtPi = 5.6418958354775628695e-01;

// erfc(y) for y > 0.46875, split exp(-y^2) to avoid cancellation in the
// argument as Cody does.
double erfc_big(double y) {
    double result;
    if (y <= 4.0) {
        double xnum = kErfC[8] * y;
        double xden = y;
        for (int i = 0; i < 7; ++i) {
            xnum = (xnum + kErfC[i]) * y;
            xden = (xden + kErfD[i]) * y;
        }
        result = (xnum + kErfC[7]) / (xden + kErfD[7]);
    } else {
        if (y >= 26.6) return 0.0;
        const double z = 1.0 / (y * y);
        double xnum = kErfP[5] * z;
        double xden = z;
        for (int i = 0; i < 4; ++i) {
            xnum = (xnum + kErfP[i]) * z;
            xden = (xden + kErfQ[i]) * z;
        }
        result = z * (xnum + kErfP[4]) / (xden + kErfQ[4]);
        result = (kInvSqrtPi - result) / y;
    }
    const double ysq = std::trunc(y * 16.0) / 16.0;
    const double del = (y - ysq) * (y + ysq);
    return std::exp(-ysq * ysq) * std::exp(-del) * result;
}

} // namespace

double erf(double x) {
    const double y = std::abs(x);
    if (y <= 0.46875) {
        const double z = y > 1e-300 ? y * y : 0.0;
        double xnum = kErfA[4] * z;
        double xden = z;
        for (int i = 0; i < 3; ++i) {
            xnum = (xnum + kErfA[i]) * z;
            xden = (xden + kErfB[i]) * z;
        }
        return x * (xnum + kErfA[3]) / (xden + kErfB[3]);
    }
    const double r = 1.0 - erfc_big(y);
    return x < 0.0 ? -r : r;
}

} // namespace gpamr::smallmat
