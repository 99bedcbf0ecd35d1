#ifndef GPAMR_SMALLMAT_HPP
#define GPAMR_SMALLMAT_HPP

#include <span>
#include <vector>

namespace gpamr::smallmat {

/// Dense symmetric matrix, row-major.  Orders stay small (<= 25): big enough
/// for the 3D total-stencil kernel matrix, nothing more.
struct SymMatrix {
    int n = 0;
    std::vector<double> a; // n*n entries

    SymMatrix() = default;
    explicit SymMatrix(int order) : n(order), a(static_cast<size_t>(order) * order, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

/// Dense rectangular matrix, row-major; rows >= cols for least-squares use.
struct RectMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    RectMatrix() = default;
    RectMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

/// Full spectrum of a symmetric matrix: values ascending, vectors[i] is the
/// unit eigenvector paired with values[i].
struct EigenSystem {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};

struct LstsqResult {
    std::vector<double> x;
    double residual = 0.0; // ||M x - b||_2
};

/// Cholesky factorization kept around so one matrix can serve many
/// right-hand sides (one solve per prolonged point).
class Cholesky {
public:
    explicit Cholesky(const SymMatrix& A);
    std::vector<double> solve(std::span<const double> b) const;
    int order() const { return n_; }

private:
    int n_;
    std::vector<double> L_; // lower triangle, row-major n*n
};

std::vector<double> cholesky_solve(const SymMatrix& A, std::span<const double> b);

/// Householder QR least squares, rank tolerance 1e-12 relative to the
/// largest column norm.
LstsqResult lstsq_qr(const RectMatrix& M, std::span<const double> b);

/// Cyclic Jacobi rotations; unconditional convergence on symmetric input.
EigenSystem sym_eigen(const SymMatrix& A);

/// Error function, rational minimax evaluation (|err| < 1e-14 over the line).
double erf(double x);

} // namespace gpamr::smallmat

#endif
