#ifndef GPAMR_ERRORS_HPP
#define GPAMR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpamr {

// Thrown by the Cholesky factorization when a pivot is non-positive.
// Usually means the kernel matrix is numerically singular (correlation
// length too large for the working precision, or duplicated points).
struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

struct RankDeficient : std::runtime_error {
    explicit RankDeficient(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedDimension : std::runtime_error {
    explicit UnsupportedDimension(const std::string& what) : std::runtime_error(what) {}
};

struct NestingViolation : std::runtime_error {
    explicit NestingViolation(const std::string& what) : std::runtime_error(what) {}
};

struct CflViolation : std::runtime_error {
    explicit CflViolation(const std::string& what) : std::runtime_error(what) {}
};

struct LayoutMismatch : std::runtime_error {
    explicit LayoutMismatch(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gpamr

#endif
