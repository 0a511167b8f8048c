#pragma once

#include "qignn/tensor.hpp"

#include <cstdint>

namespace qignn {

/// Largest singular value from a dense SVD. Zero matrix gives 0.
double spectral_norm(const Matrix& m);

/// Power-iteration estimate of the largest singular value on M^T M from a
/// seeded start vector. Stops after `max_iterations` or when the estimate
/// changes by less than `tolerance` (relative). Never above the true value; it
/// converges slowly when the top two singular values are close.
double power_iteration_norm(const Matrix& m, int max_iterations = 100, double tolerance = 1e-12,
                            std::uint64_t seed = 0x5eedULL);

/// Persistent singular-vector pair for spectral normalization: one power step
/// per call, estimate sigma = u^T W v.
struct PowerIterationState {
    Vector u;
    Vector v;

    /// Seeds u and v for a rows x cols matrix.
    void reset(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);
    bool initialized() const { return u.size() > 0; }

    void step(const Matrix& w);
    double sigma(const Matrix& w) const;
};

/// Divisor applied by spectral normalization; 1 for a (numerically) zero estimate.
constexpr double kSpectralGuard = 1e-12;

}  // namespace qignn
