#include "qignn/spectral.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace qignn {

namespace {

Vector seeded_unit(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = nd(rng);
    const double nrm = x.norm();
    if (nrm == 0.0) {
        x.setZero();
        x(0) = 1.0;
        return x;
    }
    return x / nrm;
}

}  // namespace

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) throw ShapeError("spectral_norm: empty matrix");
    const Eigen::MatrixXd dense = m;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(dense).singularValues()(0);
}

double power_iteration_norm(const Matrix& m, int max_iterations, double tolerance, std::uint64_t seed) {
    if (m.size() == 0) throw ShapeError("power_iteration_norm: empty matrix");
    Vector v = seeded_unit(m.cols(), seed);
    double estimate = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Vector mv = m * v;
        const double sigma = mv.norm();
        if (sigma == 0.0) return estimate;
        Vector w = m.transpose() * mv;
        const double wn = w.norm();
        if (wn == 0.0) return sigma;
        v = w / wn;
        const double prev = estimate;
        estimate = sigma;
        if (it > 0 && std::abs(estimate - prev) <= tolerance * estimate) break;
    }
    // Rayleigh estimate at the final vector.
    return std::max(estimate, (m * v).norm());
}

void PowerIterationState::reset(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    u = seeded_unit(rows, seed);
    v = seeded_unit(cols, seed ^ 0xa5a5a5a5a5a5a5a5ULL);
}

void PowerIterationState::step(const Matrix& w) {
    if (!initialized() || u.size() != w.rows() || v.size() != w.cols()) reset(w.rows(), w.cols(), 0x5eedULL);
    Vector nv = w.transpose() * u;
    const double vn = nv.norm();
    if (vn > kSpectralGuard) v = nv / vn;
    Vector nu = w * v;
    const double un = nu.norm();
    if (un > kSpectralGuard) u = nu / un;
}

double PowerIterationState::sigma(const Matrix& w) const {
    const Matrix ut = u.transpose();
    const Matrix vc = v;
    return matmul(matmul(ut, w), vc)(0, 0);
}

}  // namespace qignn
