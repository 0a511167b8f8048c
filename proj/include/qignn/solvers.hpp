#pragma once

#include "qignn/tensor.hpp"

#include <functional>
#include <limits>
#include <string>

namespace qignn {

enum class SolverMethod { Picard, Anderson };

const char* solver_name(SolverMethod m);  // "picard", "anderson"
SolverMethod parse_solver_method(const std::string& s);

struct SolverConfig {
    SolverMethod method = SolverMethod::Anderson;
    int max_iterations = 300;
    double tolerance = 1e-6;  // on ||f(Z) - Z||_F
    int memory = 5;
    double regularization = 1e-4;  // relative to the mean squared residual norm in the window
    double damping = 1.0;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct SolveReport {
    bool converged = false;
    bool diverged = false;  // a non-finite iterate was produced
    int iterations = 0;     // evaluations of f
    double residual = std::numeric_limits<double>::infinity();
    Matrix fixed_point;
};

using FixedPointMap = std::function<Matrix(const Matrix&)>;

/// Z <- f(Z) until ||f(Z) - Z||_F <= tolerance. The returned point is the last f(Z).
SolveReport picard_solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg);

/// Anderson mixing over the last `memory` iterates, falling back to a plain
/// step when the mixing system is singular.
SolveReport anderson_solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg);

/// Dispatches on cfg.method.
SolveReport solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg);

/// Solves u = g + J^T u where `vjp(u)` returns J^T u at the fixed point, starting
/// from u = g. The solution is in fixed_point; `converged` is false when the
/// iteration limit was hit.
SolveReport implicit_backward(const FixedPointMap& vjp, const Matrix& g, const SolverConfig& cfg);

}  // namespace qignn
