#include "qignn/solvers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <stdexcept>

namespace qignn {

const char* solver_name(SolverMethod m) { return m == SolverMethod::Picard ? "picard" : "anderson"; }

SolverMethod parse_solver_method(const std::string& s) {
    if (s == "picard") return SolverMethod::Picard;
    if (s == "anderson") return SolverMethod::Anderson;
    throw std::invalid_argument("unknown solver '" + s + "' (expected picard or anderson)");
}

void SolverConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be > 0");
    if (memory < 1) throw std::invalid_argument("solver: memory must be >= 1");
    if (!(regularization >= 0.0)) throw std::invalid_argument("solver: regularization must be >= 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver: damping must lie in (0, 1]");
}

namespace {

bool finite(const Matrix& m) { return m.allFinite(); }

Matrix evaluate(const FixedPointMap& f, const Matrix& z) {
    Matrix fz = f(z);
    if (fz.rows() != z.rows() || fz.cols() != z.cols()) {
        throw ShapeError("fixed-point map changed shape " + shape_str(z) + " -> " + shape_str(fz));
    }
    return fz;
}

}  // namespace

SolveReport picard_solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg) {
    cfg.validate();
    SolveReport rep;
    Matrix z = z0;
    for (int t = 1; t <= cfg.max_iterations; ++t) {
        Matrix fz = evaluate(f, z);
        rep.iterations = t;
        if (!finite(fz)) {
            rep.diverged = true;
            rep.fixed_point = std::move(fz);
            return rep;
        }
        rep.residual = (fz - z).norm();
        z = std::move(fz);
        if (rep.residual <= cfg.tolerance) {
            rep.converged = true;
            break;
        }
    }
    rep.fixed_point = std::move(z);
    return rep;
}

SolveReport anderson_solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg) {
    cfg.validate();
    SolveReport rep;
    const auto m = static_cast<std::size_t>(cfg.memory);
    std::deque<Matrix> xs, fs, gs;
    Matrix x = z0;
    for (int t = 1; t <= cfg.max_iterations; ++t) {
        Matrix fx = evaluate(f, x);
        rep.iterations = t;
        if (!finite(fx)) {
            rep.diverged = true;
            rep.fixed_point = std::move(fx);
            return rep;
        }
        Matrix g = fx - x;
        rep.residual = g.norm();
        rep.fixed_point = fx;
        if (rep.residual <= cfg.tolerance) {
            rep.converged = true;
            return rep;
        }
        xs.push_back(std::move(x));
        fs.push_back(std::move(fx));
        gs.push_back(std::move(g));
        if (xs.size() > m) {
            xs.pop_front();
            fs.pop_front();
            gs.pop_front();
        }
        const auto k = static_cast<Eigen::Index>(xs.size());
        const double beta = cfg.damping;
        auto plain_step = [&] { return Matrix((1.0 - beta) * xs.back() + beta * fs.back()); };
        if (k == 1) {
            x = plain_step();
            continue;
        }
        // min ||sum_i a_i g_i|| subject to sum_i a_i = 1.
        Eigen::MatrixXd gram(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = gs[static_cast<std::size_t>(i)].cwiseProduct(gs[static_cast<std::size_t>(j)]).sum();
                gram(i, j) = v;
                gram(j, i) = v;
            }
        }
        const double scale = gram.trace() / static_cast<double>(k);
        gram.diagonal().array() += cfg.regularization * scale;
        const Eigen::VectorXd a = gram.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(k));
        const double total = a.sum();
        if (!a.allFinite() || !(std::abs(total) > 1e-300) || !std::isfinite(total)) {
            x = plain_step();
            continue;
        }
        const Eigen::VectorXd w = a / total;
        Matrix next = Matrix::Zero(xs.back().rows(), xs.back().cols());
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto s = static_cast<std::size_t>(i);
            next += w(i) * ((1.0 - beta) * xs[s] + beta * fs[s]);
        }
        x = finite(next) ? std::move(next) : plain_step();
    }
    return rep;
}

SolveReport solve(const FixedPointMap& f, const Matrix& z0, const SolverConfig& cfg) {
    return cfg.method == SolverMethod::Picard ? picard_solve(f, z0, cfg) : anderson_solve(f, z0, cfg);
}

SolveReport implicit_backward(const FixedPointMap& vjp, const Matrix& g, const SolverConfig& cfg) {
    const FixedPointMap affine = [&](const Matrix& u) -> Matrix { return g + vjp(u); };
    return solve(affine, g, cfg);
}

}  // namespace qignn
