#include "qignn/solvers.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Dense>

using namespace qignn;
using namespace qignn::testing;

namespace {

// Contraction Z -> M Z + C with ||M||_2 = rho.
struct Affine {
    Matrix m;
    Matrix c;
    Matrix operator()(const Matrix& z) const { return m * z + c; }
    Matrix exact() const {
        const Eigen::Index n = m.rows();
        return (Matrix::Identity(n, n) - m).fullPivLu().solve(c);
    }
};

Affine random_affine(std::mt19937_64& rng, int n, int d, double rho) {
    Affine a;
    a.m = random_matrix(rng, n, n);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a.m)};
    a.m *= rho / svd.singularValues()(0);
    a.c = random_matrix(rng, n, d);
    return a;
}

SolverConfig config(SolverMethod method, double tol = 1e-10, int iters = 2000) {
    SolverConfig c;
    c.method = method;
    c.tolerance = tol;
    c.max_iterations = iters;
    return c;
}

}  // namespace

TEST_SUITE("solvers") {
    TEST_CASE("names and validation") {
        CHECK(parse_solver_method(solver_name(SolverMethod::Picard)) == SolverMethod::Picard);
        CHECK(parse_solver_method("anderson") == SolverMethod::Anderson);
        CHECK_THROWS_AS(parse_solver_method("broyden"), std::invalid_argument);
        SolverConfig c;
        CHECK_NOTHROW(c.validate());
        c.memory = 0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = {};
        c.tolerance = 0.0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = {};
        c.damping = 1.5;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
        c = {};
        c.max_iterations = 0;
        CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    }

    TEST_CASE("scalar affine map") {
        const FixedPointMap f = [](const Matrix& z) { return Matrix(0.5 * z.array() + 1.0); };
        for (auto method : {SolverMethod::Picard, SolverMethod::Anderson}) {
            const SolveReport r = solve(f, Matrix::Zero(1, 1), config(method, 1e-12));
            CHECK(r.converged);
            CHECK_FALSE(r.diverged);
            CHECK(r.residual <= 1e-12);
            CHECK(r.fixed_point(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
        }
        // Picard error halves per step: 2^-k <= 1e-12 takes 41 evaluations from 0
        CHECK(picard_solve(f, Matrix::Zero(1, 1), config(SolverMethod::Picard, 1e-12)).iterations == 41);
    }

    TEST_CASE("both solvers reach the linear-solve oracle") {
        std::mt19937_64 rng(41);
        for (double rho : {0.3, 0.8, 0.95}) {
            const Affine a = random_affine(rng, 12, 3, rho);
            const FixedPointMap f = [&](const Matrix& z) { return a(z); };
            const SolveReport p = solve(f, Matrix::Zero(12, 3), config(SolverMethod::Picard));
            const SolveReport q = solve(f, Matrix::Zero(12, 3), config(SolverMethod::Anderson));
            REQUIRE(p.converged);
            REQUIRE(q.converged);
            const Matrix z = a.exact();
            // residual r bounds the error by r / (1 - rho)
            CHECK((p.fixed_point - z).norm() <= 1e-10 / (1 - rho) + 1e-13);
            CHECK((q.fixed_point - z).norm() <= 1e-10 / (1 - rho) + 1e-13);
            CHECK(q.iterations <= p.iterations);
        }
    }

    TEST_CASE("Anderson on a constant map and with memory one") {
        std::mt19937_64 rng(42);
        const Matrix c = random_matrix(rng, 4, 2);
        const FixedPointMap constant = [&](const Matrix&) { return c; };
        const SolveReport r = anderson_solve(constant, Matrix::Zero(4, 2), config(SolverMethod::Anderson));
        CHECK(r.converged);
        CHECK(r.iterations == 2);
        CHECK((r.fixed_point - c).cwiseAbs().maxCoeff() == 0.0);

        const Affine a = random_affine(rng, 6, 2, 0.7);
        const FixedPointMap f = [&](const Matrix& z) { return a(z); };
        SolverConfig one = config(SolverMethod::Anderson);
        one.memory = 1;
        const SolveReport x = anderson_solve(f, Matrix::Zero(6, 2), one);
        const SolveReport y = picard_solve(f, Matrix::Zero(6, 2), config(SolverMethod::Picard));
        CHECK(x.iterations == y.iterations);
        CHECK((x.fixed_point - y.fixed_point).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("damping slows Anderson but keeps the fixed point") {
        std::mt19937_64 rng(43);
        const Affine a = random_affine(rng, 8, 2, 0.9);
        const FixedPointMap f = [&](const Matrix& z) { return a(z); };
        SolverConfig c = config(SolverMethod::Anderson);
        c.damping = 0.5;
        const SolveReport r = anderson_solve(f, Matrix::Zero(8, 2), c);
        CHECK(r.converged);
        CHECK((r.fixed_point - a.exact()).norm() < 1e-8);
    }

    TEST_CASE("non-contractive maps are reported") {
        const FixedPointMap grow = [](const Matrix& z) { return Matrix(2.0 * z.array() + 1.0); };
        const SolveReport p = picard_solve(grow, Matrix::Zero(2, 2), config(SolverMethod::Picard, 1e-8, 20));
        CHECK_FALSE(p.converged);
        CHECK(p.iterations == 20);
        // extrapolation still finds the repelling fixed point of an affine map
        const SolveReport q = anderson_solve(grow, Matrix::Zero(2, 2), config(SolverMethod::Anderson, 1e-8, 20));
        CHECK(q.converged);
        CHECK(q.fixed_point.isApproxToConstant(-1.0, 1e-8));
        const FixedPointMap blow = [](const Matrix& z) { return Matrix(1e300 * (z.array() + 1.0)); };
        const SolveReport r = picard_solve(blow, Matrix::Zero(1, 1), config(SolverMethod::Picard, 1e-8, 50));
        CHECK(r.diverged);
        CHECK_FALSE(r.converged);
        const FixedPointMap reshape = [](const Matrix&) { return Matrix::Zero(3, 3).eval(); };
        CHECK_THROWS_AS(picard_solve(reshape, Matrix::Zero(2, 2), config(SolverMethod::Picard)), ShapeError);
    }

    TEST_CASE("implicit backward solves the adjoint system") {
        std::mt19937_64 rng(44);
        for (auto method : {SolverMethod::Picard, SolverMethod::Anderson}) {
            const Affine a = random_affine(rng, 10, 3, 0.8);
            const Matrix g = random_matrix(rng, 10, 3);
            const FixedPointMap vjp = [&](const Matrix& u) { return Matrix(a.m.transpose() * u); };
            const SolveReport r = implicit_backward(vjp, g, config(method, 1e-12));
            REQUIRE(r.converged);
            const Matrix exact = (Matrix::Identity(10, 10) - a.m.transpose()).fullPivLu().solve(g);
            CHECK(rel_error(r.fixed_point, exact) < 1e-10);
        }
    }

    TEST_CASE("implicit backward equals the Neumann series for a nilpotent Jacobian") {
        std::mt19937_64 rng(45);
        Matrix m = random_matrix(rng, 5, 5).triangularView<Eigen::StrictlyUpper>();
        const Matrix g = random_matrix(rng, 5, 2);
        Matrix series = g, term = g;
        for (int k = 1; k < 5; ++k) {
            term = m.transpose() * term;
            series += term;
        }
        const FixedPointMap vjp = [&](const Matrix& u) { return Matrix(m.transpose() * u); };
        const SolveReport r = implicit_backward(vjp, g, config(SolverMethod::Picard, 1e-13));
        CHECK(r.converged);
        CHECK(r.iterations <= 6);
        CHECK(rel_error(r.fixed_point, series) < 1e-14);
        // a zero Jacobian returns the incoming gradient after one evaluation
        const FixedPointMap zero = [](const Matrix& u) { return Matrix::Zero(u.rows(), u.cols()).eval(); };
        const SolveReport z = implicit_backward(zero, g, config(SolverMethod::Anderson));
        CHECK(z.iterations == 1);
        CHECK((z.fixed_point - g).cwiseAbs().maxCoeff() == 0.0);
    }
}
