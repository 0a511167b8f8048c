#include "qignn/contraction.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace qignn;
using namespace qignn::testing;

TEST_SUITE("contraction") {
    TEST_CASE("spectral norm against dense SVD") {
        std::mt19937_64 rng(51);
        for (int t = 0; t < 100; ++t) {
            const int r = 1 + t % 13, c = 1 + (t * 7) % 11;
            const Matrix m = random_matrix(rng, r, c);
            const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(Eigen::MatrixXd(m)).singularValues()(0);
            CHECK(spectral_norm(m) == doctest::Approx(svd).epsilon(1e-12));
            // power iteration only approaches from below
            CHECK(power_iteration_norm(m) <= svd * (1 + 1e-12));
            for (double s : {-3.0, 0.5, 1e-3}) {
                CHECK(spectral_norm(s * m) == doctest::Approx(std::abs(s) * spectral_norm(m)).epsilon(1e-9));
            }
        }
        CHECK(spectral_norm(Matrix::Zero(3, 4)) == 0.0);
        CHECK(power_iteration_norm(Matrix::Zero(3, 4)) == 0.0);
        CHECK_THROWS_AS(spectral_norm(Matrix(0, 0)), ShapeError);
    }

    TEST_CASE("normalized adjacency has norm at most one") {
        std::mt19937_64 rng(52);
        for (int t = 0; t < 30; ++t) {
            const Matrix p = normalize_adjacency(random_adjacency(rng, 2 + t, 0.2));
            CHECK(spectral_norm(p) <= 1.0 + 1e-9);
            CHECK(power_iteration_norm(p) <= 1.0 + 1e-9);
        }
    }

    TEST_CASE("closed-form quantum constant") {
        QuantumModule m = QuantumModule::create(3, 3, 4, 1, false, 1);
        m.w_in = Matrix::Identity(4, 3);
        m.w_out = Matrix::Identity(3, 4);
        CHECK(lemma2_bound(m) == doctest::Approx(4.0).epsilon(1e-14));
        m.w_out *= 0.5;
        CHECK(lemma2_bound(m) == doctest::Approx(2.0).epsilon(1e-14));
        m.w_in.setZero();
        CHECK(lemma2_bound(m) == 0.0);
        // a converged normalized module measures 2 sqrt(n_q)
        QuantumModule sn = QuantumModule::create(6, 6, 4, 1, true, 2);
        for (int i = 0; i < 300; ++i) sn.update_normalization();
        CHECK(lemma2_bound(sn) == doctest::Approx(4.0).epsilon(1e-8));
    }

    TEST_CASE("pathway bounds") {
        const TheoremBounds b = theorem_bounds(0.8, 0.1, 1.0, 1.0);
        CHECK(b.id == 0.8);
        CHECK(b.sd == 0.9);
        CHECK(b.bd == 0.88);
        const TheoremBounds z = theorem_bounds(0.5, 0.0, 3.0, 3.0);
        CHECK(z.id == 0.5);
        CHECK(z.sd == 0.5);
        CHECK(z.bd == 0.5);
        CHECK(theorem_bounds(1.0, 0.2, 5.0, 5.0).bd == theorem_bounds(1.0, 0.2, 5.0, 5.0).sd);
        CHECK_THROWS_AS(theorem_bounds(1.1, 0.1, 1.0, 1.0), std::domain_error);
        CHECK_THROWS_AS(theorem_bounds(-0.1, 0.1, 1.0, 1.0), std::domain_error);
        CHECK_THROWS_AS(theorem_bounds(0.5, -0.1, 1.0, 1.0), std::domain_error);
        CHECK_THROWS_AS(theorem_bounds(0.5, 0.1, -1.0, 1.0), std::domain_error);
        CHECK_THROWS_AS(theorem_bounds(0.5, 0.1, 1.0, std::nan("")), std::domain_error);
    }

    TEST_CASE("bound ordering on random triples") {
        std::mt19937_64 rng(53);
        std::uniform_real_distribution<double> k(0.0, 1.0), a(0.0, 2.0), l(0.0, 20.0);
        for (int t = 0; t < 10000; ++t) {
            const double lq = l(rng);
            const TheoremBounds b = theorem_bounds(k(rng), a(rng), lq, lq);
            CHECK(b.id <= b.bd);
            CHECK(b.bd <= b.sd);
        }
    }

    TEST_CASE("sampled Lipschitz constant of simple maps") {
        const FixedPointMap identity = [](const Matrix& z) { return z; };
        CHECK(empirical_lipschitz(identity, 4, 3) == doctest::Approx(1.0).epsilon(1e-12));
        const FixedPointMap half = [](const Matrix& z) { return Matrix(0.5 * z); };
        CHECK(empirical_lipschitz(half, 4, 3) == doctest::Approx(0.5).epsilon(1e-12));
        const FixedPointMap constant = [](const Matrix& z) { return Matrix::Ones(z.rows(), z.cols()).eval(); };
        CHECK(empirical_lipschitz(constant, 2, 2) == 0.0);
        // tanh has slope 1 at the origin: the small-scale pairs find it
        const FixedPointMap th = [](const Matrix& z) { return Matrix(z.array().tanh()); };
        const double lt = empirical_lipschitz(th, 5, 2);
        CHECK(lt <= 1.0);
        CHECK(lt > 0.95);
        LipschitzSampling bad;
        bad.pairs = 0;
        CHECK_THROWS_AS(empirical_lipschitz(identity, 2, 2, bad), std::invalid_argument);
        bad = {};
        bad.scales.clear();
        CHECK_THROWS_AS(empirical_lipschitz(identity, 2, 2, bad), std::invalid_argument);
    }

    TEST_CASE("clipped backbones are certified") {
        std::mt19937_64 rng(54);
        for (int t = 0; t < 10; ++t) {
            const Matrix a = random_adjacency(rng, 6 + t, 0.3);
            const BlockDiagonal p(normalize_adjacency(a));
            const Matrix tau = topology_descriptors(a, 6);
            auto op = InjectedOperator::create(OperatorKind::Classical, 8, 7, 2, 1, 0.1, 0.8, 200 + t);
            op.backbone.w = random_matrix(rng, 8, 8, 2.0);
            clip_spectral(op.backbone);
            const Matrix h = random_matrix(rng, 6 + t, 8);
            const LipschitzReport r = certify_operator(op, p, h, tau);
            CHECK(r.certified);
            CHECK(r.empirical <= 0.8);
            CHECK(r.backbone_norm == doctest::Approx(0.8).epsilon(1e-12));
            CHECK(r.lq == 0.0);
            CHECK(r.samples == 200);
        }
    }

    TEST_CASE("certificate record") {
        std::mt19937_64 rng(55);
        const Matrix a = random_adjacency(rng, 7, 0.3);
        const auto op = InjectedOperator::create(OperatorKind::BD, 8, 7, 3, 1, 0.1, 0.8, 3);
        const LipschitzReport r =
            certify_operator(op, BlockDiagonal(normalize_adjacency(a)), random_matrix(rng, 7, 8), topology_descriptors(a, 6));
        CHECK(r.pathway == "bd");
        CHECK(r.analytic == r.bounds.bd);
        CHECK(r.certified);
        const std::string rec = r.to_record();
        CHECK(rec.find("pathway=bd\n") == 0);
        CHECK(rec.find("kappa=0.8\n") != std::string::npos);
        CHECK(rec.find("alpha=0.1\n") != std::string::npos);
        CHECK(rec.find("certified=true\n") != std::string::npos);
        CHECK(rec.find("samples=200\n") != std::string::npos);
    }
}
