#include "qignn/contraction.hpp"
#include "qignn/equilibrium.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/SVD>

using namespace qignn;
using namespace qignn::testing;

namespace {

constexpr OperatorKind kAllKinds[] = {OperatorKind::Classical, OperatorKind::ID, OperatorKind::SD, OperatorKind::BD};

struct Scene {
    BlockDiagonal a;
    Matrix h;
    Matrix tau;
};

Scene random_scene(std::mt19937_64& rng, int n, std::size_t d, std::size_t dt) {
    Scene s;
    s.a = BlockDiagonal(normalize_adjacency(random_adjacency(rng, n, 0.3)));
    s.h = random_matrix(rng, n, static_cast<Eigen::Index>(d));
    s.tau = random_matrix(rng, n, static_cast<Eigen::Index>(dt)).cwiseAbs();
    return s;
}

Matrix tanh_of(const Matrix& x) { return x.array().tanh().matrix(); }

// Reference evaluation written from the definitions with Eigen products.
Matrix reference_apply(const InjectedOperator& op, const Scene& s, const Matrix& z) {
    const auto& p = op.backbone;
    auto backbone = [&](const Matrix& q_extra, const Matrix& zz) {
        Matrix pre = s.a.dense() * zz * p.w.transpose() + s.h * p.omega.transpose() + q_extra;
        pre.rowwise() += p.b.row(0);
        return tanh_of(pre);
    };
    const Matrix zero = Matrix::Zero(z.rows(), z.cols());
    switch (op.kind) {
        case OperatorKind::Classical: return backbone(zero, z);
        case OperatorKind::ID: {
            Matrix in(s.h.rows(), s.h.cols() + s.tau.cols());
            in << s.h, s.tau;
            return backbone(op.quantum->forward_rows(in), z);
        }
        case OperatorKind::SD: return backbone(zero, z) + op.alpha * op.quantum->forward_rows(z);
        case OperatorKind::BD: {
            const Matrix hz = backbone(zero, z);
            return hz + op.alpha * op.quantum->forward_rows(hz);
        }
    }
    return {};
}

}  // namespace

TEST_SUITE("equilibrium") {
    TEST_CASE("operator names round-trip") {
        for (auto k : kAllKinds) CHECK(parse_operator_kind(operator_name(k)) == k);
        CHECK_THROWS_AS(parse_operator_kind("xd"), std::invalid_argument);
    }

    TEST_CASE("created operators respect the budget and module layout") {
        const auto id = InjectedOperator::create(OperatorKind::ID, 8, 7, 3, 1, 0.1, 0.8, 1);
        REQUIRE(id.quantum);
        CHECK(id.quantum->input_dim() == 15);
        CHECK(id.quantum->output_dim() == 8);
        CHECK_FALSE(id.quantum->spectral_normalize);
        const auto sd = InjectedOperator::create(OperatorKind::SD, 8, 7, 3, 1, 0.1, 0.8, 1);
        CHECK(sd.quantum->input_dim() == 8);
        CHECK(sd.quantum->spectral_normalize);
        const auto cl = InjectedOperator::create(OperatorKind::Classical, 8, 7, 3, 1, 0.1, 0.8, 1);
        CHECK_FALSE(cl.quantum);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto p = BackboneParams::create(16, 0.8, seed);
            CHECK(spectral_norm(p.w) <= 0.8 + 1e-9);
            CHECK(p.b.isZero(0.0));
        }
    }

    TEST_CASE("spectral clipping") {
        BackboneParams p = BackboneParams::create(2, 0.8, 1);
        p.w = Matrix::Zero(2, 2);
        p.w(0, 0) = 2.0;
        p.w(1, 1) = 0.5;
        CHECK(clip_spectral(p));
        CHECK(p.w(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(p.w(1, 1) == doctest::Approx(0.2).epsilon(1e-12));
        const Matrix after = p.w;
        CHECK_FALSE(clip_spectral(p));
        CHECK((p.w - after).cwiseAbs().maxCoeff() == 0.0);

        p.w = Matrix::Identity(2, 2) * 0.3;
        CHECK_FALSE(clip_spectral(p));
        CHECK(p.w(0, 0) == 0.3);
        p.w.setZero();
        CHECK_FALSE(clip_spectral(p));

        std::mt19937_64 rng(31);
        for (int t = 0; t < 20; ++t) {
            p.w = random_matrix(rng, 12, 12, 0.5);
            const Eigen::JacobiSVD<Eigen::MatrixXd> before(Eigen::MatrixXd(p.w));
            clip_spectral(p);
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(p.w));
            const double top = before.singularValues()(0);
            CHECK(svd.singularValues()(0) == doctest::Approx(std::min(top, 0.8)).epsilon(1e-9));
            // a uniform rescale keeps the spectrum's shape
            const double ratio = svd.singularValues()(0) / top;
            CHECK((svd.singularValues() - ratio * before.singularValues()).norm() < 1e-9);
        }
    }

    TEST_CASE("bound operators match the reference definitions") {
        std::mt19937_64 rng(32);
        for (auto k : kAllKinds) {
            for (int t = 0; t < 5; ++t) {
                const Scene s = random_scene(rng, 6 + t, 6, 7);
                const auto op = InjectedOperator::create(k, 6, 7, 1 + t % 4, 1, 0.1, 0.8, 40 + t);
                const BoundOperator f(op, s.a, s.h, s.tau);
                const Matrix z = random_matrix(rng, s.h.rows(), 6);
                CHECK(rel_error(f(z), reference_apply(op, s, z)) < 1e-13);
            }
        }
    }

    TEST_CASE("degenerate settings reduce to the backbone") {
        std::mt19937_64 rng(33);
        const Scene s = random_scene(rng, 7, 5, 7);
        const Matrix z = random_matrix(rng, 7, 5);
        const auto classical = InjectedOperator::create(OperatorKind::Classical, 5, 7, 2, 1, 0.1, 0.8, 9);
        const Matrix base = BoundOperator(classical, s.a, s.h, s.tau)(z);
        for (auto k : {OperatorKind::SD, OperatorKind::BD}) {
            auto op = InjectedOperator::create(k, 5, 7, 2, 1, 0.0, 0.8, 9);
            op.backbone = classical.backbone;
            CHECK((BoundOperator(op, s.a, s.h, s.tau)(z) - base).cwiseAbs().maxCoeff() == 0.0);
            op.alpha = 0.3;
            op.quantum->w_out.setZero();
            CHECK((BoundOperator(op, s.a, s.h, s.tau)(z) - base).cwiseAbs().maxCoeff() == 0.0);
        }
        auto id = InjectedOperator::create(OperatorKind::ID, 5, 7, 2, 1, 0.1, 0.8, 9);
        id.backbone = classical.backbone;
        id.quantum->w_out.setZero();
        CHECK((BoundOperator(id, s.a, s.h, s.tau)(z) - base).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("BD and SD differ only through where the module reads") {
        std::mt19937_64 rng(34);
        const Scene s = random_scene(rng, 6, 4, 7);
        auto sd = InjectedOperator::create(OperatorKind::SD, 4, 7, 2, 1, 0.2, 0.8, 5);
        auto bd = sd;
        bd.kind = OperatorKind::BD;
        const Matrix z = random_matrix(rng, 6, 4);
        const Matrix hz = backbone_apply(sd.backbone, s.a, s.h, z);
        const Matrix diff = BoundOperator(bd, s.a, s.h, s.tau)(z) - BoundOperator(sd, s.a, s.h, s.tau)(z);
        const Matrix expected = sd.alpha * (sd.quantum->forward_rows(hz) - sd.quantum->forward_rows(z));
        CHECK(rel_error(diff, expected) < 1e-12);
    }

    TEST_CASE("ID conditioning is computed once and frozen in Z") {
        std::mt19937_64 rng(35);
        const Scene s = random_scene(rng, 8, 6, 7);
        const auto op = InjectedOperator::create(OperatorKind::ID, 6, 7, 3, 1, 0.1, 0.8, 6);
        const BoundOperator f(op, s.a, s.h, s.tau);
        CHECK((f.conditioning() - id_conditioning(*op.quantum, s.h, s.tau)).cwiseAbs().maxCoeff() == 0.0);

        const Matrix z = random_matrix(rng, 8, 6), v = random_matrix(rng, 8, 6);
        const double eps = 1e-6;
        const Matrix jvp_fd = (f(z + eps * v) - f(z - eps * v)) / (2 * eps);
        // the Jacobian in Z is the backbone's: diag(1 - y^2) (A V W^T)
        const Matrix y = f(z);
        const Matrix jvp = (1.0 - y.array().square()).matrix().cwiseProduct(s.a.dense() * v * op.backbone.w.transpose());
        CHECK(rel_error(jvp_fd, jvp) < 1e-8);

        // a supplied conditioning is used verbatim
        const Matrix cond = random_matrix(rng, 8, 6);
        const BoundOperator g = BoundOperator::with_conditioning(op, s.a, s.h, cond);
        CHECK((g.conditioning() - cond).cwiseAbs().maxCoeff() == 0.0);
        Matrix pre = s.a.dense() * z * op.backbone.w.transpose() + s.h * op.backbone.omega.transpose() + cond;
        CHECK(rel_error(g(z), tanh_of(pre)) < 1e-13);
    }

    TEST_CASE("operators are permutation equivariant") {
        std::mt19937_64 rng(36);
        for (auto k : kAllKinds) {
            for (int t = 0; t < 5; ++t) {
                const int n = 5 + 2 * t;
                const Matrix adj = random_adjacency(rng, n, 0.3);
                const Matrix feats = random_one_hot(rng, n, 4);
                const GraphInstance g = make_graph(adj, feats, 0);
                const auto perm = random_permutation(rng, n);
                const GraphInstance gp = make_graph(permute_symmetric(adj, perm), permute_rows(feats, perm), 0);
                const auto op = InjectedOperator::create(k, 5, 7, 2, 1, 0.1, 0.8, 70 + t);
                const Matrix h = random_matrix(rng, n, 5);
                const Matrix z = random_matrix(rng, n, 5);
                const BlockDiagonal a(g.propagation), ap(gp.propagation);
                const Matrix out = BoundOperator(op, a, h, g.topology)(z);
                const Matrix outp = BoundOperator(op, ap, permute_rows(h, perm), gp.topology)(permute_rows(z, perm));
                CHECK(rel_error(outp, permute_rows(out, perm)) < 1e-13);
            }
        }
    }

    TEST_CASE("tape operator matches the numeric operator and finite differences") {
        std::mt19937_64 rng(37);
        for (auto k : kAllKinds) {
            const Scene s = random_scene(rng, 5, 4, 7);
            auto op = InjectedOperator::create(k, 4, 7, 2, 1, 0.3, 0.8, 80);
            op.backbone.b = random_matrix(rng, 1, 4, 0.1);
            const Matrix z = random_matrix(rng, 5, 4);
            const Matrix weights = random_matrix(rng, 5, 4);

            ad::Tape tape;
            const OperatorVars v = bind(tape, op);
            const ad::Var hv = tape.leaf(s.h);
            const ad::Var tv = tape.constant(s.tau);
            const ad::Var zv = tape.leaf(z);
            const ad::Var q = k == OperatorKind::ID ? id_conditioning(*op.quantum, *v.quantum, hv, tv) : ad::Var{};
            const ad::Var out = operator_apply(op, v, s.a, hv, q, zv);
            CHECK((out.value() - BoundOperator(op, s.a, s.h, s.tau)(z)).cwiseAbs().maxCoeff() == 0.0);

            const ad::Gradients g = tape.backward(ad::sum(ad::mul_const(out, weights)));
            auto loss = [&](const InjectedOperator& o, const Matrix& h, const Matrix& zz) {
                return BoundOperator(o, s.a, h, s.tau)(zz).cwiseProduct(weights).sum();
            };
            CHECK(rel_error(g.of(zv), fd_gradient([&](const Matrix& x) { return loss(op, s.h, x); }, z)) < 1e-7);
            CHECK(rel_error(g.of(hv), fd_gradient([&](const Matrix& x) { return loss(op, x, z); }, s.h)) < 1e-7);
            auto param_check = [&](ad::Var var, auto member) {
                auto o = op;
                const Matrix x0 = member(o);
                return rel_error(g.of(var), fd_gradient(
                                                [&](const Matrix& x) {
                                                    member(o) = x;
                                                    const double l = loss(o, s.h, z);
                                                    member(o) = x0;
                                                    return l;
                                                },
                                                x0));
            };
            CHECK(param_check(v.w, [](InjectedOperator& o) -> Matrix& { return o.backbone.w; }) < 1e-7);
            CHECK(param_check(v.omega, [](InjectedOperator& o) -> Matrix& { return o.backbone.omega; }) < 1e-7);
            CHECK(param_check(v.b, [](InjectedOperator& o) -> Matrix& { return o.backbone.b; }) < 1e-7);
            if (op.quantum) {
                CHECK(param_check(v.quantum->w_in, [](InjectedOperator& o) -> Matrix& { return o.quantum->w_in; }) < 1e-7);
                CHECK(param_check(v.quantum->w_out, [](InjectedOperator& o) -> Matrix& { return o.quantum->w_out; }) <
                      1e-7);
                CHECK(param_check(v.quantum->angles, [](InjectedOperator& o) -> Matrix& { return o.quantum->angles; }) <
                      1e-7);
            }
        }
    }
}
