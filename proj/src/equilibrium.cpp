#include "qignn/equilibrium.hpp"

#include "qignn/graph_data.hpp"
#include "qignn/spectral.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qignn {

const char* operator_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::Classical: return "classical";
        case OperatorKind::ID: return "id";
        case OperatorKind::SD: return "sd";
        case OperatorKind::BD: return "bd";
    }
    return "?";
}

OperatorKind parse_operator_kind(const std::string& s) {
    if (s == "classical") return OperatorKind::Classical;
    if (s == "id") return OperatorKind::ID;
    if (s == "sd") return OperatorKind::SD;
    if (s == "bd") return OperatorKind::BD;
    throw std::invalid_argument("unknown pathway '" + s + "' (expected classical, id, sd or bd)");
}

BackboneParams BackboneParams::create(std::size_t hidden_dim, double kappa, std::uint64_t seed) {
    if (hidden_dim == 0) throw std::invalid_argument("hidden dimension must be positive");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in [0, 1)");
    const auto d = static_cast<Eigen::Index>(hidden_dim);
    BackboneParams p;
    p.kappa = kappa;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
    p.w.resize(d, d);
    for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w.data()[i] = nd(rng);
    p.omega.resize(d, d);
    for (Eigen::Index i = 0; i < p.omega.size(); ++i) p.omega.data()[i] = nd(rng);
    p.b = Matrix::Zero(1, d);
    clip_spectral(p);
    return p;
}

namespace {

Matrix tanh_of(const Matrix& m) {
    return m.unaryExpr([](double x) { return std::tanh(x); });
}

void check_backbone_shapes(const BackboneParams& p, const BlockDiagonal& a, const Matrix& h, const Matrix& z) {
    const auto d = static_cast<Eigen::Index>(p.hidden_dim());
    const auto n = static_cast<Eigen::Index>(a.size());
    if (h.rows() != n || h.cols() != d || z.rows() != n || z.cols() != d) {
        throw ShapeError("backbone: expected H and Z of shape " + std::to_string(n) + "x" + std::to_string(d) +
                         ", got " + shape_str(h) + " and " + shape_str(z));
    }
}

}  // namespace

Matrix backbone_apply(const BackboneParams& p, const BlockDiagonal& a, const Matrix& h, const Matrix& z) {
    check_backbone_shapes(p, a, h, z);
    Matrix pre = matmul_nt(a.apply(z), p.w) + matmul_nt(h, p.omega);
    pre.rowwise() += p.b.row(0);
    return tanh_of(pre);
}

bool clip_spectral(BackboneParams& p) {
    const double sigma = spectral_norm(p.w);
    // The relative slack keeps a second clip from touching an already clipped W.
    if (sigma > p.kappa * (1.0 + 1e-12)) {
        p.w *= p.kappa / sigma;
        return true;
    }
    return false;
}

InjectedOperator InjectedOperator::create(OperatorKind kind, std::size_t hidden_dim, std::size_t topology_dim,
                                          int num_qubits, int repetitions, double alpha, double kappa,
                                          std::uint64_t seed) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
    InjectedOperator op;
    op.kind = kind;
    op.alpha = alpha;
    op.backbone = BackboneParams::create(hidden_dim, kappa, mix_seed({seed, 1}));
    switch (kind) {
        case OperatorKind::Classical: break;
        case OperatorKind::ID:
            op.quantum = QuantumModule::create(hidden_dim + topology_dim, hidden_dim, num_qubits, repetitions, false,
                                               mix_seed({seed, 2}));
            break;
        case OperatorKind::SD:
        case OperatorKind::BD:
            op.quantum =
                QuantumModule::create(hidden_dim, hidden_dim, num_qubits, repetitions, true, mix_seed({seed, 2}));
            break;
    }
    return op;
}

Matrix id_conditioning(const QuantumModule& m, const Matrix& h, const Matrix& tau) {
    if (h.rows() != tau.rows()) throw ShapeError("id_conditioning: H and tau row counts differ");
    if (static_cast<std::size_t>(h.cols() + tau.cols()) != m.input_dim()) {
        throw ShapeError("id_conditioning: module expects input width " + std::to_string(m.input_dim()) + ", got " +
                         std::to_string(h.cols() + tau.cols()));
    }
    Matrix s(h.rows(), h.cols() + tau.cols());
    s << h, tau;
    return m.forward_rows(s);
}

namespace {

const QuantumModule& require_module(const InjectedOperator& op) {
    if (!op.quantum) throw std::logic_error(std::string("pathway '") + operator_name(op.kind) + "' has no quantum module");
    return *op.quantum;
}

}  // namespace

BoundOperator::BoundOperator(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h, const Matrix& tau)
    : BoundOperator(Precomputed{}, op, a, h,
                    op.kind == OperatorKind::ID ? id_conditioning(require_module(op), h, tau) : Matrix()) {}

BoundOperator BoundOperator::with_conditioning(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                                               Matrix conditioning) {
    return BoundOperator(Precomputed{}, op, a, h, std::move(conditioning));
}

BoundOperator::BoundOperator(Precomputed, const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                             Matrix conditioning)
    : op_(&op), a_(&a), h_(h), q_id_(std::move(conditioning)) {
    const auto d = static_cast<Eigen::Index>(op.hidden_dim());
    if (h.rows() != static_cast<Eigen::Index>(a.size()) || h.cols() != d) {
        throw ShapeError("operator: H has shape " + shape_str(h) + ", expected " + std::to_string(a.size()) + "x" +
                         std::to_string(d));
    }
    if (op.kind != OperatorKind::Classical) require_module(op);
    static_term_ = matmul_nt(h_, op.backbone.omega);
    if (op.kind == OperatorKind::ID) {
        if (q_id_.rows() != h.rows() || q_id_.cols() != d) throw ShapeError("operator: conditioning shape mismatch");
        static_term_ = static_term_ + q_id_;
    }
}

Matrix BoundOperator::operator()(const Matrix& z) const {
    const auto& p = op_->backbone;
    if (z.rows() != h_.rows() || z.cols() != h_.cols()) {
        throw ShapeError("operator: Z has shape " + shape_str(z) + ", expected " + shape_str(h_));
    }
    Matrix pre = matmul_nt(a_->apply(z), p.w) + static_term_;
    pre.rowwise() += p.b.row(0);
    Matrix hz = tanh_of(pre);
    switch (op_->kind) {
        case OperatorKind::Classical:
        case OperatorKind::ID: return hz;
        case OperatorKind::SD: return hz + op_->alpha * op_->quantum->forward_rows(z);
        case OperatorKind::BD: {
            Matrix q = op_->quantum->forward_rows(hz);
            return hz + op_->alpha * q;
        }
    }
    return hz;
}

OperatorVars bind(ad::Tape& tape, const InjectedOperator& op) {
    OperatorVars v{tape.leaf(op.backbone.w), tape.leaf(op.backbone.omega), tape.leaf(op.backbone.b), std::nullopt};
    if (op.quantum) v.quantum = bind(tape, *op.quantum);
    return v;
}

namespace {

ad::Var backbone_with(const OperatorVars& v, const BlockDiagonal& a, ad::Var h, ad::Var q_id, ad::Var z) {
    ad::Var static_term = ad::matmul_nt(h, v.omega);
    if (q_id.valid()) static_term = ad::add(static_term, q_id);
    const ad::Var pre = ad::add(ad::matmul_nt(ad::propagate(a, z), v.w), static_term);
    return ad::tanh(ad::add_row(pre, v.b));
}

}  // namespace

ad::Var backbone_apply(const OperatorVars& v, const BlockDiagonal& a, ad::Var h, ad::Var z) {
    return backbone_with(v, a, h, ad::Var{}, z);
}

ad::Var id_conditioning(const QuantumModule& m, const QuantumVars& v, ad::Var h, ad::Var tau) {
    if (h.rows() != tau.rows()) throw ShapeError("id_conditioning: H and tau row counts differ");
    const ad::Var parts[] = {h, tau};
    return quantum_rows(m, v, ad::concat_cols(parts));
}

ad::Var operator_apply(const InjectedOperator& op, const OperatorVars& v, const BlockDiagonal& a, ad::Var h,
                       ad::Var q_id, ad::Var z) {
    switch (op.kind) {
        case OperatorKind::Classical: return backbone_with(v, a, h, ad::Var{}, z);
        case OperatorKind::ID:
            if (!q_id.valid()) throw std::logic_error("operator_apply: ID pathway needs its conditioning term");
            return backbone_with(v, a, h, q_id, z);
        case OperatorKind::SD: {
            const auto& m = require_module(op);
            const ad::Var hz = backbone_with(v, a, h, ad::Var{}, z);
            return ad::add(hz, ad::scale(quantum_rows(m, *v.quantum, z), op.alpha));
        }
        case OperatorKind::BD: {
            const auto& m = require_module(op);
            const ad::Var hz = backbone_with(v, a, h, ad::Var{}, z);
            return ad::add(hz, ad::scale(quantum_rows(m, *v.quantum, hz), op.alpha));
        }
    }
    throw std::logic_error("operator_apply: unknown kind");
}

}  // namespace qignn
