#pragma once

#include "qignn/quantum.hpp"
#include "qignn/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace qignn {

enum class OperatorKind { Classical, ID, SD, BD };

const char* operator_name(OperatorKind k);  // "classical", "id", "sd", "bd"
OperatorKind parse_operator_kind(const std::string& s);

/// Parameters of the classical map h(Z) = tanh(A Z W^T + H Omega^T + 1 b^T).
struct BackboneParams {
    Matrix w;      // d_h x d_h
    Matrix omega;  // d_h x d_h
    Matrix b;      // 1 x d_h
    double kappa = 0.8;

    /// W, Omega ~ N(0, 1/d_h) with W clipped to kappa; b = 0.
    static BackboneParams create(std::size_t hidden_dim, double kappa, std::uint64_t seed);
    std::size_t hidden_dim() const { return static_cast<std::size_t>(w.rows()); }
};

Matrix backbone_apply(const BackboneParams& p, const BlockDiagonal& a, const Matrix& h, const Matrix& z);

/// Rescales W to spectral norm kappa when its largest singular value exceeds
/// kappa (1 + 1e-12). Returns true when W was rescaled.
bool clip_spectral(BackboneParams& p);

struct InjectedOperator {
    OperatorKind kind = OperatorKind::Classical;
    BackboneParams backbone;
    std::optional<QuantumModule> quantum;
    double alpha = 0.0;

    /// ID modules read [h_i; tau_i] (width d_h + d_tau); SD and BD modules read
    /// d_h-wide rows and have spectral normalization switched on.
    static InjectedOperator create(OperatorKind kind, std::size_t hidden_dim, std::size_t topology_dim,
                                   int num_qubits, int repetitions, double alpha, double kappa,
                                   std::uint64_t seed);

    std::size_t hidden_dim() const { return backbone.hidden_dim(); }
};

/// Row i is q([h_i; tau_i]).
Matrix id_conditioning(const QuantumModule& m, const Matrix& h, const Matrix& tau);

/// Operator restricted to one (batched) graph. The ID conditioning is computed
/// once at construction and reused by every call.
class BoundOperator {
public:
    BoundOperator(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h, const Matrix& tau);
    /// Uses a precomputed conditioning term instead of evaluating the module.
    static BoundOperator with_conditioning(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                                           Matrix conditioning);

    Matrix operator()(const Matrix& z) const;
    const Matrix& conditioning() const { return q_id_; }
    std::size_t rows() const { return static_cast<std::size_t>(h_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(h_.cols()); }

private:
    struct Precomputed {};
    BoundOperator(Precomputed, const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                  Matrix conditioning);

    const InjectedOperator* op_;
    const BlockDiagonal* a_;
    Matrix h_;
    Matrix static_term_;  // H Omega^T (+ Q_ID)
    Matrix q_id_;
};

/// Tape handles for an operator's trainable tensors.
struct OperatorVars {
    ad::Var w;
    ad::Var omega;
    ad::Var b;
    std::optional<QuantumVars> quantum;
};

OperatorVars bind(ad::Tape& tape, const InjectedOperator& op);

ad::Var backbone_apply(const OperatorVars& v, const BlockDiagonal& a, ad::Var h, ad::Var z);

ad::Var id_conditioning(const QuantumModule& m, const QuantumVars& v, ad::Var h, ad::Var tau);

/// Differentiable operator. `q_id` must come from id_conditioning for the ID
/// kind and is ignored otherwise.
ad::Var operator_apply(const InjectedOperator& op, const OperatorVars& v, const BlockDiagonal& a, ad::Var h,
                       ad::Var q_id, ad::Var z);

}  // namespace qignn
