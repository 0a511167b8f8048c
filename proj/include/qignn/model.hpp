#pragma once

#include "qignn/equilibrium.hpp"
#include "qignn/graph_data.hpp"
#include "qignn/solvers.hpp"
#include "qignn/tensor.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qignn {

struct ModelConfig {
    std::size_t hidden_dim = 64;
    OperatorKind pathway = OperatorKind::ID;
    int n_qubits = 4;
    int repetitions = 1;
    double alpha = 0.1;
    double kappa = 0.8;
    SolverConfig forward_solver{SolverMethod::Anderson, 300, 1e-6};
    SolverConfig backward_solver{SolverMethod::Anderson, 150, 1e-5};
    std::string encoder = "linear";
    int heads = 4;
    std::size_t mlp_hidden = 64;
    double dropout = 0.4;
    int max_cycle_length = 6;

    void validate() const;
};

/// Named view of one trainable tensor.
struct ParamRef {
    std::string name;
    Matrix* value;
    bool decay;  // receives weight decay
};

struct Model {
    ModelConfig config;
    std::size_t num_features = 0;
    std::size_t topology_dim = 0;
    int num_classes = 0;

    Matrix encoder;  // d_h x f
    InjectedOperator op;
    Matrix wq, wk, wv, wo;  // d_h x d_h
    Matrix bq, bk, bv, bo;  // 1 x d_h
    Matrix w1, b1;          // mlp_hidden x d_h, 1 x mlp_hidden
    Matrix w2, b2;          // C x mlp_hidden, 1 x C

    static Model create(const ModelConfig& cfg, std::size_t num_features, std::size_t topology_dim, int num_classes,
                        std::uint64_t seed);

    /// Every trainable tensor in a fixed order. Biases and circuit angles have decay = false.
    std::vector<ParamRef> parameters();
    std::vector<const Matrix*> parameter_values() const;
    std::size_t parameter_count() const;
};

/// Leaves for every parameter, in Model::parameters() order.
struct ModelVars {
    ad::Var encoder;
    OperatorVars op;
    ad::Var wq, wk, wv, wo, bq, bk, bv, bo;
    ad::Var w1, b1, w2, b2;

    std::vector<ad::Var> all() const;
};

ModelVars bind(ad::Tape& tape, const Model& m);

/// H = X E^T.
Matrix encode(const Matrix& x, const Matrix& encoder);
ad::Var encode(ad::Var x, ad::Var encoder);

/// Multi-head self-attention within each graph's row range, then a sum over
/// the attended rows. Returns one row per graph.
ad::Var attention_readout(const ModelVars& v, ad::Var z, const std::vector<std::size_t>& offsets,
                          const std::vector<std::size_t>& sizes, int heads);

/// linear - ReLU - dropout - linear. Dropout is applied only when `rng` is given.
ad::Var classify(const ModelVars& v, ad::Var zg, double dropout, std::mt19937_64* rng);

struct BatchForward {
    SolveReport solve;
    Matrix logits;
};

/// Evaluation-mode logits for a batch (no dropout, no gradients).
BatchForward predict(const Model& m, const BatchedGraphs& batch);

struct GradientResult {
    double loss = 0.0;
    int correct = 0;
    std::vector<Matrix> grads;  // Model::parameters() order
    SolveReport forward;
    SolveReport backward;
};

/// Loss and parameter gradients for one batch through the implicit backward
/// solve. `dropout_seed` == 0 runs the head in evaluation mode.
GradientResult compute_gradients(const Model& m, const BatchedGraphs& batch, std::uint64_t dropout_seed);

/// Mean cross-entropy in evaluation mode after a full forward solve.
double evaluation_loss(const Model& m, const BatchedGraphs& batch);

/// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& logits);

}  // namespace qignn
