#include "qignn/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qignn {

void ModelConfig::validate() const {
    if (hidden_dim == 0) throw std::invalid_argument("hidden_dim must be positive");
    if (heads < 1 || hidden_dim % static_cast<std::size_t>(heads) != 0) {
        throw std::invalid_argument("heads must divide hidden_dim");
    }
    if (pathway != OperatorKind::Classical && (n_qubits < 1 || n_qubits > 12)) {
        throw std::invalid_argument("n_qubits must lie in [1, 12]");
    }
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(kappa >= 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in [0, 1)");
    if (encoder != "linear") throw std::invalid_argument("unsupported encoder '" + encoder + "'");
    if (mlp_hidden == 0) throw std::invalid_argument("mlp_hidden must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
    if (max_cycle_length < 3) throw std::invalid_argument("max_cycle_length must be >= 3");
    forward_solver.validate();
    backward_solver.validate();
}

namespace {

Matrix uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

double fan_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

Model Model::create(const ModelConfig& cfg, std::size_t num_features, std::size_t topology_dim, int num_classes,
                    std::uint64_t seed) {
    cfg.validate();
    if (num_features == 0) throw std::invalid_argument("model needs at least one input feature");
    if (num_classes < 2) throw std::invalid_argument("model needs at least two classes");
    Model m;
    m.config = cfg;
    m.num_features = num_features;
    m.topology_dim = topology_dim;
    m.num_classes = num_classes;
    const auto d = static_cast<Eigen::Index>(cfg.hidden_dim);
    const auto hid = static_cast<Eigen::Index>(cfg.mlp_hidden);
    std::mt19937_64 rng(mix_seed({seed, 0x3d}));
    m.encoder = uniform(rng, d, static_cast<Eigen::Index>(num_features), fan_bound(num_features));
    m.op = InjectedOperator::create(cfg.pathway, cfg.hidden_dim, topology_dim, cfg.n_qubits, cfg.repetitions,
                                    cfg.alpha, cfg.kappa, mix_seed({seed, 0x0b}));
    const double ba = fan_bound(cfg.hidden_dim);
    m.wq = uniform(rng, d, d, ba);
    m.wk = uniform(rng, d, d, ba);
    m.wv = uniform(rng, d, d, ba);
    m.wo = uniform(rng, d, d, ba);
    m.bq = m.bk = m.bv = m.bo = Matrix::Zero(1, d);
    m.w1 = uniform(rng, hid, d, ba);
    m.b1 = uniform(rng, 1, hid, ba);
    const double bh = fan_bound(cfg.mlp_hidden);
    m.w2 = uniform(rng, num_classes, hid, bh);
    m.b2 = uniform(rng, 1, num_classes, bh);
    return m;
}

std::vector<ParamRef> Model::parameters() {
    std::vector<ParamRef> p{
        {"encoder.weight", &encoder, true},
        {"backbone.W", &op.backbone.w, true},
        {"backbone.Omega", &op.backbone.omega, true},
        {"backbone.b", &op.backbone.b, false},
    };
    if (op.quantum) {
        p.push_back({"quantum.W_in", &op.quantum->w_in, true});
        p.push_back({"quantum.W_out", &op.quantum->w_out, true});
        p.push_back({"quantum.angles", &op.quantum->angles, false});
    }
    const std::vector<ParamRef> rest{
        {"attention.Wq", &wq, true}, {"attention.bq", &bq, false}, {"attention.Wk", &wk, true},
        {"attention.bk", &bk, false}, {"attention.Wv", &wv, true}, {"attention.bv", &bv, false},
        {"attention.Wo", &wo, true}, {"attention.bo", &bo, false}, {"mlp.W1", &w1, true},
        {"mlp.b1", &b1, false},       {"mlp.W2", &w2, true},       {"mlp.b2", &b2, false},
    };
    p.insert(p.end(), rest.begin(), rest.end());
    return p;
}

std::vector<const Matrix*> Model::parameter_values() const {
    std::vector<const Matrix*> out;
    for (const auto& p : const_cast<Model*>(this)->parameters()) out.push_back(p.value);
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameter_values()) n += static_cast<std::size_t>(p->size());
    return n;
}

std::vector<ad::Var> ModelVars::all() const {
    std::vector<ad::Var> v{encoder, op.w, op.omega, op.b};
    if (op.quantum) {
        v.push_back(op.quantum->w_in);
        v.push_back(op.quantum->w_out);
        v.push_back(op.quantum->angles);
    }
    const std::vector<ad::Var> rest{wq, bq, wk, bk, wv, bv, wo, bo, w1, b1, w2, b2};
    v.insert(v.end(), rest.begin(), rest.end());
    return v;
}

ModelVars bind(ad::Tape& tape, const Model& m) {
    ModelVars v;
    v.encoder = tape.leaf(m.encoder);
    v.op = bind(tape, m.op);
    v.wq = tape.leaf(m.wq);
    v.bq = tape.leaf(m.bq);
    v.wk = tape.leaf(m.wk);
    v.bk = tape.leaf(m.bk);
    v.wv = tape.leaf(m.wv);
    v.bv = tape.leaf(m.bv);
    v.wo = tape.leaf(m.wo);
    v.bo = tape.leaf(m.bo);
    v.w1 = tape.leaf(m.w1);
    v.b1 = tape.leaf(m.b1);
    v.w2 = tape.leaf(m.w2);
    v.b2 = tape.leaf(m.b2);
    return v;
}

Matrix encode(const Matrix& x, const Matrix& encoder) {
    if (x.cols() != encoder.cols()) {
        throw ShapeError("encode: features have width " + std::to_string(x.cols()) + ", encoder expects " +
                         std::to_string(encoder.cols()));
    }
    return matmul_nt(x, encoder);
}

ad::Var encode(ad::Var x, ad::Var encoder) {
    if (x.cols() != encoder.cols()) {
        throw ShapeError("encode: features have width " + std::to_string(x.cols()) + ", encoder expects " +
                         std::to_string(encoder.cols()));
    }
    return ad::matmul_nt(x, encoder);
}

ad::Var attention_readout(const ModelVars& v, ad::Var z, const std::vector<std::size_t>& offsets,
                          const std::vector<std::size_t>& sizes, int heads) {
    if (offsets.size() != sizes.size() || sizes.empty()) throw std::invalid_argument("readout: bad graph ranges");
    const Eigen::Index d = z.cols();
    if (heads < 1 || d % heads != 0) throw std::invalid_argument("readout: heads must divide the width");
    const Eigen::Index dk = d / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dk));

    const ad::Var q = ad::add_row(ad::matmul_nt(z, v.wq), v.bq);
    const ad::Var k = ad::add_row(ad::matmul_nt(z, v.wk), v.bk);
    const ad::Var val = ad::add_row(ad::matmul_nt(z, v.wv), v.bv);

    std::vector<ad::Var> attended;
    attended.reserve(sizes.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (sizes[g] == 0) throw std::invalid_argument("readout: empty graph");
        const auto off = static_cast<Eigen::Index>(offsets[g]);
        const auto n = static_cast<Eigen::Index>(sizes[g]);
        if (off + n > z.rows()) throw std::invalid_argument("readout: graph range exceeds the node count");
        const ad::Var qg = ad::slice_rows(q, off, n);
        const ad::Var kg = ad::slice_rows(k, off, n);
        const ad::Var vg = ad::slice_rows(val, off, n);
        std::vector<ad::Var> per_head;
        per_head.reserve(static_cast<std::size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            const Eigen::Index c = h * dk;
            const ad::Var scores =
                ad::scale(ad::matmul_nt(ad::slice_cols(qg, c, dk), ad::slice_cols(kg, c, dk)), inv);
            per_head.push_back(ad::matmul(ad::softmax_rows(scores), ad::slice_cols(vg, c, dk)));
        }
        attended.push_back(heads == 1 ? per_head[0] : ad::concat_cols(per_head));
    }
    const ad::Var all = attended.size() == 1 ? attended[0] : ad::concat_rows(attended);
    const ad::Var out = ad::add_row(ad::matmul_nt(all, v.wo), v.bo);

    std::vector<ad::Var> pooled;
    pooled.reserve(sizes.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        pooled.push_back(ad::sum_rows(
            ad::slice_rows(out, static_cast<Eigen::Index>(offsets[g]), static_cast<Eigen::Index>(sizes[g]))));
    }
    return pooled.size() == 1 ? pooled[0] : ad::concat_rows(pooled);
}

ad::Var classify(const ModelVars& v, ad::Var zg, double dropout, std::mt19937_64* rng) {
    ad::Var h = ad::relu(ad::add_row(ad::matmul_nt(zg, v.w1), v.b1));
    if (rng != nullptr && dropout > 0.0) {
        const double keep = 1.0 - dropout;
        std::bernoulli_distribution bern(keep);
        Matrix mask(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = bern(*rng) ? 1.0 / keep : 0.0;
        h = ad::mul_const(h, mask);
    }
    return ad::add_row(ad::matmul_nt(h, v.w2), v.b2);
}

namespace {

BoundOperator bind_operator(const Model& m, const BatchedGraphs& batch, const Matrix& h) {
    return BoundOperator(m.op, batch.propagation, h, batch.topology);
}

}  // namespace

BatchForward predict(const Model& m, const BatchedGraphs& batch) {
    const Matrix h = encode(batch.features, m.encoder);
    const BoundOperator f = bind_operator(m, batch, h);
    BatchForward out;
    out.solve = solve([&](const Matrix& z) { return f(z); }, Matrix::Zero(h.rows(), h.cols()),
                      m.config.forward_solver);
    if (out.solve.diverged) throw NumericError("forward solve produced a non-finite iterate");
    ad::Tape tape(false);
    const ModelVars v = bind(tape, m);
    const ad::Var z = tape.constant(f(out.solve.fixed_point));
    const ad::Var zg = attention_readout(v, z, batch.offsets, batch.sizes, m.config.heads);
    out.logits = classify(v, zg, m.config.dropout, nullptr).value();
    return out;
}

double evaluation_loss(const Model& m, const BatchedGraphs& batch) {
    const BatchForward fw = predict(m, batch);
    ad::Tape tape(false);
    return ad::cross_entropy(tape.constant(fw.logits), batch.labels).value()(0, 0);
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < logits.cols(); ++j) {
            if (logits(i, j) > logits(i, best)) best = j;
        }
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

GradientResult compute_gradients(const Model& m, const BatchedGraphs& batch, std::uint64_t dropout_seed) {
    GradientResult r;
    ad::Tape tape;
    const ModelVars v = bind(tape, m);
    const ad::Var x = tape.constant(batch.features);
    const ad::Var h = encode(x, v.encoder);

    ad::Var q_id;
    Matrix q_id_value;
    if (m.op.kind == OperatorKind::ID) {
        q_id = id_conditioning(*m.op.quantum, *v.op.quantum, h, tape.constant(batch.topology));
        q_id_value = q_id.value();
    }
    const BoundOperator f = m.op.kind == OperatorKind::ID
                                ? BoundOperator::with_conditioning(m.op, batch.propagation, h.value(), q_id_value)
                                : bind_operator(m, batch, h.value());
    r.forward = solve([&](const Matrix& z) { return f(z); }, Matrix::Zero(h.rows(), h.cols()),
                      m.config.forward_solver);
    if (r.forward.diverged) return r;

    // The solver's iterates stay off the tape; only one application at Z* is recorded.
    const ad::Var zs = tape.leaf(r.forward.fixed_point);
    const ad::Var fz = operator_apply(m.op, v.op, batch.propagation, h, q_id, zs);
    const ad::Var zr = tape.leaf(fz.value());
    const ad::Var zg = attention_readout(v, zr, batch.offsets, batch.sizes, m.config.heads);
    std::mt19937_64 rng(dropout_seed);
    const ad::Var logits = classify(v, zg, m.config.dropout, dropout_seed != 0 ? &rng : nullptr);
    const ad::Var loss = ad::cross_entropy(logits, batch.labels);
    r.loss = loss.value()(0, 0);
    const auto pred = argmax_rows(logits.value());
    for (std::size_t i = 0; i < pred.size(); ++i) r.correct += pred[i] == batch.labels[i] ? 1 : 0;

    const ad::Gradients head = tape.backward(loss);
    const Matrix g = head.of(zr);
    r.backward = implicit_backward([&](const Matrix& u) { return tape.vjp(fz, u, zs); }, g,
                                   m.config.backward_solver);
    const std::pair<ad::Var, Matrix> seed{fz, r.backward.fixed_point};
    const ad::Gradients body = tape.backward(std::span<const std::pair<ad::Var, Matrix>>(&seed, 1));

    for (const ad::Var& p : v.all()) r.grads.push_back(head.of(p) + body.of(p));
    return r;
}

}  // namespace qignn
