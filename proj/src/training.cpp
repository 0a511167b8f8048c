#include "qignn/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>

namespace qignn {

void TrainConfig::validate() const {
    if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
    if (!(lr_min >= 0.0 && lr_min <= lr)) throw std::invalid_argument("lr_min must lie in [0, lr]");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

double cosine_lr(int epoch, int total, double lr_max, double lr_min) {
    if (total < 1 || epoch < 0 || epoch > total) throw std::invalid_argument("cosine_lr: need 0 <= epoch <= total");
    if (epoch == total) return lr_min;
    const double c = std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(total));
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + c);
}

double clip_grad_norm(std::vector<Matrix>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& g : grads) g *= s;
    }
    return norm;
}

AdamW::AdamW(const TrainConfig& cfg, const std::vector<ParamRef>& params)
    : beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps), weight_decay_(cfg.weight_decay) {
    for (const auto& p : params) {
        m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
        v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
}

void AdamW::step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("AdamW: parameter count");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& w = *params[i].value;
        const Matrix& g = grads[i];
        if (g.rows() != w.rows() || g.cols() != w.cols()) throw ShapeError("AdamW: gradient shape for " + params[i].name);
        if (params[i].decay && weight_decay_ > 0.0) w *= 1.0 - lr * weight_decay_;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        w.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

namespace {

bool all_finite(const std::vector<Matrix>& gs) {
    for (const auto& g : gs) {
        if (!g.allFinite()) return false;
    }
    return true;
}

}  // namespace

EpochStats train_epoch(Model& model, AdamW& opt, const std::vector<BatchedGraphs>& batches, const TrainConfig& cfg,
                       double lr, std::uint64_t dropout_seed) {
    EpochStats s;
    double loss_sum = 0.0, iter_sum = 0.0;
    std::size_t seen = 0, correct = 0, solves = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const BatchedGraphs& batch = batches[b];
        if (model.op.quantum) model.op.quantum->update_normalization();
        GradientResult gr = compute_gradients(model, batch, mix_seed({dropout_seed, b}));
        iter_sum += gr.forward.iterations;
        ++solves;
        if (!gr.forward.converged) ++s.unconverged_forward;
        if (gr.forward.diverged || gr.backward.diverged || !all_finite(gr.grads)) {
            ++s.skipped_batches;
            continue;
        }
        if (!gr.backward.converged) ++s.unconverged_backward;
        loss_sum += gr.loss * static_cast<double>(batch.num_graphs());
        seen += batch.num_graphs();
        correct += static_cast<std::size_t>(gr.correct);
        clip_grad_norm(gr.grads, cfg.grad_clip);
        opt.step(model.parameters(), gr.grads, lr);
        clip_spectral(model.op.backbone);
    }
    if (seen > 0) {
        s.loss = loss_sum / static_cast<double>(seen);
        s.accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    }
    if (solves > 0) s.mean_iterations = iter_sum / static_cast<double>(solves);
    return s;
}

EvalStats evaluate(const Model& model, const std::vector<BatchedGraphs>& batches) {
    EvalStats s;
    std::size_t n = 0, correct = 0;
    double loss_sum = 0.0, iter_sum = 0.0;
    for (const auto& batch : batches) {
        const BatchForward fw = predict(model, batch);
        const auto pred = argmax_rows(fw.logits);
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i] ? 1 : 0;
        ad::Tape tape(false);
        loss_sum += ad::cross_entropy(tape.constant(fw.logits), batch.labels).value()(0, 0) *
                    static_cast<double>(batch.num_graphs());
        iter_sum += fw.solve.iterations;
        n += batch.num_graphs();
    }
    if (n > 0) {
        s.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        s.loss = loss_sum / static_cast<double>(n);
    }
    if (!batches.empty()) s.mean_iterations = iter_sum / static_cast<double>(batches.size());
    return s;
}

RunResult run_fold(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg, std::uint64_t seed,
                   int fold, int folds) {
    tcfg.validate();
    if (data.max_cycle_length != mcfg.max_cycle_length) {
        throw std::invalid_argument("dataset descriptors were built with a different max_cycle_length");
    }
    if (fold < 0 || fold >= folds) throw std::invalid_argument("fold index out of range");
    const auto start = std::chrono::steady_clock::now();
    const auto split = stratified_folds(data.labels(), folds, seed);
    const Fold& f = split[static_cast<std::size_t>(fold)];

    const auto ufold = static_cast<std::uint64_t>(fold);
    RunResult r{RunMetrics{}, Model::create(mcfg, data.num_features, topology_width(mcfg.max_cycle_length),
                                            data.num_classes, mix_seed({seed, ufold}))};
    RunMetrics& m = r.metrics;
    m.seed = seed;
    m.fold = fold;
    AdamW opt(tcfg, r.model.parameters());
    for (int e = 0; e < tcfg.epochs; ++e) {
        const auto ue = static_cast<std::uint64_t>(e);
        const auto batches = make_batches(data, f.train, tcfg.batch_size, mix_seed({seed, ufold, ue}), true);
        const double lr = cosine_lr(e, tcfg.epochs, tcfg.lr, tcfg.lr_min);
        const EpochStats es = train_epoch(r.model, opt, batches, tcfg, lr, mix_seed({seed, ufold, ue, 0xd0}));
        m.train_loss.push_back(es.loss);
        m.train_accuracy.push_back(es.accuracy);
        m.iterations.push_back(es.mean_iterations);
        m.skipped_batches += es.skipped_batches;
        m.unconverged_forward += es.unconverged_forward;
        m.unconverged_backward += es.unconverged_backward;
        m.total_batches += static_cast<int>(batches.size());
    }
    m.final_iterations = m.iterations.back();
    const auto test = make_batches(data, f.test, tcfg.batch_size, 0, false);
    const EvalStats ev = evaluate(r.model, test);
    m.test_accuracy = ev.accuracy;
    m.test_loss = ev.loss;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<RunResult> cross_validate(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                                      const std::vector<std::uint64_t>& seeds, int folds,
                                      const std::vector<int>& fold_subset, int workers,
                                      const std::function<void(const RunResult&)>& on_done) {
    if (seeds.empty()) throw std::invalid_argument("cross_validate: no seeds");
    std::vector<int> fold_ids = fold_subset;
    if (fold_ids.empty()) {
        for (int k = 0; k < folds; ++k) fold_ids.push_back(k);
    }
    std::vector<Job> jobs;
    for (auto s : seeds) {
        for (int k : fold_ids) jobs.push_back({s, k});
    }
    std::vector<std::optional<RunResult>> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex done_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = run_fold(data, mcfg, tcfg, jobs[i].seed, jobs[i].fold, folds);
                if (on_done) {
                    std::lock_guard lock(done_mutex);
                    on_done(*results[i]);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<RunResult> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

}  // namespace qignn
