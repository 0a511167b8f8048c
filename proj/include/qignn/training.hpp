#pragma once

#include "qignn/graph_data.hpp"
#include "qignn/model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace qignn {

struct TrainConfig {
    double lr = 1e-4;
    double lr_min = 0.0;
    double weight_decay = 1e-4;
    int epochs = 200;
    std::size_t batch_size = 32;
    double grad_clip = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// lr_min + (lr_max - lr_min) (1 + cos(pi epoch / total)) / 2.
double cosine_lr(int epoch, int total, double lr_max, double lr_min);

/// Scales all gradients so their joint Frobenius norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(std::vector<Matrix>& grads, double max_norm);

/// Decoupled weight decay Adam; decay only on parameters flagged for it.
class AdamW {
public:
    AdamW(const TrainConfig& cfg, const std::vector<ParamRef>& params);

    void step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads, double lr);
    long steps() const { return t_; }

private:
    double beta1_, beta2_, eps_, weight_decay_;
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
    double mean_iterations = 0.0;  // over forward solves of the epoch
    int skipped_batches = 0;
    int unconverged_forward = 0;
    int unconverged_backward = 0;
};

/// One pass over `batches`: solve, readout, loss, implicit backward, global
/// norm clip, AdamW step, then spectral clip of W.
EpochStats train_epoch(Model& model, AdamW& opt, const std::vector<BatchedGraphs>& batches, const TrainConfig& cfg,
                       double lr, std::uint64_t dropout_seed);

struct EvalStats {
    double accuracy = 0.0;
    double loss = 0.0;
    double mean_iterations = 0.0;
};

EvalStats evaluate(const Model& model, const std::vector<BatchedGraphs>& batches);

struct RunMetrics {
    std::uint64_t seed = 0;
    int fold = 0;
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> iterations;  // mean forward iterations per epoch
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    double final_iterations = 0.0;
    double wall_seconds = 0.0;
    int skipped_batches = 0;
    int unconverged_forward = 0;
    int unconverged_backward = 0;
    int total_batches = 0;
};

struct RunResult {
    RunMetrics metrics;
    Model model;
};

/// Trains on fold `fold` of a class-stratified split with `folds` parts.
RunResult run_fold(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg, std::uint64_t seed,
                   int fold, int folds);

struct Job {
    std::uint64_t seed;
    int fold;
};

/// Runs every (seed, fold) pair over at most `workers` threads. Results come
/// back in (seed, fold) order; `on_done` is called from the worker threads.
std::vector<RunResult> cross_validate(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                                      const std::vector<std::uint64_t>& seeds, int folds,
                                      const std::vector<int>& fold_subset, int workers,
                                      const std::function<void(const RunResult&)>& on_done = {});

}  // namespace qignn
