#pragma once

#include "qignn/contraction.hpp"
#include "qignn/model.hpp"
#include "qignn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qignn {

struct ExperimentConfig {
    std::string dataset = "MUTAG";
    std::filesystem::path data_dir = "data";
    ModelConfig model;
    TrainConfig train;
    std::vector<std::uint64_t> seeds{42, 123, 456};
    int folds = 10;
    std::vector<int> only_folds;  // empty: all folds
    std::filesystem::path out = "results";
    int workers = 1;
    double failure_threshold = 0.05;  // tolerated fraction of skipped batches per run
    int lipschitz_pairs = 200;

    /// `key = value` lines covering every field.
    std::string to_text() const;
    /// Applies one key. Throws std::invalid_argument on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Parses to_text() output (blank lines and `#` comments allowed).
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Hash of the fields that determine the trained model (not paths or worker count).
    std::uint64_t hash() const;
    void validate() const;
};

struct SummaryRecord {
    std::string variant;
    std::string dataset;
    double acc_mean = 0.0;
    double acc_std = 0.0;  // sample standard deviation
    double iter_mean = 0.0;
    double time_minutes_mean = 0.0;
    std::size_t runs = 0;

    static std::string tsv_header();
    std::string tsv_row() const;
    std::string to_record() const;
};

SummaryRecord emit_summary(const std::vector<RunMetrics>& runs, const std::string& variant,
                           const std::string& dataset);

struct IterationCurves {
    std::vector<double> mean;
    std::vector<double> std;  // sample standard deviation, 0 for a single run

    std::string to_tsv(const std::string& variant) const;
};

IterationCurves emit_iteration_curves(const std::vector<RunMetrics>& runs);

/// Per-epoch metrics table for one run.
std::string metrics_tsv(const RunMetrics& m);
/// Scalar results of one run as key=value lines (no timing).
std::string run_record(const RunMetrics& m);

struct ExperimentOutcome {
    std::vector<RunMetrics> runs;
    std::vector<LipschitzReport> certificates;
    SummaryRecord summary;
    int failed_runs = 0;
    int violated_certificates = 0;

    int exit_code() const { return failed_runs == 0 && violated_certificates == 0 ? 0 : 1; }
};

/// Loads the dataset, runs every (seed, fold) job and writes under
/// `<out>/<dataset>/<pathway>/`.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace qignn
