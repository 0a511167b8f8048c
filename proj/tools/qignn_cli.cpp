#include "qignn/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Train and evaluate equilibrium graph classifiers with quantum injection pathways"};

    std::string config_path;
    bool print_config = false;
    app.add_option("--config", config_path, "key = value config file; flags override it")->check(CLI::ExistingFile);
    app.add_flag("--print-config", print_config, "print the effective config and exit");

    // flag name -> config key
    const std::vector<std::pair<std::string, std::string>> flags{
        {"dataset", "dataset"},
        {"data-dir", "data_dir"},
        {"pathway", "pathway"},
        {"seeds", "seeds"},
        {"folds", "folds"},
        {"only-folds", "only_folds"},
        {"epochs", "epochs"},
        {"batch-size", "batch_size"},
        {"hidden-dim", "hidden_dim"},
        {"n-qubits", "n_qubits"},
        {"repetitions", "repetitions"},
        {"alpha", "alpha"},
        {"kappa", "kappa"},
        {"solver", "solver"},
        {"fwd-max-iter", "fwd_max_iter"},
        {"fwd-tol", "fwd_tol"},
        {"bwd-max-iter", "bwd_max_iter"},
        {"bwd-tol", "bwd_tol"},
        {"lr", "lr"},
        {"weight-decay", "weight_decay"},
        {"dropout", "dropout"},
        {"grad-clip", "grad_clip"},
        {"out", "out"},
        {"workers", "workers"},
        {"lipschitz-pairs", "lipschitz_pairs"},
    };
    std::map<std::string, std::string> values;
    for (const auto& [flag, key] : flags) {
        auto* opt = app.add_option("--" + flag, values[key], "sets " + key);
        if (flag == "pathway") opt->check(CLI::IsMember({"classical", "id", "sd", "bd"}));
        if (flag == "solver") opt->check(CLI::IsMember({"picard", "anderson"}));
    }

    CLI11_PARSE(app, argc, argv);

    qignn::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = qignn::ExperimentConfig::load(config_path);
        for (const auto& [flag, key] : flags) {
            if (app.count("--" + flag) > 0) cfg.set(key, values[key]);
        }
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (print_config) {
        std::cout << cfg.to_text();
        return 0;
    }

    try {
        const auto outcome = qignn::run_experiment(cfg);
        std::cout << qignn::SummaryRecord::tsv_header() << "\n" << outcome.summary.tsv_row() << "\n";
        if (outcome.failed_runs > 0) std::cerr << outcome.failed_runs << " run(s) exceeded the solver failure threshold\n";
        if (outcome.violated_certificates > 0) {
            std::cerr << outcome.violated_certificates << " contraction certificate(s) violated\n";
        }
        return outcome.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
