#include "qignn/experiment.hpp"

#include "qignn/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qignn {

std::string format_double(double v) {
    // Shortest text that parses back to the same double.
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
    }
    return x;
}

template <class T>
std::vector<T> to_list(const std::string& key, const std::string& v) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const long long x = to_int(key, item);
        if (x < 0) throw std::invalid_argument("config: '" + key + "' entries must be non-negative");
        out.push_back(static_cast<T>(x));
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string model_text(const ExperimentConfig& c) {
    const auto& m = c.model;
    const auto& t = c.train;
    std::ostringstream os;
    os << "pathway = " << operator_name(m.pathway) << "\n";
    os << "hidden_dim = " << m.hidden_dim << "\n";
    os << "n_qubits = " << m.n_qubits << "\n";
    os << "repetitions = " << m.repetitions << "\n";
    os << "alpha = " << format_double(m.alpha) << "\n";
    os << "kappa = " << format_double(m.kappa) << "\n";
    os << "encoder = " << m.encoder << "\n";
    os << "heads = " << m.heads << "\n";
    os << "mlp_hidden = " << m.mlp_hidden << "\n";
    os << "dropout = " << format_double(m.dropout) << "\n";
    os << "max_cycle_length = " << m.max_cycle_length << "\n";
    os << "solver = " << solver_name(m.forward_solver.method) << "\n";
    os << "fwd_max_iter = " << m.forward_solver.max_iterations << "\n";
    os << "fwd_tol = " << format_double(m.forward_solver.tolerance) << "\n";
    os << "bwd_solver = " << solver_name(m.backward_solver.method) << "\n";
    os << "bwd_max_iter = " << m.backward_solver.max_iterations << "\n";
    os << "bwd_tol = " << format_double(m.backward_solver.tolerance) << "\n";
    os << "anderson_memory = " << m.forward_solver.memory << "\n";
    os << "anderson_lambda = " << format_double(m.forward_solver.regularization) << "\n";
    os << "anderson_damping = " << format_double(m.forward_solver.damping) << "\n";
    os << "lr = " << format_double(t.lr) << "\n";
    os << "lr_min = " << format_double(t.lr_min) << "\n";
    os << "weight_decay = " << format_double(t.weight_decay) << "\n";
    os << "epochs = " << t.epochs << "\n";
    os << "batch_size = " << t.batch_size << "\n";
    os << "grad_clip = " << format_double(t.grad_clip) << "\n";
    os << "adam_beta1 = " << format_double(t.beta1) << "\n";
    os << "adam_beta2 = " << format_double(t.beta2) << "\n";
    os << "adam_eps = " << format_double(t.eps) << "\n";
    os << "dataset = " << c.dataset << "\n";
    os << "seeds = " << join(c.seeds) << "\n";
    os << "folds = " << c.folds << "\n";
    os << "only_folds = " << join(c.only_folds) << "\n";
    return os.str();
}

}  // namespace

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << model_text(*this);
    os << "data_dir = " << data_dir.string() << "\n";
    os << "out = " << out.string() << "\n";
    os << "workers = " << workers << "\n";
    os << "failure_threshold = " << format_double(failure_threshold) << "\n";
    os << "lipschitz_pairs = " << lipschitz_pairs << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(model_text(*this)); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    auto& m = model;
    auto& t = train;
    auto as_int = [&] { return static_cast<int>(to_int(key, value)); };
    auto as_size = [&] {
        const long long x = to_int(key, value);
        if (x < 0) throw std::invalid_argument("config: '" + key + "' must be non-negative");
        return static_cast<std::size_t>(x);
    };
    auto as_double = [&] { return to_double(key, value); };
    if (key == "pathway") m.pathway = parse_operator_kind(value);
    else if (key == "hidden_dim") m.hidden_dim = as_size();
    else if (key == "n_qubits") m.n_qubits = as_int();
    else if (key == "repetitions") m.repetitions = as_int();
    else if (key == "alpha") m.alpha = as_double();
    else if (key == "kappa") m.kappa = as_double();
    else if (key == "encoder") m.encoder = value;
    else if (key == "heads") m.heads = as_int();
    else if (key == "mlp_hidden") m.mlp_hidden = as_size();
    else if (key == "dropout") m.dropout = as_double();
    else if (key == "max_cycle_length") m.max_cycle_length = as_int();
    else if (key == "solver") m.forward_solver.method = parse_solver_method(value);
    else if (key == "fwd_max_iter") m.forward_solver.max_iterations = as_int();
    else if (key == "fwd_tol") m.forward_solver.tolerance = as_double();
    else if (key == "bwd_solver") m.backward_solver.method = parse_solver_method(value);
    else if (key == "bwd_max_iter") m.backward_solver.max_iterations = as_int();
    else if (key == "bwd_tol") m.backward_solver.tolerance = as_double();
    else if (key == "anderson_memory") m.forward_solver.memory = m.backward_solver.memory = as_int();
    else if (key == "anderson_lambda") m.forward_solver.regularization = m.backward_solver.regularization = as_double();
    else if (key == "anderson_damping") m.forward_solver.damping = m.backward_solver.damping = as_double();
    else if (key == "lr") t.lr = as_double();
    else if (key == "lr_min") t.lr_min = as_double();
    else if (key == "weight_decay") t.weight_decay = as_double();
    else if (key == "epochs") t.epochs = as_int();
    else if (key == "batch_size") t.batch_size = as_size();
    else if (key == "grad_clip") t.grad_clip = as_double();
    else if (key == "adam_beta1") t.beta1 = as_double();
    else if (key == "adam_beta2") t.beta2 = as_double();
    else if (key == "adam_eps") t.eps = as_double();
    else if (key == "dataset") dataset = value;
    else if (key == "seeds") seeds = to_list<std::uint64_t>(key, value);
    else if (key == "folds") folds = as_int();
    else if (key == "only_folds") only_folds = to_list<int>(key, value);
    else if (key == "data_dir") data_dir = value;
    else if (key == "out") out = value;
    else if (key == "workers") workers = as_int();
    else if (key == "failure_threshold") failure_threshold = as_double();
    else if (key == "lipschitz_pairs") lipschitz_pairs = as_int();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.resize(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::validate() const {
    model.validate();
    train.validate();
    if (dataset.empty()) throw std::invalid_argument("dataset name is empty");
    if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
    if (folds < 2) throw std::invalid_argument("folds must be >= 2");
    for (int f : only_folds) {
        if (f < 0 || f >= folds) throw std::invalid_argument("only_folds entry out of range");
    }
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (!(failure_threshold >= 0.0 && failure_threshold <= 1.0)) {
        throw std::invalid_argument("failure_threshold must lie in [0, 1]");
    }
    if (lipschitz_pairs < 1) throw std::invalid_argument("lipschitz_pairs must be >= 1");
}

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string SummaryRecord::tsv_header() {
    return "variant\tdataset\tacc_mean\tacc_std\titer_mean\ttime_minutes_mean\truns";
}

std::string SummaryRecord::tsv_row() const {
    return variant + "\t" + dataset + "\t" + format_double(acc_mean) + "\t" + format_double(acc_std) + "\t" +
           format_double(iter_mean) + "\t" + format_double(time_minutes_mean) + "\t" + std::to_string(runs);
}

std::string SummaryRecord::to_record() const {
    std::ostringstream os;
    os << "variant=" << variant << "\n"
       << "dataset=" << dataset << "\n"
       << "acc_mean=" << format_double(acc_mean) << "\n"
       << "acc_std=" << format_double(acc_std) << "\n"
       << "iter_mean=" << format_double(iter_mean) << "\n"
       << "time_minutes_mean=" << format_double(time_minutes_mean) << "\n"
       << "runs=" << runs << "\n";
    return os.str();
}

SummaryRecord emit_summary(const std::vector<RunMetrics>& runs, const std::string& variant,
                           const std::string& dataset) {
    if (runs.empty()) throw std::invalid_argument("emit_summary: no runs");
    std::vector<double> acc, iters, minutes;
    for (const auto& r : runs) {
        acc.push_back(r.test_accuracy);
        iters.push_back(r.final_iterations);
        minutes.push_back(r.wall_seconds / 60.0);
    }
    SummaryRecord s;
    s.variant = variant;
    s.dataset = dataset;
    s.acc_mean = mean_of(acc);
    s.acc_std = sample_std(acc, s.acc_mean);
    s.iter_mean = mean_of(iters);
    s.time_minutes_mean = mean_of(minutes);
    s.runs = runs.size();
    return s;
}

IterationCurves emit_iteration_curves(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) throw std::invalid_argument("emit_iteration_curves: no runs");
    const std::size_t epochs = runs.front().iterations.size();
    for (const auto& r : runs) {
        if (r.iterations.size() != epochs) throw std::invalid_argument("emit_iteration_curves: epoch counts differ");
    }
    IterationCurves c;
    for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<double> col;
        for (const auto& r : runs) col.push_back(r.iterations[e]);
        const double m = mean_of(col);
        c.mean.push_back(m);
        c.std.push_back(sample_std(col, m));
    }
    return c;
}

std::string IterationCurves::to_tsv(const std::string& variant) const {
    std::ostringstream os;
    os << "variant\tepoch\titer_mean\titer_std\n";
    for (std::size_t e = 0; e < mean.size(); ++e) {
        os << variant << "\t" << e + 1 << "\t" << format_double(mean[e]) << "\t" << format_double(std[e]) << "\n";
    }
    return os.str();
}

std::string metrics_tsv(const RunMetrics& m) {
    std::ostringstream os;
    os << "epoch\ttrain_loss\ttrain_accuracy\tforward_iterations\n";
    for (std::size_t e = 0; e < m.iterations.size(); ++e) {
        os << e + 1 << "\t" << format_double(m.train_loss[e]) << "\t" << format_double(m.train_accuracy[e]) << "\t"
           << format_double(m.iterations[e]) << "\n";
    }
    return os.str();
}

std::string run_record(const RunMetrics& m) {
    std::ostringstream os;
    os << "seed=" << m.seed << "\n"
       << "fold=" << m.fold << "\n"
       << "test_accuracy=" << format_double(m.test_accuracy) << "\n"
       << "test_loss=" << format_double(m.test_loss) << "\n"
       << "final_iterations=" << format_double(m.final_iterations) << "\n"
       << "skipped_batches=" << m.skipped_batches << "\n"
       << "unconverged_forward=" << m.unconverged_forward << "\n"
       << "unconverged_backward=" << m.unconverged_backward << "\n"
       << "total_batches=" << m.total_batches << "\n";
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + p.string());
}

LipschitzReport certify_run(const Dataset& data, const RunResult& r, const ExperimentConfig& cfg) {
    const auto split = stratified_folds(data.labels(), cfg.folds, r.metrics.seed);
    const auto& test = split[static_cast<std::size_t>(r.metrics.fold)].test;
    const BatchedGraphs g = make_batch(data, {test.front()});
    LipschitzSampling sampling;
    sampling.pairs = cfg.lipschitz_pairs;
    sampling.seed = mix_seed({r.metrics.seed, static_cast<std::uint64_t>(r.metrics.fold), 0x1c});
    return certify_operator(r.model.op, g.propagation, encode(g.features, r.model.encoder), g.topology, sampling);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Dataset data = parse_tu_dataset(cfg.data_dir / cfg.dataset, cfg.dataset, cfg.model.max_cycle_length);
    const std::string variant = operator_name(cfg.model.pathway);
    const auto base = cfg.out / cfg.dataset / variant;
    std::filesystem::create_directories(base);
    write_file(base / "config.txt", cfg.to_text());
    const std::uint64_t h = cfg.hash();

    ExperimentOutcome out;
    auto results = cross_validate(data, cfg.model, cfg.train, cfg.seeds, cfg.folds, cfg.only_folds, cfg.workers,
                                  [&](const RunResult& r) {
                                      std::cerr << variant << " seed " << r.metrics.seed << " fold " << r.metrics.fold
                                                << ": test accuracy " << r.metrics.test_accuracy << "\n";
                                  });
    for (const auto& r : results) {
        const auto dir = base / (std::to_string(r.metrics.seed) + "_" + std::to_string(r.metrics.fold));
        std::filesystem::create_directories(dir);
        write_file(dir / "metrics.tsv", metrics_tsv(r.metrics));
        write_file(dir / "run.txt", run_record(r.metrics));
        write_file(dir / "timing.txt", "wall_seconds=" + format_double(r.metrics.wall_seconds) + "\n");
        save_checkpoint(dir / "checkpoint.txt", r.model, h);
        const LipschitzReport rep = certify_run(data, r, cfg);
        write_file(dir / "lipschitz.txt", rep.to_record());
        if (!rep.certified) ++out.violated_certificates;
        const double skipped = r.metrics.total_batches > 0
                                   ? static_cast<double>(r.metrics.skipped_batches) / r.metrics.total_batches
                                   : 0.0;
        if (skipped > cfg.failure_threshold) ++out.failed_runs;
        out.certificates.push_back(rep);
        out.runs.push_back(r.metrics);
    }
    out.summary = emit_summary(out.runs, variant, cfg.dataset);
    write_file(base / "summary.tsv", SummaryRecord::tsv_header() + "\n" + out.summary.tsv_row() + "\n");
    write_file(base / "summary.txt", out.summary.to_record() + "failed_runs=" + std::to_string(out.failed_runs) +
                                         "\nviolated_certificates=" + std::to_string(out.violated_certificates) +
                                         "\n");
    write_file(base / "curves.tsv", emit_iteration_curves(out.runs).to_tsv(variant));
    return out;
}

}  // namespace qignn
