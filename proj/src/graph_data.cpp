#include "qignn/graph_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace qignn {

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(g.label);
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

long long parse_int(const std::string& tok, const std::filesystem::path& file, std::size_t line_no) {
    long long v = 0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (!tok.empty() && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (tok.empty() || ec != std::errc() || ptr != e) {
        throw DatasetError(file.string() + ":" + std::to_string(line_no) + ": expected an integer, got '" + tok + "'");
    }
    return v;
}

double parse_real(const std::string& tok, const std::filesystem::path& file, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw DatasetError(file.string() + ":" + std::to_string(line_no) + ": expected a real number, got '" + tok +
                           "'");
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DatasetError("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<long long> read_int_column(const std::filesystem::path& file) {
    std::vector<long long> out;
    std::size_t n = 0;
    for (const auto& line : read_lines(file)) out.push_back(parse_int(line, file, ++n));
    return out;
}

using Bits = std::vector<std::uint64_t>;

int highest_bit(const Bits& b) {
    for (std::size_t w = b.size(); w-- > 0;) {
        if (b[w]) return static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(__builtin_clzll(b[w])));
    }
    return -1;
}

bool test_bit(const Bits& b, int i) { return (b[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1U; }

void xor_into(Bits& a, const Bits& b) {
    for (std::size_t w = 0; w < a.size(); ++w) a[w] ^= b[w];
}

/// GF(2) row-echelon basis keyed by leading bit.
class Gf2Basis {
public:
    bool reduces_to_zero(Bits v) const {
        reduce(v);
        return highest_bit(v) < 0;
    }

    void insert(Bits v) {
        reduce(v);
        const int hb = highest_bit(v);
        if (hb >= 0) rows_.emplace(hb, std::move(v));
    }

private:
    void reduce(Bits& v) const {
        // Descending leading bits: each xor only clears bits at or below the pivot.
        for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
            if (test_bit(v, it->first)) xor_into(v, it->second);
        }
    }

    std::map<int, Bits> rows_;
};

void check_adjacency(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("adjacency must be square, got " + shape_str(a));
}

}  // namespace

Matrix normalize_adjacency(const Matrix& adjacency) {
    check_adjacency(adjacency);
    const auto n = adjacency.rows();
    Matrix a_hat = adjacency + Matrix::Identity(n, n);
    Vector inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = 1.0 / std::sqrt(a_hat.row(i).sum());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) a_hat(i, j) *= inv_sqrt(i) * inv_sqrt(j);
    }
    return a_hat;
}

std::vector<std::vector<std::size_t>> relevant_cycles(const Matrix& adjacency, int max_cycle_length) {
    check_adjacency(adjacency);
    if (max_cycle_length < 3) throw std::invalid_argument("max_cycle_length must be at least 3");
    const auto n = static_cast<std::size_t>(adjacency.rows());

    std::vector<std::vector<std::size_t>> nbrs(n);
    std::map<std::pair<std::size_t, std::size_t>, int> edge_index;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
                nbrs[i].push_back(j);
                if (i < j) edge_index.emplace(std::make_pair(i, j), static_cast<int>(edge_index.size()));
            }
        }
    }
    const std::size_t words = (edge_index.size() + 63) / 64;

    // Every simple cycle up to the length cap, once: rooted at its smallest node,
    // direction fixed by comparing the two neighbours of the root.
    const auto cap = static_cast<std::size_t>(max_cycle_length);
    std::vector<std::vector<std::vector<std::size_t>>> by_length(cap + 1);
    std::vector<std::size_t> path;
    std::vector<char> on_path(n, 0);
    auto dfs = [&](auto&& self, std::size_t root, std::size_t v) -> void {
        for (auto w : nbrs[v]) {
            if (w == root && path.size() >= 3 && path[1] < path.back()) {
                by_length[path.size()].push_back(path);
            } else if (w > root && !on_path[w] && path.size() < cap) {
                path.push_back(w);
                on_path[w] = 1;
                self(self, root, w);
                on_path[w] = 0;
                path.pop_back();
            }
        }
    };
    for (std::size_t root = 0; root < n; ++root) {
        path.assign(1, root);
        on_path[root] = 1;
        dfs(dfs, root, root);
        on_path[root] = 0;
    }

    auto edge_bits = [&](const std::vector<std::size_t>& cyc) {
        Bits b(words, 0);
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            auto u = cyc[k], v = cyc[(k + 1) % cyc.size()];
            if (u > v) std::swap(u, v);
            const int e = edge_index.at({u, v});
            b[static_cast<std::size_t>(e) / 64] ^= std::uint64_t{1} << (e % 64);
        }
        return b;
    };

    std::vector<std::vector<std::size_t>> relevant;
    Gf2Basis shorter;
    for (std::size_t len = 3; len <= cap; ++len) {
        std::vector<Bits> vecs;
        vecs.reserve(by_length[len].size());
        for (const auto& cyc : by_length[len]) {
            Bits b = edge_bits(cyc);
            if (!shorter.reduces_to_zero(b)) relevant.push_back(cyc);
            vecs.push_back(std::move(b));
        }
        for (auto& b : vecs) shorter.insert(std::move(b));
    }
    return relevant;
}

Matrix topology_descriptors(const Matrix& adjacency, int max_cycle_length) {
    check_adjacency(adjacency);
    if (max_cycle_length < 3) throw std::invalid_argument("max_cycle_length must be at least 3");
    const auto n = adjacency.rows();
    const auto cycle_cols = static_cast<Eigen::Index>(max_cycle_length - 2);
    Matrix tau = Matrix::Zero(n, static_cast<Eigen::Index>(topology_width(max_cycle_length)));

    for (const auto& cyc : relevant_cycles(adjacency, max_cycle_length)) {
        const auto col = static_cast<Eigen::Index>(cyc.size()) - 3;
        for (auto v : cyc) tau(static_cast<Eigen::Index>(v), col) += 1.0;
    }

    Vector deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        deg(i) = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && adjacency(i, j) != 0.0) deg(i) += 1.0;
        }
    }
    const double max_deg = n > 0 ? deg.maxCoeff() : 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
        double triangles = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || adjacency(i, j) == 0.0) continue;
            for (Eigen::Index k = j + 1; k < n; ++k) {
                if (k != i && adjacency(i, k) != 0.0 && adjacency(j, k) != 0.0) triangles += 1.0;
            }
        }
        tau(i, cycle_cols) = max_deg > 0.0 ? deg(i) / max_deg : 0.0;
        tau(i, cycle_cols + 1) = deg(i) >= 2.0 ? 2.0 * triangles / (deg(i) * (deg(i) - 1.0)) : 0.0;
        tau(i, cycle_cols + 2) = triangles > 0.0 ? 1.0 : 0.0;
    }
    return tau;
}

void finalize_graph(GraphInstance& g, int max_cycle_length) {
    g.propagation = normalize_adjacency(g.adjacency);
    g.topology = topology_descriptors(g.adjacency, max_cycle_length);
}

Dataset parse_tu_dataset(const std::filesystem::path& root, const std::string& name, int max_cycle_length) {
    namespace fs = std::filesystem;
    auto file = [&](const std::string& suffix) { return root / (name + "_" + suffix + ".txt"); };
    for (const char* required : {"A", "graph_indicator", "graph_labels"}) {
        if (!fs::exists(file(required))) throw DatasetError("missing required file " + file(required).string());
    }

    const auto indicator = read_int_column(file("graph_indicator"));
    const auto graph_labels = read_int_column(file("graph_labels"));
    const std::size_t num_nodes = indicator.size();

    std::map<long long, std::size_t> graph_slot;
    for (auto gid : indicator) graph_slot.emplace(gid, 0);
    if (graph_slot.size() != graph_labels.size()) {
        throw DatasetError("graph indicator names " + std::to_string(graph_slot.size()) + " graphs but " +
                           std::to_string(graph_labels.size()) + " graph labels were found");
    }
    {
        std::size_t s = 0;
        for (auto& [gid, slot] : graph_slot) slot = s++;
    }

    std::vector<std::size_t> node_graph(num_nodes), node_local(num_nodes);
    std::vector<std::size_t> graph_sizes(graph_slot.size(), 0);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        const auto slot = graph_slot.at(indicator[v]);
        node_graph[v] = slot;
        node_local[v] = graph_sizes[slot]++;
    }

    // One-hot node labels followed by raw attributes.
    std::vector<long long> node_labels;
    std::map<long long, std::size_t> label_code;
    if (fs::exists(file("node_labels"))) {
        node_labels = read_int_column(file("node_labels"));
        if (node_labels.size() != num_nodes) throw DatasetError("node label count does not match node count");
        for (auto l : node_labels) label_code.emplace(l, 0);
        std::size_t c = 0;
        for (auto& [l, code] : label_code) code = c++;
    }
    std::vector<std::vector<double>> attributes;
    if (fs::exists(file("node_attributes"))) {
        std::size_t line_no = 0;
        for (const auto& line : read_lines(file("node_attributes"))) {
            ++line_no;
            std::vector<double> row;
            for (const auto& tok : split_commas(line)) row.push_back(parse_real(tok, file("node_attributes"), line_no));
            if (!attributes.empty() && row.size() != attributes.front().size()) {
                throw DatasetError(file("node_attributes").string() + ":" + std::to_string(line_no) +
                                   ": inconsistent attribute width");
            }
            attributes.push_back(std::move(row));
        }
        if (attributes.size() != num_nodes) throw DatasetError("node attribute count does not match node count");
    }
    const std::size_t one_hot = label_code.size();
    const std::size_t attr_width = attributes.empty() ? 0 : attributes.front().size();
    std::size_t feat_width = one_hot + attr_width;
    const bool constant_feature = feat_width == 0;
    if (constant_feature) feat_width = 1;

    std::map<long long, int> class_code;
    for (auto l : graph_labels) class_code.emplace(l, 0);
    {
        int c = 0;
        for (auto& [l, code] : class_code) code = c++;
    }

    Dataset data;
    data.name = name;
    data.num_classes = static_cast<int>(class_code.size());
    data.num_features = feat_width;
    data.max_cycle_length = max_cycle_length;
    data.graphs.resize(graph_slot.size());
    for (std::size_t gi = 0; gi < data.graphs.size(); ++gi) {
        auto& g = data.graphs[gi];
        const auto n = static_cast<Eigen::Index>(graph_sizes[gi]);
        g.id = gi;
        g.label = class_code.at(graph_labels[gi]);
        g.adjacency = Matrix::Zero(n, n);
        g.features = Matrix::Zero(n, static_cast<Eigen::Index>(feat_width));
    }
    for (std::size_t v = 0; v < num_nodes; ++v) {
        auto& g = data.graphs[node_graph[v]];
        const auto r = static_cast<Eigen::Index>(node_local[v]);
        if (constant_feature) {
            g.features(r, 0) = 1.0;
            continue;
        }
        if (one_hot > 0) g.features(r, static_cast<Eigen::Index>(label_code.at(node_labels[v]))) = 1.0;
        for (std::size_t a = 0; a < attr_width; ++a) {
            g.features(r, static_cast<Eigen::Index>(one_hot + a)) = attributes[v][a];
        }
    }

    std::size_t line_no = 0;
    for (const auto& line : read_lines(file("A"))) {
        ++line_no;
        const auto toks = split_commas(line);
        if (toks.size() != 2) {
            throw DatasetError(file("A").string() + ":" + std::to_string(line_no) + ": expected 'i, j'");
        }
        const long long i = parse_int(toks[0], file("A"), line_no);
        const long long j = parse_int(toks[1], file("A"), line_no);
        for (long long id : {i, j}) {
            if (id < 1 || static_cast<std::size_t>(id) > num_nodes) {
                throw DatasetError(file("A").string() + ":" + std::to_string(line_no) + ": unknown node " +
                                   std::to_string(id));
            }
        }
        const auto u = static_cast<std::size_t>(i - 1), w = static_cast<std::size_t>(j - 1);
        if (node_graph[u] != node_graph[w]) {
            throw DatasetError(file("A").string() + ":" + std::to_string(line_no) + ": edge joins two graphs");
        }
        if (u == w) continue;
        auto& g = data.graphs[node_graph[u]];
        const auto a = static_cast<Eigen::Index>(node_local[u]), b = static_cast<Eigen::Index>(node_local[w]);
        g.adjacency(a, b) = 1.0;
        g.adjacency(b, a) = 1.0;
    }
    for (auto& g : data.graphs) finalize_graph(g, max_cycle_length);
    return data;
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto p : parts) {
        std::uint64_t z = h ^ (p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        h = z ^ (z >> 31);
    }
    return h;
}

void deterministic_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<Fold> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    for (const auto& [cls, members] : by_class) {
        if (members.size() < static_cast<std::size_t>(k)) {
            throw std::invalid_argument("stratified_folds: class " + std::to_string(cls) + " has " +
                                        std::to_string(members.size()) + " members, fewer than " +
                                        std::to_string(k) + " folds");
        }
    }
    const auto kk = static_cast<std::size_t>(k);
    std::vector<Fold> folds(kk);
    std::size_t next = 0;
    for (auto& [cls, members] : by_class) {
        deterministic_shuffle(members, mix_seed({seed, static_cast<std::uint64_t>(cls)}));
        for (auto idx : members) {
            folds[next].test.push_back(idx);
            next = (next + 1) % kk;
        }
    }
    for (std::size_t f = 0; f < kk; ++f) {
        std::sort(folds[f].test.begin(), folds[f].test.end());
        std::vector<char> in_test(labels.size(), 0);
        for (auto i : folds[f].test) in_test[i] = 1;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!in_test[i]) folds[f].train.push_back(i);
        }
    }
    return folds;
}

BatchedGraphs make_batch(const Dataset& data, const std::vector<std::size_t>& indices) {
    BatchedGraphs b;
    std::size_t total = 0;
    for (auto idx : indices) total += data.graphs.at(idx).num_nodes();
    const auto f = static_cast<Eigen::Index>(data.num_features);
    const auto dt = static_cast<Eigen::Index>(topology_width(data.max_cycle_length));
    b.features.resize(static_cast<Eigen::Index>(total), f);
    b.topology.resize(static_cast<Eigen::Index>(total), dt);
    std::size_t off = 0;
    for (auto idx : indices) {
        const auto& g = data.graphs[idx];
        const auto n = static_cast<Eigen::Index>(g.num_nodes());
        b.propagation.append(g.propagation);
        b.features.middleRows(static_cast<Eigen::Index>(off), n) = g.features;
        b.topology.middleRows(static_cast<Eigen::Index>(off), n) = g.topology;
        b.offsets.push_back(off);
        b.sizes.push_back(g.num_nodes());
        b.labels.push_back(g.label);
        b.graph_ids.push_back(g.id);
        off += g.num_nodes();
    }
    return b;
}

std::vector<BatchedGraphs> make_batches(const Dataset& data, std::vector<std::size_t> indices,
                                        std::size_t batch_size, std::uint64_t seed, bool shuffle) {
    if (batch_size == 0) throw std::invalid_argument("make_batches: batch size must be positive");
    if (shuffle) deterministic_shuffle(indices, seed);
    std::vector<BatchedGraphs> out;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const auto end = std::min(indices.size(), start + batch_size);
        out.push_back(make_batch(data, std::vector<std::size_t>(indices.begin() + static_cast<long>(start),
                                                                indices.begin() + static_cast<long>(end))));
    }
    return out;
}

}  // namespace qignn
