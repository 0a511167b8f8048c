#pragma once

#include "qignn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace qignn {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One graph of a classification dataset.
struct GraphInstance {
    std::size_t id = 0;
    Matrix adjacency;    // N x N, binary, symmetric, zero diagonal
    Matrix features;     // N x f
    int label = 0;       // remapped to 0..C-1
    Matrix propagation;  // normalized adjacency with self-loops
    Matrix topology;     // N x d_tau

    std::size_t num_nodes() const { return static_cast<std::size_t>(adjacency.rows()); }
};

struct Dataset {
    std::string name;
    std::vector<GraphInstance> graphs;
    int num_classes = 0;
    std::size_t num_features = 0;
    int max_cycle_length = 6;

    std::vector<int> labels() const;
};

/// Width of the topology descriptor for a given maximum cycle length.
constexpr std::size_t topology_width(int max_cycle_length) {
    return static_cast<std::size_t>(max_cycle_length - 2) + 3;
}

/// Reads `<name>_A.txt`, `<name>_graph_indicator.txt`, `<name>_graph_labels.txt`
/// and, when present, `<name>_node_labels.txt` / `<name>_node_attributes.txt`
/// from `root`. Node labels are one-hot encoded; attributes follow them.
Dataset parse_tu_dataset(const std::filesystem::path& root, const std::string& name, int max_cycle_length = 6);

/// Fills propagation and topology for a graph whose adjacency is set.
void finalize_graph(GraphInstance& g, int max_cycle_length);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
Matrix normalize_adjacency(const Matrix& adjacency);

/// Cycles of length 3..max_cycle_length that are relevant, i.e. not a GF(2) sum
/// of strictly shorter cycles. These are exactly the cycles that appear in some
/// minimum cycle basis, so the set is independent of node numbering.
/// Each cycle is returned as its node sequence.
std::vector<std::vector<std::size_t>> relevant_cycles(const Matrix& adjacency, int max_cycle_length);

/// Per node: [c^(3) .. c^(Lmax), normalized degree, clustering coefficient,
/// triangle indicator].
Matrix topology_descriptors(const Matrix& adjacency, int max_cycle_length);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Class-stratified k-fold split, deterministic per seed.
std::vector<Fold> stratified_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

/// Disjoint union of graphs for one optimizer step.
struct BatchedGraphs {
    BlockDiagonal propagation;
    Matrix features;
    Matrix topology;
    std::vector<std::size_t> offsets;  // first stacked row of each graph
    std::vector<std::size_t> sizes;    // node count of each graph
    std::vector<int> labels;
    std::vector<std::size_t> graph_ids;

    std::size_t num_graphs() const { return sizes.size(); }
    std::size_t num_nodes() const { return propagation.size(); }
};

BatchedGraphs make_batch(const Dataset& data, const std::vector<std::size_t>& indices);

/// Shuffles `indices` with `seed` (no shuffle when seed is 0 and shuffle is false)
/// and cuts it into consecutive batches.
std::vector<BatchedGraphs> make_batches(const Dataset& data, std::vector<std::size_t> indices,
                                        std::size_t batch_size, std::uint64_t seed, bool shuffle = true);

/// Deterministic Fisher-Yates shuffle driven by a 64-bit Mersenne Twister.
void deterministic_shuffle(std::vector<std::size_t>& v, std::uint64_t seed);

/// Mixes several integers into one seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace qignn
