#include "qignn/graph_data.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <bitset>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace qignn;
using namespace qignn::testing;

namespace {

using EdgeSet = std::bitset<128>;

std::map<std::pair<int, int>, int> edge_index(const Matrix& a) {
    std::map<std::pair<int, int>, int> idx;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = i + 1; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) idx.emplace(std::make_pair(i, j), static_cast<int>(idx.size()));
        }
    }
    REQUIRE(idx.size() <= 128);
    return idx;
}

EdgeSet cycle_edges(const std::vector<std::size_t>& cyc, const std::map<std::pair<int, int>, int>& idx) {
    EdgeSet e;
    for (std::size_t k = 0; k < cyc.size(); ++k) {
        int u = static_cast<int>(cyc[k]), v = static_cast<int>(cyc[(k + 1) % cyc.size()]);
        if (u > v) std::swap(u, v);
        e.set(static_cast<std::size_t>(idx.at({u, v})));
    }
    return e;
}

// Every simple cycle up to max_len, as edge sets, grouped by length.
std::map<int, std::set<std::string>> all_cycles(const Matrix& a, int max_len,
                                                const std::map<std::pair<int, int>, int>& idx) {
    std::map<int, std::set<std::string>> out;
    const int n = static_cast<int>(a.rows());
    std::vector<std::size_t> path;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> dfs = [&](int start, int v) {
        for (int w = start; w < n; ++w) {
            if (a(v, w) == 0.0) continue;
            if (w == start && path.size() >= 3) {
                out[static_cast<int>(path.size())].insert(cycle_edges(path, idx).to_string());
                continue;
            }
            if (w == start || used[static_cast<std::size_t>(w)] || static_cast<int>(path.size()) >= max_len) continue;
            used[static_cast<std::size_t>(w)] = 1;
            path.push_back(static_cast<std::size_t>(w));
            dfs(start, w);
            path.pop_back();
            used[static_cast<std::size_t>(w)] = 0;
        }
    };
    for (int s = 0; s < n; ++s) {
        path = {static_cast<std::size_t>(s)};
        used.assign(static_cast<std::size_t>(n), 0);
        used[static_cast<std::size_t>(s)] = 1;
        dfs(s, s);
    }
    return out;
}

struct Gf2Basis {
    std::vector<EdgeSet> rows;  // pivot = highest set bit, kept reduced on insertion order
    EdgeSet reduce(EdgeSet v) const {
        for (const auto& r : rows) {
            const std::size_t p = pivot(r);
            if (v.test(p)) v ^= r;
        }
        return v;
    }
    void insert(const EdgeSet& v) {
        const EdgeSet r = reduce(v);
        if (r.none()) return;
        // keep pivots distinct: eliminate the new pivot from existing rows
        const std::size_t p = pivot(r);
        for (auto& x : rows) {
            if (x.test(p)) x ^= r;
        }
        rows.push_back(r);
    }
    static std::size_t pivot(const EdgeSet& v) {
        for (std::size_t i = v.size(); i-- > 0;) {
            if (v.test(i)) return i;
        }
        return 0;
    }
};

std::set<std::string> oracle_relevant(const Matrix& a, int max_len) {
    const auto idx = edge_index(a);
    const auto cycles = all_cycles(a, max_len, idx);
    std::set<std::string> relevant;
    Gf2Basis shorter;
    for (int len = 3; len <= max_len; ++len) {
        auto it = cycles.find(len);
        if (it == cycles.end()) continue;
        for (const auto& c : it->second) {
            if (shorter.reduce(EdgeSet(c)).any()) relevant.insert(c);
        }
        for (const auto& c : it->second) shorter.insert(EdgeSet(c));
    }
    return relevant;
}

std::set<std::string> computed_relevant(const Matrix& a, int max_len) {
    const auto idx = edge_index(a);
    std::set<std::string> out;
    for (const auto& cyc : relevant_cycles(a, max_len)) {
        REQUIRE(cyc.size() >= 3);
        REQUIRE(static_cast<int>(cyc.size()) <= max_len);
        for (std::size_t k = 0; k < cyc.size(); ++k) {
            REQUIRE(a(static_cast<Eigen::Index>(cyc[k]), static_cast<Eigen::Index>(cyc[(k + 1) % cyc.size()])) == 1.0);
        }
        REQUIRE(std::set<std::size_t>(cyc.begin(), cyc.end()).size() == cyc.size());
        const bool fresh = out.insert(cycle_edges(cyc, idx).to_string()).second;
        CHECK(fresh);
    }
    return out;
}

Matrix from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    Matrix a = Matrix::Zero(n, n);
    for (auto [i, j] : edges) a(i, j) = a(j, i) = 1.0;
    return a;
}

Matrix complete(int n) {
    Matrix a = Matrix::Ones(n, n);
    a.diagonal().setZero();
    return a;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("qignn_test_" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    void write(const std::string& file, const std::string& body) const { std::ofstream(path / file) << body; }
};

// Two graphs: a triangle (nodes 1-3) and a path 4-5.
void write_toy(const TempDir& d) {
    d.write("TOY_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n3, 1\n1, 3\n4, 5\n5, 4\n");
    d.write("TOY_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    d.write("TOY_graph_labels.txt", "-1\n1\n");
    d.write("TOY_node_labels.txt", "0\n2\n0\n2\n5\n");
}

}  // namespace

TEST_SUITE("graph_data") {
    TEST_CASE("relevant cycles of small named graphs") {
        CHECK(relevant_cycles(complete(4), 6).size() == 4);  // four triangles, no 4-cycle
        const Matrix square = from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
        CHECK(relevant_cycles(square, 6).size() == 1);
        CHECK(relevant_cycles(square, 3).empty());
        // Two hexagons sharing an edge: the 10-cycle is beyond the limit and not relevant anyway.
        const Matrix naphthalene = from_edges(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0},
                                                   {4, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 5}});
        CHECK(relevant_cycles(naphthalene, 6).size() == 2);
        CHECK(relevant_cycles(naphthalene, 12).size() == 2);
        // Cube: six faces; all are relevant even though any five generate the sixth.
        const Matrix cube = from_edges(8, {{0, 1}, {1, 3}, {3, 2}, {2, 0}, {4, 5}, {5, 7}, {7, 6}, {6, 4},
                                           {0, 4}, {1, 5}, {2, 6}, {3, 7}});
        CHECK(relevant_cycles(cube, 6).size() == 6);
        const Matrix tree = from_edges(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}});
        CHECK(relevant_cycles(tree, 6).empty());
    }

    TEST_CASE("relevant cycles match a brute-force GF(2) oracle") {
        std::mt19937_64 rng(11);
        std::vector<Matrix> graphs;
        graphs.push_back(complete(5));
        graphs.push_back(from_edges(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 5}, {1, 6}, {2, 7}, {3, 8},
                                         {4, 9}, {5, 7}, {7, 9}, {9, 6}, {6, 8}, {8, 5}}));  // Petersen
        for (int t = 0; t < 40; ++t) {
            std::uniform_int_distribution<int> n_pick(3, 9);
            graphs.push_back(random_adjacency(rng, n_pick(rng), 0.3));
        }
        for (const auto& a : graphs) {
            for (int len : {3, 4, 6}) {
                CHECK(computed_relevant(a, len) == oracle_relevant(a, len));
            }
        }
    }

    TEST_CASE("descriptors are permutation equivariant") {
        std::mt19937_64 rng(12);
        for (int t = 0; t < 25; ++t) {
            const int n = 4 + t % 9;
            const Matrix a = random_adjacency(rng, n, 0.35);
            const auto perm = random_permutation(rng, n);
            const Matrix tau = topology_descriptors(a, 6);
            const Matrix tau_p = topology_descriptors(permute_symmetric(a, perm), 6);
            CHECK((tau_p - permute_rows(tau, perm)).cwiseAbs().maxCoeff() == 0.0);
            const Matrix p = normalize_adjacency(a);
            CHECK((normalize_adjacency(permute_symmetric(a, perm)) - permute_symmetric(p, perm)).cwiseAbs().maxCoeff() ==
                  0.0);
        }
    }

    TEST_CASE("descriptors of K4 and of a path") {
        const Matrix tau = topology_descriptors(complete(4), 6);
        REQUIRE(tau.cols() == static_cast<Eigen::Index>(topology_width(6)));
        CHECK(tau.cols() == 7);
        for (int i = 0; i < 4; ++i) {
            CHECK(tau(i, 0) == 3.0);  // each node lies on three triangles
            CHECK(tau(i, 1) == 0.0);
            CHECK(tau(i, 4) == 1.0);  // degree / max degree
            CHECK(tau(i, 5) == 1.0);  // clustering
            CHECK(tau(i, 6) == 1.0);
        }
        const Matrix path = topology_descriptors(from_edges(3, {{0, 1}, {1, 2}}), 6);
        CHECK(path(0, 4) == 0.5);
        CHECK(path(1, 4) == 1.0);
        CHECK(path.leftCols(4).isZero(0.0));
        CHECK(path.col(5).isZero(0.0));
        CHECK(path.col(6).isZero(0.0));
    }

    TEST_CASE("normalized adjacency") {
        const Matrix p = normalize_adjacency(from_edges(2, {{0, 1}}));
        CHECK(p.isApproxToConstant(0.5, 1e-15));
        const Matrix q = normalize_adjacency(Matrix::Zero(3, 3));
        CHECK((q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
        std::mt19937_64 rng(13);
        const Matrix a = random_adjacency(rng, 8, 0.3);
        const Matrix n = normalize_adjacency(a);
        CHECK((n - n.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(n)).eigenvalues();
        CHECK(ev.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_THROWS_AS(normalize_adjacency(Matrix::Zero(2, 3)), ShapeError);
    }

    TEST_CASE("parsing a TU-format directory") {
        TempDir d("toy");
        write_toy(d);
        const Dataset data = parse_tu_dataset(d.path, "TOY");
        REQUIRE(data.graphs.size() == 2);
        CHECK(data.num_classes == 2);
        CHECK(data.num_features == 3);
        CHECK(data.graphs[0].label == 0);
        CHECK(data.graphs[1].label == 1);
        CHECK(data.graphs[0].num_nodes() == 3);
        CHECK(data.graphs[0].adjacency.sum() == 6.0);
        CHECK(data.graphs[1].adjacency.sum() == 2.0);
        CHECK(data.graphs[0].features(1, 1) == 1.0);  // label 2 is the second code
        CHECK(data.graphs[1].features(1, 2) == 1.0);
        CHECK(data.graphs[0].topology(0, 0) == 1.0);
        CHECK(data.labels() == std::vector<int>{0, 1});
    }

    TEST_CASE("parsing errors name the problem") {
        {
            TempDir d("missing");
            d.write("TOY_A.txt", "1, 2\n");
            CHECK_THROWS_AS(parse_tu_dataset(d.path, "TOY"), DatasetError);
        }
        {
            TempDir d("badint");
            write_toy(d);
            d.write("TOY_A.txt", "1, x\n");
            CHECK_THROWS_WITH_AS(parse_tu_dataset(d.path, "TOY"), doctest::Contains("TOY_A.txt:1"), DatasetError);
        }
        {
            TempDir d("cross");
            write_toy(d);
            d.write("TOY_A.txt", "1, 4\n");
            CHECK_THROWS_WITH_AS(parse_tu_dataset(d.path, "TOY"), doctest::Contains("two graphs"), DatasetError);
        }
        {
            TempDir d("unknown");
            write_toy(d);
            d.write("TOY_A.txt", "1, 9\n");
            CHECK_THROWS_WITH_AS(parse_tu_dataset(d.path, "TOY"), doctest::Contains("unknown node"), DatasetError);
        }
        {
            TempDir d("labels");
            write_toy(d);
            d.write("TOY_graph_labels.txt", "1\n");
            CHECK_THROWS_AS(parse_tu_dataset(d.path, "TOY"), DatasetError);
        }
        {
            TempDir d("nodelabels");
            write_toy(d);
            d.write("TOY_node_labels.txt", "0\n1\n");
            CHECK_THROWS_AS(parse_tu_dataset(d.path, "TOY"), DatasetError);
        }
    }

    TEST_CASE("stratified folds partition the data and keep class ratios") {
        std::vector<int> labels;
        for (int i = 0; i < 125; ++i) labels.push_back(1);
        for (int i = 0; i < 63; ++i) labels.push_back(0);
        const auto folds = stratified_folds(labels, 10, 42);
        REQUIRE(folds.size() == 10);
        std::vector<int> seen(labels.size(), 0);
        for (const auto& f : folds) {
            CHECK(f.train.size() + f.test.size() == labels.size());
            int pos = 0;
            for (auto i : f.test) {
                ++seen[i];
                pos += labels[i];
            }
            CHECK(pos >= 12);
            CHECK(pos <= 13);
            CHECK(f.test.size() >= 18);
            CHECK(f.test.size() <= 19);
            std::set<std::size_t> all(f.train.begin(), f.train.end());
            for (auto i : f.test) CHECK(all.count(i) == 0);
        }
        for (int s : seen) CHECK(s == 1);
        CHECK(stratified_folds(labels, 10, 42)[3].test == folds[3].test);
        CHECK(stratified_folds(labels, 10, 43)[3].test != folds[3].test);
        CHECK_THROWS_AS(stratified_folds(labels, 1, 42), std::invalid_argument);
        CHECK_THROWS_AS(stratified_folds(std::vector<int>{0, 0, 1}, 2, 42), std::invalid_argument);
    }

    TEST_CASE("batches stack graphs block-diagonally") {
        TempDir d("batch");
        write_toy(d);
        const Dataset data = parse_tu_dataset(d.path, "TOY");
        const BatchedGraphs b = make_batch(data, {1, 0});
        CHECK(b.num_graphs() == 2);
        CHECK(b.num_nodes() == 5);
        CHECK(b.offsets == std::vector<std::size_t>{0, 2});
        CHECK(b.labels == std::vector<int>{1, 0});
        CHECK((b.features.middleRows(2, 3) - data.graphs[0].features).cwiseAbs().maxCoeff() == 0.0);
        const Matrix dense = b.propagation.dense();
        CHECK(dense.block(0, 2, 2, 3).isZero(0.0));
        const auto batches = make_batches(data, {0, 1}, 1, 7);
        CHECK(batches.size() == 2);
        CHECK_THROWS_AS(make_batches(data, {0, 1}, 0, 7), std::invalid_argument);
    }

    TEST_CASE("shuffle and seed mixing are deterministic") {
        std::vector<std::size_t> a(50), b(50);
        std::iota(a.begin(), a.end(), 0);
        b = a;
        deterministic_shuffle(a, 99);
        deterministic_shuffle(b, 99);
        CHECK(a == b);
        std::sort(b.begin(), b.end());
        for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == i);
        CHECK(mix_seed({1, 2}) != mix_seed({2, 1}));
        CHECK(mix_seed({1, 2}) == mix_seed({1, 2}));
    }

    TEST_CASE("MUTAG statistics") {
        const Dataset data = parse_tu_dataset(std::filesystem::path(QIGNN_DATA_DIR) / "MUTAG", "MUTAG");
        CHECK(data.graphs.size() == 188);
        CHECK(data.num_classes == 2);
        CHECK(data.num_features == 7);
        int positive = 0;
        std::size_t nodes = 0;
        for (const auto& g : data.graphs) {
            positive += g.label;
            nodes += g.num_nodes();
            CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);
            CHECK(g.adjacency.diagonal().isZero(0.0));
        }
        CHECK(positive == 125);
        CHECK(nodes == 3371);
    }
}
