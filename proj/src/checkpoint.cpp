#include "qignn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qignn {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

namespace {

constexpr const char* kMagic = "qignn-checkpoint 1";

Matrix as_column(const Vector& v) { return Matrix(v); }

std::vector<NamedTensor> state_tensors(const Model& m) {
    std::vector<NamedTensor> out;
    if (m.op.quantum && m.op.quantum->spectral_normalize && m.op.quantum->in_norm.initialized()) {
        const auto& q = *m.op.quantum;
        out.push_back({"quantum.sn_in.u", as_column(q.in_norm.u)});
        out.push_back({"quantum.sn_in.v", as_column(q.in_norm.v)});
        out.push_back({"quantum.sn_out.u", as_column(q.out_norm.u)});
        out.push_back({"quantum.sn_out.v", as_column(q.out_norm.v)});
    }
    return out;
}

}  // namespace

Checkpoint make_checkpoint(const Model& m, std::uint64_t config_hash) {
    Checkpoint c;
    c.config_hash = config_hash;
    c.pathway = operator_name(m.op.kind);
    auto& mm = const_cast<Model&>(m);
    for (const auto& p : mm.parameters()) c.tensors.push_back({p.name, *p.value});
    for (auto& t : state_tensors(m)) c.tensors.push_back(std::move(t));
    return c;
}

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(c.config_hash));
    os << kMagic << "\n";
    os << "config_hash " << buf << "\n";
    os << "pathway " << c.pathway << "\n";
    os << "tensors " << c.tensors.size() << "\n";
    for (const auto& t : c.tensors) {
        os << "tensor " << t.name << " " << t.value.rows() << " " << t.value.cols() << "\n";
        for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%a", t.value(i, j));
                os << (j ? " " : "") << buf;
            }
            os << "\n";
        }
    }
    os << "end\n";
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::runtime_error("checkpoint: " + what); }

std::string expect_line(std::istream& is, const std::string& what) {
    std::string line;
    if (!std::getline(is, line)) bad("unexpected end of input, expected " + what);
    return line;
}

}  // namespace

Checkpoint read_checkpoint(std::istream& is) {
    Checkpoint c;
    if (expect_line(is, "header") != kMagic) bad("not a checkpoint (bad header)");
    {
        std::istringstream ls(expect_line(is, "config_hash"));
        std::string key, hex;
        if (!(ls >> key >> hex) || key != "config_hash") bad("missing config_hash");
        c.config_hash = std::strtoull(hex.c_str(), nullptr, 16);
    }
    {
        std::istringstream ls(expect_line(is, "pathway"));
        std::string key;
        if (!(ls >> key >> c.pathway) || key != "pathway") bad("missing pathway");
    }
    std::size_t count = 0;
    {
        std::istringstream ls(expect_line(is, "tensors"));
        std::string key;
        if (!(ls >> key >> count) || key != "tensors") bad("missing tensor count");
    }
    for (std::size_t k = 0; k < count; ++k) {
        std::istringstream hs(expect_line(is, "tensor header"));
        std::string key, name;
        Eigen::Index rows = 0, cols = 0;
        if (!(hs >> key >> name >> rows >> cols) || key != "tensor" || rows < 0 || cols < 0) bad("bad tensor header");
        Matrix v(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            std::istringstream rs(expect_line(is, "tensor row"));
            for (Eigen::Index j = 0; j < cols; ++j) {
                std::string tok;
                if (!(rs >> tok)) bad("short row in " + name);
                char* end = nullptr;
                v(i, j) = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str() || *end != '\0') bad("bad number '" + tok + "' in " + name);
            }
        }
        c.tensors.push_back({name, std::move(v)});
    }
    if (expect_line(is, "end") != "end") bad("missing end marker");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Model& m, std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_checkpoint(os, make_checkpoint(m, config_hash));
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return read_checkpoint(is);
}

void restore(Model& m, const Checkpoint& c, std::uint64_t expected_hash) {
    if (expected_hash != 0 && c.config_hash != expected_hash) bad("config hash mismatch");
    if (c.pathway != operator_name(m.op.kind)) bad("pathway mismatch");
    auto take = [&](const std::string& name, Matrix& dst) {
        const NamedTensor* t = c.find(name);
        if (!t) bad("missing tensor " + name);
        if (t->value.rows() != dst.rows() || t->value.cols() != dst.cols()) bad("shape mismatch for " + name);
        dst = t->value;
    };
    for (auto& p : m.parameters()) take(p.name, *p.value);
    if (m.op.quantum && m.op.quantum->spectral_normalize && c.find("quantum.sn_in.u")) {
        auto& q = *m.op.quantum;
        auto vec = [&](const std::string& name, Vector& dst) {
            const NamedTensor* t = c.find(name);
            if (!t || t->value.cols() != 1) bad("bad normalization vector " + name);
            dst = t->value.col(0);
        };
        vec("quantum.sn_in.u", q.in_norm.u);
        vec("quantum.sn_in.v", q.in_norm.v);
        vec("quantum.sn_out.u", q.out_norm.u);
        vec("quantum.sn_out.v", q.out_norm.v);
    }
}

}  // namespace qignn
