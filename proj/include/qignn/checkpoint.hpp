#pragma once

#include "qignn/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qignn {

std::uint64_t fnv1a64(std::string_view text);

struct NamedTensor {
    std::string name;
    Matrix value;
};

struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::string pathway;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
};

/// Parameters plus spectral-normalization vectors, values as hex floats.
Checkpoint make_checkpoint(const Model& m, std::uint64_t config_hash);

void write_checkpoint(std::ostream& os, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const Model& m, std::uint64_t config_hash);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint tensors into a model built with the same configuration.
/// Throws std::runtime_error on a missing tensor, a shape mismatch or a hash
/// mismatch (when expected_hash is nonzero).
void restore(Model& m, const Checkpoint& c, std::uint64_t expected_hash = 0);

}  // namespace qignn
