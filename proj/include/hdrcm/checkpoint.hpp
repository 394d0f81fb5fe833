#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hdrcm {

// Versioned binary tensor container (see docs/checkpoint_format.md):
// magic string, a key/value text block, then named tensors stored as
// (name-length, name, rank, dims, 32-bit little-endian floats).
struct CheckpointTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;
};

struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> config;  // ordered key/value
    std::vector<CheckpointTensor> tensors;

    const CheckpointTensor* find(const std::string& name) const;
    const std::string* config_value(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hdrcm
