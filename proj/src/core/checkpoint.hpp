// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace kenforge {

// One named 2-D float32 matrix. Values are row-major; equality throughout
// the toolkit is bit-pattern equality (NaN payloads and signed zeros are
// significant).
struct TensorRecord {
    std::string name;
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<float> values;  // rows * cols entries

    std::uint64_t element_count() const { return rows * cols; }
};

// A named collection of 2-D float tensors plus free-form string metadata
// (conventional keys: model, variant, state). Tensor iteration is
// lexicographic by name.
struct Checkpoint {
    std::map<std::string, TensorRecord> tensors;
    std::map<std::string, std::string> meta;

    // Validates the record invariants (2-D, non-empty unique name,
    // values.size() == rows*cols) and inserts it.
    void add_tensor(TensorRecord record);
    void add_tensor(std::string name, std::uint64_t rows, std::uint64_t cols,
                    std::vector<float> values);

    bool has_tensor(const std::string& name) const { return tensors.count(name) > 0; }
    const TensorRecord& tensor(const std::string& name) const;
};

// KENC v1 container I/O. The full layout is documented in checkpoint.cpp.
Checkpoint read_checkpoint(const std::string& path);
void write_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Names of tensors whose payload bit patterns differ between the two
// checkpoints, sorted lexicographically. Both checkpoints must hold the
// same tensor names with the same shapes.
std::vector<std::string> diff_checkpoints(const Checkpoint& a, const Checkpoint& b);

// Bit-exact equality of two float payloads / whole checkpoints (meta,
// names, shapes, value bit patterns).
bool bit_equal(const std::vector<float>& a, const std::vector<float>& b);
bool bit_equal(const Checkpoint& a, const Checkpoint& b);

}  // namespace kenforge
