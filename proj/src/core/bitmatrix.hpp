// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace kenforge {

// Dense binary matrix. Row-major, each row padded to a whole byte, bits
// MSB-first within a byte (bit for column c lives in byte c/8 at position
// 7 - c%8). Padding bits in the final byte of a row are always zero; the
// in-memory layout is byte-identical to the mask container payload.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(std::uint64_t rows, std::uint64_t cols);

    std::uint64_t rows() const { return rows_; }
    std::uint64_t cols() const { return cols_; }
    std::uint64_t row_stride() const { return stride_; }  // bytes per row
    std::uint64_t byte_size() const { return bytes_.size(); }

    bool get(std::uint64_t r, std::uint64_t c) const;
    void set(std::uint64_t r, std::uint64_t c, bool value);

    std::uint64_t popcount() const;
    std::uint64_t row_popcount(std::uint64_t r) const;

    const std::uint8_t* data() const { return bytes_.data(); }
    std::uint8_t* data() { return bytes_.data(); }
    const std::uint8_t* row(std::uint64_t r) const { return bytes_.data() + r * stride_; }
    std::uint8_t* row(std::uint64_t r) { return bytes_.data() + r * stride_; }

    bool same_shape(const BitMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool operator==(const BitMatrix& other) const = default;

    // Elementwise algebra; shapes must match.
    static BitMatrix bit_and(const BitMatrix& a, const BitMatrix& b);
    static BitMatrix bit_or(const BitMatrix& a, const BitMatrix& b);
    static BitMatrix bit_and_not(const BitMatrix& a, const BitMatrix& b);  // a AND NOT b

    // Mask covering the valid (non-padding) bits of the last byte in a row.
    std::uint8_t last_byte_mask() const;

private:
    std::uint64_t rows_ = 0;
    std::uint64_t cols_ = 0;
    std::uint64_t stride_ = 0;
    std::vector<std::uint8_t> bytes_;
};

}  // namespace kenforge
