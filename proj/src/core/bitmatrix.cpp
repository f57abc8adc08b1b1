// SPDX-License-Identifier: Apache-2.0
#include "core/bitmatrix.hpp"

#include <bit>

#include "core/error.hpp"

namespace kenforge {

BitMatrix::BitMatrix(std::uint64_t rows, std::uint64_t cols)
    : rows_(rows), cols_(cols), stride_((cols + 7) / 8), bytes_(rows * stride_, 0) {}

bool BitMatrix::get(std::uint64_t r, std::uint64_t c) const {
    const std::uint8_t byte = bytes_[r * stride_ + c / 8];
    return (byte >> (7 - (c % 8))) & 1u;
}

void BitMatrix::set(std::uint64_t r, std::uint64_t c, bool value) {
    std::uint8_t& byte = bytes_[r * stride_ + c / 8];
    const std::uint8_t bit = static_cast<std::uint8_t>(1u << (7 - (c % 8)));
    if (value) {
        byte |= bit;
    } else {
        byte &= static_cast<std::uint8_t>(~bit);
    }
}

std::uint64_t BitMatrix::popcount() const {
    std::uint64_t n = 0;
    for (std::uint8_t b : bytes_) {
        n += static_cast<std::uint64_t>(std::popcount(b));
    }
    return n;
}

std::uint64_t BitMatrix::row_popcount(std::uint64_t r) const {
    std::uint64_t n = 0;
    const std::uint8_t* p = row(r);
    for (std::uint64_t i = 0; i < stride_; ++i) {
        n += static_cast<std::uint64_t>(std::popcount(p[i]));
    }
    return n;
}

std::uint8_t BitMatrix::last_byte_mask() const {
    const unsigned used = cols_ % 8;
    if (used == 0) {
        return 0xFF;
    }
    return static_cast<std::uint8_t>(0xFF << (8 - used));
}

static void require_same_shape(const BitMatrix& a, const BitMatrix& b) {
    if (!a.same_shape(b)) {
        fail_internal("bit matrix shape mismatch: ", a.rows(), "x", a.cols(), " vs ",
                      b.rows(), "x", b.cols());
    }
}

BitMatrix BitMatrix::bit_and(const BitMatrix& a, const BitMatrix& b) {
    require_same_shape(a, b);
    BitMatrix out(a.rows_, a.cols_);
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) {
        out.bytes_[i] = a.bytes_[i] & b.bytes_[i];
    }
    return out;
}

BitMatrix BitMatrix::bit_or(const BitMatrix& a, const BitMatrix& b) {
    require_same_shape(a, b);
    BitMatrix out(a.rows_, a.cols_);
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) {
        out.bytes_[i] = a.bytes_[i] | b.bytes_[i];
    }
    return out;
}

BitMatrix BitMatrix::bit_and_not(const BitMatrix& a, const BitMatrix& b) {
    require_same_shape(a, b);
    BitMatrix out(a.rows_, a.cols_);
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) {
        out.bytes_[i] = a.bytes_[i] & static_cast<std::uint8_t>(~b.bytes_[i]);
    }
    return out;
}

}  // namespace kenforge
