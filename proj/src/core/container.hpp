// SPDX-License-Identifier: Apache-2.0
//
// Shared framing for the KENC/KENM binary containers:
//
//   bytes 0..3    magic (4 ASCII bytes)
//   bytes 4..7    format version, u32 little-endian
//   bytes 8..15   header_len, u64 little-endian
//   then          header_len bytes of UTF-8 JSON
//   then          payload region; per-entry offsets are relative to the
//                 end of the header, contiguous and 8-byte aligned with
//                 zero padding in between
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "core/error.hpp"

namespace kenforge::container {

constexpr std::uint32_t kVersion = 1;

constexpr std::uint64_t align8(std::uint64_t n) { return (n + 7) & ~std::uint64_t{7}; }

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline std::uint32_t get_u32le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

inline std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | p[i];
    }
    return v;
}

struct Prologue {
    std::string header_json;
    std::uint64_t payload_offset = 0;  // absolute file offset of the payload region
    std::uint64_t payload_size = 0;
};

// Opens the file, validates magic/version/header length and returns the
// header JSON text plus payload bounds. The stream is left positioned at
// the start of the payload region.
inline Prologue read_prologue(std::ifstream& in, const std::string& path, const char magic[4]) {
    if (!in.is_open()) {
        fail_input("cannot open file: ", path);
    }
    in.seekg(0, std::ios::end);
    const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0, std::ios::beg);

    unsigned char prologue[16];
    if (file_size < 16 || !in.read(reinterpret_cast<char*>(prologue), 16)) {
        fail_input(path, ": truncated file: ", file_size, " bytes, need at least 16");
    }
    if (std::memcmp(prologue, magic, 4) != 0) {
        fail_input(path, ": bad magic at byte offset 0: expected \"", magic[0], magic[1],
                   magic[2], magic[3], "\"");
    }
    const std::uint32_t version = get_u32le(prologue + 4);
    if (version != kVersion) {
        fail_input(path, ": unsupported version ", version, " at byte offset 4 (expected ",
                   kVersion, ")");
    }
    const std::uint64_t header_len = get_u64le(prologue + 8);
    if (16 + header_len > file_size) {
        fail_input(path, ": truncated header: header_len ", header_len,
                   " at byte offset 8 exceeds file size ", file_size);
    }

    Prologue result;
    result.header_json.resize(header_len);
    if (header_len > 0 && !in.read(result.header_json.data(), static_cast<std::streamsize>(header_len))) {
        fail_input(path, ": truncated header: could not read ", header_len, " bytes");
    }
    result.payload_offset = 16 + header_len;
    result.payload_size = file_size - result.payload_offset;
    return result;
}

inline void write_prologue(std::ofstream& out, const std::string& path, const char magic[4],
                           const std::string& header_json) {
    if (!out.is_open()) {
        fail_io("cannot open file for writing: ", path);
    }
    std::string prologue;
    prologue.reserve(16);
    prologue.append(magic, 4);
    put_u32le(prologue, kVersion);
    put_u64le(prologue, header_json.size());
    out.write(prologue.data(), static_cast<std::streamsize>(prologue.size()));
    out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
    if (!out) {
        fail_io("write failed: ", path);
    }
}

}  // namespace kenforge::container
