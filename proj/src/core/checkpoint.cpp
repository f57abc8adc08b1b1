// SPDX-License-Identifier: Apache-2.0
//
// KENC v1 checkpoint container:
//
//   bytes 0..3    magic "KENC"
//   bytes 4..7    version u32 LE = 1
//   bytes 8..15   header_len u64 LE
//   header        UTF-8 JSON:
//                 {"meta": {"k": "v", ...},
//                  "tensors": [{"name": s, "dtype": "f32", "shape": [rows, cols],
//                               "offset": u64, "nbytes": u64}, ...]}
//                 tensors sorted by name; offsets relative to the end of the
//                 header, contiguous and 8-byte aligned (zero padding)
//   payload       raw little-endian IEEE-754 binary32 values, row-major
//
// Only 2-D f32 tensors are accepted. Readers are strict: any header/offset
// inconsistency is an error that names the tensor and byte offset involved.
#include "core/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "core/container.hpp"
#include "core/error.hpp"

namespace kenforge {

using nlohmann::json;

static void validate_record(const TensorRecord& t) {
    if (t.name.empty()) {
        fail_input("tensor name must be non-empty");
    }
    if (t.rows < 1 || t.cols < 1) {
        fail_input("tensor '", t.name, "': rows and cols must be >= 1, got ", t.rows, "x",
                   t.cols);
    }
    if (t.values.size() != t.element_count()) {
        fail_input("tensor '", t.name, "': expected ", t.element_count(), " values for shape ",
                   t.rows, "x", t.cols, ", got ", t.values.size());
    }
}

void Checkpoint::add_tensor(TensorRecord record) {
    validate_record(record);
    if (tensors.count(record.name) > 0) {
        fail_input("duplicate tensor name '", record.name, "'");
    }
    std::string key = record.name;
    tensors.emplace(std::move(key), std::move(record));
}

void Checkpoint::add_tensor(std::string name, std::uint64_t rows, std::uint64_t cols,
                            std::vector<float> values) {
    TensorRecord t;
    t.name = std::move(name);
    t.rows = rows;
    t.cols = cols;
    t.values = std::move(values);
    add_tensor(std::move(t));
}

const TensorRecord& Checkpoint::tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
        fail_input("unknown tensor name '", name, "'");
    }
    return it->second;
}

// --- payload encoding -------------------------------------------------

static void floats_to_le_bytes(const std::vector<float>& values, std::vector<char>& out) {
    out.resize(values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), values.data(), out.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
            out[4 * i + 0] = static_cast<char>(bits & 0xFF);
            out[4 * i + 1] = static_cast<char>((bits >> 8) & 0xFF);
            out[4 * i + 2] = static_cast<char>((bits >> 16) & 0xFF);
            out[4 * i + 3] = static_cast<char>((bits >> 24) & 0xFF);
        }
    }
}

static void le_bytes_to_floats(const std::vector<char>& in, std::vector<float>& values) {
    values.resize(in.size() / 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), in.data(), in.size());
    } else {
        const auto* p = reinterpret_cast<const unsigned char*>(in.data());
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = std::bit_cast<float>(container::get_u32le(p + 4 * i));
        }
    }
}

// --- write -------------------------------------------------------------

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    for (const auto& [name, t] : ckpt.tensors) {
        if (name != t.name) {
            fail_input("tensor map key '", name, "' does not match record name '", t.name, "'");
        }
        validate_record(t);
    }

    json header;
    header["meta"] = ckpt.meta;
    json tensors = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : ckpt.tensors) {
        const std::uint64_t nbytes = t.element_count() * 4;
        tensors.push_back({{"name", name},
                           {"dtype", "f32"},
                           {"shape", {t.rows, t.cols}},
                           {"offset", offset},
                           {"nbytes", nbytes}});
        offset = container::align8(offset + nbytes);
    }
    header["tensors"] = std::move(tensors);
    const std::string header_json = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    container::write_prologue(out, path, "KENC", header_json);

    std::uint64_t position = 0;
    std::size_t index = 0;
    std::vector<char> bytes;
    static const char zeros[8] = {0};
    for (const auto& [name, t] : ckpt.tensors) {
        (void)name;
        floats_to_le_bytes(t.values, bytes);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        position += bytes.size();
        ++index;
        const std::uint64_t aligned = container::align8(position);
        if (aligned > position && index < ckpt.tensors.size()) {
            out.write(zeros, static_cast<std::streamsize>(aligned - position));
            position = aligned;
        }
    }
    out.flush();
    if (!out) {
        fail_io("write failed: ", path);
    }
}

// --- read --------------------------------------------------------------

static std::map<std::string, std::string> parse_meta(const json& header, const std::string& path) {
    auto it = header.find("meta");
    if (it == header.end() || !it->is_object()) {
        fail_input(path, ": header missing \"meta\" object");
    }
    std::map<std::string, std::string> meta;
    for (const auto& [key, value] : it->items()) {
        if (!value.is_string()) {
            fail_input(path, ": meta value for key '", key, "' must be a string");
        }
        meta[key] = value.get<std::string>();
    }
    return meta;
}

static std::uint64_t require_u64(const json& obj, const char* field, const std::string& path,
                                 const std::string& tensor_name) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_number_unsigned()) {
        fail_input(path, ": tensor '", tensor_name, "': missing or invalid \"", field, "\"");
    }
    return it->get<std::uint64_t>();
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    container::Prologue pro = container::read_prologue(in, path, "KENC");

    json header;
    try {
        header = json::parse(pro.header_json);
    } catch (const json::parse_error& e) {
        fail_input(path, ": invalid header JSON: ", e.what());
    }
    if (!header.is_object()) {
        fail_input(path, ": header must be a JSON object");
    }

    Checkpoint ckpt;
    ckpt.meta = parse_meta(header, path);

    auto tensors_it = header.find("tensors");
    if (tensors_it == header.end() || !tensors_it->is_array()) {
        fail_input(path, ": header missing \"tensors\" array");
    }

    std::uint64_t expected_offset = 0;
    std::string previous_name;
    std::vector<char> bytes;
    for (const auto& entry : *tensors_it) {
        if (!entry.is_object()) {
            fail_input(path, ": tensor table entry is not an object");
        }
        auto name_it = entry.find("name");
        if (name_it == entry.end() || !name_it->is_string()) {
            fail_input(path, ": tensor table entry missing \"name\"");
        }
        const std::string name = name_it->get<std::string>();
        if (name.empty()) {
            fail_input(path, ": tensor name must be non-empty");
        }
        if (!previous_name.empty() && !(previous_name < name)) {
            fail_input(path, ": header/offset inconsistency: tensors not sorted by name ('",
                       previous_name, "' before '", name, "')");
        }
        previous_name = name;

        auto dtype_it = entry.find("dtype");
        if (dtype_it == entry.end() || !dtype_it->is_string() ||
            dtype_it->get<std::string>() != "f32") {
            const std::string dtype = (dtype_it != entry.end() && dtype_it->is_string())
                                          ? dtype_it->get<std::string>()
                                          : "<missing>";
            fail_input(path, ": tensor '", name, "': unsupported dtype \"", dtype,
                       "\" (only f32)");
        }

        auto shape_it = entry.find("shape");
        if (shape_it == entry.end() || !shape_it->is_array()) {
            fail_input(path, ": tensor '", name, "': missing \"shape\" array");
        }
        if (shape_it->size() != 2) {
            fail_input(path, ": tensor '", name, "': only 2-D tensors are supported, got ",
                       shape_it->size(), "-D shape");
        }
        for (const auto& dim : *shape_it) {
            if (!dim.is_number_unsigned()) {
                fail_input(path, ": tensor '", name, "': shape entries must be unsigned integers");
            }
        }
        const std::uint64_t rows = (*shape_it)[0].get<std::uint64_t>();
        const std::uint64_t cols = (*shape_it)[1].get<std::uint64_t>();
        if (rows < 1 || cols < 1) {
            fail_input(path, ": tensor '", name, "': rows and cols must be >= 1, got ", rows,
                       "x", cols);
        }
        if (rows > UINT64_MAX / 4 / cols) {
            fail_input(path, ": tensor '", name, "': shape ", rows, "x", cols, " overflows");
        }

        const std::uint64_t offset = require_u64(entry, "offset", path, name);
        const std::uint64_t nbytes = require_u64(entry, "nbytes", path, name);
        if (nbytes != rows * cols * 4) {
            fail_input(path, ": header/offset inconsistency: tensor '", name, "': nbytes ",
                       nbytes, " does not match shape ", rows, "x", cols, " (expected ",
                       rows * cols * 4, ")");
        }
        if (offset != expected_offset) {
            fail_input(path, ": header/offset inconsistency: tensor '", name, "': offset ",
                       offset, " (expected ", expected_offset, ")");
        }
        if (offset + nbytes > pro.payload_size) {
            fail_input(path, ": truncated payload: tensor '", name, "' at byte offset ",
                       pro.payload_offset + offset, " needs ", nbytes,
                       " bytes but payload region has ", pro.payload_size);
        }
        expected_offset = container::align8(offset + nbytes);

        bytes.resize(nbytes);
        in.seekg(static_cast<std::streamoff>(pro.payload_offset + offset));
        if (nbytes > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(nbytes))) {
            fail_input(path, ": truncated payload: tensor '", name, "' at byte offset ",
                       pro.payload_offset + offset);
        }

        TensorRecord t;
        t.name = name;
        t.rows = rows;
        t.cols = cols;
        le_bytes_to_floats(bytes, t.values);
        ckpt.add_tensor(std::move(t));
    }
    return ckpt;
}

// --- diff / equality ---------------------------------------------------

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

bool bit_equal(const Checkpoint& a, const Checkpoint& b) {
    if (a.meta != b.meta || a.tensors.size() != b.tensors.size()) {
        return false;
    }
    auto ita = a.tensors.begin();
    auto itb = b.tensors.begin();
    for (; ita != a.tensors.end(); ++ita, ++itb) {
        if (ita->first != itb->first || ita->second.rows != itb->second.rows ||
            ita->second.cols != itb->second.cols ||
            !bit_equal(ita->second.values, itb->second.values)) {
            return false;
        }
    }
    return true;
}

std::vector<std::string> diff_checkpoints(const Checkpoint& a, const Checkpoint& b) {
    auto ita = a.tensors.begin();
    auto itb = b.tensors.begin();
    while (ita != a.tensors.end() || itb != b.tensors.end()) {
        if (ita == a.tensors.end() || (itb != b.tensors.end() && itb->first < ita->first)) {
            fail_input("tensor name sets differ: '", itb->first,
                       "' is missing from the first checkpoint");
        }
        if (itb == b.tensors.end() || ita->first < itb->first) {
            fail_input("tensor name sets differ: '", ita->first,
                       "' is missing from the second checkpoint");
        }
        ++ita;
        ++itb;
    }

    std::vector<std::string> changed;
    for (const auto& [name, ta] : a.tensors) {
        const TensorRecord& tb = b.tensors.at(name);
        if (ta.rows != tb.rows || ta.cols != tb.cols) {
            fail_input("tensor '", name, "': shape mismatch (", ta.rows, "x", ta.cols, " vs ",
                       tb.rows, "x", tb.cols, ")");
        }
        if (!bit_equal(ta.values, tb.values)) {
            changed.push_back(name);
        }
    }
    return changed;  // map iteration keeps this sorted
}

}  // namespace kenforge
