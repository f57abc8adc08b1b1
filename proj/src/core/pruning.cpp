// SPDX-License-Identifier: Apache-2.0
//
// KENM v1 mask container:
//
//   bytes 0..3    magic "KENM"
//   bytes 4..7    version u32 LE = 1
//   bytes 8..15   header_len u64 LE
//   header        UTF-8 JSON:
//                 {"k": u64, "meta": {..},
//                  "masks": [{"name": s, "shape": [rows, cols],
//                             "offset": u64, "nbytes": u64}, ...]}
//                 masks sorted by name; offsets relative to the end of the
//                 header, contiguous and 8-byte aligned (zero padding)
//   payload       row-major bitmaps, MSB-first within a byte, each row
//                 padded to a whole byte; padding bits are zero
#include "core/pruning.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "core/container.hpp"
#include "core/error.hpp"
#include "core/parallel.hpp"
#include "core/subprocess.hpp"

namespace kenforge {

using nlohmann::json;
namespace fs = std::filesystem;

const BitMatrix& MaskSet::mask(const std::string& name) const {
    auto it = masks.find(name);
    if (it == masks.end()) {
        fail_input("no mask for tensor '", name, "'");
    }
    return it->second;
}

// --- mask construction ---------------------------------------------------

static std::set<std::string> unique_names(const std::vector<std::string>& names) {
    return {names.begin(), names.end()};
}

MaskSet build_masks(const Checkpoint& fine, const std::vector<std::string>& prunable,
                    std::uint64_t k, const KdeConfig& config) {
    config.validate();
    MaskSet out;
    out.k_per_row = k;
    out.source_meta = fine.meta;
    for (const std::string& name : unique_names(prunable)) {
        const TensorRecord& t = fine.tensor(name);
        BitMatrix bm(t.rows, t.cols);
        parallel_for(t.rows, [&](std::uint64_t begin, std::uint64_t end) {
            std::vector<double> row(t.cols);
            for (std::uint64_t r = begin; r < end; ++r) {
                const float* src = t.values.data() + r * t.cols;
                for (std::uint64_t c = 0; c < t.cols; ++c) {
                    row[c] = static_cast<double>(src[c]);
                }
                std::vector<std::uint64_t> order;
                try {
                    order = density_rank_order(row, config);
                } catch (const Error& e) {
                    fail_input("tensor '", name, "', row ", r, ": ", e.what());
                }
                const std::uint64_t keep = std::min<std::uint64_t>(k, t.cols);
                for (std::uint64_t i = 0; i < keep; ++i) {
                    bm.set(r, order[i], true);
                }
            }
        });
        out.masks.emplace(name, std::move(bm));
    }
    return out;
}

Checkpoint apply_masks(const Checkpoint& pre, const Checkpoint& fine, const MaskSet& masks) {
    for (const auto& [name, bm] : masks.masks) {
        if (!fine.has_tensor(name)) {
            fail_input("mask references missing tensor '", name, "' in fine-tuned checkpoint");
        }
        if (!pre.has_tensor(name)) {
            fail_input("mask references missing tensor '", name, "' in pre-trained checkpoint");
        }
        const TensorRecord& tf = fine.tensor(name);
        const TensorRecord& tp = pre.tensor(name);
        if (tf.rows != tp.rows || tf.cols != tp.cols) {
            fail_input("tensor '", name, "': shape mismatch between pre-trained (", tp.rows, "x",
                       tp.cols, ") and fine-tuned (", tf.rows, "x", tf.cols, ")");
        }
        if (bm.rows() != tf.rows || bm.cols() != tf.cols) {
            fail_input("mask for tensor '", name, "' has shape ", bm.rows(), "x", bm.cols(),
                       " but the tensor is ", tf.rows, "x", tf.cols);
        }
    }

    Checkpoint out;
    out.tensors = fine.tensors;
    out.meta = fine.meta;
    out.meta["state"] = "pruned";
    for (const auto& [name, bm] : masks.masks) {
        TensorRecord& dst = out.tensors.at(name);
        const TensorRecord& src_pre = pre.tensor(name);
        parallel_for(dst.rows, [&](std::uint64_t begin, std::uint64_t end) {
            for (std::uint64_t r = begin; r < end; ++r) {
                const std::uint64_t base = r * dst.cols;
                for (std::uint64_t c = 0; c < dst.cols; ++c) {
                    if (!bm.get(r, c)) {
                        dst.values[base + c] = src_pre.values[base + c];
                    }
                }
            }
        });
    }
    return out;
}

// --- reset statistics ------------------------------------------------------

static void require_mask_matches_tensor(const std::string& name, const BitMatrix& bm,
                                        const TensorRecord& t) {
    if (bm.rows() != t.rows || bm.cols() != t.cols) {
        fail_input("mask for tensor '", name, "' has shape ", bm.rows(), "x", bm.cols(),
                   " but the tensor is ", t.rows, "x", t.cols);
    }
}

PruneReport reset_percentage(const MaskSet& masks, const Checkpoint& fine, ResetScope scope,
                             const std::vector<std::string>& scope_names) {
    PruneReport report;
    if (scope == ResetScope::masked_only) {
        for (const auto& [name, bm] : masks.masks) {
            const TensorRecord& t = fine.tensor(name);
            require_mask_matches_tensor(name, bm, t);
            report.per_tensor[name] = {bm.popcount(), t.element_count()};
        }
    } else {
        for (const std::string& name : unique_names(scope_names)) {
            const TensorRecord& t = fine.tensor(name);
            std::uint64_t retained = 0;
            if (masks.has(name)) {
                const BitMatrix& bm = masks.mask(name);
                require_mask_matches_tensor(name, bm, t);
                retained = bm.popcount();
            }
            report.per_tensor[name] = {retained, t.element_count()};
        }
    }

    std::uint64_t retained_sum = 0;
    std::uint64_t total_sum = 0;
    for (const auto& [name, counts] : report.per_tensor) {
        retained_sum += counts.retained;
        total_sum += counts.total;
    }
    report.model_reset_pct =
        total_sum > 0
            ? 100.0 * (1.0 - static_cast<double>(retained_sum) / static_cast<double>(total_sum))
            : 0.0;
    return report;
}

// --- k sweep ----------------------------------------------------------------

namespace {

// Per-row density rankings of one tensor, flattened row-major. Computed
// once per sweep so each schedule point is a prefix slice.
struct RankedTensor {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::vector<std::uint32_t> order;  // rows segments of cols ranked indices
};

std::map<std::string, RankedTensor> rank_all(const Checkpoint& fine,
                                             const std::vector<std::string>& prunable,
                                             const KdeConfig& config) {
    std::map<std::string, RankedTensor> ranked;
    for (const std::string& name : unique_names(prunable)) {
        const TensorRecord& t = fine.tensor(name);
        if (t.cols > UINT32_MAX) {
            fail_input("tensor '", name, "' is too wide to rank (", t.cols, " columns)");
        }
        RankedTensor rt;
        rt.rows = t.rows;
        rt.cols = t.cols;
        rt.order.resize(t.rows * t.cols);
        parallel_for(t.rows, [&](std::uint64_t begin, std::uint64_t end) {
            std::vector<double> row(t.cols);
            for (std::uint64_t r = begin; r < end; ++r) {
                const float* src = t.values.data() + r * t.cols;
                for (std::uint64_t c = 0; c < t.cols; ++c) {
                    row[c] = static_cast<double>(src[c]);
                }
                std::vector<std::uint64_t> order;
                try {
                    order = density_rank_order(row, config);
                } catch (const Error& e) {
                    fail_input("tensor '", name, "', row ", r, ": ", e.what());
                }
                std::uint32_t* dst = rt.order.data() + r * t.cols;
                for (std::uint64_t c = 0; c < t.cols; ++c) {
                    dst[c] = static_cast<std::uint32_t>(order[c]);
                }
            }
        });
        ranked.emplace(name, std::move(rt));
    }
    return ranked;
}

MaskSet masks_for_k(const std::map<std::string, RankedTensor>& ranked, std::uint64_t k,
                    const std::map<std::string, std::string>& source_meta) {
    MaskSet out;
    out.k_per_row = k;
    out.source_meta = source_meta;
    for (const auto& [name, rt] : ranked) {
        BitMatrix bm(rt.rows, rt.cols);
        const std::uint64_t keep = std::min<std::uint64_t>(k, rt.cols);
        for (std::uint64_t r = 0; r < rt.rows; ++r) {
            const std::uint32_t* order = rt.order.data() + r * rt.cols;
            for (std::uint64_t i = 0; i < keep; ++i) {
                bm.set(r, order[i], true);
            }
        }
        out.masks.emplace(name, std::move(bm));
    }
    return out;
}

}  // namespace

SweepResult k_sweep(const Checkpoint& pre, const Checkpoint& fine,
                    const std::vector<std::string>& prunable, const KdeConfig& config,
                    Evaluator& evaluator, const std::vector<std::uint64_t>& schedule,
                    double baseline) {
    config.validate();
    if (schedule.empty()) {
        fail_input("k schedule must be non-empty");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i] <= schedule[i - 1]) {
            fail_input("k schedule must be strictly ascending: ", schedule[i - 1],
                       " followed by ", schedule[i]);
        }
    }

    const auto ranked = rank_all(fine, prunable, config);

    SweepResult result;
    for (std::uint64_t k : schedule) {
        MaskSet masks = masks_for_k(ranked, k, fine.meta);
        const Checkpoint pruned = apply_masks(pre, fine, masks);
        double s = 0.0;
        try {
            s = evaluator.score(pruned);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::evaluator) {
                fail_evaluator("k=", k, ": ", e.what());
            }
            throw;
        } catch (const std::exception& e) {
            fail_evaluator("k=", k, ": evaluator failed: ", e.what());
        }
        const bool meets = s >= baseline;
        result.trace.push_back({k, s, meets});
        if (meets) {
            result.k_star = k;
            result.reached_baseline = true;
            result.masks = std::move(masks);
            return result;
        }
        if (k == schedule.back()) {
            result.masks = std::move(masks);
        }
    }
    result.k_star = schedule.back();
    result.reached_baseline = false;
    return result;
}

// --- evaluators --------------------------------------------------------------

SyntheticQuadraticEvaluator::SyntheticQuadraticEvaluator(Checkpoint reference)
    : reference_(std::move(reference)) {}

double SyntheticQuadraticEvaluator::score(const Checkpoint& pruned) {
    if (pruned.tensors.size() != reference_.tensors.size()) {
        fail_evaluator("candidate has ", pruned.tensors.size(), " tensors, reference has ",
                       reference_.tensors.size());
    }
    double sum = 0.0;
    for (const auto& [name, ref] : reference_.tensors) {
        auto it = pruned.tensors.find(name);
        if (it == pruned.tensors.end()) {
            fail_evaluator("candidate is missing tensor '", name, "'");
        }
        const TensorRecord& got = it->second;
        if (got.rows != ref.rows || got.cols != ref.cols) {
            fail_evaluator("tensor '", name, "': shape mismatch (", got.rows, "x", got.cols,
                           " vs ", ref.rows, "x", ref.cols, ")");
        }
        for (std::size_t i = 0; i < ref.values.size(); ++i) {
            const double d = static_cast<double>(got.values[i]) - static_cast<double>(ref.values[i]);
            sum += d * d;
        }
    }
    return -sum;
}

ExternalCommandEvaluator::ExternalCommandEvaluator(std::vector<std::string> command)
    : command_(std::move(command)) {
    if (command_.empty()) {
        fail_input("external evaluator command must be non-empty");
    }
}

namespace {

struct TempFile {
    std::string path;
    ~TempFile() {
        if (!path.empty()) {
            std::error_code ec;
            fs::remove(path, ec);
        }
    }
};

}  // namespace

double ExternalCommandEvaluator::score(const Checkpoint& pruned) {
    std::string templ = (fs::temp_directory_path() / "kenforge-eval-XXXXXX.kenc").string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    const int fd = mkstemps(buf.data(), 5);
    if (fd < 0) {
        fail_evaluator("cannot create temp checkpoint: ", std::strerror(errno));
    }
    close(fd);
    TempFile tmp{std::string(buf.data())};
    write_checkpoint(pruned, tmp.path);

    std::vector<std::string> argv = command_;
    argv.push_back(tmp.path);
    const CommandResult run = run_command_capture(argv);
    if (run.term_signal != 0) {
        fail_evaluator("evaluator command '", command_[0], "' killed by signal ",
                       run.term_signal);
    }
    if (run.exit_code != 0) {
        fail_evaluator("evaluator command '", command_[0], "' exited with status ",
                       run.exit_code, run.exit_code == 127 ? " (command not found?)" : "");
    }

    std::istringstream tokens(run.stdout_text);
    std::string token;
    std::string last;
    while (tokens >> token) {
        last = token;
    }
    if (last.empty()) {
        fail_evaluator("evaluator command '", command_[0], "' printed no score on stdout");
    }
    double value = 0.0;
    const char* begin = last.data();
    const char* end = last.data() + last.size();
    auto [parsed, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || parsed != end) {
        fail_evaluator("evaluator output token '", last, "' is not a decimal score");
    }
    return value;
}

// --- report serialization --------------------------------------------------------

nlohmann::json prune_report_json(const PruneReport& report) {
    json per_tensor = json::object();
    for (const auto& [name, counts] : report.per_tensor) {
        per_tensor[name] = {{"retained", counts.retained}, {"total", counts.total}};
    }
    return json{{"model_reset_pct", report.model_reset_pct}, {"per_tensor", per_tensor}};
}

nlohmann::json sweep_result_json(const SweepResult& result, double baseline) {
    json trace = json::array();
    for (const SweepPoint& point : result.trace) {
        trace.push_back({{"k", point.k},
                         {"score", point.score},
                         {"meets_baseline", point.meets_baseline}});
    }
    return json{{"k_star", result.k_star},
                {"reached_baseline", result.reached_baseline},
                {"baseline", baseline},
                {"trace", trace}};
}

// --- KENM container I/O --------------------------------------------------------

void write_maskset(const MaskSet& masks, const std::string& path) {
    json header;
    header["k"] = masks.k_per_row;
    header["meta"] = masks.source_meta;
    json table = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, bm] : masks.masks) {
        if (name.empty()) {
            fail_input("mask tensor name must be non-empty");
        }
        const std::uint64_t nbytes = bm.byte_size();
        table.push_back({{"name", name},
                         {"shape", {bm.rows(), bm.cols()}},
                         {"offset", offset},
                         {"nbytes", nbytes}});
        offset = container::align8(offset + nbytes);
    }
    header["masks"] = std::move(table);
    const std::string header_json = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    container::write_prologue(out, path, "KENM", header_json);

    std::uint64_t position = 0;
    std::size_t index = 0;
    static const char zeros[8] = {0};
    for (const auto& [name, bm] : masks.masks) {
        (void)name;
        out.write(reinterpret_cast<const char*>(bm.data()),
                  static_cast<std::streamsize>(bm.byte_size()));
        position += bm.byte_size();
        ++index;
        const std::uint64_t aligned = container::align8(position);
        if (aligned > position && index < masks.masks.size()) {
            out.write(zeros, static_cast<std::streamsize>(aligned - position));
            position = aligned;
        }
    }
    out.flush();
    if (!out) {
        fail_io("write failed: ", path);
    }
}

MaskSet read_maskset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    container::Prologue pro = container::read_prologue(in, path, "KENM");

    json header;
    try {
        header = json::parse(pro.header_json);
    } catch (const json::parse_error& e) {
        fail_input(path, ": invalid header JSON: ", e.what());
    }
    if (!header.is_object()) {
        fail_input(path, ": header must be a JSON object");
    }

    MaskSet out;
    auto k_it = header.find("k");
    if (k_it == header.end() || !k_it->is_number_unsigned()) {
        fail_input(path, ": header missing unsigned \"k\"");
    }
    out.k_per_row = k_it->get<std::uint64_t>();

    auto meta_it = header.find("meta");
    if (meta_it == header.end() || !meta_it->is_object()) {
        fail_input(path, ": header missing \"meta\" object");
    }
    for (const auto& [key, value] : meta_it->items()) {
        if (!value.is_string()) {
            fail_input(path, ": meta value for key '", key, "' must be a string");
        }
        out.source_meta[key] = value.get<std::string>();
    }

    auto masks_it = header.find("masks");
    if (masks_it == header.end() || !masks_it->is_array()) {
        fail_input(path, ": header missing \"masks\" array");
    }

    std::uint64_t expected_offset = 0;
    std::string previous_name;
    for (const auto& entry : *masks_it) {
        if (!entry.is_object()) {
            fail_input(path, ": mask table entry is not an object");
        }
        auto name_it = entry.find("name");
        if (name_it == entry.end() || !name_it->is_string()) {
            fail_input(path, ": mask table entry missing \"name\"");
        }
        const std::string name = name_it->get<std::string>();
        if (name.empty()) {
            fail_input(path, ": mask tensor name must be non-empty");
        }
        if (!previous_name.empty() && !(previous_name < name)) {
            fail_input(path, ": header/offset inconsistency: masks not sorted by name ('",
                       previous_name, "' before '", name, "')");
        }
        previous_name = name;

        auto shape_it = entry.find("shape");
        if (shape_it == entry.end() || !shape_it->is_array() || shape_it->size() != 2 ||
            !(*shape_it)[0].is_number_unsigned() || !(*shape_it)[1].is_number_unsigned()) {
            fail_input(path, ": mask '", name, "': missing or invalid 2-D \"shape\"");
        }
        const std::uint64_t rows = (*shape_it)[0].get<std::uint64_t>();
        const std::uint64_t cols = (*shape_it)[1].get<std::uint64_t>();
        if (rows < 1 || cols < 1) {
            fail_input(path, ": mask '", name, "': rows and cols must be >= 1, got ", rows, "x",
                       cols);
        }

        const std::uint64_t stride = (cols + 7) / 8;
        if (rows > UINT64_MAX / stride) {
            fail_input(path, ": mask '", name, "': shape ", rows, "x", cols, " overflows");
        }
        const std::uint64_t want_nbytes = rows * stride;

        auto off_it = entry.find("offset");
        auto nbytes_it = entry.find("nbytes");
        if (off_it == entry.end() || !off_it->is_number_unsigned() || nbytes_it == entry.end() ||
            !nbytes_it->is_number_unsigned()) {
            fail_input(path, ": mask '", name, "': missing or invalid \"offset\"/\"nbytes\"");
        }
        const std::uint64_t offset = off_it->get<std::uint64_t>();
        const std::uint64_t nbytes = nbytes_it->get<std::uint64_t>();
        if (nbytes != want_nbytes) {
            fail_input(path, ": header/offset inconsistency: mask '", name, "': nbytes ", nbytes,
                       " does not match shape ", rows, "x", cols, " (expected ", want_nbytes,
                       ")");
        }
        if (offset != expected_offset) {
            fail_input(path, ": header/offset inconsistency: mask '", name, "': offset ", offset,
                       " (expected ", expected_offset, ")");
        }
        if (offset + nbytes > pro.payload_size) {
            fail_input(path, ": truncated payload: mask '", name, "' at byte offset ",
                       pro.payload_offset + offset, " needs ", nbytes,
                       " bytes but payload region has ", pro.payload_size);
        }
        expected_offset = container::align8(offset + nbytes);

        BitMatrix bm(rows, cols);
        in.seekg(static_cast<std::streamoff>(pro.payload_offset + offset));
        if (!in.read(reinterpret_cast<char*>(bm.data()),
                     static_cast<std::streamsize>(bm.byte_size()))) {
            fail_input(path, ": truncated payload: mask '", name, "' at byte offset ",
                       pro.payload_offset + offset);
        }

        const std::uint8_t pad_mask = bm.last_byte_mask();
        if (pad_mask != 0xFF) {
            for (std::uint64_t r = 0; r < rows; ++r) {
                const std::uint8_t last = bm.row(r)[stride - 1];
                if ((last & static_cast<std::uint8_t>(~pad_mask)) != 0) {
                    fail_input(path, ": mask '", name, "': nonzero padding bits in row ", r);
                }
            }
        }

        out.masks.emplace(name, std::move(bm));
    }
    return out;
}

}  // namespace kenforge
