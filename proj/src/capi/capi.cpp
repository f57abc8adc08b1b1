// SPDX-License-Identifier: Apache-2.0
//
// extern "C" surface of the kenforge shared library. Handles wrap the C++
// core by value; every entry point traps exceptions and maps them to
// status codes, stashing the message in a thread-local slot.
#include "kenforge.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/checkpoint.hpp"
#include "core/distill.hpp"
#include "core/error.hpp"
#include "core/kde.hpp"
#include "core/pruning.hpp"
#include "core/viz.hpp"

struct kf_checkpoint {
    kenforge::Checkpoint owned;
    const kenforge::Checkpoint* view = nullptr;  // borrowed, read-only (callback shims)

    const kenforge::Checkpoint& get() const { return view ? *view : owned; }
    kenforge::Checkpoint& mut() {
        if (view) {
            kenforge::fail_input("checkpoint handle is read-only");
        }
        return owned;
    }
};

struct kf_maskset {
    kenforge::MaskSet v;
};

struct kf_evaluator {
    std::unique_ptr<kenforge::Evaluator> v;
};

namespace {

thread_local std::string g_last_error;

void set_last_error(const char* message) { g_last_error = message ? message : ""; }

template <typename Fn>
kf_status wrap(Fn&& fn) noexcept {
    try {
        fn();
        return KF_STATUS_OK;
    } catch (const kenforge::Error& e) {
        set_last_error(e.what());
        return static_cast<kf_status>(e.code());
    } catch (const std::exception& e) {
        set_last_error(e.what());
        return KF_STATUS_INTERNAL;
    } catch (...) {
        set_last_error("unknown error");
        return KF_STATUS_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) {
        kenforge::fail_input(what);
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

kenforge::KdeConfig to_config(const kf_kde_config* config) {
    require(config != nullptr, "kde config is NULL");
    kenforge::KdeConfig out;
    switch (config->bandwidth_rule) {
        case KF_BANDWIDTH_SCOTT:
            out.bandwidth_rule = kenforge::BandwidthRule::scott;
            break;
        case KF_BANDWIDTH_SILVERMAN:
            out.bandwidth_rule = kenforge::BandwidthRule::silverman;
            break;
        case KF_BANDWIDTH_FIXED:
            out.bandwidth_rule = kenforge::BandwidthRule::fixed;
            break;
        default:
            kenforge::fail_input("unknown bandwidth rule ",
                                 static_cast<int>(config->bandwidth_rule));
    }
    out.fixed_h = config->fixed_h;
    out.degenerate_bandwidth = config->degenerate_bandwidth;
    out.validate();
    return out;
}

std::vector<std::string> to_names(const char* const* names, uint64_t count) {
    require(names != nullptr || count == 0, "name array is NULL");
    std::vector<std::string> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        require(names[i] != nullptr, "name array entry is NULL");
        out.emplace_back(names[i]);
    }
    return out;
}

kenforge::TensorFilter to_filter(const char* const* names, uint64_t n_names,
                                 const char* regex) {
    kenforge::TensorFilter filter;
    filter.names = to_names(names, n_names);
    if (regex != nullptr) {
        filter.regex = regex;
    }
    return filter;
}

class CallbackEvaluator : public kenforge::Evaluator {
public:
    CallbackEvaluator(kf_score_fn fn, void* user_data) : fn_(fn), user_data_(user_data) {}

    double score(const kenforge::Checkpoint& pruned) override {
        kf_checkpoint shim;
        shim.view = &pruned;
        double value = 0.0;
        const kf_status status = fn_(&shim, user_data_, &value);
        if (status != KF_STATUS_OK) {
            kenforge::fail_evaluator("evaluator callback returned status ", status);
        }
        return value;
    }

private:
    kf_score_fn fn_;
    void* user_data_;
};

}  // namespace

extern "C" {

const char* kf_last_error(void) { return g_last_error.c_str(); }

const char* kf_version(void) { return "1.0.0"; }

void kf_string_free(char* s) { std::free(s); }

void kf_string_array_free(char** strings, uint64_t count) {
    if (strings == nullptr) {
        return;
    }
    for (uint64_t i = 0; i < count; ++i) {
        std::free(strings[i]);
    }
    std::free(strings);
}

/* ---- KDE configuration ------------------------------------------------ */

void kf_kde_config_default(kf_kde_config* config) {
    if (config == nullptr) {
        return;
    }
    config->bandwidth_rule = KF_BANDWIDTH_SCOTT;
    config->fixed_h = 0.0;
    config->degenerate_bandwidth = 1e-9;
}

/* ---- checkpoints ------------------------------------------------------- */

kf_status kf_checkpoint_new(kf_checkpoint** out) {
    return wrap([&] {
        require(out != nullptr, "out pointer is NULL");
        *out = new kf_checkpoint();
    });
}

void kf_checkpoint_free(kf_checkpoint* ckpt) { delete ckpt; }

kf_status kf_checkpoint_read(const char* path, kf_checkpoint** out) {
    return wrap([&] {
        require(path != nullptr && out != nullptr, "path or out pointer is NULL");
        auto handle = std::make_unique<kf_checkpoint>();
        handle->owned = kenforge::read_checkpoint(path);
        *out = handle.release();
    });
}

kf_status kf_checkpoint_write(const kf_checkpoint* ckpt, const char* path) {
    return wrap([&] {
        require(ckpt != nullptr && path != nullptr, "checkpoint or path is NULL");
        kenforge::write_checkpoint(ckpt->get(), path);
    });
}

kf_status kf_checkpoint_add_tensor(kf_checkpoint* ckpt, const char* name, uint64_t rows,
                                   uint64_t cols, const float* values) {
    return wrap([&] {
        require(ckpt != nullptr && name != nullptr && values != nullptr,
                "checkpoint, name or values is NULL");
        if (rows < 1 || cols < 1 || rows > UINT64_MAX / sizeof(float) / cols) {
            kenforge::fail_input("tensor '", name, "': invalid shape ", rows, "x", cols);
        }
        ckpt->mut().add_tensor(name, rows, cols,
                               std::vector<float>(values, values + rows * cols));
    });
}

kf_status kf_checkpoint_meta_set(kf_checkpoint* ckpt, const char* key, const char* value) {
    return wrap([&] {
        require(ckpt != nullptr && key != nullptr && value != nullptr,
                "checkpoint, key or value is NULL");
        ckpt->mut().meta[key] = value;
    });
}

const char* kf_checkpoint_meta_get(const kf_checkpoint* ckpt, const char* key) {
    if (ckpt == nullptr || key == nullptr) {
        return nullptr;
    }
    const auto& meta = ckpt->get().meta;
    auto it = meta.find(key);
    return it != meta.end() ? it->second.c_str() : nullptr;
}

uint64_t kf_checkpoint_tensor_count(const kf_checkpoint* ckpt) {
    return ckpt == nullptr ? 0 : ckpt->get().tensors.size();
}

const char* kf_checkpoint_tensor_name(const kf_checkpoint* ckpt, uint64_t index) {
    if (ckpt == nullptr || index >= ckpt->get().tensors.size()) {
        return nullptr;
    }
    auto it = ckpt->get().tensors.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(index));
    return it->first.c_str();
}

kf_status kf_checkpoint_tensor_shape(const kf_checkpoint* ckpt, const char* name,
                                     uint64_t* rows, uint64_t* cols) {
    return wrap([&] {
        require(ckpt != nullptr && name != nullptr && rows != nullptr && cols != nullptr,
                "checkpoint, name or out pointer is NULL");
        const kenforge::TensorRecord& t = ckpt->get().tensor(name);
        *rows = t.rows;
        *cols = t.cols;
    });
}

const float* kf_checkpoint_tensor_values(const kf_checkpoint* ckpt, const char* name) {
    if (ckpt == nullptr || name == nullptr) {
        return nullptr;
    }
    auto it = ckpt->get().tensors.find(name);
    return it != ckpt->get().tensors.end() ? it->second.values.data() : nullptr;
}

kf_status kf_checkpoint_diff(const kf_checkpoint* a, const kf_checkpoint* b, char*** out_names,
                             uint64_t* out_count) {
    return wrap([&] {
        require(a != nullptr && b != nullptr && out_names != nullptr && out_count != nullptr,
                "checkpoint or out pointer is NULL");
        const std::vector<std::string> names =
            kenforge::diff_checkpoints(a->get(), b->get());
        char** array = static_cast<char**>(std::malloc(sizeof(char*) * std::max<std::size_t>(
                                                                           names.size(), 1)));
        if (array == nullptr) {
            throw std::bad_alloc();
        }
        uint64_t filled = 0;
        try {
            for (; filled < names.size(); ++filled) {
                array[filled] = dup_string(names[filled]);
            }
        } catch (...) {
            kf_string_array_free(array, filled);
            throw;
        }
        *out_names = array;
        *out_count = names.size();
    });
}

/* ---- row-level KDE -------------------------------------------------------- */

kf_status kf_kde_bandwidth(const double* row, uint64_t n, const kf_kde_config* config,
                           double* out_h) {
    return wrap([&] {
        require(row != nullptr && out_h != nullptr, "row or out pointer is NULL");
        *out_h = kenforge::bandwidth(std::span<const double>(row, n), to_config(config));
    });
}

kf_status kf_kde_density(const double* row, uint64_t n, const kf_kde_config* config,
                         double* out_densities, double* out_h) {
    return wrap([&] {
        require(row != nullptr && out_densities != nullptr, "row or out pointer is NULL");
        const kenforge::RowDensity d =
            kenforge::kde_density(std::span<const double>(row, n), to_config(config));
        std::memcpy(out_densities, d.densities.data(), sizeof(double) * d.densities.size());
        if (out_h != nullptr) {
            *out_h = d.h_used;
        }
    });
}

kf_status kf_kde_select_top_k(const double* row, uint64_t n, uint64_t k,
                              const kf_kde_config* config, uint64_t* out_indices,
                              uint64_t* out_count) {
    return wrap([&] {
        require(row != nullptr && out_indices != nullptr && out_count != nullptr,
                "row or out pointer is NULL");
        const std::vector<uint64_t> selected =
            kenforge::select_top_k(std::span<const double>(row, n), k, to_config(config));
        std::memcpy(out_indices, selected.data(), sizeof(uint64_t) * selected.size());
        *out_count = selected.size();
    });
}

/* ---- masks and pruning ------------------------------------------------------ */

void kf_maskset_free(kf_maskset* masks) { delete masks; }

kf_status kf_maskset_read(const char* path, kf_maskset** out) {
    return wrap([&] {
        require(path != nullptr && out != nullptr, "path or out pointer is NULL");
        auto handle = std::make_unique<kf_maskset>();
        handle->v = kenforge::read_maskset(path);
        *out = handle.release();
    });
}

kf_status kf_maskset_write(const kf_maskset* masks, const char* path) {
    return wrap([&] {
        require(masks != nullptr && path != nullptr, "mask set or path is NULL");
        kenforge::write_maskset(masks->v, path);
    });
}

uint64_t kf_maskset_k(const kf_maskset* masks) {
    return masks == nullptr ? 0 : masks->v.k_per_row;
}

uint64_t kf_maskset_tensor_count(const kf_maskset* masks) {
    return masks == nullptr ? 0 : masks->v.masks.size();
}

const char* kf_maskset_tensor_name(const kf_maskset* masks, uint64_t index) {
    if (masks == nullptr || index >= masks->v.masks.size()) {
        return nullptr;
    }
    auto it = masks->v.masks.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(index));
    return it->first.c_str();
}

const char* kf_maskset_meta_get(const kf_maskset* masks, const char* key) {
    if (masks == nullptr || key == nullptr) {
        return nullptr;
    }
    auto it = masks->v.source_meta.find(key);
    return it != masks->v.source_meta.end() ? it->second.c_str() : nullptr;
}

kf_status kf_maskset_tensor_shape(const kf_maskset* masks, const char* name, uint64_t* rows,
                                  uint64_t* cols) {
    return wrap([&] {
        require(masks != nullptr && name != nullptr && rows != nullptr && cols != nullptr,
                "mask set, name or out pointer is NULL");
        const kenforge::BitMatrix& bm = masks->v.mask(name);
        *rows = bm.rows();
        *cols = bm.cols();
    });
}

kf_status kf_maskset_get_bit(const kf_maskset* masks, const char* name, uint64_t row,
                             uint64_t col, int32_t* out_bit) {
    return wrap([&] {
        require(masks != nullptr && name != nullptr && out_bit != nullptr,
                "mask set, name or out pointer is NULL");
        const kenforge::BitMatrix& bm = masks->v.mask(name);
        if (row >= bm.rows() || col >= bm.cols()) {
            kenforge::fail_input("bit index (", row, ", ", col, ") out of range for ",
                                 bm.rows(), "x", bm.cols(), " mask '", name, "'");
        }
        *out_bit = bm.get(row, col) ? 1 : 0;
    });
}

kf_status kf_build_masks(const kf_checkpoint* fine, const char* const* tensor_names,
                         uint64_t n_tensors, uint64_t k, const kf_kde_config* config,
                         kf_maskset** out) {
    return wrap([&] {
        require(fine != nullptr && out != nullptr, "checkpoint or out pointer is NULL");
        auto handle = std::make_unique<kf_maskset>();
        handle->v = kenforge::build_masks(fine->get(), to_names(tensor_names, n_tensors), k,
                                          to_config(config));
        *out = handle.release();
    });
}

kf_status kf_apply_masks(const kf_checkpoint* pre, const kf_checkpoint* fine,
                         const kf_maskset* masks, kf_checkpoint** out) {
    return wrap([&] {
        require(pre != nullptr && fine != nullptr && masks != nullptr && out != nullptr,
                "checkpoint, mask set or out pointer is NULL");
        auto handle = std::make_unique<kf_checkpoint>();
        handle->owned = kenforge::apply_masks(pre->get(), fine->get(), masks->v);
        *out = handle.release();
    });
}

kf_status kf_reset_report_json(const kf_maskset* masks, const kf_checkpoint* fine,
                               const char* const* scope_names, uint64_t n_scope,
                               char** out_json) {
    return wrap([&] {
        require(masks != nullptr && fine != nullptr && out_json != nullptr,
                "mask set, checkpoint or out pointer is NULL");
        kenforge::PruneReport report;
        if (scope_names == nullptr) {
            report = kenforge::reset_percentage(masks->v, fine->get(),
                                                kenforge::ResetScope::masked_only);
        } else {
            report = kenforge::reset_percentage(masks->v, fine->get(),
                                                kenforge::ResetScope::all_named,
                                                to_names(scope_names, n_scope));
        }
        *out_json = dup_string(kenforge::prune_report_json(report).dump());
    });
}

/* ---- evaluators --------------------------------------------------------------- */

kf_status kf_evaluator_external_new(const char* const* argv, uint64_t argc,
                                    kf_evaluator** out) {
    return wrap([&] {
        require(out != nullptr, "out pointer is NULL");
        auto handle = std::make_unique<kf_evaluator>();
        handle->v =
            std::make_unique<kenforge::ExternalCommandEvaluator>(to_names(argv, argc));
        *out = handle.release();
    });
}

kf_status kf_evaluator_synthetic_new(const kf_checkpoint* reference, kf_evaluator** out) {
    return wrap([&] {
        require(reference != nullptr && out != nullptr, "reference or out pointer is NULL");
        auto handle = std::make_unique<kf_evaluator>();
        handle->v = std::make_unique<kenforge::SyntheticQuadraticEvaluator>(reference->get());
        *out = handle.release();
    });
}

kf_status kf_evaluator_callback_new(kf_score_fn fn, void* user_data, kf_evaluator** out) {
    return wrap([&] {
        require(fn != nullptr && out != nullptr, "callback or out pointer is NULL");
        auto handle = std::make_unique<kf_evaluator>();
        handle->v = std::make_unique<CallbackEvaluator>(fn, user_data);
        *out = handle.release();
    });
}

void kf_evaluator_free(kf_evaluator* evaluator) { delete evaluator; }

kf_status kf_evaluator_score(kf_evaluator* evaluator, const kf_checkpoint* ckpt,
                             double* out_score) {
    return wrap([&] {
        require(evaluator != nullptr && ckpt != nullptr && out_score != nullptr,
                "evaluator, checkpoint or out pointer is NULL");
        *out_score = evaluator->v->score(ckpt->get());
    });
}

/* ---- sweep ----------------------------------------------------------------------- */

kf_status kf_k_sweep(const kf_checkpoint* pre, const kf_checkpoint* fine,
                     const char* const* tensor_names, uint64_t n_tensors,
                     const kf_kde_config* config, kf_evaluator* evaluator,
                     const uint64_t* schedule, uint64_t n_schedule, double baseline,
                     kf_maskset** out_masks, char** out_trace_json) {
    return wrap([&] {
        require(pre != nullptr && fine != nullptr && evaluator != nullptr,
                "checkpoint or evaluator is NULL");
        require(schedule != nullptr || n_schedule == 0, "schedule is NULL");
        std::vector<uint64_t> ks;
        if (n_schedule > 0) {
            ks.assign(schedule, schedule + n_schedule);
        }
        kenforge::SweepResult result =
            kenforge::k_sweep(pre->get(), fine->get(), to_names(tensor_names, n_tensors),
                              to_config(config), *evaluator->v, ks, baseline);
        if (out_trace_json != nullptr) {
            *out_trace_json = dup_string(kenforge::sweep_result_json(result, baseline).dump());
        }
        if (out_masks != nullptr) {
            auto handle = std::make_unique<kf_maskset>();
            handle->v = std::move(result.masks);
            *out_masks = handle.release();
        }
    });
}

/* ---- analysis ----------------------------------------------------------------------- */

kf_status kf_pairwise_overlap_json(const kf_maskset* a, const kf_maskset* b,
                                   const char* label_a, const char* label_b,
                                   const char* const* tensor_names, uint64_t n_tensors,
                                   const char* tensor_regex, char** out_json) {
    return wrap([&] {
        require(a != nullptr && b != nullptr && label_a != nullptr && label_b != nullptr &&
                    out_json != nullptr,
                "mask set, label or out pointer is NULL");
        const kenforge::OverlapReport report = kenforge::pairwise_overlap(
            a->v, b->v, to_filter(tensor_names, n_tensors, tensor_regex), label_a, label_b);
        *out_json = dup_string(kenforge::overlap_report_json(report).dump());
    });
}

kf_status kf_in_breadth_json(const kf_maskset* const* masks, const char* const* labels,
                             uint64_t n_masks, const char* const* tensor_names,
                             uint64_t n_tensors, const char* tensor_regex, char** out_json) {
    return wrap([&] {
        require(masks != nullptr && labels != nullptr && out_json != nullptr,
                "mask sets, labels or out pointer is NULL");
        std::vector<const kenforge::MaskSet*> sets;
        sets.reserve(n_masks);
        for (uint64_t i = 0; i < n_masks; ++i) {
            require(masks[i] != nullptr, "mask set entry is NULL");
            sets.push_back(&masks[i]->v);
        }
        const kenforge::InBreadthReport report = kenforge::in_breadth(
            sets, to_names(labels, n_masks), to_filter(tensor_names, n_tensors, tensor_regex));
        *out_json = dup_string(kenforge::in_breadth_json(report).dump());
    });
}

/* ---- visual artifacts -------------------------------------------------------------------- */

kf_status kf_emit_tri_panel(const kf_maskset* a, const kf_maskset* b, const char* tensor,
                            const char* out_prefix, kf_grid_format format, uint64_t stride,
                            char** out_files_json) {
    return wrap([&] {
        require(a != nullptr && b != nullptr && tensor != nullptr && out_prefix != nullptr,
                "mask set, tensor or prefix is NULL");
        kenforge::GridFormat grid_format;
        switch (format) {
            case KF_GRID_PGM:
                grid_format = kenforge::GridFormat::pgm;
                break;
            case KF_GRID_CSV:
                grid_format = kenforge::GridFormat::csv;
                break;
            default:
                kenforge::fail_input("unknown grid format ", static_cast<int>(format));
        }
        const kenforge::TriPartition parts = kenforge::difference_masks(a->v, b->v, tensor);
        const std::vector<std::string> files = kenforge::emit_tri_panel(
            parts.common, parts.a_only, parts.b_only, out_prefix, grid_format, stride);
        if (out_files_json != nullptr) {
            *out_files_json = dup_string(nlohmann::json(files).dump());
        }
    });
}

kf_status kf_emit_overlap_table(const char* const* report_jsons, uint64_t n_reports,
                                const char* out_path) {
    return wrap([&] {
        require(out_path != nullptr, "output path is NULL");
        require(report_jsons != nullptr || n_reports == 0, "report array is NULL");
        std::vector<kenforge::OverlapReport> reports;
        reports.reserve(n_reports);
        for (uint64_t i = 0; i < n_reports; ++i) {
            require(report_jsons[i] != nullptr, "report entry is NULL");
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(report_jsons[i]);
            } catch (const nlohmann::json::parse_error& e) {
                kenforge::fail_input("report ", i, ": invalid JSON: ", e.what());
            }
            reports.push_back(kenforge::overlap_report_from_json(j));
        }
        kenforge::emit_overlap_table(reports, out_path);
    });
}

/* ---- dataset distillation -------------------------------------------------------------------- */

kf_status kf_distill_csv(const char* in_csv, const char* out_dir, const char* column_map,
                         char** out_stats_json) {
    return wrap([&] {
        require(in_csv != nullptr && out_dir != nullptr, "input path or out dir is NULL");
        kenforge::ColumnMap columns;
        if (column_map != nullptr && column_map[0] != '\0') {
            columns = kenforge::ColumnMap::parse(column_map);
        }
        const kenforge::DistillResult result =
            kenforge::distill(kenforge::ingest_csv(in_csv, columns));
        kenforge::write_variant_datasets(result, out_dir);
        if (out_stats_json != nullptr) {
            *out_stats_json = dup_string(kenforge::distill_stats_json(result).dump());
        }
    });
}

}  // extern "C"
