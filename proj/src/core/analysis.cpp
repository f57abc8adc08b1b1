// SPDX-License-Identifier: Apache-2.0
#include "core/analysis.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "core/error.hpp"

namespace kenforge {

using nlohmann::json;

std::vector<std::string> TensorFilter::select(const MaskSet& masks) const {
    if (!names.empty() && !regex.empty()) {
        fail_input("tensor name list and regex filter are mutually exclusive");
    }
    std::vector<std::string> selected;
    if (!names.empty()) {
        std::set<std::string> unique(names.begin(), names.end());
        for (const std::string& name : unique) {
            if (!masks.has(name)) {
                fail_input("unknown tensor '", name, "' in tensor filter");
            }
            selected.push_back(name);
        }
    } else if (!regex.empty()) {
        std::regex re;
        try {
            re = std::regex(regex);
        } catch (const std::regex_error& e) {
            fail_input("invalid tensor regex '", regex, "': ", e.what());
        }
        for (const auto& [name, bm] : masks.masks) {
            if (std::regex_search(name, re)) {
                selected.push_back(name);
            }
        }
    } else {
        for (const auto& [name, bm] : masks.masks) {
            selected.push_back(name);
        }
    }
    if (selected.empty()) {
        fail_input("tensor filter selects no tensors");
    }
    return selected;  // set/map iteration keeps this sorted
}

static void require_same_selection(const std::vector<std::string>& sel_a,
                                   const std::vector<std::string>& sel_b, const char* which_b) {
    if (sel_a == sel_b) {
        return;
    }
    for (const std::string& name : sel_a) {
        if (!std::binary_search(sel_b.begin(), sel_b.end(), name)) {
            fail_input("tensor '", name, "' is missing from mask set ", which_b);
        }
    }
    for (const std::string& name : sel_b) {
        if (!std::binary_search(sel_a.begin(), sel_a.end(), name)) {
            fail_input("tensor '", name, "' is only present in mask set ", which_b);
        }
    }
}

static const BitMatrix& mask_with_shape_of(const MaskSet& set, const std::string& name,
                                           const BitMatrix& reference, const char* which) {
    auto it = set.masks.find(name);
    if (it == set.masks.end()) {
        fail_input("tensor '", name, "' is missing from mask set ", which);
    }
    if (!it->second.same_shape(reference)) {
        fail_input("tensor '", name, "': shape mismatch between mask sets (", reference.rows(),
                   "x", reference.cols(), " vs ", it->second.rows(), "x", it->second.cols(), ")");
    }
    return it->second;
}

OverlapReport pairwise_overlap(const MaskSet& a, const MaskSet& b, const TensorFilter& filter,
                               const std::string& label_a, const std::string& label_b) {
    if (a.k_per_row != b.k_per_row) {
        fail_input("mask sets have different k: ", a.k_per_row, " vs ", b.k_per_row);
    }

    OverlapReport report;
    report.label_a = label_a;
    report.label_b = label_b;
    auto model_a = a.source_meta.find("model");
    auto model_b = b.source_meta.find("model");
    if (model_a != a.source_meta.end() && model_b != b.source_meta.end() &&
        model_a->second == model_b->second) {
        report.model = model_a->second;
    }

    const std::vector<std::string> selected = filter.select(a);
    require_same_selection(selected, filter.select(b), "B");

    std::uint64_t common_sum = 0;
    std::uint64_t retained_sum = 0;
    std::uint64_t union_sum = 0;
    for (const std::string& name : selected) {
        const BitMatrix& ma = a.mask(name);
        const BitMatrix& mb = mask_with_shape_of(b, name, ma, "B");
        const std::uint64_t pop_a = ma.popcount();
        const std::uint64_t pop_b = mb.popcount();
        if (pop_a != pop_b) {
            fail_input("tensor '", name, "': retained counts differ (", pop_a, " vs ", pop_b,
                       "); equal-k masks required");
        }
        const std::uint64_t common = BitMatrix::bit_and(ma, mb).popcount();
        OverlapReport::TensorOverlap overlap;
        overlap.common = common;
        overlap.only_a = pop_a - common;
        overlap.only_b = pop_b - common;
        overlap.k_total = pop_a;
        report.per_tensor[name] = overlap;
        common_sum += common;
        retained_sum += pop_a;
        union_sum += pop_a + pop_b - common;
    }

    report.overlap_pct =
        retained_sum > 0
            ? 100.0 * static_cast<double>(common_sum) / static_cast<double>(retained_sum)
            : 100.0;
    report.jaccard_pct =
        union_sum > 0 ? 100.0 * static_cast<double>(common_sum) / static_cast<double>(union_sum)
                      : 100.0;
    return report;
}

InBreadthReport in_breadth(const std::vector<const MaskSet*>& masks,
                           const std::vector<std::string>& labels, const TensorFilter& filter) {
    if (masks.size() < 2) {
        fail_input("in-breadth analysis needs at least 2 mask sets, got ", masks.size());
    }
    if (labels.size() != masks.size()) {
        fail_input("expected ", masks.size(), " labels, got ", labels.size());
    }

    InBreadthReport report;
    report.labels = labels;
    const std::vector<std::string> selected = filter.select(*masks[0]);
    for (std::size_t i = 1; i < masks.size(); ++i) {
        require_same_selection(selected, filter.select(*masks[i]), labels[i].c_str());
    }
    for (const std::string& name : selected) {
        BitMatrix acc = masks[0]->mask(name);
        for (std::size_t i = 1; i < masks.size(); ++i) {
            const BitMatrix& m = mask_with_shape_of(*masks[i], name, acc, labels[i].c_str());
            acc = BitMatrix::bit_and(acc, m);
        }
        const std::uint64_t common = acc.popcount();
        report.per_tensor_common[name] = common;
        report.total_common += common;
        report.intersection.emplace(name, std::move(acc));
    }
    return report;
}

TriPartition difference_masks(const MaskSet& a, const MaskSet& b, const std::string& tensor) {
    auto it = a.masks.find(tensor);
    if (it == a.masks.end()) {
        fail_input("tensor '", tensor, "' is missing from mask set A");
    }
    const BitMatrix& ma = it->second;
    const BitMatrix& mb = mask_with_shape_of(b, tensor, ma, "B");

    TriPartition parts;
    parts.common = BitMatrix::bit_and(ma, mb);
    parts.a_only = BitMatrix::bit_and_not(ma, mb);
    parts.b_only = BitMatrix::bit_and_not(mb, ma);
    return parts;
}

// --- JSON serialization -----------------------------------------------

nlohmann::json overlap_report_json(const OverlapReport& report) {
    json per_tensor = json::object();
    for (const auto& [name, t] : report.per_tensor) {
        per_tensor[name] = {{"common", t.common},
                            {"only_a", t.only_a},
                            {"only_b", t.only_b},
                            {"k_total", t.k_total}};
    }
    return json{{"pair", {{"label_a", report.label_a}, {"label_b", report.label_b}}},
                {"model", report.model},
                {"per_tensor", per_tensor},
                {"overlap_pct", report.overlap_pct},
                {"jaccard_pct", report.jaccard_pct}};
}

OverlapReport overlap_report_from_json(const nlohmann::json& j) {
    OverlapReport report;
    try {
        report.label_a = j.at("pair").at("label_a").get<std::string>();
        report.label_b = j.at("pair").at("label_b").get<std::string>();
        report.overlap_pct = j.at("overlap_pct").get<double>();
        if (j.contains("model")) {
            report.model = j.at("model").get<std::string>();
        }
        if (j.contains("jaccard_pct")) {
            report.jaccard_pct = j.at("jaccard_pct").get<double>();
        }
        if (j.contains("per_tensor")) {
            for (const auto& [name, t] : j.at("per_tensor").items()) {
                OverlapReport::TensorOverlap overlap;
                overlap.common = t.at("common").get<std::uint64_t>();
                overlap.only_a = t.at("only_a").get<std::uint64_t>();
                overlap.only_b = t.at("only_b").get<std::uint64_t>();
                overlap.k_total = t.at("k_total").get<std::uint64_t>();
                report.per_tensor[name] = overlap;
            }
        }
    } catch (const json::exception& e) {
        fail_input("invalid overlap report JSON: ", e.what());
    }
    return report;
}

static std::string hex_row(const std::uint8_t* data, std::uint64_t nbytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(nbytes * 2);
    for (std::uint64_t i = 0; i < nbytes; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

nlohmann::json in_breadth_json(const InBreadthReport& report) {
    json intersection = json::object();
    for (const auto& [name, bm] : report.intersection) {
        json rows = json::array();
        for (std::uint64_t r = 0; r < bm.rows(); ++r) {
            rows.push_back(hex_row(bm.row(r), bm.row_stride()));
        }
        intersection[name] = {{"shape", {bm.rows(), bm.cols()}}, {"rows", rows}};
    }
    return json{{"labels", report.labels},
                {"intersection", intersection},
                {"per_tensor_common", report.per_tensor_common},
                {"total_common", report.total_common}};
}

}  // namespace kenforge
