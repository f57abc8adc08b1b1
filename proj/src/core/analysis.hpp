// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/bitmatrix.hpp"
#include "core/pruning.hpp"

namespace kenforge {

// Selects which tensors an analysis covers. Either an explicit name list
// or a regex (searched against names, grep-style); both empty selects
// every tensor. List and regex are mutually exclusive.
struct TensorFilter {
    std::vector<std::string> names;
    std::string regex;

    bool is_all() const { return names.empty() && regex.empty(); }

    // Matching names from the mask set, sorted. Listed names must exist;
    // an empty selection is an error.
    std::vector<std::string> select(const MaskSet& masks) const;
};

// Pairwise subnetwork similarity over the filtered tensors. The overlap
// denominator is the retained count of either mask (equal under the
// equal-k precondition, so the metric is symmetric); a Jaccard percentage
// over the union is reported alongside.
struct OverlapReport {
    std::string label_a;
    std::string label_b;
    std::string model;  // shared source_meta["model"] of both masks, else ""
    struct TensorOverlap {
        std::uint64_t common = 0;
        std::uint64_t only_a = 0;
        std::uint64_t only_b = 0;
        std::uint64_t k_total = 0;  // retained parameters per mask in this tensor
    };
    std::map<std::string, TensorOverlap> per_tensor;
    double overlap_pct = 0.0;
    double jaccard_pct = 0.0;
};

// Intersection of retained parameters across all inputs.
struct InBreadthReport {
    std::vector<std::string> labels;
    std::map<std::string, BitMatrix> intersection;
    std::map<std::string, std::uint64_t> per_tensor_common;
    std::uint64_t total_common = 0;
};

// Disjoint tri-partition of two masks of one tensor: common = a AND b,
// a_only = a AND NOT b, b_only = b AND NOT a.
struct TriPartition {
    BitMatrix common;
    BitMatrix a_only;
    BitMatrix b_only;
};

OverlapReport pairwise_overlap(const MaskSet& a, const MaskSet& b, const TensorFilter& filter,
                               const std::string& label_a, const std::string& label_b);

InBreadthReport in_breadth(const std::vector<const MaskSet*>& masks,
                           const std::vector<std::string>& labels, const TensorFilter& filter);

TriPartition difference_masks(const MaskSet& a, const MaskSet& b, const std::string& tensor);

// JSON report serialization (keys sorted). Intersection bitmaps serialize
// as lowercase hex strings, one per row, MSB-first like the KENM payload.
nlohmann::json overlap_report_json(const OverlapReport& report);
OverlapReport overlap_report_from_json(const nlohmann::json& j);
nlohmann::json in_breadth_json(const InBreadthReport& report);

}  // namespace kenforge
