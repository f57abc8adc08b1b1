// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace kenforge {

enum class IronyLabel { irony, not_irony };

const char* to_string(IronyLabel label);

// One annotator's judgement of one sentence.
struct AnnotationRecord {
    std::string sentence_id;
    std::string text;
    std::string variant;  // language variant tag, e.g. AU/GB/IE/IN/US
    std::string annotator_id;
    IronyLabel label = IronyLabel::not_irony;
};

// Gold-labeled dataset for one language variant, produced by majority
// voting per sentence with ties resolved as irony.
struct VariantDataset {
    struct Item {
        std::string sentence_id;
        std::string text;
        IronyLabel gold = IronyLabel::not_irony;
        bool was_tie = false;
    };
    std::string variant;
    std::vector<Item> items;  // sorted by sentence_id
    std::uint64_t n_items = 0;
    std::uint64_t n_irony = 0;
    std::uint64_t n_not = 0;
    std::uint64_t n_ties_resolved = 0;
};

// Maps the logical columns to the actual CSV header names.
struct ColumnMap {
    std::string sentence_id = "id_sentence";
    std::string text = "text";
    std::string variant = "variant";
    std::string annotator = "annotator";
    std::string label = "label";

    // Parses "logical=actual,logical=actual" overrides, e.g.
    // "id_sentence=msg_id,label=tag".
    static ColumnMap parse(const std::string& spec);
};

struct DistillResult {
    std::map<std::string, VariantDataset> datasets;  // keyed by variant
    // sentence_ids that occur under more than one variant; reported, never merged
    std::uint64_t cross_variant_duplicate_ids = 0;
};

// Reads annotator rows from a headered CSV. Labels normalize
// case-insensitively: iro/irony and not/not_irony. Rejects unknown labels,
// duplicate (sentence, annotator) pairs and missing columns, naming the
// offending record.
std::vector<AnnotationRecord> ingest_csv(const std::string& path,
                                         const ColumnMap& columns = {});

// Strict majority with ties resolved as irony (second element reports the
// tie). Vote set must be non-empty.
std::pair<IronyLabel, bool> majority_vote(const std::vector<IronyLabel>& votes);

// Groups records by (variant, sentence_id) and majority-votes each group.
// Deterministic: the result is independent of input row order.
DistillResult distill(const std::vector<AnnotationRecord>& records);

// Per-variant stats plus the cross-variant duplicate count, keys sorted.
nlohmann::json distill_stats_json(const DistillResult& result);

// Writes <out_dir>/<variant>.csv (columns id,text,label) per variant plus
// <out_dir>/stats.json. Returns the written file paths.
std::vector<std::string> write_variant_datasets(const DistillResult& result,
                                                const std::string& out_dir);

}  // namespace kenforge
