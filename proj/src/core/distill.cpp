// SPDX-License-Identifier: Apache-2.0
#include "core/distill.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace kenforge {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(IronyLabel label) {
    return label == IronyLabel::irony ? "irony" : "not_irony";
}

ColumnMap ColumnMap::parse(const std::string& spec) {
    ColumnMap columns;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t end = spec.find(',', pos);
        if (end == std::string::npos) {
            end = spec.size();
        }
        const std::string entry = spec.substr(pos, end - pos);
        pos = end + 1;
        if (entry.empty()) {
            continue;
        }
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= entry.size()) {
            fail_input("invalid column mapping '", entry, "' (expected logical=actual)");
        }
        const std::string logical = entry.substr(0, eq);
        const std::string actual = entry.substr(eq + 1);
        if (logical == "id_sentence") {
            columns.sentence_id = actual;
        } else if (logical == "text") {
            columns.text = actual;
        } else if (logical == "variant") {
            columns.variant = actual;
        } else if (logical == "annotator") {
            columns.annotator = actual;
        } else if (logical == "label") {
            columns.label = actual;
        } else {
            fail_input("unknown logical column '", logical,
                       "' (expected id_sentence, text, variant, annotator or label)");
        }
    }
    return columns;
}

namespace {

std::string lower_trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
        --end;
    }
    std::string out = s.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const char* logical) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    std::string have;
    for (std::size_t i = 0; i < header.size(); ++i) {
        have += (i ? ", " : "") + header[i];
    }
    fail_input("missing column '", name, "' (", logical, "); header has: ", have);
}

}  // namespace

std::vector<AnnotationRecord> ingest_csv(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) {
        fail_input("cannot open input CSV: ", path);
    }
    csv::Reader reader(in);

    std::vector<std::string> header;
    if (!reader.next(header)) {
        fail_input(path, ": empty CSV, missing header row");
    }
    const std::size_t col_id = find_column(header, columns.sentence_id, "id_sentence");
    const std::size_t col_text = find_column(header, columns.text, "text");
    const std::size_t col_variant = find_column(header, columns.variant, "variant");
    const std::size_t col_annotator = find_column(header, columns.annotator, "annotator");
    const std::size_t col_label = find_column(header, columns.label, "label");
    const std::size_t columns_needed =
        std::max({col_id, col_text, col_variant, col_annotator, col_label}) + 1;

    std::vector<AnnotationRecord> records;
    std::unordered_set<std::string> seen;
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;  // blank line
        }
        const std::size_t record_number = reader.record_number();
        if (row.size() < columns_needed) {
            fail_input(path, ": record ", record_number, ": expected at least ", columns_needed,
                       " fields, got ", row.size());
        }
        AnnotationRecord record;
        record.sentence_id = row[col_id];
        record.text = row[col_text];
        record.variant = row[col_variant];
        record.annotator_id = row[col_annotator];
        if (record.sentence_id.empty()) {
            fail_input(path, ": record ", record_number, ": empty sentence id");
        }
        if (record.text.empty()) {
            fail_input(path, ": record ", record_number, ": empty text");
        }
        if (record.variant.empty()) {
            fail_input(path, ": record ", record_number, ": empty variant");
        }
        if (record.annotator_id.empty()) {
            fail_input(path, ": record ", record_number, ": empty annotator id");
        }

        const std::string label = lower_trim(row[col_label]);
        if (label == "iro" || label == "irony") {
            record.label = IronyLabel::irony;
        } else if (label == "not" || label == "not_irony") {
            record.label = IronyLabel::not_irony;
        } else {
            fail_input(path, ": record ", record_number, ": unknown label '", row[col_label],
                       "' (expected iro/irony or not/not_irony)");
        }

        std::string key = record.sentence_id;
        key.push_back('\x1f');
        key += record.annotator_id;
        if (!seen.insert(std::move(key)).second) {
            fail_input(path, ": record ", record_number, ": duplicate annotation for sentence '",
                       record.sentence_id, "' by annotator '", record.annotator_id, "'");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::pair<IronyLabel, bool> majority_vote(const std::vector<IronyLabel>& votes) {
    if (votes.empty()) {
        fail_input("majority vote requires at least one vote");
    }
    std::uint64_t irony = 0;
    std::uint64_t not_irony = 0;
    for (IronyLabel vote : votes) {
        (vote == IronyLabel::irony ? irony : not_irony) += 1;
    }
    if (irony > not_irony) {
        return {IronyLabel::irony, false};
    }
    if (not_irony > irony) {
        return {IronyLabel::not_irony, false};
    }
    return {IronyLabel::irony, true};  // ties resolve to irony
}

DistillResult distill(const std::vector<AnnotationRecord>& records) {
    struct Group {
        std::string text;
        std::vector<IronyLabel> votes;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;  // (variant, sentence_id)
    for (const AnnotationRecord& record : records) {
        auto key = std::make_pair(record.variant, record.sentence_id);
        auto [it, inserted] = groups.try_emplace(std::move(key));
        if (inserted) {
            it->second.text = record.text;
        } else if (it->second.text != record.text) {
            fail_input("conflicting text for sentence '", record.sentence_id, "' in variant '",
                       record.variant, "'");
        }
        it->second.votes.push_back(record.label);
    }

    DistillResult result;
    std::map<std::string, std::set<std::string>> variants_by_sentence;
    for (auto& [key, group] : groups) {
        const auto& [variant, sentence_id] = key;
        VariantDataset& dataset = result.datasets[variant];
        dataset.variant = variant;

        const auto [gold, was_tie] = majority_vote(group.votes);
        VariantDataset::Item item;
        item.sentence_id = sentence_id;
        item.text = std::move(group.text);
        item.gold = gold;
        item.was_tie = was_tie;
        dataset.items.push_back(std::move(item));

        dataset.n_items += 1;
        (gold == IronyLabel::irony ? dataset.n_irony : dataset.n_not) += 1;
        dataset.n_ties_resolved += was_tie ? 1 : 0;
        variants_by_sentence[sentence_id].insert(variant);
    }
    for (const auto& [sentence_id, variants] : variants_by_sentence) {
        if (variants.size() > 1) {
            result.cross_variant_duplicate_ids += 1;
        }
    }
    // group map iteration is already (variant asc, sentence_id asc), so
    // per-variant item lists come out sorted by sentence_id
    return result;
}

json distill_stats_json(const DistillResult& result) {
    json variants = json::array();
    for (const auto& [variant, dataset] : result.datasets) {
        variants.push_back({{"variant", variant},
                            {"n_items", dataset.n_items},
                            {"n_irony", dataset.n_irony},
                            {"n_not", dataset.n_not},
                            {"n_ties_resolved", dataset.n_ties_resolved}});
    }
    return json{{"variants", variants},
                {"cross_variant_duplicate_ids", result.cross_variant_duplicate_ids}};
}

static std::string sanitize_filename(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "_" : out;
}

std::vector<std::string> write_variant_datasets(const DistillResult& result,
                                                const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        fail_io("cannot create output directory '", out_dir, "': ", ec.message());
    }

    std::vector<std::string> written;
    std::map<std::string, std::string> used_names;
    for (const auto& [variant, dataset] : result.datasets) {
        const std::string base = sanitize_filename(variant);
        auto [it, inserted] = used_names.emplace(base, variant);
        if (!inserted) {
            fail_input("variants '", it->second, "' and '", variant,
                       "' map to the same output file name '", base, ".csv'");
        }
        const std::string path = (fs::path(out_dir) / (base + ".csv")).string();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out.is_open()) {
            fail_io("cannot open file for writing: ", path);
        }
        csv::write_row(out, {"id", "text", "label"});
        for (const auto& item : dataset.items) {
            csv::write_row(out, {item.sentence_id, item.text, to_string(item.gold)});
        }
        out.flush();
        if (!out) {
            fail_io("write failed: ", path);
        }
        written.push_back(path);
    }

    const std::string stats_path = (fs::path(out_dir) / "stats.json").string();
    std::ofstream stats(stats_path, std::ios::binary | std::ios::trunc);
    if (!stats.is_open()) {
        fail_io("cannot open file for writing: ", stats_path);
    }
    stats << distill_stats_json(result).dump(2) << "\n";
    stats.flush();
    if (!stats) {
        fail_io("write failed: ", stats_path);
    }
    written.push_back(stats_path);
    return written;
}

}  // namespace kenforge
