// SPDX-License-Identifier: Apache-2.0
#include "core/distill.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "core/csv.hpp"
#include "doctest.h"
#include "oracles.hpp"

using kenforge::AnnotationRecord;
using kenforge::ColumnMap;
using kenforge::DistillResult;
using kenforge::IronyLabel;

namespace {

std::string csv_fixture(const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (const auto& row : rows) {
        kenforge::csv::write_row(out, row);
    }
    return out.str();
}

const std::vector<std::string> kHeader = {"id_sentence", "text", "variant", "annotator",
                                          "label"};

}  // namespace

TEST_SUITE_BEGIN("distill");

TEST_CASE("ingest: two valid rows parse into two records") {
    oracle::TempDir dir;
    const std::string path = dir.file("two.csv");
    oracle::write_file_bytes(path, csv_fixture({kHeader,
                                                {"s1", "how lovely", "GB", "a1", "iro"},
                                                {"s1", "how lovely", "GB", "a2", "not"}}));
    const auto records = kenforge::ingest_csv(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].sentence_id == "s1");
    CHECK(records[0].variant == "GB");
    CHECK(records[0].annotator_id == "a1");
    CHECK(records[0].label == IronyLabel::irony);
    CHECK(records[1].label == IronyLabel::not_irony);
}

TEST_CASE("ingest: label normalization is case-insensitive and trimmed") {
    oracle::TempDir dir;
    const std::string path = dir.file("labels.csv");
    oracle::write_file_bytes(path, csv_fixture({kHeader,
                                                {"s1", "t", "AU", "a1", "IRO"},
                                                {"s2", "t", "AU", "a1", " Irony "},
                                                {"s3", "t", "AU", "a1", "NOT_IRONY"},
                                                {"s4", "t", "AU", "a1", "Not"}}));
    const auto records = kenforge::ingest_csv(path);
    CHECK(records[0].label == IronyLabel::irony);
    CHECK(records[1].label == IronyLabel::irony);
    CHECK(records[2].label == IronyLabel::not_irony);
    CHECK(records[3].label == IronyLabel::not_irony);
}

TEST_CASE("ingest: quoted fields with embedded commas, quotes and newlines") {
    oracle::TempDir dir;
    const std::string path = dir.file("quoted.csv");
    oracle::write_file_bytes(
        path,
        "id_sentence,text,variant,annotator,label\n"
        "s1,\"well, \"\"brilliant\"\"\nindeed\",IE,a1,iro\n");
    const auto records = kenforge::ingest_csv(path);
    REQUIRE(records.size() == 1);
    CHECK(records[0].text == "well, \"brilliant\"\nindeed");
}

TEST_CASE("ingest: errors name the offending record") {
    oracle::TempDir dir;

    SUBCASE("unknown label") {
        const std::string path = dir.file("bad_label.csv");
        oracle::write_file_bytes(path, csv_fixture({kHeader,
                                                    {"s1", "t", "AU", "a1", "iro"},
                                                    {"s2", "t", "AU", "a1", "maybe"}}));
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(path),
                             doctest::Contains("record 3: unknown label 'maybe'"),
                             kenforge::Error);
    }
    SUBCASE("duplicate (sentence, annotator)") {
        const std::string path = dir.file("dup.csv");
        oracle::write_file_bytes(path, csv_fixture({kHeader,
                                                    {"s1", "t", "AU", "a1", "iro"},
                                                    {"s1", "t", "AU", "a1", "not"}}));
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(path), doctest::Contains("duplicate"),
                             kenforge::Error);
    }
    SUBCASE("missing column") {
        const std::string path = dir.file("missing.csv");
        oracle::write_file_bytes(
            path, csv_fixture({{"id_sentence", "text", "variant", "label"},
                               {"s1", "t", "AU", "iro"}}));
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(path),
                             doctest::Contains("missing column 'annotator'"), kenforge::Error);
    }
    SUBCASE("empty required fields") {
        const std::string path = dir.file("empty_field.csv");
        oracle::write_file_bytes(path, csv_fixture({kHeader, {"", "t", "AU", "a1", "iro"}}));
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(path), doctest::Contains("empty sentence id"),
                             kenforge::Error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(dir.file("nope.csv")),
                             doctest::Contains("cannot open"), kenforge::Error);
    }
    SUBCASE("unterminated quote") {
        const std::string path = dir.file("quote.csv");
        oracle::write_file_bytes(path,
                                 "id_sentence,text,variant,annotator,label\ns1,\"oops,AU,a1,iro\n");
        CHECK_THROWS_WITH_AS(kenforge::ingest_csv(path), doctest::Contains("unterminated"),
                             kenforge::Error);
    }
}

TEST_CASE("ingest: --columns remap produces identical records") {
    oracle::TempDir dir;
    const std::string canonical = dir.file("canonical.csv");
    oracle::write_file_bytes(canonical,
                             csv_fixture({kHeader, {"s1", "t", "AU", "a1", "iro"}}));
    const std::string remapped = dir.file("remapped.csv");
    oracle::write_file_bytes(
        remapped, csv_fixture({{"msg", "body", "region", "user", "tag"},
                               {"s1", "t", "AU", "a1", "iro"}}));

    const auto a = kenforge::ingest_csv(canonical);
    const auto b = kenforge::ingest_csv(
        remapped,
        ColumnMap::parse("id_sentence=msg,text=body,variant=region,annotator=user,label=tag"));
    REQUIRE(a.size() == b.size());
    CHECK(a[0].sentence_id == b[0].sentence_id);
    CHECK(a[0].text == b[0].text);
    CHECK(a[0].variant == b[0].variant);
    CHECK(a[0].annotator_id == b[0].annotator_id);
    CHECK(a[0].label == b[0].label);

    CHECK_THROWS_WITH_AS(ColumnMap::parse("bogus=x"),
                         doctest::Contains("unknown logical column"), kenforge::Error);
    CHECK_THROWS_WITH_AS(ColumnMap::parse("id_sentence"), doctest::Contains("logical=actual"),
                         kenforge::Error);
}

TEST_CASE("majority_vote: strict majority and the tie rule") {
    using kenforge::majority_vote;
    const IronyLabel I = IronyLabel::irony;
    const IronyLabel N = IronyLabel::not_irony;

    CHECK(majority_vote({I, I, N}) == std::make_pair(I, false));
    CHECK(majority_vote({N, N, N, I}) == std::make_pair(N, false));
    CHECK(majority_vote({I}) == std::make_pair(I, false));
    CHECK(majority_vote({N}) == std::make_pair(N, false));
    CHECK(majority_vote({I, N}) == std::make_pair(I, true));            // tie -> irony
    CHECK(majority_vote({I, I, N, N}) == std::make_pair(I, true));      // tie -> irony
    CHECK_THROWS_AS(majority_vote({}), kenforge::Error);
}

TEST_CASE("distill: tie groups are labeled irony and counted") {
    std::vector<AnnotationRecord> records = {
        {"s1", "text one", "GB", "a1", IronyLabel::irony},
        {"s1", "text one", "GB", "a2", IronyLabel::not_irony},
    };
    const DistillResult result = kenforge::distill(records);
    REQUIRE(result.datasets.count("GB") == 1);
    const auto& dataset = result.datasets.at("GB");
    CHECK(dataset.n_items == 1);
    CHECK(dataset.n_irony == 1);
    CHECK(dataset.n_not == 0);
    CHECK(dataset.n_ties_resolved == 1);
    CHECK(dataset.items[0].gold == IronyLabel::irony);
    CHECK(dataset.items[0].was_tie);
}

TEST_CASE("distill: groups by (variant, sentence_id) and never merges across variants") {
    std::vector<AnnotationRecord> records = {
        {"s1", "shared", "GB", "a1", IronyLabel::irony},
        {"s1", "shared", "IE", "a2", IronyLabel::not_irony},
        {"s2", "only gb", "GB", "a3", IronyLabel::not_irony},
    };
    const DistillResult result = kenforge::distill(records);
    CHECK(result.datasets.size() == 2);
    CHECK(result.datasets.at("GB").n_items == 2);
    CHECK(result.datasets.at("IE").n_items == 1);
    CHECK(result.datasets.at("IE").items[0].gold == IronyLabel::not_irony);
    CHECK(result.cross_variant_duplicate_ids == 1);  // s1 appears under GB and IE
}

TEST_CASE("distill: conflicting text within a group is an error") {
    std::vector<AnnotationRecord> records = {
        {"s1", "text one", "GB", "a1", IronyLabel::irony},
        {"s1", "text two", "GB", "a2", IronyLabel::irony},
    };
    CHECK_THROWS_WITH_AS(kenforge::distill(records), doctest::Contains("conflicting text"),
                         kenforge::Error);
}

TEST_CASE("distill: empty input distills to an empty map") {
    const DistillResult result = kenforge::distill({});
    CHECK(result.datasets.empty());
    CHECK(result.cross_variant_duplicate_ids == 0);
}

TEST_CASE("distill: order-invariant, conserving, correctly counted on a random corpus") {
    std::mt19937_64 rng(307);
    const std::vector<std::string> variants = {"AU", "GB", "IE", "IN", "US"};
    std::vector<AnnotationRecord> records;
    std::map<std::pair<std::string, std::string>, std::pair<int, int>> expected_votes;
    for (int s = 0; s < 120; ++s) {
        const std::string variant = variants[rng() % variants.size()];
        const std::string id = "s" + std::to_string(s);
        const int annotators = 1 + static_cast<int>(rng() % 5);
        for (int a = 0; a < annotators; ++a) {
            const bool irony = rng() % 2 == 0;
            records.push_back({id, "text " + id, variant, "a" + std::to_string(a),
                               irony ? IronyLabel::irony : IronyLabel::not_irony});
            auto& votes = expected_votes[{variant, id}];
            (irony ? votes.first : votes.second) += 1;
        }
    }

    const DistillResult result = kenforge::distill(records);

    // conservation: one output item per (variant, sentence) group
    std::uint64_t total_items = 0;
    for (const auto& [variant, dataset] : result.datasets) {
        total_items += dataset.n_items;
        CHECK(dataset.n_items == dataset.items.size());
        CHECK(dataset.n_irony + dataset.n_not == dataset.n_items);
        CHECK(std::is_sorted(dataset.items.begin(), dataset.items.end(),
                             [](const auto& x, const auto& y) {
                                 return x.sentence_id < y.sentence_id;
                             }));
        for (const auto& item : dataset.items) {
            const auto [irony, not_irony] = expected_votes.at({variant, item.sentence_id});
            if (irony > not_irony) {
                CHECK(item.gold == IronyLabel::irony);
                CHECK(!item.was_tie);
            } else if (not_irony > irony) {
                CHECK(item.gold == IronyLabel::not_irony);
                CHECK(!item.was_tie);
            } else {
                CHECK(item.gold == IronyLabel::irony);
                CHECK(item.was_tie);
            }
        }
    }
    CHECK(total_items == expected_votes.size());

    // row order must not matter
    std::vector<AnnotationRecord> shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const DistillResult again = kenforge::distill(shuffled);
    REQUIRE(again.datasets.size() == result.datasets.size());
    for (const auto& [variant, dataset] : result.datasets) {
        const auto& other = again.datasets.at(variant);
        CHECK(other.n_items == dataset.n_items);
        CHECK(other.n_irony == dataset.n_irony);
        CHECK(other.n_ties_resolved == dataset.n_ties_resolved);
        REQUIRE(other.items.size() == dataset.items.size());
        for (std::size_t i = 0; i < dataset.items.size(); ++i) {
            CHECK(other.items[i].sentence_id == dataset.items[i].sentence_id);
            CHECK(other.items[i].gold == dataset.items[i].gold);
        }
    }
    CHECK(again.cross_variant_duplicate_ids == result.cross_variant_duplicate_ids);
}

TEST_CASE("write_variant_datasets: one CSV per variant plus stats.json") {
    oracle::TempDir dir;
    std::vector<AnnotationRecord> records = {
        {"s1", "plain text", "GB", "a1", IronyLabel::irony},
        {"s2", "with, comma", "GB", "a1", IronyLabel::not_irony},
        {"s1", "other text", "IE", "a9", IronyLabel::irony},
    };
    const DistillResult result = kenforge::distill(records);
    const std::string out_dir = dir.file("distilled");
    const auto files = kenforge::write_variant_datasets(result, out_dir);
    REQUIRE(files.size() == 3);  // GB.csv, IE.csv, stats.json

    CHECK(oracle::read_file_bytes(files[0]) ==
          "id,text,label\ns1,plain text,irony\ns2,\"with, comma\",not_irony\n");
    CHECK(oracle::read_file_bytes(files[1]) == "id,text,label\ns1,other text,irony\n");

    const auto stats = nlohmann::json::parse(oracle::read_file_bytes(files[2]));
    CHECK(stats.at("cross_variant_duplicate_ids") == 1);
    REQUIRE(stats.at("variants").size() == 2);
    CHECK(stats.at("variants")[0].at("variant") == "GB");
    CHECK(stats.at("variants")[0].at("n_items") == 2);
    CHECK(stats.at("variants")[0].at("n_irony") == 1);
    CHECK(stats.at("variants")[0].at("n_not") == 1);
    CHECK(stats.at("variants")[0].at("n_ties_resolved") == 0);
}

TEST_CASE("write_variant_datasets: unsafe variant names are sanitized") {
    oracle::TempDir dir;
    std::vector<AnnotationRecord> records = {
        {"s1", "t", "en/GB", "a1", IronyLabel::irony},
    };
    const auto files = kenforge::write_variant_datasets(kenforge::distill(records),
                                                        dir.file("out"));
    CHECK(files[0].find("en_GB.csv") != std::string::npos);
}

TEST_SUITE_END();
