// SPDX-License-Identifier: Apache-2.0
#include "core/kde.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

using kenforge::BandwidthRule;
using kenforge::KdeConfig;

TEST_SUITE_BEGIN("kde");

TEST_CASE("bandwidth: constant row falls back to the degenerate value") {
    const std::vector<double> row = {3.5, 3.5, 3.5, 3.5};
    KdeConfig config;
    CHECK(kenforge::bandwidth(row, config) == 1e-9);

    config.degenerate_bandwidth = 0.25;
    CHECK(kenforge::bandwidth(row, config) == 0.25);

    config.bandwidth_rule = BandwidthRule::silverman;
    CHECK(kenforge::bandwidth(row, config) == 0.25);
}

TEST_CASE("bandwidth: fixed rule returns the configured value") {
    const std::vector<double> row = {-1.0, 0.0, 5.0};
    CHECK(kenforge::bandwidth(row, KdeConfig::fixed(0.5)) == 0.5);
    CHECK(kenforge::bandwidth({row.data(), 1}, KdeConfig::fixed(0.5)) == 0.5);
}

TEST_CASE("bandwidth: scott matches the independent statistics oracle") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> row(256);
    for (auto& x : row) {
        x = dist(rng);
    }
    const double expected = oracle::sample_stddev(row) * std::pow(256.0, -0.2);
    KdeConfig config;
    CHECK(kenforge::bandwidth(row, config) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("bandwidth: silverman uses min(sigma, IQR/1.34)") {
    // heavy tails make IQR/1.34 the smaller term
    const std::vector<double> row = {-100.0, -1.0, -0.5, 0.0, 0.5, 1.0, 100.0};
    std::vector<double> sorted = row;
    std::sort(sorted.begin(), sorted.end());
    // quartiles by linear interpolation at p*(n-1): n=7 -> exact order stats
    const double iqr = sorted[5] * 0.5 + sorted[4] * 0.5 - (sorted[1] * 0.5 + sorted[2] * 0.5);
    const double sigma = oracle::sample_stddev(row);
    const double expected = 0.9 * std::min(sigma, iqr / 1.34) * std::pow(7.0, -0.2);
    KdeConfig config;
    config.bandwidth_rule = BandwidthRule::silverman;
    CHECK(kenforge::bandwidth(row, config) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kde_density: single point has the closed-form density") {
    const std::vector<double> row = {7.25};
    const KdeConfig config = KdeConfig::fixed(0.3);
    const kenforge::RowDensity d = kenforge::kde_density(row, config);
    REQUIRE(d.densities.size() == 1);
    CHECK(d.h_used == 0.3);
    CHECK(d.densities[0] ==
          doctest::Approx(1.0 / (0.3 * std::sqrt(2.0 * M_PI))).epsilon(1e-15));
}

TEST_CASE("kde_density: clustered values dominate an outlier") {
    const std::vector<double> row = {0.0, 0.0, 0.0, 1.0};
    const kenforge::RowDensity d = kenforge::kde_density(row, KdeConfig::fixed(0.2));
    CHECK(d.densities[0] > d.densities[3]);

    const std::vector<double> expected = oracle::kde_densities(row, 0.2);
    for (std::size_t i = 0; i < row.size(); ++i) {
        CHECK(oracle::rel_close(d.densities[i], expected[i], 1e-12));
    }
}

TEST_CASE("kde_density: rejects non-finite input naming the index") {
    std::vector<double> row = {0.0, 1.0, std::nan(""), 2.0};
    CHECK_THROWS_WITH_AS(kenforge::kde_density(row, KdeConfig::fixed(1.0)),
                         doctest::Contains("index 2"), kenforge::Error);
    row[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(kenforge::kde_density(row, KdeConfig::fixed(1.0)), kenforge::Error);
}

TEST_CASE("kde_density: matches the brute-force oracle on random rows") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> len(1, 256);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_int_distribution<int> style(0, 3);
    double max_rel = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = len(rng);
        std::vector<double> row(n);
        switch (style(rng)) {
            case 0:  // constant
                std::fill(row.begin(), row.end(), dist(rng));
                break;
            case 1: {  // few distinct values, many ties
                const double a = dist(rng);
                const double b = dist(rng);
                for (auto& x : row) {
                    x = (rng() & 1) ? a : b;
                }
                break;
            }
            default:
                for (auto& x : row) {
                    x = dist(rng);
                }
        }
        KdeConfig config;
        if (trial % 3 == 0) {
            config = KdeConfig::fixed(0.37);
        }
        const kenforge::RowDensity d = kenforge::kde_density(row, config);
        const std::vector<double> expected = oracle::kde_densities(row, d.h_used);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(oracle::rel_close(d.densities[i], expected[i], 1e-12));
            CHECK(d.densities[i] >= 0.0);
            CHECK(std::isfinite(d.densities[i]));
            const double rel = std::fabs(d.densities[i] - expected[i]) /
                               std::max(1e-300, std::fabs(expected[i]));
            max_rel = std::max(max_rel, rel);
        }
    }
    CHECK(max_rel <= 1e-12);
}

TEST_CASE("select_top_k: boundary k values") {
    const std::vector<double> row = {0.5, -0.25, 0.75, 0.5};
    const KdeConfig config = KdeConfig::fixed(0.2);
    CHECK(kenforge::select_top_k(row, 0, config).empty());
    CHECK(kenforge::select_top_k(row, 4, config) ==
          std::vector<std::uint64_t>{0, 1, 2, 3});
    CHECK(kenforge::select_top_k(row, 99, config) ==
          std::vector<std::uint64_t>{0, 1, 2, 3});
}

TEST_CASE("select_top_k: ties resolve to the lowest index") {
    const std::vector<double> row = {0.0, 0.0, 0.0, 1.0};
    const KdeConfig config = KdeConfig::fixed(0.2);
    CHECK(kenforge::select_top_k(row, 1, config) == std::vector<std::uint64_t>{0});
    CHECK(kenforge::select_top_k(row, 2, config) == std::vector<std::uint64_t>{0, 1});
    CHECK(kenforge::select_top_k(row, 3, config) == std::vector<std::uint64_t>{0, 1, 2});

    // all-equal row: densities tie everywhere, so top-k is the first k indices
    const std::vector<double> constant = {2.0, 2.0, 2.0, 2.0, 2.0};
    KdeConfig scott;
    CHECK(kenforge::select_top_k(constant, 2, scott) == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("select_top_k: nesting, size and tie-rule properties") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> len(1, 48);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = len(rng);
        std::vector<double> row(n);
        for (auto& x : row) {
            x = (trial % 4 == 0) ? std::round(dist(rng)) : dist(rng);  // force ties sometimes
        }
        const KdeConfig config = KdeConfig::fixed(0.31);
        const kenforge::RowDensity d = kenforge::kde_density(row, config);
        const std::vector<std::uint64_t> expected_order = oracle::rank_by_density(d.densities);

        std::vector<std::uint64_t> previous;
        for (std::uint64_t k = 0; k <= n; ++k) {
            const std::vector<std::uint64_t> selected = kenforge::select_top_k(row, k, config);
            CHECK(selected.size() == std::min<std::uint64_t>(k, n));
            CHECK(std::is_sorted(selected.begin(), selected.end()));
            // nested in the k+1 selection
            for (std::uint64_t idx : previous) {
                CHECK(std::binary_search(selected.begin(), selected.end(), idx));
            }
            // equals the expected prefix as a set
            std::vector<std::uint64_t> want(expected_order.begin(),
                                            expected_order.begin() + selected.size());
            std::sort(want.begin(), want.end());
            CHECK(selected == want);
            previous = selected;
        }
    }
}

TEST_CASE("kde_density: permutation and translation invariance") {
    std::mt19937_64 rng(1234);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> row(64);
    for (auto& x : row) {
        x = dist(rng);
    }
    const KdeConfig config = KdeConfig::fixed(0.4);
    const kenforge::RowDensity base = kenforge::kde_density(row, config);

    // permuting the row permutes densities identically
    std::vector<std::size_t> perm(row.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        perm[i] = i;
    }
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> permuted(row.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        permuted[i] = row[perm[i]];
    }
    const kenforge::RowDensity after = kenforge::kde_density(permuted, config);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(oracle::rel_close(after.densities[i], base.densities[perm[i]], 1e-12));
    }

    // adding a constant leaves densities unchanged under a fixed bandwidth
    std::vector<double> shifted(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        shifted[i] = row[i] + 5.0;
    }
    const kenforge::RowDensity moved = kenforge::kde_density(shifted, config);
    for (std::size_t i = 0; i < row.size(); ++i) {
        CHECK(oracle::rel_close(moved.densities[i], base.densities[i], 1e-12));
    }
}

TEST_CASE("KdeConfig validation") {
    CHECK_THROWS_AS(kenforge::bandwidth(std::vector<double>{1.0}, KdeConfig::fixed(0.0)),
                    kenforge::Error);
    KdeConfig bad;
    bad.degenerate_bandwidth = 0.0;
    CHECK_THROWS_AS(kenforge::bandwidth(std::vector<double>{1.0}, bad), kenforge::Error);
}

TEST_SUITE_END();
