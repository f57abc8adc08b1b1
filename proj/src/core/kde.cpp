// SPDX-License-Identifier: Apache-2.0
#include "core/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace kenforge {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1/sqrt(2*pi)

double sample_stddev(std::span<const double> row) {
    const std::size_t n = row.size();
    if (n < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : row) {
        mean += x;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : row) {
        const double d = x - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// Quantile with linear interpolation between order statistics at p*(n-1).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) {
        return sorted[0];
    }
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) {
        return sorted[n - 1];
    }
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double interquartile_range(std::span<const double> row) {
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

}  // namespace

void KdeConfig::validate() const {
    if (bandwidth_rule == BandwidthRule::fixed && !(fixed_h > 0.0)) {
        fail_input("fixed bandwidth must be > 0, got ", fixed_h);
    }
    if (!(degenerate_bandwidth > 0.0)) {
        fail_input("degenerate bandwidth must be > 0, got ", degenerate_bandwidth);
    }
}

double bandwidth(std::span<const double> row, const KdeConfig& config) {
    config.validate();
    if (row.empty()) {
        fail_input("bandwidth requires a non-empty row");
    }
    const double n = static_cast<double>(row.size());
    double h = 0.0;
    switch (config.bandwidth_rule) {
        case BandwidthRule::scott:
            h = sample_stddev(row) * std::pow(n, -0.2);
            break;
        case BandwidthRule::silverman:
            h = 0.9 * std::min(sample_stddev(row), interquartile_range(row) / 1.34) *
                std::pow(n, -0.2);
            break;
        case BandwidthRule::fixed:
            h = config.fixed_h;
            break;
    }
    if (!std::isfinite(h) || !(h > 0.0)) {
        h = config.degenerate_bandwidth;
    }
    return h;
}

RowDensity kde_density(std::span<const double> row, const KdeConfig& config) {
    config.validate();
    if (row.empty()) {
        fail_input("kde_density requires a non-empty row");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (!std::isfinite(row[i])) {
            fail_input("non-finite value at index ", i);
        }
    }

    RowDensity out;
    out.h_used = bandwidth(row, config);
    const std::size_t n = row.size();
    const double inv_h = 1.0 / out.h_used;
    const double norm = kInvSqrt2Pi / (static_cast<double>(n) * out.h_used);
    out.densities.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = row[j];
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (xj - row[i]) * inv_h;
            sum += std::exp(-0.5 * u * u);
        }
        out.densities[j] = sum * norm;
    }
    return out;
}

std::vector<std::uint64_t> density_rank_order(std::span<const double> row,
                                              const KdeConfig& config) {
    const RowDensity d = kde_density(row, config);
    std::vector<std::uint64_t> order(row.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
        if (d.densities[a] != d.densities[b]) {
            return d.densities[a] > d.densities[b];
        }
        return a < b;
    });
    return order;
}

std::vector<std::uint64_t> select_top_k(std::span<const double> row, std::uint64_t k,
                                        const KdeConfig& config) {
    std::vector<std::uint64_t> order = density_rank_order(row, config);
    const std::size_t m = static_cast<std::size_t>(std::min<std::uint64_t>(k, order.size()));
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace kenforge
