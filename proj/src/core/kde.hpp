// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kenforge {

enum class Kernel { gaussian };

enum class BandwidthRule { scott, silverman, fixed };

// Kernel/bandwidth policy for per-row density estimation.
//   scott:     h = sigma * n^(-1/5)
//   silverman: h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5)
//   fixed:     h = fixed_h
// sigma is the sample standard deviation (ddof = 1); quartiles use linear
// interpolation between order statistics. Whenever the computed h is not a
// positive finite number (constant rows, n = 1), degenerate_bandwidth is
// used instead.
struct KdeConfig {
    Kernel kernel = Kernel::gaussian;
    BandwidthRule bandwidth_rule = BandwidthRule::scott;
    double fixed_h = 0.0;  // required > 0 when bandwidth_rule == fixed
    double degenerate_bandwidth = 1e-9;

    void validate() const;

    static KdeConfig fixed(double h) {
        KdeConfig c;
        c.bandwidth_rule = BandwidthRule::fixed;
        c.fixed_h = h;
        return c;
    }
};

// Gaussian KDE of one row evaluated at its own sample points.
struct RowDensity {
    std::vector<double> densities;  // one per row element, finite and >= 0
    double h_used = 0.0;
};

// Bandwidth for one row under the configured rule (never <= 0; falls back
// to degenerate_bandwidth).
double bandwidth(std::span<const double> row, const KdeConfig& config);

// f(x_j) = 1/(n*h) * sum_i K((x_j - x_i)/h) with the gaussian kernel,
// the sum running over the full row including x_j itself. Exact O(n^2)
// evaluation; rejects non-finite elements naming the offending index.
RowDensity kde_density(std::span<const double> row, const KdeConfig& config);

// Indices of the min(k, n) highest-density elements, ties broken toward the
// lower index, result sorted ascending.
std::vector<std::uint64_t> select_top_k(std::span<const double> row, std::uint64_t k,
                                        const KdeConfig& config);

// Full ranking of row indices by (density desc, index asc). Its length-m
// prefix equals select_top_k(row, m, config) as a set, for every m.
std::vector<std::uint64_t> density_rank_order(std::span<const double> row,
                                              const KdeConfig& config);

}  // namespace kenforge
