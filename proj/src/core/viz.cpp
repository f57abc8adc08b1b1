// SPDX-License-Identifier: Apache-2.0
#include "core/viz.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <utility>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace kenforge {

std::uint64_t GridImage::retained_count() const {
    std::uint64_t n = 0;
    for (std::uint8_t p : pixels) {
        n += (p != 0);
    }
    return n;
}

GridImage render_grid(const BitMatrix& bits, std::uint64_t stride) {
    if (stride < 1) {
        fail_input("grid stride must be >= 1, got ", stride);
    }
    GridImage grid;
    grid.height = (bits.rows() + stride - 1) / stride;
    grid.width = (bits.cols() + stride - 1) / stride;
    grid.pixels.assign(grid.width * grid.height, 0);
    if (stride == 1) {
        for (std::uint64_t r = 0; r < bits.rows(); ++r) {
            for (std::uint64_t c = 0; c < bits.cols(); ++c) {
                grid.pixels[r * grid.width + c] = bits.get(r, c) ? 1 : 0;
            }
        }
        return grid;
    }
    // lossy block downsample: a block is retained if any covered cell is
    for (std::uint64_t r = 0; r < bits.rows(); ++r) {
        const std::uint64_t gr = r / stride;
        for (std::uint64_t c = 0; c < bits.cols(); ++c) {
            if (bits.get(r, c)) {
                grid.pixels[gr * grid.width + c / stride] = 1;
            }
        }
    }
    return grid;
}

void write_pgm(const GridImage& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        fail_io("cannot open file for writing: ", path);
    }
    out << "P5\n" << grid.width << " " << grid.height << "\n255\n";
    std::vector<char> payload(grid.pixels.size());
    for (std::size_t i = 0; i < grid.pixels.size(); ++i) {
        payload[i] = grid.pixels[i] ? '\x00' : '\xFF';  // retained = black
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) {
        fail_io("write failed: ", path);
    }
}

void write_grid_csv(const GridImage& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        fail_io("cannot open file for writing: ", path);
    }
    out << "# retained=" << grid.retained_count() << "\n";
    for (std::uint64_t r = 0; r < grid.height; ++r) {
        for (std::uint64_t c = 0; c < grid.width; ++c) {
            if (c > 0) {
                out.put(',');
            }
            out.put(grid.pixels[r * grid.width + c] ? '1' : '0');
        }
        out.put('\n');
    }
    out.flush();
    if (!out) {
        fail_io("write failed: ", path);
    }
}

std::vector<std::string> emit_tri_panel(const BitMatrix& common, const BitMatrix& a_only,
                                        const BitMatrix& b_only, const std::string& out_prefix,
                                        GridFormat format, std::uint64_t stride) {
    if (!common.same_shape(a_only) || !common.same_shape(b_only)) {
        fail_input("tri-panel matrices must share one shape, got ", common.rows(), "x",
                   common.cols(), ", ", a_only.rows(), "x", a_only.cols(), ", ", b_only.rows(),
                   "x", b_only.cols());
    }
    const char* extension = format == GridFormat::pgm ? ".pgm" : ".csv";
    const std::pair<const char*, const BitMatrix*> panels[3] = {
        {".common", &common}, {".a_only", &a_only}, {".b_only", &b_only}};

    std::vector<std::string> paths;
    paths.reserve(3);
    for (const auto& [suffix, bits] : panels) {
        const std::string path = out_prefix + suffix + extension;
        const GridImage grid = render_grid(*bits, stride);
        if (format == GridFormat::pgm) {
            write_pgm(grid, path);
        } else {
            write_grid_csv(grid, path);
        }
        paths.push_back(path);
    }
    return paths;
}

static std::string format_pct(double pct) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", pct);
    return buf;
}

void emit_overlap_table(const std::vector<OverlapReport>& reports, const std::string& out_path) {
    using PairKey = std::pair<std::string, std::string>;

    std::vector<std::string> models;
    std::vector<PairKey> pairs;
    std::map<std::pair<PairKey, std::string>, double> cells;
    for (const OverlapReport& report : reports) {
        const PairKey pair = report.label_a <= report.label_b
                                 ? PairKey{report.label_a, report.label_b}
                                 : PairKey{report.label_b, report.label_a};
        if (std::find(models.begin(), models.end(), report.model) == models.end()) {
            models.push_back(report.model);
        }
        if (std::find(pairs.begin(), pairs.end(), pair) == pairs.end()) {
            pairs.push_back(pair);
        }
        const auto key = std::make_pair(pair, report.model);
        const auto [it, inserted] = cells.emplace(key, report.overlap_pct);
        if (!inserted && it->second != report.overlap_pct) {
            fail_input("conflicting duplicate pair (", pair.first, ", ", pair.second,
                       ") for model '", report.model, "': ", it->second, " vs ",
                       report.overlap_pct);
        }
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        fail_io("cannot open file for writing: ", out_path);
    }
    std::vector<std::string> header = {"Subnet A", "Subnet B"};
    header.insert(header.end(), models.begin(), models.end());
    csv::write_row(out, header);
    for (const PairKey& pair : pairs) {
        std::vector<std::string> row = {pair.first, pair.second};
        for (const std::string& model : models) {
            auto it = cells.find(std::make_pair(pair, model));
            row.push_back(it != cells.end() ? format_pct(it->second) : "");
        }
        csv::write_row(out, row);
    }
    out.flush();
    if (!out) {
        fail_io("write failed: ", out_path);
    }
}

}  // namespace kenforge
