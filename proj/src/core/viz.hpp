// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/bitmatrix.hpp"

namespace kenforge {

// One palette index per parameter cell: 1 = retained, 0 = blank.
struct GridImage {
    std::uint64_t width = 0;
    std::uint64_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, width*height entries

    std::uint64_t retained_count() const;
};

enum class GridFormat { pgm, csv };

// Renders a bit matrix to a cell grid. stride 1 maps one pixel per
// parameter; stride s > 1 is a lossy block downsample where a block is
// retained if any covered cell is set.
GridImage render_grid(const BitMatrix& bits, std::uint64_t stride = 1);

// Binary PGM (P5, maxval 255): retained cells are black (0), blank cells
// white (255). Header is exactly "P5\n<width> <height>\n255\n".
void write_pgm(const GridImage& grid, const std::string& path);

// Grid CSV: a "# retained=<n>" comment line, then one 0/1 row per grid
// row, LF line endings.
void write_grid_csv(const GridImage& grid, const std::string& path);

// Writes the three difference panels to out_prefix.{common,a_only,b_only}
// with the format's extension. Returns the paths in that order.
std::vector<std::string> emit_tri_panel(const BitMatrix& common, const BitMatrix& a_only,
                                        const BitMatrix& b_only, const std::string& out_prefix,
                                        GridFormat format, std::uint64_t stride = 1);

// Similarity table CSV: header "Subnet A,Subnet B,<model...>", one row per
// unordered label pair, percentages with 2 decimals. Model columns appear
// in first-appearance order; cells without a report stay empty.
void emit_overlap_table(const std::vector<OverlapReport>& reports, const std::string& out_path);

}  // namespace kenforge
