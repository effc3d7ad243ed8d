// Copyright 2026 The semfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "semfuse/common.hpp"

namespace semfuse
{

/// Metric footprint of a BEV grid in the ego frame, meters.
struct BevExtent
{
  double x_min = -54.0;
  double x_max = 54.0;
  double y_min = -54.0;
  double y_max = 54.0;

  bool valid() const
  {
    return std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max) &&
           x_max > x_min && y_max > y_min;
  }

  friend bool operator==(const BevExtent &, const BevExtent &) = default;
};

/// Shape of a BEV grid: `rows` span y, `cols` span x. Row 0 starts at y_min,
/// column 0 at x_min; cells are half-open [min, min + size).
struct BevSpec
{
  BevExtent extent;
  int rows = 180;
  int cols = 180;
  int channels = 80;

  void validate() const
  {
    require(extent.valid(), "BEV extent must be finite and nonempty");
    require(rows >= 1 && cols >= 1 && channels >= 1, "BEV dimensions must be positive");
  }

  double cell_width() const { return (extent.x_max - extent.x_min) / cols; }
  double cell_height() const { return (extent.y_max - extent.y_min) / rows; }

  /// Flat row-major cell index of (x, y); empty outside the extent.
  std::optional<std::size_t> cell_of(double x, double y) const
  {
    if (!(x >= extent.x_min && x < extent.x_max && y >= extent.y_min && y < extent.y_max)) {
      return std::nullopt;
    }
    const auto col = static_cast<long>(std::floor((x - extent.x_min) / cell_width()));
    const auto row = static_cast<long>(std::floor((y - extent.y_min) / cell_height()));
    if (col < 0 || col >= cols || row < 0 || row >= rows) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(row) * cols + static_cast<std::size_t>(col);
  }

  /// Ego-frame center of cell (row, col).
  std::pair<double, double> cell_center(int row, int col) const
  {
    return {extent.x_min + (col + 0.5) * cell_width(), extent.y_min + (row + 0.5) * cell_height()};
  }
};

/// Channel-major C x rows x cols feature grid.
struct BevGrid
{
  BevSpec spec;
  std::vector<double> data;

  BevGrid() = default;
  explicit BevGrid(const BevSpec & s) : spec(s)
  {
    spec.validate();
    data.assign(static_cast<std::size_t>(s.channels) * s.rows * s.cols, 0.0);
  }

  int channels() const { return spec.channels; }
  int rows() const { return spec.rows; }
  int cols() const { return spec.cols; }
  std::size_t cells() const { return static_cast<std::size_t>(spec.rows) * spec.cols; }

  double & at(int c, int r, int col) { return data[(static_cast<std::size_t>(c) * spec.rows + r) * spec.cols + col]; }
  double at(int c, int r, int col) const { return data[(static_cast<std::size_t>(c) * spec.rows + r) * spec.cols + col]; }

  double & at(int c, std::size_t cell) { return data[static_cast<std::size_t>(c) * cells() + cell]; }
  double at(int c, std::size_t cell) const { return data[static_cast<std::size_t>(c) * cells() + cell]; }

  /// Sum of one channel over all cells.
  double channel_mass(int c) const
  {
    double s = 0.0;
    for (std::size_t k = 0; k < cells(); ++k) {
      s += at(c, k);
    }
    return s;
  }

  bool same_layout(const BevGrid & other) const
  {
    return spec.extent == other.spec.extent && spec.rows == other.spec.rows && spec.cols == other.spec.cols;
  }
};

/// Items grouped by destination cell. Within a cell, items keep their input
/// order, so any per-cell fold over `items_in(cell)` is independent of how
/// cells are later distributed over workers.
struct CellGroups
{
  std::vector<std::uint32_t> offsets;  // size cells + 1
  std::vector<std::uint32_t> items;
  std::size_t dropped = 0;

  std::size_t begin(std::size_t cell) const { return offsets[cell]; }
  std::size_t end(std::size_t cell) const { return offsets[cell + 1]; }
};

/// Stable counting sort of item indices by cell. `cell_of(i)` returns the
/// destination cell or empty for dropped items.
template <typename CellOf>
CellGroups group_by_cell(std::size_t n_items, std::size_t n_cells, CellOf && cell_of)
{
  require(n_items < UINT32_MAX, "too many items to group");
  CellGroups g;
  std::vector<std::uint32_t> dest(n_items, UINT32_MAX);
  parallel_for(n_items, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (const std::optional<std::size_t> c = cell_of(i)) {
        dest[i] = static_cast<std::uint32_t>(*c);
      }
    }
  });
  g.offsets.assign(n_cells + 1, 0);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (dest[i] == UINT32_MAX) {
      ++g.dropped;
    } else {
      ++g.offsets[dest[i] + 1];
    }
  }
  for (std::size_t c = 0; c < n_cells; ++c) {
    g.offsets[c + 1] += g.offsets[c];
  }
  g.items.resize(n_items - g.dropped);
  std::vector<std::uint32_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (dest[i] != UINT32_MAX) {
      g.items[cursor[dest[i]]++] = static_cast<std::uint32_t>(i);
    }
  }
  return g;
}

}  // namespace semfuse
