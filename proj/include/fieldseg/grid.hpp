#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fieldseg {

struct Site {
    int row = 0;
    int col = 0;

    friend constexpr auto operator<=>(const Site&, const Site&) = default;
};

/// R x C grid of 8-bit intensities, row-major. Immutable once built.
class PixelGrid {
public:
    PixelGrid() = default;
    PixelGrid(int rows, int cols, std::uint8_t fill = 0);
    PixelGrid(int rows, int cols, std::vector<std::uint8_t> values);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    bool contains(Site t) const noexcept {
        return t.row >= 0 && t.row < rows_ && t.col >= 0 && t.col < cols_;
    }
    std::size_t index(Site t) const noexcept {
        return static_cast<std::size_t>(t.row) * static_cast<std::size_t>(cols_) +
               static_cast<std::size_t>(t.col);
    }
    Site site(std::size_t flat) const noexcept {
        return {static_cast<int>(flat / static_cast<std::size_t>(cols_)),
                static_cast<int>(flat % static_cast<std::size_t>(cols_))};
    }

    std::uint8_t operator()(int row, int col) const noexcept { return values_[index({row, col})]; }
    std::uint8_t at(Site t) const;

    std::span<const std::uint8_t> values() const noexcept { return values_; }

    friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::uint8_t> values_;
};

/// Upper-left anchored square window of side `size`.
struct Region {
    Site anchor;
    int size = 1;
};

/// 4-neighborhood of t clipped to the grid, in up/down/left/right order.
std::vector<Site> neighbors(const PixelGrid& grid, Site t);

/// Shortest 4-connected path length between two sites.
constexpr int hamming(Site t, Site u) noexcept {
    const int dr = t.row > u.row ? t.row - u.row : u.row - t.row;
    const int dc = t.col > u.col ? t.col - u.col : u.col - t.col;
    return dr + dc;
}

/// The 2m+1 sites of the (m+1)x(m+1) window at `anchor` that lie outside its
/// upper-left m x m block: right column (top to bottom) then bottom row.
std::vector<Site> region_boundary(const PixelGrid& grid, Site anchor, int m);

PixelGrid read_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pgm(const PixelGrid& grid);
PixelGrid load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const PixelGrid& grid);

struct PadInfo {
    int rows = 0;
    int cols = 0;

    friend bool operator==(const PadInfo&, const PadInfo&) = default;
};

struct PaddedGrid {
    PixelGrid grid;
    PadInfo pad;
};

/// Smallest extent >= n such that windows of `window` cells at multiples of
/// `stride` end exactly on the last cell.
int tiled_extent(int n, int stride, int window);

bool is_tileable(const PixelGrid& grid, int stride, int window) noexcept;

/// Grows the grid to a tileable size by replicating the last row/column.
PaddedGrid pad_replicate(const PixelGrid& grid, int stride, int window);

/// Upper-left rows x cols block.
PixelGrid crop(const PixelGrid& grid, int rows, int cols);

/// Window anchors at multiples of `stride`, raster order.
std::vector<Site> window_anchors(int rows, int cols, int stride, int window);

} // namespace fieldseg
