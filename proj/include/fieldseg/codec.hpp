#pragma once

#include "fieldseg/grid.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldseg {

/// Shared uniform m_c x m_c sample plus the 2m_c+1 boundary pixels of every
/// disjoint (m_c+1)-tile of the padded image. Tile interiors are not stored.
struct CompressedImage {
    int rows = 0;
    int cols = 0;
    int pad_rows = 0;
    int pad_cols = 0;
    int m_c = 1;
    std::vector<std::uint8_t> sample;      ///< m_c^2 values
    std::vector<std::uint8_t> boundaries;  ///< tiles in raster order, 2m_c+1 values each

    int tile() const noexcept { return m_c + 1; }
    int padded_rows() const noexcept { return rows + pad_rows; }
    int padded_cols() const noexcept { return cols + pad_cols; }
    std::size_t tile_count() const noexcept;
    std::size_t boundary_width() const noexcept { return static_cast<std::size_t>(2 * m_c + 1); }

    friend bool operator==(const CompressedImage&, const CompressedImage&) = default;
};

struct CodecStats {
    std::size_t raw_bytes = 0;
    std::size_t compressed_bytes = 0;
    double ratio = 0.0;
};

inline constexpr std::size_t kRfcHeaderBytes = 12;

CompressedImage compress(const PixelGrid& grid, int m_c, std::uint64_t seed);

/// Padded layout with every tile's interior replaced by the shared sample,
/// cropped to the original size.
PixelGrid render_compressed(const CompressedImage& c);

/// Tile interiors filled with the rounded (half to even) mean of the tile's
/// stored boundary pixels. Independent of the sample.
PixelGrid reconstruct(const CompressedImage& c);

/// "RFC1" | u8 version=1 | u16 BE rows | u16 BE cols | u8 pad_rows |
/// u8 pad_cols | u8 m_c | m_c^2 sample bytes | boundary bytes.
std::vector<std::uint8_t> write_rfc(const CompressedImage& c);
CompressedImage read_rfc(std::span<const std::uint8_t> bytes);

CodecStats codec_stats(const PixelGrid& original, const CompressedImage& c);
std::string to_json(const CodecStats& stats);

} // namespace fieldseg
