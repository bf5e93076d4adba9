#include "fieldseg/codec.hpp"

#include "fieldseg/error.hpp"
#include "fieldseg/numeric.hpp"
#include "fieldseg/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstring>

namespace fieldseg {

std::size_t CompressedImage::tile_count() const noexcept {
    return static_cast<std::size_t>(padded_rows() / tile()) * static_cast<std::size_t>(padded_cols() / tile());
}

namespace {

void validate(const CompressedImage& c) {
    if (c.m_c < 1 || c.m_c > 255) throw Error(ErrorCode::InvalidArgument, "m_c must lie in [1, 255]");
    if (c.rows < 2 || c.cols < 2 || c.rows > 65535 || c.cols > 65535) {
        throw Error(ErrorCode::InconsistentDims, "dimensions out of range");
    }
    if (c.pad_rows < 0 || c.pad_cols < 0 || c.pad_rows > 255 || c.pad_cols > 255 ||
        c.padded_rows() % c.tile() != 0 || c.padded_cols() % c.tile() != 0) {
        throw Error(ErrorCode::InconsistentDims, "padding does not produce whole tiles");
    }
    if (c.sample.size() != static_cast<std::size_t>(c.m_c) * static_cast<std::size_t>(c.m_c)) {
        throw Error(ErrorCode::InconsistentDims, "sample must hold m_c^2 values");
    }
    if (c.boundaries.size() != c.tile_count() * c.boundary_width()) {
        throw Error(ErrorCode::InconsistentDims, "boundary payload does not match tile count");
    }
}

// Padded grid holding boundary pixels in place and `interior(tile_index)` in
// every tile's upper-left block.
template <typename Interior>
PixelGrid assemble(const CompressedImage& c, Interior interior) {
    validate(c);
    const int t = c.tile();
    const int rows = c.padded_rows();
    const int cols = c.padded_cols();
    std::vector<std::uint8_t> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    auto at = [&](int r, int col) -> std::uint8_t& {
        return values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col)];
    };
    std::size_t tile_index = 0;
    for (int r0 = 0; r0 < rows; r0 += t) {
        for (int c0 = 0; c0 < cols; c0 += t, ++tile_index) {
            const std::span<const std::uint8_t> boundary(c.boundaries.data() + tile_index * c.boundary_width(),
                                                         c.boundary_width());
            std::size_t k = 0;
            for (int i = 0; i < c.m_c; ++i) at(r0 + i, c0 + c.m_c) = boundary[k++];
            for (int j = 0; j <= c.m_c; ++j) at(r0 + c.m_c, c0 + j) = boundary[k++];
            for (int i = 0; i < c.m_c; ++i) {
                for (int j = 0; j < c.m_c; ++j) at(r0 + i, c0 + j) = interior(boundary, i, j);
            }
        }
    }
    return crop(PixelGrid(rows, cols, std::move(values)), c.rows, c.cols);
}

} // namespace

CompressedImage compress(const PixelGrid& grid, int m_c, std::uint64_t seed) {
    if (m_c < 1 || m_c > 255) throw Error(ErrorCode::InvalidArgument, "m_c must lie in [1, 255]");
    if (grid.rows() > 65535 || grid.cols() > 65535) throw Error(ErrorCode::InvalidArgument, "image too large");
    const int t = m_c + 1;
    const PaddedGrid padded = pad_replicate(grid, t, t);

    CompressedImage c;
    c.rows = grid.rows();
    c.cols = grid.cols();
    c.pad_rows = padded.pad.rows;
    c.pad_cols = padded.pad.cols;
    c.m_c = m_c;

    Rng rng(seed);
    c.sample.resize(static_cast<std::size_t>(m_c) * static_cast<std::size_t>(m_c));
    for (auto& v : c.sample) v = static_cast<std::uint8_t>(rng.below(256));

    c.boundaries.reserve(c.tile_count() * c.boundary_width());
    for (const Site anchor : window_anchors(padded.grid.rows(), padded.grid.cols(), t, t)) {
        for (const Site s : region_boundary(padded.grid, anchor, m_c)) c.boundaries.push_back(padded.grid.at(s));
    }
    return c;
}

PixelGrid render_compressed(const CompressedImage& c) {
    return assemble(c, [&](std::span<const std::uint8_t>, int i, int j) {
        return c.sample[static_cast<std::size_t>(i) * static_cast<std::size_t>(c.m_c) + static_cast<std::size_t>(j)];
    });
}

PixelGrid reconstruct(const CompressedImage& c) {
    return assemble(c, [](std::span<const std::uint8_t> boundary, int, int) {
        std::int64_t sum = 0;
        for (auto v : boundary) sum += v;
        return static_cast<std::uint8_t>(round_half_even(sum, static_cast<std::int64_t>(boundary.size())));
    });
}

std::vector<std::uint8_t> write_rfc(const CompressedImage& c) {
    validate(c);
    std::vector<std::uint8_t> out{'R', 'F', 'C', '1', 1};
    out.push_back(static_cast<std::uint8_t>(c.rows >> 8));
    out.push_back(static_cast<std::uint8_t>(c.rows & 0xff));
    out.push_back(static_cast<std::uint8_t>(c.cols >> 8));
    out.push_back(static_cast<std::uint8_t>(c.cols & 0xff));
    out.push_back(static_cast<std::uint8_t>(c.pad_rows));
    out.push_back(static_cast<std::uint8_t>(c.pad_cols));
    out.push_back(static_cast<std::uint8_t>(c.m_c));
    out.insert(out.end(), c.sample.begin(), c.sample.end());
    out.insert(out.end(), c.boundaries.begin(), c.boundaries.end());
    return out;
}

CompressedImage read_rfc(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "RFC1", 4) != 0) {
        throw Error(ErrorCode::BadMagic, "not an RFC1 stream");
    }
    if (bytes.size() < kRfcHeaderBytes) throw Error(ErrorCode::TruncatedPayload, "header shorter than 12 bytes");
    if (bytes[4] != 1) throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(bytes[4]));

    CompressedImage c;
    c.rows = (bytes[5] << 8) | bytes[6];
    c.cols = (bytes[7] << 8) | bytes[8];
    c.pad_rows = bytes[9];
    c.pad_cols = bytes[10];
    c.m_c = bytes[11];
    if (c.m_c < 1 || c.rows < 2 || c.cols < 2 || c.padded_rows() % c.tile() != 0 ||
        c.padded_cols() % c.tile() != 0) {
        throw Error(ErrorCode::InconsistentDims, "header fields do not describe whole tiles");
    }
    const std::size_t sample = static_cast<std::size_t>(c.m_c) * static_cast<std::size_t>(c.m_c);
    const std::size_t expected = kRfcHeaderBytes + sample + c.tile_count() * c.boundary_width();
    if (bytes.size() < expected) throw Error(ErrorCode::TruncatedPayload, "payload shorter than header implies");
    if (bytes.size() > expected) throw Error(ErrorCode::InconsistentDims, "payload longer than header implies");

    const auto payload = bytes.subspan(kRfcHeaderBytes);
    c.sample.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(sample));
    c.boundaries.assign(payload.begin() + static_cast<std::ptrdiff_t>(sample), payload.end());
    return c;
}

CodecStats codec_stats(const PixelGrid& original, const CompressedImage& c) {
    CodecStats s;
    s.raw_bytes = original.size();
    s.compressed_bytes = kRfcHeaderBytes + c.sample.size() + c.boundaries.size();
    s.ratio = static_cast<double>(s.compressed_bytes) / static_cast<double>(s.raw_bytes);
    return s;
}

std::string to_json(const CodecStats& stats) {
    nlohmann::ordered_json j;
    j["raw_bytes"] = stats.raw_bytes;
    j["compressed_bytes"] = stats.compressed_bytes;
    j["ratio"] = stats.ratio;
    return j.dump();
}

} // namespace fieldseg
