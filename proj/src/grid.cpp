#include "fieldseg/grid.hpp"

#include "fieldseg/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace fieldseg {

PixelGrid::PixelGrid(int rows, int cols, std::uint8_t fill)
    : PixelGrid(rows, cols,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(rows, 0)) *
                                              static_cast<std::size_t>(std::max(cols, 0)),
                                          fill)) {}

PixelGrid::PixelGrid(int rows, int cols, std::vector<std::uint8_t> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows < 2 || cols < 2) {
        throw Error(ErrorCode::InvalidArgument,
                    "grid must be at least 2x2, got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
    if (values_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw Error(ErrorCode::ShapeMismatch, "value count does not match rows*cols");
    }
}

std::uint8_t PixelGrid::at(Site t) const {
    if (!contains(t)) {
        throw Error(ErrorCode::OutOfBounds,
                    "site (" + std::to_string(t.row) + "," + std::to_string(t.col) + ")");
    }
    return values_[index(t)];
}

std::vector<Site> neighbors(const PixelGrid& grid, Site t) {
    if (!grid.contains(t)) {
        throw Error(ErrorCode::OutOfBounds,
                    "site (" + std::to_string(t.row) + "," + std::to_string(t.col) + ")");
    }
    std::vector<Site> out;
    out.reserve(4);
    const Site candidates[4] = {
        {t.row - 1, t.col}, {t.row + 1, t.col}, {t.row, t.col - 1}, {t.row, t.col + 1}};
    for (const Site& u : candidates) {
        if (grid.contains(u)) out.push_back(u);
    }
    return out;
}

std::vector<Site> region_boundary(const PixelGrid& grid, Site anchor, int m) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "region size must be >= 1");
    if (!grid.contains(anchor) || !grid.contains({anchor.row + m, anchor.col + m})) {
        throw Error(ErrorCode::OutOfBounds, "window exceeds grid");
    }
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(2 * m + 1));
    for (int r = 0; r < m; ++r) out.push_back({anchor.row + r, anchor.col + m});
    for (int c = 0; c <= m; ++c) out.push_back({anchor.row + m, anchor.col + c});
    return out;
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long number() {
        skip_space_and_comments();
        long value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) throw Error(ErrorCode::MalformedHeader, "number too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw Error(ErrorCode::MalformedHeader, "expected a decimal number");
        return value;
    }

    std::size_t& pos() { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

PixelGrid read_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw Error(ErrorCode::MalformedHeader, "missing P5 magic");
    }
    HeaderReader in(bytes.subspan(2));
    const long width = in.number();
    const long height = in.number();
    const long maxval = in.number();
    if (width < 2 || height < 2) throw Error(ErrorCode::MalformedHeader, "dimensions below 2x2");
    if (maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval));
    std::size_t offset = 2 + in.pos();
    if (offset >= bytes.size() || !std::isspace(bytes[offset])) {
        throw Error(ErrorCode::MalformedHeader, "missing whitespace after maxval");
    }
    ++offset;
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset < count) {
        throw Error(ErrorCode::TruncatedPayload, "expected " + std::to_string(count) + " bytes");
    }
    std::vector<std::uint8_t> values(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
    return PixelGrid(static_cast<int>(height), static_cast<int>(width), std::move(values));
}

std::vector<std::uint8_t> write_pgm(const PixelGrid& grid) {
    const std::string header =
        "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), grid.values().begin(), grid.values().end());
    return out;
}

PixelGrid load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_pgm(bytes);
}

void save_pgm(const std::filesystem::path& path, const PixelGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto bytes = write_pgm(grid);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

int tiled_extent(int n, int stride, int window) {
    if (stride < 1 || window < stride) {
        throw Error(ErrorCode::InvalidArgument, "need stride >= 1 and window >= stride");
    }
    if (n <= window) return window;
    const int steps = (n - window + stride - 1) / stride;
    return window + steps * stride;
}

bool is_tileable(const PixelGrid& grid, int stride, int window) noexcept {
    auto fits = [&](int n) { return n >= window && (n - window) % stride == 0; };
    return stride >= 1 && window >= stride && fits(grid.rows()) && fits(grid.cols());
}

PaddedGrid pad_replicate(const PixelGrid& grid, int stride, int window) {
    const int rows = std::max(grid.rows(), tiled_extent(grid.rows(), stride, window));
    const int cols = std::max(grid.cols(), tiled_extent(grid.cols(), stride, window));
    const PadInfo pad{rows - grid.rows(), cols - grid.cols()};
    if (pad.rows == 0 && pad.cols == 0) return {grid, pad};

    std::vector<std::uint8_t> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        const int sr = std::min(r, grid.rows() - 1);
        for (int c = 0; c < cols; ++c) {
            values[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                grid(sr, std::min(c, grid.cols() - 1));
        }
    }
    return {PixelGrid(rows, cols, std::move(values)), pad};
}

PixelGrid crop(const PixelGrid& grid, int rows, int cols) {
    if (rows > grid.rows() || cols > grid.cols()) throw Error(ErrorCode::OutOfBounds, "crop exceeds grid");
    if (rows == grid.rows() && cols == grid.cols()) return grid;
    std::vector<std::uint8_t> values;
    values.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) values.push_back(grid(r, c));
    }
    return PixelGrid(rows, cols, std::move(values));
}

std::vector<Site> window_anchors(int rows, int cols, int stride, int window) {
    std::vector<Site> out;
    for (int r = 0; r + window <= rows; r += stride) {
        for (int c = 0; c + window <= cols; c += stride) out.push_back({r, c});
    }
    return out;
}

} // namespace fieldseg
