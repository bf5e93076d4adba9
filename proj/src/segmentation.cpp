#include "fieldseg/segmentation.hpp"

#include "fieldseg/dbn.hpp"
#include "fieldseg/error.hpp"
#include "fieldseg/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace fieldseg {

std::string_view to_string(SmoothMode mode) noexcept {
    switch (mode) {
    case SmoothMode::Empirical: return "empirical";
    case SmoothMode::Dbn: return "dbn";
    case SmoothMode::Metropolis: return "metropolis";
    }
    return "empirical";
}

std::optional<SmoothMode> parse_smooth_mode(std::string_view text) noexcept {
    if (text == "empirical") return SmoothMode::Empirical;
    if (text == "dbn") return SmoothMode::Dbn;
    if (text == "metropolis") return SmoothMode::Metropolis;
    return std::nullopt;
}

namespace {

void require_tileable(const PixelGrid& grid, int m_c) {
    if (m_c < 1) throw Error(ErrorCode::InvalidArgument, "m_c must be >= 1");
    if (!is_tileable(grid, m_c, m_c + 1)) {
        throw Error(ErrorCode::WindowMismatch, "grid " + std::to_string(grid.rows()) + "x" +
                                                   std::to_string(grid.cols()) + " is not tileable by " +
                                                   std::to_string(m_c + 1) + "-windows at stride " +
                                                   std::to_string(m_c) + "; pad first");
    }
}

void require_epsilon(int epsilon) {
    if (epsilon < 1 || epsilon > 256) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [1, 256]");
}

} // namespace

std::vector<std::uint8_t> window_modes(const PixelGrid& grid, int m_c) {
    require_tileable(grid, m_c);
    const int w = m_c + 1;
    const auto anchors = window_anchors(grid.rows(), grid.cols(), m_c, w);
    std::vector<std::uint8_t> modes;
    modes.reserve(anchors.size());
    std::array<int, 256> counts{};
    for (const Site a : anchors) {
        counts.fill(0);
        for (int r = a.row; r < a.row + w; ++r) {
            for (int c = a.col; c < a.col + w; ++c) ++counts[grid(r, c)];
        }
        // max_element returns the first maximum: ties resolve to the smallest intensity.
        modes.push_back(static_cast<std::uint8_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
    }
    return modes;
}

PixelGrid substitute_window_values(const PixelGrid& grid, int m_c, int epsilon,
                                   std::span<const std::uint8_t> window_values) {
    require_tileable(grid, m_c);
    require_epsilon(epsilon);
    const int w = m_c + 1;
    const auto anchors = window_anchors(grid.rows(), grid.cols(), m_c, w);
    if (anchors.size() != window_values.size()) {
        throw Error(ErrorCode::ShapeMismatch, "one value per window expected");
    }
    std::vector<int> best(grid.size(), std::numeric_limits<int>::max());
    std::vector<std::uint8_t> chosen(grid.values().begin(), grid.values().end());
    for (std::size_t k = 0; k < anchors.size(); ++k) {
        const Site a = anchors[k];
        const int mu = window_values[k];
        for (int r = a.row; r < a.row + w; ++r) {
            for (int c = a.col; c < a.col + w; ++c) {
                const std::size_t i = grid.index({r, c});
                const int d = std::abs(int{grid(r, c)} - mu);
                if (d < best[i]) {
                    best[i] = d;
                    chosen[i] = static_cast<std::uint8_t>(mu);
                }
            }
        }
    }
    std::vector<std::uint8_t> out(grid.values().begin(), grid.values().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (best[i] < epsilon) out[i] = chosen[i];
    }
    return PixelGrid(grid.rows(), grid.cols(), std::move(out));
}

PixelGrid smooth_empirical(const PixelGrid& grid, int m_c, int epsilon) {
    return substitute_window_values(grid, m_c, epsilon, window_modes(grid, m_c));
}

PixelGrid smooth_guided(const PixelGrid& reference, const PixelGrid& target, int m_c, int epsilon) {
    if (reference.rows() != target.rows() || reference.cols() != target.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "reference and target differ in shape");
    }
    return substitute_window_values(target, m_c, epsilon, window_modes(reference, m_c));
}

double violation_rate(const PixelGrid& grid, int m_c, int epsilon) {
    require_tileable(grid, m_c);
    const int w = m_c + 1;
    long long violations = 0;
    long long pairs = 0;
    for (const Site a : window_anchors(grid.rows(), grid.cols(), m_c, w)) {
        for (int r = a.row; r < a.row + w; ++r) {
            for (int c = a.col; c < a.col + w; ++c) {
                if (c + 1 < a.col + w) {
                    ++pairs;
                    violations += std::abs(int{grid(r, c)} - int{grid(r, c + 1)}) >= epsilon;
                }
                if (r + 1 < a.row + w) {
                    ++pairs;
                    violations += std::abs(int{grid(r, c)} - int{grid(r + 1, c)}) >= epsilon;
                }
            }
        }
    }
    return pairs == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(pairs);
}

int estimate_epsilon_c(const PixelGrid& grid, double delta_tol) {
    if (!(delta_tol >= 0.0 && delta_tol < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "delta_tol must lie in [0, 1)");
    }
    std::array<long long, 256> diff_counts{};
    long long pairs = 0;
    for (int r = 0; r < grid.rows(); ++r) {
        for (int c = 0; c + 1 < grid.cols(); ++c) {
            ++diff_counts[static_cast<std::size_t>(std::abs(int{grid(r, c)} - int{grid(r, c + 1)}))];
            ++pairs;
        }
    }
    // at_least = number of pairs with difference >= eps
    long long at_least = pairs - diff_counts[0];
    for (int eps = 1; eps <= 255; ++eps) {
        if (static_cast<double>(at_least) <= delta_tol * static_cast<double>(pairs)) return eps;
        at_least -= diff_counts[static_cast<std::size_t>(eps)];
    }
    return 256;
}

int mask_components(std::span<const std::uint8_t> mask, int rows, int cols, std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (mask.size() != n) throw Error(ErrorCode::ShapeMismatch, "mask does not match dimensions");
    labels.assign(n, -1);
    int count = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (!mask[start] || labels[start] >= 0) continue;
        labels[start] = count;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int r = static_cast<int>(i / static_cast<std::size_t>(cols));
            const int c = static_cast<int>(i % static_cast<std::size_t>(cols));
            const std::array<std::pair<int, int>, 4> next = {{{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
            for (const auto& [nr, nc] : next) {
                if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                const auto j = static_cast<std::size_t>(nr) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(nc);
                if (mask[j] && labels[j] < 0) {
                    labels[j] = count;
                    stack.push_back(j);
                }
            }
        }
        ++count;
    }
    return count;
}

namespace {

int box_gap(const RegionProposal& a, const RegionProposal& b) {
    const int dr = std::max({0, b.top - a.bottom, a.top - b.bottom});
    const int dc = std::max({0, b.left - a.right, a.left - b.right});
    return dr + dc;
}

} // namespace

std::vector<RegionProposal> region_proposals(std::span<const std::uint8_t> mask, int rows, int cols) {
    std::vector<int> labels;
    const int count = mask_components(mask, rows, cols, labels);
    std::vector<RegionProposal> boxes(static_cast<std::size_t>(count));
    std::vector<bool> seen(static_cast<std::size_t>(count), false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) continue;
        const int r = static_cast<int>(i / static_cast<std::size_t>(cols));
        const int c = static_cast<int>(i % static_cast<std::size_t>(cols));
        auto& b = boxes[static_cast<std::size_t>(labels[i])];
        if (!seen[static_cast<std::size_t>(labels[i])]) {
            seen[static_cast<std::size_t>(labels[i])] = true;
            b = {r, c, r, c, 0, labels[i]};
        }
        b.top = std::min(b.top, r);
        b.bottom = std::max(b.bottom, r);
        b.left = std::min(b.left, c);
        b.right = std::max(b.right, c);
        ++b.pixels;
    }

    // Merge to a fixpoint. `id` temporarily holds the smallest member
    // component label, which is also the raster order of the first member.
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < boxes.size();) {
                if (box_gap(boxes[i], boxes[j]) <= 1) {
                    auto& a = boxes[i];
                    const auto& b = boxes[j];
                    a.top = std::min(a.top, b.top);
                    a.left = std::min(a.left, b.left);
                    a.bottom = std::max(a.bottom, b.bottom);
                    a.right = std::max(a.right, b.right);
                    a.pixels += b.pixels;
                    a.id = std::min(a.id, b.id);
                    boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
                    merged = true;
                } else {
                    ++j;
                }
            }
        }
    }
    std::sort(boxes.begin(), boxes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < boxes.size(); ++k) boxes[k].id = static_cast<int>(k);
    return boxes;
}

PixelGrid equilibrium_image(const PixelGrid& grid, const SegmentationParams& params) {
    require_epsilon(params.epsilon);
    switch (params.mode) {
    case SmoothMode::Metropolis: {
        AnnealParams ap;
        ap.epsilon = params.epsilon;
        ap.seed = derive_seed(params.seed, "anneal");
        return anneal(grid, ap).smoothed;
    }
    case SmoothMode::Dbn: {
        const PaddedGrid padded = pad_replicate(grid, params.m_c, params.m_c + 1);
        TrainOptions options;
        options.epochs = params.dbn_epochs;
        options.lr = params.dbn_lr;
        options.batch_size = params.dbn_batch;
        options.seed = derive_seed(params.seed, "dbn-train");
        const DbnModel model =
            fit_dbn_smoother(padded.grid, params.m_c, params.k_c, derive_seed(params.seed, "dbn-init"), options);
        return crop(smooth_dbn(padded.grid, model, params.m_c, params.epsilon), grid.rows(), grid.cols());
    }
    case SmoothMode::Empirical:
        break;
    }
    const PaddedGrid padded = pad_replicate(grid, params.m_c, params.m_c + 1);
    return crop(smooth_empirical(padded.grid, params.m_c, params.epsilon), grid.rows(), grid.cols());
}

SegmentationResult segment(const PixelGrid& grid, const SegmentationParams& params) {
    if (params.tau < 1) throw Error(ErrorCode::InvalidArgument, "tau must be >= 1");
    if (params.m_c < 1) throw Error(ErrorCode::InvalidArgument, "m_c must be >= 1");

    SegmentationResult out;
    out.equilibrium = equilibrium_image(grid, params);

    const auto original = grid.values();
    const auto eq = out.equilibrium.values();
    std::vector<std::uint8_t> diff(original.size());
    std::vector<std::uint8_t> overlay(original.begin(), original.end());
    out.mask.assign(original.size(), 0);
    for (std::size_t i = 0; i < original.size(); ++i) {
        const int d = std::abs(int{eq[i]} - int{original[i]});
        if (d >= params.tau) {
            diff[i] = static_cast<std::uint8_t>(d);
            out.mask[i] = 1;
            overlay[i] = 255;
        }
    }
    out.difference = PixelGrid(grid.rows(), grid.cols(), std::move(diff));
    out.overlay = PixelGrid(grid.rows(), grid.cols(), std::move(overlay));
    out.proposals = region_proposals(out.mask, grid.rows(), grid.cols());

    const PaddedGrid padded = pad_replicate(grid, params.m_c, params.m_c + 1);
    out.violation_rate = violation_rate(padded.grid, params.m_c, params.epsilon);
    return out;
}

std::string proposals_to_json(const std::vector<RegionProposal>& proposals) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& p : proposals) {
        nlohmann::ordered_json j;
        j["box"] = {p.top, p.left, p.bottom, p.right};
        j["pixels"] = p.pixels;
        j["id"] = p.id;
        list.push_back(std::move(j));
    }
    return list.dump();
}

} // namespace fieldseg
