#pragma once

#include "fieldseg/annealing.hpp"
#include "fieldseg/grid.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldseg {

enum class SmoothMode { Empirical, Dbn, Metropolis };

std::string_view to_string(SmoothMode mode) noexcept;
std::optional<SmoothMode> parse_smooth_mode(std::string_view text) noexcept;

struct SegmentationParams {
    int epsilon = 70;  ///< open-edge margin used by the smoother, in [1, 256]
    int tau = 1;       ///< difference values below tau count as zero
    int m_c = 2;
    SmoothMode mode = SmoothMode::Empirical;
    std::uint64_t seed = 0;

    // dbn mode
    int k_c = 2;
    int dbn_epochs = 30;
    double dbn_lr = 1e-3;
    int dbn_batch = 32;
};

struct RegionProposal {
    int top = 0;
    int left = 0;
    int bottom = 0;
    int right = 0;
    int pixels = 0;
    int id = 0;

    friend bool operator==(const RegionProposal&, const RegionProposal&) = default;
};

struct SegmentationResult {
    PixelGrid equilibrium;
    PixelGrid difference;
    std::vector<std::uint8_t> mask;  ///< 0/1 per site, row-major
    PixelGrid overlay;
    std::vector<RegionProposal> proposals;
    double violation_rate = 0.0;

    friend bool operator==(const SegmentationResult&, const SegmentationResult&) = default;
};

/// Modal intensity of every (m_c+1)-window at stride m_c, raster order; ties
/// go to the smallest intensity. The grid must be tileable.
std::vector<std::uint8_t> window_modes(const PixelGrid& grid, int m_c);

/// Resolution pass shared by all smoothers. Each pixel u takes the value
/// mu_w of the covering window closest to i_u (ties to the lowest window
/// index) when that distance is below epsilon; otherwise it is kept.
PixelGrid substitute_window_values(const PixelGrid& grid, int m_c, int epsilon,
                                   std::span<const std::uint8_t> window_values);

PixelGrid smooth_empirical(const PixelGrid& grid, int m_c, int epsilon);

/// Window modes taken from `reference`, substitution applied to `target`
/// (same shape). Used to carry the equilibrium learned on an original image
/// over to its reconstruction.
PixelGrid smooth_guided(const PixelGrid& reference, const PixelGrid& target, int m_c, int epsilon);

/// Fraction of within-window 4-neighbor pairs (counted per window) whose
/// intensity difference reaches epsilon. Grid must be tileable.
double violation_rate(const PixelGrid& grid, int m_c, int epsilon);

/// Smallest epsilon in [1, 256] for which at most `delta_tol` of the
/// horizontally adjacent pairs differ by epsilon or more.
int estimate_epsilon_c(const PixelGrid& grid, double delta_tol);

/// 4-connected components of a 0/1 mask, dense labels in raster order, -1
/// for unmasked sites. Returns the component count.
int mask_components(std::span<const std::uint8_t> mask, int rows, int cols, std::vector<int>& labels);

/// Components of the mask as boxes, merged while any two boxes lie within
/// Hamming gap 1 of each other. Ids are dense in order of first member.
std::vector<RegionProposal> region_proposals(std::span<const std::uint8_t> mask, int rows, int cols);

/// Smoothing according to params.mode, on a grid of any size (padding is
/// handled internally and cropped away).
PixelGrid equilibrium_image(const PixelGrid& grid, const SegmentationParams& params);

SegmentationResult segment(const PixelGrid& grid, const SegmentationParams& params);

std::string proposals_to_json(const std::vector<RegionProposal>& proposals);

} // namespace fieldseg
