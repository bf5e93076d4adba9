#pragma once

#include "fieldseg/grid.hpp"
#include "fieldseg/segmentation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fieldseg {

struct Histogram256 {
    std::array<std::uint64_t, 256> counts{};
    std::uint64_t total = 0;

    friend bool operator==(const Histogram256&, const Histogram256&) = default;
};

Histogram256 histogram(std::span<const std::uint8_t> values);
Histogram256 histogram(const PixelGrid& grid);

/// D(p || q) in nats with +1 smoothing per bin on both sides.
double kl_divergence(const Histogram256& p, const Histogram256& q);

/// Inverse standard normal CDF (Wichura's AS 241, PPND16).
double normal_quantile(double p);

struct SwReport {
    double w = 0.0;
    std::size_t n = 0;  ///< sample size actually used
    bool subsampled = false;
};

inline constexpr std::size_t kSwMaxSample = 5000;

/// Shapiro-Wilk W via Royston's AS R94. Samples longer than `max_n` are
/// reduced by seeded stride sampling (`max_n` = 0 disables the cap).
SwReport shapiro_wilk(std::span<const double> sample, std::size_t max_n = kSwMaxSample, std::uint64_t seed = 0);
SwReport shapiro_wilk(const PixelGrid& grid, std::size_t max_n = kSwMaxSample, std::uint64_t seed = 0);

struct SweepRow {
    int epsilon = 0;
    double e = 0.0;  ///< KL divergence, nats
    double s = 0.0;  ///< Shapiro-Wilk W

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// For each epsilon: compress the original (seed derived from params.seed),
/// reconstruct, and smooth both images with the smoother learned on the
/// original. E = KL(hist(smoothed original) || hist(smoothed reconstruction)),
/// S = W of the whole flattened smoothed reconstruction. Rows follow the
/// order of `epsilons`.
std::vector<SweepRow> sweep(const PixelGrid& original, const SegmentationParams& params,
                            std::span<const int> epsilons);

struct TrendSummary {
    int steps = 0;
    int e_non_increasing = 0;
    int s_non_decreasing = 0;

    /// At least 6 of every 7 consecutive steps follow the trend.
    int required() const noexcept { return (6 * steps + 6) / 7; }
    bool e_holds() const noexcept { return e_non_increasing >= required(); }
    bool s_holds() const noexcept { return s_non_decreasing >= required(); }
};

TrendSummary summarize_trends(std::span<const SweepRow> rows);

/// "epsilon,E,S" with one line per row.
std::string sweep_to_csv(std::span<const SweepRow> rows);

} // namespace fieldseg
