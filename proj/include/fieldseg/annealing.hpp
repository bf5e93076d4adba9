#pragma once

#include "fieldseg/grid.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace fieldseg {

/// Open (+1) / closed (-1) state for every 4-neighbor edge of an R x C
/// lattice. Edge ids: horizontal edges (r,c)-(r,c+1) first, row-major, then
/// vertical edges (r,c)-(r+1,c), row-major.
class EdgeConfig {
public:
    static constexpr std::int8_t kOpen = 1;
    static constexpr std::int8_t kClosed = -1;

    EdgeConfig() = default;
    EdgeConfig(int rows, int cols, std::int8_t fill = kClosed);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t edge_count() const noexcept { return states_.size(); }
    std::size_t horizontal_count() const noexcept {
        return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_ - 1);
    }

    std::int8_t state(std::size_t e) const noexcept { return states_[e]; }
    bool is_open(std::size_t e) const noexcept { return states_[e] == kOpen; }
    void set(std::size_t e, std::int8_t s) noexcept { states_[e] = s; }
    void flip(std::size_t e) noexcept { states_[e] = static_cast<std::int8_t>(-states_[e]); }

    std::int8_t horizontal(int row, int col) const noexcept {
        return states_[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_ - 1) +
                       static_cast<std::size_t>(col)];
    }
    std::int8_t vertical(int row, int col) const noexcept {
        return states_[horizontal_count() + static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
                       static_cast<std::size_t>(col)];
    }

    std::pair<Site, Site> endpoints(std::size_t e) const noexcept;
    std::size_t open_count() const noexcept;

    friend bool operator==(const EdgeConfig&, const EdgeConfig&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::int8_t> states_;
};

struct AnnealParams {
    int epsilon = 10;
    double p_keep = 0.05;  ///< uphill acceptance at the initial temperature
    double t0 = 10.0;
    int n_stops = 64;
    int sweeps_per_stop = 4;
    double tol = 1e-3;
    std::uint64_t seed = 0;
};

struct EquilibriumResult {
    EdgeConfig config;
    PixelGrid smoothed;
    std::vector<double> energy_trace;  ///< initial energy, then one entry per stop
    std::vector<double> temperatures;  ///< temperature of each executed stop
    int stops = 0;

    friend bool operator==(const EquilibriumResult&, const EquilibriumResult&) = default;
};

struct ClusterLabels {
    std::vector<int> labels;  ///< per site, row-major
    int count = 0;
};

/// Data coupling of an edge: +1 when |i_t - i_t'| < epsilon, else -1.
int coupling(const PixelGrid& grid, const EdgeConfig& layout, std::size_t e, int epsilon);

/// Edge open iff the intensity difference across it is below epsilon.
EdgeConfig init_config(const PixelGrid& grid, int epsilon);

/// H = -beta * sum_e s_e J_e.
double energy(const PixelGrid& grid, const EdgeConfig& config, int epsilon, double beta);

/// Temperature at stop k of the logarithmic schedule t0 / ln(k + e).
double temperature(int stop, double t0);

/// Uphill acceptance probability at inverse temperature beta, given p_keep at
/// the initial inverse temperature beta0: p_keep^(beta / beta0).
double uphill_probability(double p_keep, double beta, double beta0);

/// Metropolis decision: downhill (or flat) moves always pass; uphill moves
/// pass iff the uniform draw falls below the uphill probability.
constexpr bool accept_move(double delta_h, double p_uphill, double draw) noexcept {
    return delta_h <= 0.0 || draw < p_uphill;
}

EquilibriumResult anneal(const PixelGrid& grid, const AnnealParams& params);

/// Anneals disjoint tile x tile blocks independently (block i seeded with
/// seed ^ i) on up to `threads` workers and merges them in raster order.
/// Edges crossing block borders stay closed.
EquilibriumResult anneal_tiled(const PixelGrid& grid, const AnnealParams& params, int tile,
                               unsigned threads = 0);

/// Connected components over open edges; dense labels in raster order of
/// first occurrence.
ClusterLabels open_clusters(const EdgeConfig& config);

/// Each pixel replaced by the mean intensity of its open cluster, rounded
/// half to even.
PixelGrid smooth_by_clusters(const PixelGrid& grid, const ClusterLabels& clusters);

} // namespace fieldseg
