#include "fieldseg/annealing.hpp"

#include "fieldseg/error.hpp"
#include "fieldseg/numeric.hpp"
#include "fieldseg/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <span>
#include <thread>

namespace fieldseg {

EdgeConfig::EdgeConfig(int rows, int cols, std::int8_t fill) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "edge lattice needs rows, cols >= 1");
    const auto r = static_cast<std::size_t>(rows);
    const auto c = static_cast<std::size_t>(cols);
    states_.assign(r * (c - 1) + (r - 1) * c, fill);
}

std::pair<Site, Site> EdgeConfig::endpoints(std::size_t e) const noexcept {
    const std::size_t h = horizontal_count();
    if (e < h) {
        const auto w = static_cast<std::size_t>(cols_ - 1);
        const Site a{static_cast<int>(e / w), static_cast<int>(e % w)};
        return {a, {a.row, a.col + 1}};
    }
    const auto w = static_cast<std::size_t>(cols_);
    const Site a{static_cast<int>((e - h) / w), static_cast<int>((e - h) % w)};
    return {a, {a.row + 1, a.col}};
}

std::size_t EdgeConfig::open_count() const noexcept {
    return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), kOpen));
}

namespace {

// Row-major intensity field of any size >= 1x1; tiles may be thinner than a
// PixelGrid allows.
struct Field {
    int rows;
    int cols;
    std::span<const std::uint8_t> values;

    std::uint8_t operator()(Site t) const noexcept {
        return values[static_cast<std::size_t>(t.row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(t.col)];
    }
};

Field field_of(const PixelGrid& grid) { return {grid.rows(), grid.cols(), grid.values()}; }

std::vector<std::int8_t> couplings(const Field& f, const EdgeConfig& layout, int epsilon) {
    std::vector<std::int8_t> j(layout.edge_count());
    for (std::size_t e = 0; e < j.size(); ++e) {
        const auto [a, b] = layout.endpoints(e);
        j[e] = std::abs(int{f(a)} - int{f(b)}) < epsilon ? 1 : -1;
    }
    return j;
}

long long alignment(const EdgeConfig& config, std::span<const std::int8_t> j) {
    long long sum = 0;
    for (std::size_t e = 0; e < j.size(); ++e) sum += config.state(e) * j[e];
    return sum;
}

struct FieldRun {
    EdgeConfig config;
    std::vector<double> trace;
    std::vector<double> temperatures;
    int stops = 0;
};

FieldRun anneal_field(const Field& f, const AnnealParams& p) {
    FieldRun run;
    run.config = EdgeConfig(f.rows, f.cols, EdgeConfig::kClosed);
    const auto j = couplings(f, run.config, p.epsilon);
    for (std::size_t e = 0; e < j.size(); ++e) run.config.set(e, j[e]);

    Rng rng(p.seed);
    const double beta0 = 1.0 / temperature(0, p.t0);
    long long aligned = alignment(run.config, j);
    double previous = -beta0 * static_cast<double>(aligned);
    run.trace.push_back(previous);

    std::vector<std::size_t> order(j.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    int quiet_stops = 0;
    for (int k = 0; k < p.n_stops; ++k) {
        const double t = temperature(k, p.t0);
        const double beta = 1.0 / t;
        const double p_up = uphill_probability(p.p_keep, beta, beta0);
        for (int sweep = 0; sweep < p.sweeps_per_stop; ++sweep) {
            rng.shuffle(order);
            for (const std::size_t e : order) {
                const int sj = run.config.state(e) * j[e];
                const double delta = 2.0 * beta * sj;
                const double draw = delta > 0.0 ? rng.uniform() : 0.0;
                if (accept_move(delta, p_up, draw)) {
                    run.config.flip(e);
                    aligned -= 2 * sj;
                }
            }
        }
        const double h = -beta * static_cast<double>(aligned);
        run.trace.push_back(h);
        run.temperatures.push_back(t);
        run.stops = k + 1;

        const double relative = std::abs(h - previous) / std::max(1.0, std::abs(h));
        quiet_stops = relative < p.tol ? quiet_stops + 1 : 0;
        previous = h;
        if (quiet_stops >= 2) break;
    }
    return run;
}

void validate(const AnnealParams& p) {
    if (p.epsilon < 1) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 1");
    if (!(p.p_keep > 0.0 && p.p_keep < 1.0)) throw Error(ErrorCode::InvalidArgument, "p_keep must lie in (0,1)");
    if (!(p.t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "t0 must be > 0");
    if (p.n_stops < 1 || p.sweeps_per_stop < 1) {
        throw Error(ErrorCode::InvalidArgument, "n_stops and sweeps_per_stop must be >= 1");
    }
    if (!(p.tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be >= 0");
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent_[a] = b;
    }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

int coupling(const PixelGrid& grid, const EdgeConfig& layout, std::size_t e, int epsilon) {
    const auto [a, b] = layout.endpoints(e);
    return std::abs(int{grid.at(a)} - int{grid.at(b)}) < epsilon ? 1 : -1;
}

EdgeConfig init_config(const PixelGrid& grid, int epsilon) {
    if (epsilon < 1) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 1");
    EdgeConfig config(grid.rows(), grid.cols());
    const auto j = couplings(field_of(grid), config, epsilon);
    for (std::size_t e = 0; e < j.size(); ++e) config.set(e, j[e]);
    return config;
}

double energy(const PixelGrid& grid, const EdgeConfig& config, int epsilon, double beta) {
    if (config.rows() != grid.rows() || config.cols() != grid.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "edge config does not match grid");
    }
    const auto j = couplings(field_of(grid), config, epsilon);
    return -beta * static_cast<double>(alignment(config, j));
}

double temperature(int stop, double t0) { return t0 / std::log(static_cast<double>(stop) + std::numbers::e); }

double uphill_probability(double p_keep, double beta, double beta0) { return std::pow(p_keep, beta / beta0); }

EquilibriumResult anneal(const PixelGrid& grid, const AnnealParams& params) {
    validate(params);
    FieldRun run = anneal_field(field_of(grid), params);
    EquilibriumResult out;
    out.smoothed = smooth_by_clusters(grid, open_clusters(run.config));
    out.config = std::move(run.config);
    out.energy_trace = std::move(run.trace);
    out.temperatures = std::move(run.temperatures);
    out.stops = run.stops;
    return out;
}

EquilibriumResult anneal_tiled(const PixelGrid& grid, const AnnealParams& params, int tile, unsigned threads) {
    validate(params);
    if (tile < 1) throw Error(ErrorCode::InvalidArgument, "tile must be >= 1");

    struct Block {
        Site anchor;
        int rows;
        int cols;
        std::vector<std::uint8_t> values;
        FieldRun run;
    };
    std::vector<Block> blocks;
    for (int r = 0; r < grid.rows(); r += tile) {
        for (int c = 0; c < grid.cols(); c += tile) {
            Block b{{r, c}, std::min(tile, grid.rows() - r), std::min(tile, grid.cols() - c), {}, {}};
            for (int i = 0; i < b.rows; ++i) {
                for (int k = 0; k < b.cols; ++k) b.values.push_back(grid(r + i, c + k));
            }
            blocks.push_back(std::move(b));
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < blocks.size(); i = next++) {
            Block& b = blocks[i];
            AnnealParams local = params;
            local.seed = params.seed ^ static_cast<std::uint64_t>(i);
            b.run = anneal_field(Field{b.rows, b.cols, b.values}, local);
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(blocks.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    EquilibriumResult out;
    out.config = EdgeConfig(grid.rows(), grid.cols(), EdgeConfig::kClosed);
    for (const Block& b : blocks) {
        for (int i = 0; i < b.rows; ++i) {
            for (int k = 0; k + 1 < b.cols; ++k) {
                const auto local = static_cast<std::size_t>(i) * static_cast<std::size_t>(b.cols - 1) +
                                   static_cast<std::size_t>(k);
                const std::size_t e = static_cast<std::size_t>(b.anchor.row + i) *
                                          static_cast<std::size_t>(grid.cols() - 1) +
                                      static_cast<std::size_t>(b.anchor.col + k);
                out.config.set(e, b.run.config.state(local));
            }
        }
        const std::size_t local_h = b.run.config.horizontal_count();
        for (int i = 0; i + 1 < b.rows; ++i) {
            for (int k = 0; k < b.cols; ++k) {
                const auto local = local_h + static_cast<std::size_t>(i) * static_cast<std::size_t>(b.cols) +
                                   static_cast<std::size_t>(k);
                const std::size_t e = out.config.horizontal_count() +
                                      static_cast<std::size_t>(b.anchor.row + i) *
                                          static_cast<std::size_t>(grid.cols()) +
                                      static_cast<std::size_t>(b.anchor.col + k);
                out.config.set(e, b.run.config.state(local));
            }
        }
        out.stops = std::max(out.stops, b.run.stops);
    }

    // Blocks that stopped early hold their last energy.
    out.energy_trace.assign(static_cast<std::size_t>(out.stops) + 1, 0.0);
    for (const Block& b : blocks) {
        for (std::size_t k = 0; k < out.energy_trace.size(); ++k) {
            out.energy_trace[k] += b.run.trace[std::min(k, b.run.trace.size() - 1)];
        }
    }
    for (int k = 0; k < out.stops; ++k) out.temperatures.push_back(temperature(k, params.t0));
    out.smoothed = smooth_by_clusters(grid, open_clusters(out.config));
    return out;
}

ClusterLabels open_clusters(const EdgeConfig& config) {
    const auto n = static_cast<std::size_t>(config.rows()) * static_cast<std::size_t>(config.cols());
    DisjointSets sets(n);
    const auto cols = static_cast<std::size_t>(config.cols());
    for (std::size_t e = 0; e < config.edge_count(); ++e) {
        if (!config.is_open(e)) continue;
        const auto [a, b] = config.endpoints(e);
        sets.unite(static_cast<std::size_t>(a.row) * cols + static_cast<std::size_t>(a.col),
                   static_cast<std::size_t>(b.row) * cols + static_cast<std::size_t>(b.col));
    }
    ClusterLabels out;
    out.labels.assign(n, -1);
    std::vector<int> root_label(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);
        if (root_label[root] < 0) root_label[root] = out.count++;
        out.labels[i] = root_label[root];
    }
    return out;
}

PixelGrid smooth_by_clusters(const PixelGrid& grid, const ClusterLabels& clusters) {
    if (clusters.labels.size() != grid.size()) throw Error(ErrorCode::ShapeMismatch, "labels do not match grid");
    std::vector<std::int64_t> sums(static_cast<std::size_t>(clusters.count), 0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(clusters.count), 0);
    const auto values = grid.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto k = static_cast<std::size_t>(clusters.labels[i]);
        sums[k] += values[i];
        ++counts[k];
    }
    std::vector<std::uint8_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto k = static_cast<std::size_t>(clusters.labels[i]);
        out[i] = static_cast<std::uint8_t>(round_half_even(sums[k], counts[k]));
    }
    return PixelGrid(grid.rows(), grid.cols(), std::move(out));
}

} // namespace fieldseg
