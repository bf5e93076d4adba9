// fieldseg command-line front end.
//
// Exit codes: 0 success, 1 I/O or data error, 2 usage error.

#include "fieldseg/annealing.hpp"
#include "fieldseg/codec.hpp"
#include "fieldseg/criticality.hpp"
#include "fieldseg/error.hpp"
#include "fieldseg/grid.hpp"
#include "fieldseg/rng.hpp"
#include "fieldseg/segmentation.hpp"
#include "fieldseg/stats.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fieldseg;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Parses "a:b:step", "a:b" (step 1), a comma list, or a single value.
std::vector<int> parse_epsilons(const std::string& text) {
    std::vector<int> out;
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            throw UsageError("bad epsilon value '" + s + "'");
        }
        if (used != s.size()) throw UsageError("bad epsilon value '" + s + "'");
        return v;
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() < 2 || parts.size() > 3) throw UsageError("epsilon range must be start:stop[:step]");
        const int start = to_int(parts[0]);
        const int stop = to_int(parts[1]);
        const int step = parts.size() == 3 ? to_int(parts[2]) : 1;
        if (step < 1 || stop < start) throw UsageError("epsilon range must be increasing with step >= 1");
        for (int e = start; e <= stop; e += step) out.push_back(e);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(to_int(p));
    }
    if (out.empty()) throw UsageError("no epsilon values given");
    for (int e : out) {
        if (e < 1 || e > 256) throw UsageError("epsilon " + std::to_string(e) + " outside [1, 256]");
    }
    return out;
}

// Shared region-scale options: an explicit m_c wins, otherwise m_c follows
// from m (default floor(sqrt(rows*cols))) and rho.
struct ScaleOptions {
    std::optional<int> m;
    std::optional<int> m_c;
    double rho = kSquareLatticeRho;

    void attach(CLI::App* cmd) {
        cmd->add_option("--m", m, "Region scale m (default floor(sqrt(rows*cols)))")->check(CLI::PositiveNumber);
        cmd->add_option("--m-c", m_c, "Override the critical sub-region size m_c")->check(CLI::PositiveNumber);
        cmd->add_option("--rho", rho, "Lattice density")->capture_default_str();
    }

    CriticalityResult resolve(const PixelGrid& grid) const {
        CriticalityResult crit = compute_criticality(m.value_or(default_m(grid)), rho);
        if (m_c) {
            crit.m_c = *m_c;
            crit.r_c = *m_c;
        }
        return crit;
    }
};

int cmd_criticality(std::optional<int> m, std::optional<int> rows, std::optional<int> cols, double rho) {
    int scale = 0;
    if (m) {
        scale = *m;
    } else if (rows && cols) {
        if (*rows < 2 || *cols < 2) throw UsageError("--rows and --cols must be >= 2");
        scale = default_m(*rows, *cols);
    } else {
        throw UsageError("give --m or both --rows and --cols");
    }
    std::cout << to_json(compute_criticality(scale, rho)) << '\n';
    return 0;
}

struct SegmentOptions {
    std::string input;
    std::string out_dir;
    int epsilon = 70;
    int tau = 1;
    std::string mode = "empirical";
    std::uint64_t seed = 0;
    double delta_tol = 0.05;
    int dbn_epochs = 30;
    ScaleOptions scale;
};

SegmentationParams make_params(const PixelGrid& grid, const ScaleOptions& scale, int epsilon, int tau,
                               const std::string& mode, std::uint64_t seed, int dbn_epochs) {
    const auto parsed = parse_smooth_mode(mode);
    if (!parsed) throw UsageError("unknown mode '" + mode + "'");
    const CriticalityResult crit = scale.resolve(grid);
    SegmentationParams p;
    p.epsilon = epsilon;
    p.tau = tau;
    p.m_c = crit.m_c;
    p.k_c = crit.k_c;
    p.mode = *parsed;
    p.seed = seed;
    p.dbn_epochs = dbn_epochs;
    return p;
}

int cmd_segment(const SegmentOptions& o) {
    const PixelGrid grid = load_pgm(o.input);
    const SegmentationParams p = make_params(grid, o.scale, o.epsilon, o.tau, o.mode, o.seed, o.dbn_epochs);
    const SegmentationResult r = segment(grid, p);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    save_pgm(dir / "equilibrium.pgm", r.equilibrium);
    save_pgm(dir / "difference.pgm", r.difference);
    save_pgm(dir / "overlay.pgm", r.overlay);
    write_text(dir / "proposals.json", proposals_to_json(r.proposals) + "\n");

    ordered_json metrics;
    metrics["m_c"] = p.m_c;
    metrics["K_c"] = p.k_c;
    metrics["epsilon"] = p.epsilon;
    metrics["tau"] = p.tau;
    metrics["mode"] = std::string(to_string(p.mode));
    metrics["seed"] = p.seed;
    metrics["masked_pixels"] = std::count(r.mask.begin(), r.mask.end(), std::uint8_t{1});
    metrics["proposals"] = r.proposals.size();
    metrics["violation_rate"] = r.violation_rate;
    metrics["epsilon_c_estimate"] = estimate_epsilon_c(grid, o.delta_tol);
    std::cout << metrics.dump() << '\n';
    return 0;
}

int cmd_compress(const std::string& input, const std::string& output, const std::optional<std::string>& stats_path,
                 const ScaleOptions& scale, std::uint64_t seed) {
    const PixelGrid grid = load_pgm(input);
    const CompressedImage c = compress(grid, scale.resolve(grid).m_c, derive_seed(seed, "codec"));
    write_file(output, write_rfc(c));
    const std::string stats = to_json(codec_stats(grid, c));
    if (stats_path) write_text(*stats_path, stats + "\n");
    std::cout << stats << '\n';
    return 0;
}

int cmd_reconstruct(const std::string& input, const std::string& output, bool render) {
    const CompressedImage c = read_rfc(read_file(input));
    save_pgm(output, render ? render_compressed(c) : reconstruct(c));
    return 0;
}

struct SweepOptions {
    std::string input;
    std::string epsilons = "70:140:10";
    std::optional<std::string> output;
    std::string mode = "empirical";
    std::uint64_t seed = 0;
    double alpha = 0.05;
    int dbn_epochs = 30;
    ScaleOptions scale;
};

int cmd_sweep(const SweepOptions& o) {
    const std::vector<int> eps = parse_epsilons(o.epsilons);
    if (!(o.alpha > 0.0 && o.alpha < 0.5)) throw UsageError("--alpha must lie in (0, 0.5)");
    const PixelGrid grid = load_pgm(o.input);
    const SegmentationParams p = make_params(grid, o.scale, eps.front(), 1, o.mode, o.seed, o.dbn_epochs);
    const auto rows = sweep(grid, p, eps);
    const std::string csv = sweep_to_csv(rows);
    if (o.output) {
        write_text(*o.output, csv);
    } else {
        std::cout << csv;
    }

    const TrendSummary t = summarize_trends(rows);
    const double threshold = 1.0 - 2.0 * o.alpha;
    std::printf("# m_c=%d mode=%s seed=%llu\n", p.m_c, std::string(to_string(p.mode)).c_str(),
                static_cast<unsigned long long>(p.seed));
    std::printf("# E non-increasing in %d/%d steps (need %d): %s\n", t.e_non_increasing, t.steps, t.required(),
                t.e_holds() ? "true" : "false");
    std::printf("# S non-decreasing in %d/%d steps (need %d): %s\n", t.s_non_decreasing, t.steps, t.required(),
                t.s_holds() ? "true" : "false");
    for (const auto& r : rows) {
        std::printf("# epsilon=%d S=%.6f > %.6f: %s\n", r.epsilon, r.s, threshold, r.s > threshold ? "true" : "false");
    }
    return 0;
}

int cmd_stats(const std::string& first, const std::optional<std::string>& second, std::size_t max_n,
              std::uint64_t seed) {
    const PixelGrid a = load_pgm(first);
    auto sw_json = [&](const PixelGrid& g) {
        const SwReport r = shapiro_wilk(g, max_n, seed);
        ordered_json j;
        j["w"] = r.w;
        j["n"] = r.n;
        j["subsampled"] = r.subsampled;
        return j;
    };
    ordered_json out;
    out["sw_first"] = sw_json(a);
    if (second) {
        const PixelGrid b = load_pgm(*second);
        out["sw_second"] = sw_json(b);
        out["kl"] = kl_divergence(histogram(a), histogram(b));
    }
    std::cout << out.dump() << '\n';
    return 0;
}

struct AnnealOptions {
    std::string input;
    std::string trace;
    std::optional<std::string> output;
    std::optional<int> tile;
    unsigned threads = 0;
    AnnealParams params;
};

int cmd_anneal(const AnnealOptions& o) {
    const PixelGrid grid = load_pgm(o.input);
    const EquilibriumResult r = o.tile ? anneal_tiled(grid, o.params, *o.tile, o.threads) : anneal(grid, o.params);
    std::string csv = "stop,temperature,energy\n";
    char line[96];
    for (std::size_t k = 0; k < r.energy_trace.size(); ++k) {
        const double t = k == 0 ? temperature(0, o.params.t0) : r.temperatures[k - 1];
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", k, t, r.energy_trace[k]);
        csv += line;
    }
    write_text(o.trace, csv);
    if (o.output) save_pgm(*o.output, r.smoothed);
    ordered_json summary;
    summary["stops"] = r.stops;
    summary["initial_energy"] = r.energy_trace.front();
    summary["final_energy"] = r.energy_trace.back();
    summary["open_edges"] = r.config.open_count();
    summary["edges"] = r.config.edge_count();
    std::cout << summary.dump() << '\n';
    return 0;
}

bool is_usage_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidRho:
    case ErrorCode::InvalidM:
    case ErrorCode::DegenerateRegion:
    case ErrorCode::InvalidSpec: return true;
    default: return false;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical-region segmentation, compression and statistics for grayscale images"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "fieldseg 0.1.0");

    std::optional<int> crit_m;
    std::optional<int> crit_rows;
    std::optional<int> crit_cols;
    double crit_rho = kSquareLatticeRho;
    auto* crit = app.add_subcommand("criticality", "Compute K_c, m_c and R_c as JSON");
    crit->add_option("--m", crit_m, "Region scale m");
    crit->add_option("--rows", crit_rows, "Image rows (m defaults to floor(sqrt(rows*cols)))");
    crit->add_option("--cols", crit_cols, "Image columns");
    crit->add_option("--rho", crit_rho, "Lattice density")->capture_default_str();

    SegmentOptions seg;
    auto* segc = app.add_subcommand("segment", "Smooth, difference and mask an image; write PGMs and proposals");
    segc->add_option("--input,-i", seg.input, "Input PGM (P5)")->required();
    segc->add_option("--out-dir,-o", seg.out_dir, "Output directory")->required();
    segc->add_option("--epsilon", seg.epsilon, "Open-edge margin")->check(CLI::Range(1, 256))->capture_default_str();
    segc->add_option("--tau", seg.tau, "Zero-intensity threshold on the difference")
        ->check(CLI::Range(1, 255))
        ->capture_default_str();
    segc->add_option("--mode", seg.mode, "empirical | dbn | metropolis")
        ->check(CLI::IsMember({"empirical", "dbn", "metropolis"}))
        ->capture_default_str();
    segc->add_option("--seed", seg.seed, "Seed for randomized modes")->capture_default_str();
    segc->add_option("--delta-tol", seg.delta_tol, "Tolerance for the epsilon_c estimate")
        ->check(CLI::Range(0.0, 0.999999))
        ->capture_default_str();
    segc->add_option("--dbn-epochs", seg.dbn_epochs, "Training epochs in dbn mode")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    seg.scale.attach(segc);

    std::string comp_in;
    std::string comp_out;
    std::optional<std::string> comp_stats;
    std::uint64_t comp_seed = 0;
    ScaleOptions comp_scale;
    auto* comp = app.add_subcommand("compress", "Compress a PGM into an RFC1 file; print codec stats");
    comp->add_option("--input,-i", comp_in, "Input PGM (P5)")->required();
    comp->add_option("--output,-o", comp_out, "Output .rfc file")->required();
    comp->add_option("--stats", comp_stats, "Also write the stats JSON here");
    comp->add_option("--seed", comp_seed, "Seed for the shared sample")->capture_default_str();
    comp_scale.attach(comp);

    std::string rec_in;
    std::string rec_out;
    bool rec_render = false;
    auto* rec = app.add_subcommand("reconstruct", "Rebuild a PGM from an RFC1 file");
    rec->add_option("--input,-i", rec_in, "Input .rfc file")->required();
    rec->add_option("--output,-o", rec_out, "Output PGM")->required();
    rec->add_flag("--render", rec_render, "Place the shared sample in tile interiors instead of the boundary mean");

    SweepOptions sw;
    auto* swc = app.add_subcommand("sweep", "Tabulate E (KL) and S (Shapiro-Wilk) over an epsilon range");
    swc->add_option("--input,-i", sw.input, "Input PGM (P5)")->required();
    swc->add_option("--epsilons", sw.epsilons, "start:stop[:step] or a comma list")->capture_default_str();
    swc->add_option("--output,-o", sw.output, "Write the CSV here instead of stdout");
    swc->add_option("--mode", sw.mode, "empirical | dbn | metropolis")
        ->check(CLI::IsMember({"empirical", "dbn", "metropolis"}))
        ->capture_default_str();
    swc->add_option("--seed", sw.seed, "Seed")->capture_default_str();
    swc->add_option("--alpha", sw.alpha, "Significance level for the S > 1 - 2*alpha rule")->capture_default_str();
    swc->add_option("--dbn-epochs", sw.dbn_epochs, "Training epochs in dbn mode")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sw.scale.attach(swc);

    std::string st_first;
    std::optional<std::string> st_second;
    std::size_t st_max_n = kSwMaxSample;
    std::uint64_t st_seed = 0;
    auto* st = app.add_subcommand("stats", "Shapiro-Wilk of one PGM, plus KL(first || second) given two");
    st->add_option("first", st_first, "First PGM")->required();
    st->add_option("second", st_second, "Second PGM");
    st->add_option("--max-n", st_max_n, "Shapiro-Wilk subsample cap (0 = none)")->capture_default_str();
    st->add_option("--seed", st_seed, "Subsampling seed")->capture_default_str();

    AnnealOptions an;
    auto* anc = app.add_subcommand("anneal", "Run the annealing engine and write its energy trace");
    anc->add_option("--input,-i", an.input, "Input PGM (P5)")->required();
    anc->add_option("--trace", an.trace, "Trace CSV (stop,temperature,energy)")->required();
    anc->add_option("--output,-o", an.output, "Write the cluster-smoothed image here");
    anc->add_option("--epsilon", an.params.epsilon, "Coupling margin")->check(CLI::Range(1, 256))->capture_default_str();
    anc->add_option("--p-keep", an.params.p_keep, "Uphill acceptance at the first stop")
        ->check(CLI::Range(1e-12, 0.999999))
        ->capture_default_str();
    anc->add_option("--t0", an.params.t0, "Initial temperature")->check(CLI::PositiveNumber)->capture_default_str();
    anc->add_option("--stops", an.params.n_stops, "Schedule length")->check(CLI::PositiveNumber)->capture_default_str();
    anc->add_option("--sweeps", an.params.sweeps_per_stop, "Sweeps per stop")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    anc->add_option("--tol", an.params.tol, "Relative energy-change stopping tolerance")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    anc->add_option("--seed", an.params.seed, "Seed")->capture_default_str();
    anc->add_option("--tile", an.tile, "Anneal disjoint tiles of this size in parallel")->check(CLI::PositiveNumber);
    anc->add_option("--threads", an.threads, "Worker threads for --tile (0 = hardware)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*crit) return cmd_criticality(crit_m, crit_rows, crit_cols, crit_rho);
        if (*segc) return cmd_segment(seg);
        if (*comp) return cmd_compress(comp_in, comp_out, comp_stats, comp_scale, comp_seed);
        if (*rec) return cmd_reconstruct(rec_in, rec_out, rec_render);
        if (*swc) return cmd_sweep(sw);
        if (*st) return cmd_stats(st_first, st_second, st_max_n, st_seed);
        if (*anc) return cmd_anneal(an);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_usage_code(e.code()) ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
