#include "fieldseg/stats.hpp"

#include "fieldseg/codec.hpp"
#include "fieldseg/dbn.hpp"
#include "fieldseg/error.hpp"
#include "fieldseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fieldseg {

Histogram256 histogram(std::span<const std::uint8_t> values) {
    Histogram256 h;
    for (auto v : values) ++h.counts[v];
    h.total = values.size();
    return h;
}

Histogram256 histogram(const PixelGrid& grid) { return histogram(grid.values()); }

double kl_divergence(const Histogram256& p, const Histogram256& q) {
    if (p.total == 0 || q.total == 0) throw Error(ErrorCode::EmptyHistogram, "histogram has no samples");
    const double np = static_cast<double>(p.total) + 256.0;
    const double nq = static_cast<double>(q.total) + 256.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
        const double pi = (static_cast<double>(p.counts[i]) + 1.0) / np;
        const double qi = (static_cast<double>(q.counts[i]) + 1.0) / nq;
        sum += pi * std::log(pi / qi);
    }
    // Rounding can leave a tiny negative residue for identical inputs.
    return std::max(sum, 0.0);
}

namespace {

template <std::size_t N>
double horner(const std::array<double, N>& c, double x) {
    double v = 0.0;
    for (std::size_t i = N; i-- > 0;) v = v * x + c[i];
    return v;
}

// Royston's polynomial in 1/sqrt(n), lowest order first.
template <std::size_t N>
double royston_poly(const std::array<double, N>& c, double x) {
    return horner(c, x);
}

} // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
    }
    static constexpr std::array<double, 8> a = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                                                1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                                4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                                3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr std::array<double, 8> b = {1.0, 4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                                5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                                3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                                5.2264952788528545610e+3};
    static constexpr std::array<double, 8> c = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                                5.76949722146069140550e0, 3.64784832476320460504e0,
                                                1.27045825245236838258e0, 2.41780725177450611770e-1,
                                                2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr std::array<double, 8> d = {1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
                                                6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                                1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                                1.05075007164441684324e-9};
    static constexpr std::array<double, 8> e = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                                1.78482653991729133580e0, 2.96560571828504891230e-1,
                                                2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                                2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr std::array<double, 8> f = {1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                                1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                                1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                                2.04426310338993978564e-15};
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * horner(a, r) / horner(b, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = horner(c, r) / horner(d, r);
    } else {
        r -= 5.0;
        value = horner(e, r) / horner(f, r);
    }
    return q < 0.0 ? -value : value;
}

SwReport shapiro_wilk(std::span<const double> sample, std::size_t max_n, std::uint64_t seed) {
    if (sample.size() < 3) throw Error(ErrorCode::TooSmall, "Shapiro-Wilk needs n >= 3");

    SwReport report;
    std::vector<double> x;
    if (max_n > 0 && sample.size() > max_n) {
        const std::size_t stride = sample.size() / max_n;
        const std::size_t offset = static_cast<std::size_t>(derive_seed(seed, "shapiro-wilk") % stride);
        x.reserve(max_n);
        for (std::size_t k = 0; k < max_n; ++k) x.push_back(sample[offset + k * stride]);
        report.subsampled = true;
    } else {
        x.assign(sample.begin(), sample.end());
    }
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    report.n = n;

    constexpr double kSmall = 1e-19;
    const double range = x.back() - x.front();
    if (range < kSmall) throw Error(ErrorCode::ZeroVariance, "sample is constant");

    // Coefficients a[1..n/2] (1-based), positive, largest first.
    const std::size_t half = n / 2;
    std::vector<double> a(half + 1, 0.0);
    const double an = static_cast<double>(n);
    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        static constexpr std::array<double, 6> c1 = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
        static constexpr std::array<double, 6> c2 = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= half; ++i) {
            a[i] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = royston_poly(c1, rsn) - a[1] / ssumm2;
        std::size_t first;
        double fac;
        if (n > 5) {
            first = 3;
            const double a2 = -a[2] / ssumm2 + royston_poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[2] = a2;
        } else {
            first = 2;
            fac = std::sqrt((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1));
        }
        a[1] = a1;
        for (std::size_t i = first; i <= half; ++i) a[i] /= -fac;
    }

    // W as the squared correlation between the scaled data and the
    // antisymmetric coefficient vector; computed as 1 - W1 to keep precision
    // near 1.
    auto coefficient = [&](std::size_t i) {
        const std::size_t j = n - 1 - i;
        if (i == j) return 0.0;
        return i < j ? -a[1 + i] : a[1 + j];
    };
    double sa = 0.0;
    double sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += coefficient(i);
        sx += x[i] / range;
    }
    sa /= an;
    sx /= an;
    double ssa = 0.0;
    double ssx = 0.0;
    double sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double asa = coefficient(i) - sa;
        const double xsx = x[i] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    report.w = 1.0 - w1;
    return report;
}

SwReport shapiro_wilk(const PixelGrid& grid, std::size_t max_n, std::uint64_t seed) {
    std::vector<double> values(grid.values().begin(), grid.values().end());
    return shapiro_wilk(values, max_n, seed);
}

std::vector<SweepRow> sweep(const PixelGrid& original, const SegmentationParams& params,
                            std::span<const int> epsilons) {
    for (int eps : epsilons) {
        if (eps < 1 || eps > 256) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [1, 256]");
    }
    const int m_c = params.m_c;
    const PixelGrid recon = reconstruct(compress(original, m_c, derive_seed(params.seed, "codec")));
    const PaddedGrid pad_orig = pad_replicate(original, m_c, m_c + 1);
    const PaddedGrid pad_recon = pad_replicate(recon, m_c, m_c + 1);
    const int rows = original.rows();
    const int cols = original.cols();

    DbnModel model;
    if (params.mode == SmoothMode::Dbn) {
        TrainOptions options;
        options.epochs = params.dbn_epochs;
        options.lr = params.dbn_lr;
        options.batch_size = params.dbn_batch;
        options.seed = derive_seed(params.seed, "dbn-train");
        model = fit_dbn_smoother(pad_orig.grid, m_c, params.k_c, derive_seed(params.seed, "dbn-init"), options);
    }

    std::vector<SweepRow> rows_out;
    rows_out.reserve(epsilons.size());
    for (int eps : epsilons) {
        PixelGrid eq_orig;
        PixelGrid eq_recon;
        switch (params.mode) {
        case SmoothMode::Empirical:
            eq_orig = crop(smooth_empirical(pad_orig.grid, m_c, eps), rows, cols);
            eq_recon = crop(smooth_guided(pad_orig.grid, pad_recon.grid, m_c, eps), rows, cols);
            break;
        case SmoothMode::Dbn:
            eq_orig = crop(smooth_dbn(pad_orig.grid, model, m_c, eps), rows, cols);
            eq_recon = crop(smooth_dbn(pad_recon.grid, model, m_c, eps), rows, cols);
            break;
        case SmoothMode::Metropolis: {
            SegmentationParams p = params;
            p.epsilon = eps;
            eq_orig = equilibrium_image(original, p);
            eq_recon = equilibrium_image(recon, p);
            break;
        }
        }
        SweepRow row;
        row.epsilon = eps;
        row.e = kl_divergence(histogram(eq_orig), histogram(eq_recon));
        row.s = shapiro_wilk(eq_recon, 0).w;
        rows_out.push_back(row);
    }
    return rows_out;
}

TrendSummary summarize_trends(std::span<const SweepRow> rows) {
    TrendSummary t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ++t.steps;
        t.e_non_increasing += rows[i].e <= rows[i - 1].e;
        t.s_non_decreasing += rows[i].s >= rows[i - 1].s;
    }
    return t;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out = "epsilon,E,S\n";
    char line[96];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f\n", r.epsilon, r.e, r.s);
        out += line;
    }
    return out;
}

} // namespace fieldseg
