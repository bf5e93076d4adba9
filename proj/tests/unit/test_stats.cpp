#include <doctest.h>

#include "fieldseg/codec.hpp"
#include "fieldseg/error.hpp"
#include "fieldseg/rng.hpp"
#include "fieldseg/stats.hpp"

#include "sw_reference.hpp"

#include <cmath>
#include <span>

using namespace fieldseg;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

Histogram256 random_histogram(Rng& rng) {
    Histogram256 h;
    const auto spread = 1 + rng.below(256);
    const auto base = rng.below(256);
    const int draws = 1 + static_cast<int>(rng.below(5000));
    for (int i = 0; i < draws; ++i) ++h.counts[(base + rng.below(spread)) % 256];
    h.total = static_cast<std::uint64_t>(draws);
    return h;
}

// Smoothed KL written out term by term.
double kl_oracle(const Histogram256& p, const Histogram256& q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 256; ++i) {
        const double pi = (static_cast<double>(p.counts[i]) + 1.0) / (static_cast<double>(p.total) + 256.0);
        const double qi = (static_cast<double>(q.counts[i]) + 1.0) / (static_cast<double>(q.total) + 256.0);
        sum += pi * std::log(pi / qi);
    }
    return sum;
}

PixelGrid smooth_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> v(static_cast<std::size_t>(n * n));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double base = 128.0 + 90.0 * std::sin(r * 0.15) * std::cos(c * 0.1);
            v[static_cast<std::size_t>(r * n + c)] = static_cast<std::uint8_t>(std::clamp(base + 10.0 * rng.normal(), 0.0, 255.0));
        }
    }
    return PixelGrid(n, n, std::move(v));
}

} // namespace

TEST_CASE("histogram examples") {
    const auto zero = histogram(PixelGrid(2, 2, 0));
    CHECK(zero.counts[0] == 4);
    CHECK(zero.total == 4);
    const auto split = histogram(PixelGrid(2, 2, std::vector<std::uint8_t>{0, 255, 0, 255}));
    CHECK(split.counts[0] == 2);
    CHECK(split.counts[255] == 2);
    CHECK(split.counts[128] == 0);
    Rng rng(1);
    std::vector<std::uint8_t> v(256);
    for (auto& x : v) x = static_cast<std::uint8_t>(rng.below(256));
    const auto h = histogram(PixelGrid(16, 16, v));
    std::uint64_t sum = 0;
    for (auto c : h.counts) sum += c;
    CHECK(h.total == 256);
    CHECK(sum == 256);
}

TEST_CASE("kl divergence examples") {
    Histogram256 point;
    point.counts[0] = 1'000'000;
    point.total = 1'000'000;
    Histogram256 flat;
    for (std::size_t i = 0; i < 256; ++i) flat.counts[i] = 3906 + (i < 64 ? 1 : 0);
    flat.total = 1'000'000;
    CHECK(std::abs(kl_divergence(point, flat) - std::log(256.0)) < 0.01);
    CHECK(kl_divergence(flat, flat) == 0.0);
    CHECK(code_of([&] { kl_divergence(Histogram256{}, flat); }) == ErrorCode::EmptyHistogram);
    CHECK(code_of([&] { kl_divergence(flat, Histogram256{}); }) == ErrorCode::EmptyHistogram);
}

TEST_CASE("kl divergence is nonnegative and zero on identical inputs") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_histogram(rng);
        const auto q = random_histogram(rng);
        REQUIRE(kl_divergence(p, p) == 0.0);
        const double d = kl_divergence(p, q);
        REQUIRE(d >= 0.0);
        REQUIRE(d == doctest::Approx(std::max(0.0, kl_oracle(p, q))).epsilon(1e-12));
    }
}

TEST_CASE("normal quantile matches reference values") {
    const auto n = std::size(sw_reference::kQuantileP);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = normal_quantile(sw_reference::kQuantileP[i]);
        CHECK(std::abs(z - sw_reference::kQuantileZ[i]) <= 1e-13 * std::max(1.0, std::abs(z)));
    }
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(std::isinf(normal_quantile(0.0)));
    CHECK_THROWS_AS(normal_quantile(1.5), Error);
}

TEST_CASE("shapiro-wilk matches the reference statistic") {
    struct Case {
        std::span<const double> sample;
        double w;
    };
    using namespace sw_reference;
    const Case cases[] = {
        {kNormal50, kNormal50W},   {kExponential50, kExponential50W}, {kSmall3, kSmall3W},
        {kSmall4, kSmall4W},       {kSmall5, kSmall5W},               {kUniform200, kUniform200W},
    };
    for (const auto& c : cases) {
        const auto r = shapiro_wilk(c.sample);
        INFO("n=" << c.sample.size() << " got " << r.w << " want " << c.w);
        CHECK(std::abs(r.w - c.w) < 1e-6);
        CHECK(r.n == c.sample.size());
        CHECK_FALSE(r.subsampled);
    }
    CHECK(shapiro_wilk(kNormal50).w > 0.95);
    CHECK(shapiro_wilk(kNormal50).w > shapiro_wilk(kExponential50).w);

    const auto full = shapiro_wilk(kLarge6000, 0);
    CHECK(std::abs(full.w - kLarge6000W) < 1e-6);
    CHECK(full.n == 6000);
}

TEST_CASE("shapiro-wilk is affine invariant") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x(3 + rng.below(400));
        for (double& v : x) v = rng.normal() + (rng.below(3) == 0 ? rng.uniform() * 4.0 : 0.0);
        const double a = 0.01 + rng.uniform() * 100.0;
        const double b = (rng.uniform() - 0.5) * 1000.0;
        std::vector<double> y(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = a * x[k] + b;
        REQUIRE(std::abs(shapiro_wilk(x).w - shapiro_wilk(y).w) < 1e-10);
    }
}

TEST_CASE("shapiro-wilk errors and subsampling") {
    const std::vector<double> two{1.0, 2.0};
    CHECK(code_of([&] { shapiro_wilk(two); }) == ErrorCode::TooSmall);
    const std::vector<double> flat(10, 4.0);
    CHECK(code_of([&] { shapiro_wilk(flat); }) == ErrorCode::ZeroVariance);

    const std::span<const double> big(sw_reference::kLarge6000);
    const auto sub = shapiro_wilk(big);
    CHECK(sub.subsampled);
    CHECK(sub.n == kSwMaxSample);
    CHECK(sub.w > 0.99);
    CHECK(shapiro_wilk(big, kSwMaxSample, 0).w == sub.w);
    const auto capped = shapiro_wilk(big, 100, 9);
    CHECK(capped.n == 100);
    CHECK(capped.subsampled);
    for (double w : {sub.w, capped.w}) {
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
    }
}

TEST_CASE("raw reconstruction divergence does not depend on the seed") {
    const auto g = smooth_image(60, 4);
    const double base = kl_divergence(histogram(g), histogram(reconstruct(compress(g, 2, 0))));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CHECK(kl_divergence(histogram(g), histogram(reconstruct(compress(g, 2, seed)))) == base);
    }
}

TEST_CASE("sweep rows, trends and csv") {
    const auto g = smooth_image(48, 7);
    SegmentationParams p;
    p.m_c = 2;
    const std::vector<int> eps{70, 80, 90, 100};
    const auto rows = sweep(g, p, eps);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].epsilon == eps[i]);
        CHECK(rows[i].e >= 0.0);
        CHECK(rows[i].s > 0.0);
        CHECK(rows[i].s <= 1.0);
    }
    CHECK(sweep(g, p, eps) == rows);

    const std::vector<int> bad{0};
    CHECK_THROWS_AS(sweep(g, p, bad), Error);

    const std::vector<SweepRow> table{{70, 3.0, 0.8}, {80, 2.0, 0.9}, {90, 2.5, 0.95}, {100, 1.0, 0.94}};
    const auto t = summarize_trends(table);
    CHECK(t.steps == 3);
    CHECK(t.e_non_increasing == 2);
    CHECK(t.s_non_decreasing == 2);
    CHECK(t.required() == 3);
    CHECK_FALSE(t.e_holds());
    TrendSummary seven;
    seven.steps = 7;
    CHECK(seven.required() == 6);
    const std::vector<SweepRow> one{{70, 1.0, 0.5}};
    CHECK(summarize_trends(one).e_holds());
    CHECK(summarize_trends(one).s_holds());

    CHECK(sweep_to_csv(std::span(table).first(2)) == "epsilon,E,S\n70,3.000000,0.800000\n80,2.000000,0.900000\n");
}
