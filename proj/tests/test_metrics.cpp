#include "doctest.h"
#include "fixtures.hpp"
#include "spectreg/deform.hpp"
#include "spectreg/metrics.hpp"

using namespace spectreg;

namespace {

LabelMap square(const GridSpec &grid, std::int64_t i0, std::int64_t j0, std::int64_t size, std::int32_t label) {
    std::vector<std::int32_t> v(static_cast<std::size_t>(grid.voxel_count()), 0);
    for (std::int64_t i = i0; i < i0 + size; ++i)
        for (std::int64_t j = j0; j < j0 + size; ++j) v[static_cast<std::size_t>(i * grid.extent(1) + j)] = label;
    return LabelMap(grid, std::move(v));
}

LabelMap random_labels(const GridSpec &grid, oracle::Gen &gen, int labels) {
    // Random blobs grown from a few seeds so boundaries are non-trivial.
    std::vector<std::int32_t> v(static_cast<std::size_t>(grid.voxel_count()), 0);
    for (int l = 1; l <= labels; ++l) {
        const auto ci = gen.integer(0, grid.extent(0) - 1), cj = gen.integer(0, grid.extent(1) - 1);
        const double r = gen.uniform(2.0, 7.0);
        for (std::int64_t x = 0; x < grid.voxel_count(); ++x) {
            const auto i = x / grid.extent(1), j = x % grid.extent(1);
            const double noise = gen.uniform(-1.0, 1.0);
            if (std::hypot(static_cast<double>(i - ci), static_cast<double>(j - cj)) + noise < r) v[static_cast<std::size_t>(x)] = l;
        }
    }
    return LabelMap(grid, std::move(v));
}

} // namespace

TEST_CASE("dice: hand counts") {
    const auto grid = make_grid({4, 4});
    std::vector<std::int32_t> a(16, 0), b(16, 0);
    a[0] = a[1] = a[2] = a[3] = 1;
    b[2] = b[3] = b[4] = b[5] = 1;
    const auto d = dice(LabelMap(grid, a), LabelMap(grid, b), {1});
    CHECK(d.per_label.at(1) == 0.5);
    CHECK(d.mean == 0.5);
    CHECK(dice(LabelMap(grid, a), LabelMap(grid, a)).per_label.at(1) == 1.0);
    std::vector<std::int32_t> c(16, 0);
    c[15] = 1;
    CHECK(dice(LabelMap(grid, a), LabelMap(grid, c)).per_label.at(1) == 0.0);
    const auto skip = dice(LabelMap(grid, a), LabelMap(grid, b), {1, 7});
    CHECK(skip.skipped == std::vector<std::int32_t>{7});
    CHECK(skip.per_label.count(7) == 0);
    CHECK_THROWS_AS(dice(LabelMap(grid, a), LabelMap(make_grid({4, 6}), std::vector<std::int32_t>(24, 0))),
                    std::invalid_argument);
}

TEST_CASE("warp_labels: identity, integer shift and no invented labels") {
    oracle::Gen gen(1);
    const auto grid = make_grid({16, 16});
    const auto lab = random_labels(grid, gen, 4);
    const auto same = warp_labels(lab, DenseField::zeros(grid));
    CHECK(std::equal(same.values().begin(), same.values().end(), lab.values().begin()));
    std::vector<double> shift(512, 0.0);
    std::fill(shift.begin(), shift.begin() + 256, 1.0);
    const auto moved = warp_labels(lab, DenseField(grid, shift));
    for (std::int64_t x = 0; x < 256; ++x) {
        const auto i = std::min<std::int64_t>(x / 16 + 1, 15), j = x % 16;
        CHECK(moved.values()[static_cast<std::size_t>(x)] == lab.values()[static_cast<std::size_t>(i * 16 + j)]);
    }
    const auto wild = warp_labels(lab, DenseField(grid, gen.uniforms(512, -4.0, 4.0)));
    const std::set<std::int32_t> in(lab.values().begin(), lab.values().end());
    for (auto v : wild.values()) CHECK(in.count(v) == 1);
}

TEST_CASE("hd95: closed forms") {
    const auto grid = make_grid({32, 32});
    const auto a = square(grid, 8, 8, 8, 1);
    CHECK(hd95(a, a, 1) == 0.0);
    std::vector<std::int32_t> p(1024, 0), q(1024, 0);
    p[5 * 32 + 5] = 1;
    q[8 * 32 + 5] = 1;
    CHECK(hd95(LabelMap(grid, p), LabelMap(grid, q), 1) == doctest::Approx(3.0));
    const auto b = square(grid, 10, 8, 8, 1);
    CHECK(hd95(a, b, 1) == oracle::hd95(a.values(), b.values(), grid.dims(), 1));
    CHECK_THROWS_WITH_AS(hd95(a, LabelMap(grid, std::vector<std::int32_t>(1024, 0)), 1),
                         doctest::Contains("second"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(hd95(LabelMap(grid, std::vector<std::int32_t>(1024, 0)), a, 1),
                         doctest::Contains("first"), std::invalid_argument);
}

TEST_CASE("percentile interpolates order statistics") {
    CHECK(percentile({4.0, 1.0, 3.0, 2.0}, 50.0) == 2.5);
    CHECK(percentile({0.0, 10.0}, 95.0) == doctest::Approx(9.5));
    CHECK(percentile({7.0}, 95.0) == 7.0);
}

TEST_CASE("squared distance transform is exact") {
    oracle::Gen gen(2);
    const auto grid = make_grid({12, 10});
    std::vector<std::uint8_t> mask(120, 0);
    for (int k = 0; k < 6; ++k) mask[static_cast<std::size_t>(gen.integer(0, 119))] = 1;
    const auto d = squared_distance_transform(grid, mask);
    for (std::int64_t x = 0; x < 120; ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t y = 0; y < 120; ++y) {
            if (!mask[static_cast<std::size_t>(y)]) continue;
            const double di = static_cast<double>(x / 10 - y / 10), dj = static_cast<double>(x % 10 - y % 10);
            best = std::min(best, di * di + dj * dj);
        }
        CHECK(d[static_cast<std::size_t>(x)] == best);
    }
}

TEST_CASE("metrics agree with exhaustive oracles on random label maps") {
    oracle::Gen gen(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto grid = trial % 2 ? make_grid({32, 32}) : make_grid({16, 24});
        const auto a = random_labels(grid, gen, 3);
        const auto b = warp_labels(a, fixture::smooth_field(grid, {4, 4}, 2.5, gen));
        const auto d = dice(a, b);
        for (auto [label, value] : d.per_label) {
            CHECK(value == oracle::dice(a.values(), b.values(), label));
            const auto has = [&](const LabelMap &m) { return std::count(m.values().begin(), m.values().end(), label) > 0; };
            if (!has(a) || !has(b)) continue;
            const double h = hd95(a, b, label);
            CHECK(h == oracle::hd95(a.values(), b.values(), grid.dims(), label));
            CHECK(h == hd95(b, a, label));
            CHECK(h <= oracle::hausdorff(a.values(), b.values(), grid.dims(), label));
        }
    }
}

TEST_CASE("evaluate assembles dice, hd95 and folding") {
    oracle::Gen gen(4);
    const auto grid = make_grid({16, 16});
    const auto a = random_labels(grid, gen, 3);
    const auto phi = DenseField::zeros(grid);
    const auto r = evaluate(a, a, {}, &phi);
    CHECK(r.dice_mean == 1.0);
    CHECK(r.hd95_mean == 0.0);
    REQUIRE(r.folding_percent.has_value());
    CHECK(*r.folding_percent == 0.0);
    CHECK_FALSE(evaluate(a, a).folding_percent.has_value());
}
