#include "doctest.h"
#include "fixtures.hpp"
#include "spectreg/deform.hpp"

using namespace spectreg;
using fixture::dot;

namespace {

DenseField constant_field(const GridSpec &grid, std::vector<double> value) {
    std::vector<double> d;
    for (double v : value) d.insert(d.end(), static_cast<std::size_t>(grid.voxel_count()), v);
    return DenseField(grid, std::move(d));
}

ScalarImage ramp_j(const GridSpec &grid) {
    std::vector<double> v(static_cast<std::size_t>(grid.voxel_count()));
    for (std::size_t x = 0; x < v.size(); ++x) v[x] = static_cast<double>(static_cast<std::int64_t>(x) % grid.extent(1));
    return ScalarImage(grid, std::move(v));
}

} // namespace

TEST_CASE("identity grid holds voxel coordinates") {
    const auto grid = make_grid({4, 6, 8});
    const auto id = identity_grid(grid);
    for (std::int64_t x = 0; x < grid.voxel_count(); ++x) {
        const auto idx = oracle::unravel(x, grid.dims());
        for (int c = 0; c < 3; ++c) CHECK(id.channel(c)[static_cast<std::size_t>(x)] == static_cast<double>(idx[static_cast<std::size_t>(c)]));
    }
}

TEST_CASE("warp: zero field is a bit-exact identity") {
    oracle::Gen gen(1);
    for (Extents dims : {Extents{8, 12}, Extents{4, 6, 8}}) {
        const auto grid = make_grid(dims);
        const auto img = fixture::random_image(grid, gen);
        const auto out = warp(img, DenseField::zeros(grid));
        CHECK(std::equal(out.values().begin(), out.values().end(), img.values().begin()));
    }
}

TEST_CASE("warp: integer and half-voxel shifts of a ramp") {
    const auto grid = make_grid({6, 8});
    const auto img = ramp_j(grid);
    const auto shifted = warp(img, constant_field(grid, {0.0, 1.0}));
    const auto half = warp(img, constant_field(grid, {0.0, 0.5}));
    for (std::int64_t x = 0; x < 48; ++x) {
        const auto j = x % 8;
        CHECK(shifted.at(x) == doctest::Approx(static_cast<double>(std::min<std::int64_t>(j + 1, 7))));
        if (j < 7) CHECK(half.at(x) == doctest::Approx(static_cast<double>(j) + 0.5));
    }
    // Displacement along axis 0 leaves a ramp in axis 1 unchanged.
    const auto down = warp(img, constant_field(grid, {1.0, 0.0}));
    for (std::int64_t x = 0; x < 48; ++x) CHECK(down.at(x) == img.at(x));
}

TEST_CASE("warp matches the reference sampler and stays within the image range") {
    oracle::Gen gen(2);
    for (Extents dims : {Extents{10, 12}, Extents{6, 8, 10}}) {
        const auto grid = make_grid(dims);
        const auto img = fixture::random_image(grid, gen);
        const DenseField phi(grid, gen.uniforms(static_cast<std::size_t>(grid.voxel_count() * grid.ndim()), -3.0, 3.0));
        const auto out = warp(img, phi);
        const auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
        const auto n = grid.voxel_count();
        for (std::int64_t x = 0; x < n; ++x) {
            const auto idx = oracle::unravel(x, dims);
            std::vector<double> p(dims.size());
            for (std::size_t a = 0; a < dims.size(); ++a) p[a] = static_cast<double>(idx[a]) + phi.channel(static_cast<int>(a))[static_cast<std::size_t>(x)];
            CHECK(out.at(x) == doctest::Approx(oracle::sample(img.values(), dims, p)).epsilon(1e-12));
            CHECK(out.at(x) >= *lo - 1e-15);
            CHECK(out.at(x) <= *hi + 1e-15);
        }
    }
}

TEST_CASE("warp rejects non-finite displacements") {
    const auto grid = make_grid({4, 4});
    std::vector<double> d(32, 0.0);
    d[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(warp(ScalarImage(grid, std::vector<double>(16, 0.0)), DenseField(grid, d)));
}

TEST_CASE("warp_field: identity, constants and agreement with warp") {
    oracle::Gen gen(3);
    const auto grid = make_grid({8, 10});
    const DenseField f(grid, gen.normals(160));
    const DenseField phi(grid, gen.uniforms(160, -2.0, 2.0));
    const auto same = warp_field(f, DenseField::zeros(grid));
    CHECK(std::equal(same.data().begin(), same.data().end(), f.data().begin()));
    const auto c = warp_field(constant_field(grid, {1.5, -2.0}), phi);
    for (std::int64_t x = 0; x < 80; ++x) {
        CHECK(c.channel(0)[static_cast<std::size_t>(x)] == doctest::Approx(1.5));
        CHECK(c.channel(1)[static_cast<std::size_t>(x)] == doctest::Approx(-2.0));
    }
    const auto wf = warp_field(f, phi);
    const auto w0 = warp(ScalarImage(grid, std::vector<double>(f.channel(1).begin(), f.channel(1).end())), phi);
    CHECK(std::equal(w0.values().begin(), w0.values().end(), wf.channel(1).begin()));
}

TEST_CASE("warp_gradient: closed forms") {
    const auto grid = make_grid({6, 8});
    std::vector<double> ones(48, 1.0);
    const DenseField phi = constant_field(grid, {0.25, 0.25});
    const auto flat = warp_gradient(ScalarImage(grid, std::vector<double>(48, 3.0)), phi, ones);
    for (double v : flat.data()) CHECK(v == 0.0);
    const auto g = warp_gradient(ramp_j(grid), phi, ones);
    for (std::int64_t x = 0; x < 48; ++x) {
        const auto i = x / 8, j = x % 8;
        if (i < 5 && j < 7) CHECK(g.channel(1)[static_cast<std::size_t>(x)] == doctest::Approx(1.0));
        CHECK(g.channel(0)[static_cast<std::size_t>(x)] == doctest::Approx(0.0));
    }
}

TEST_CASE("warp_gradient matches central differences") {
    oracle::Gen gen(4);
    for (Extents dims : {Extents{12, 16}, Extents{6, 8, 8}}) {
        const auto grid = make_grid(dims);
        const auto n = static_cast<std::size_t>(grid.voxel_count() * grid.ndim());
        const auto img = fixture::random_image(grid, gen);
        const std::vector<double> p0 = gen.uniforms(n, -2.0, 2.0);
        const auto g_out = gen.normals(static_cast<std::size_t>(grid.voxel_count()));
        const auto grad = warp_gradient(img, DenseField(grid, p0), g_out);
        const auto f = [&](const std::vector<double> &p) { return dot(warp(img, DenseField(grid, p)).values(), g_out); };
        for (int trial = 0; trial < 100; ++trial) {
            const auto i = static_cast<std::size_t>(gen.integer(0, static_cast<std::int64_t>(n) - 1));
            const double fd = oracle::central_difference(f, p0, i, 1e-6);
            CHECK(oracle::rel_err(grad.data()[i], fd, 1e-6) < 1e-5);
        }
    }
}

TEST_CASE("warp_field_adjoint and warp_field_gradient are the two partials of warp_field") {
    oracle::Gen gen(5);
    const auto grid = make_grid({10, 12});
    const auto n = static_cast<std::size_t>(grid.voxel_count() * 2);
    const std::vector<double> f0 = gen.normals(n);
    const std::vector<double> p0 = gen.uniforms(n, -2.0, 2.0);
    const DenseField g(grid, gen.normals(n));
    const auto adj = warp_field_adjoint(DenseField(grid, p0), g);
    const auto grad = warp_field_gradient(DenseField(grid, f0), DenseField(grid, p0), g);
    const auto by_f = [&](const std::vector<double> &f) { return dot(warp_field(DenseField(grid, f), DenseField(grid, p0)).data(), g.data()); };
    const auto by_p = [&](const std::vector<double> &p) { return dot(warp_field(DenseField(grid, f0), DenseField(grid, p)).data(), g.data()); };
    for (int trial = 0; trial < 60; ++trial) {
        const auto i = static_cast<std::size_t>(gen.integer(0, static_cast<std::int64_t>(n) - 1));
        CHECK(oracle::rel_err(adj.data()[i], oracle::central_difference(by_f, f0, i, 1e-4), 1e-6) < 1e-8);
        CHECK(oracle::rel_err(grad.data()[i], oracle::central_difference(by_p, p0, i, 1e-6), 1e-6) < 1e-5);
    }
}

TEST_CASE("exp_velocity: zero, constant and zero steps") {
    const auto grid = make_grid({16, 16});
    for (const auto r = exp_velocity(DenseField::zeros(grid)); double v : r.data()) CHECK(v == 0.0);
    const auto c = exp_velocity(constant_field(grid, {1.0, -0.5}));
    // Interior voxels never see the clamped border for a shift of at most 1 voxel.
    for (std::int64_t x = 0; x < 256; ++x) {
        const auto i = x / 16, j = x % 16;
        if (i >= 2 && i < 14 && j >= 2 && j < 14) {
            CHECK(c.channel(0)[static_cast<std::size_t>(x)] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(c.channel(1)[static_cast<std::size_t>(x)] == doctest::Approx(-0.5).epsilon(1e-12));
        }
    }
    oracle::Gen gen(6);
    const auto v = fixture::smooth_field(grid, {4, 4}, 2.0, gen);
    const auto same = exp_velocity(v, 0);
    CHECK(std::equal(same.data().begin(), same.data().end(), v.data().begin()));
}

TEST_CASE("exp_velocity agrees with a 128-step Euler flow") {
    oracle::Gen gen(7);
    const auto grid = make_grid({64, 64});
    for (int trial = 0; trial < 3; ++trial) {
        const auto v = fixture::smooth_field(grid, {8, 8}, 4.0, gen);
        const auto phi = exp_velocity(v);
        const auto ode = oracle::euler_flow(v.data(), grid.dims(), 128);
        double sum = 0.0;
        for (std::int64_t x = 0; x < grid.voxel_count(); ++x) {
            const auto k = static_cast<std::size_t>(x);
            sum += std::hypot(phi.data()[k] - ode[k], phi.data()[4096 + k] - ode[4096 + k]);
        }
        CHECK(sum / 4096.0 < 0.05);
    }
}

TEST_CASE("exp_velocity: inverse consistency in the interior") {
    oracle::Gen gen(8);
    const auto grid = make_grid({64, 64});
    const auto v = fixture::smooth_field(grid, {8, 8}, 3.0, gen);
    std::vector<double> neg(v.data().begin(), v.data().end());
    for (auto &x : neg) x = -x;
    const auto fwd = exp_velocity(v), bwd = exp_velocity(DenseField(grid, neg));
    const auto round = compose(bwd, fwd);
    double sum = 0.0;
    int count = 0;
    for (std::int64_t x = 0; x < 4096; ++x) {
        const auto i = x / 64, j = x % 64;
        if (i < 8 || i >= 56 || j < 8 || j >= 56) continue;
        sum += std::hypot(round.data()[static_cast<std::size_t>(x)], round.data()[4096 + static_cast<std::size_t>(x)]);
        ++count;
    }
    CHECK(sum / count < 0.1);
}

TEST_CASE("exp_velocity_adjoint: trivial cases and central differences") {
    oracle::Gen gen(9);
    const auto grid = make_grid({16, 16});
    const auto v = fixture::smooth_field(grid, {8, 8}, 3.0, gen);
    const DenseField g(grid, gen.normals(512));
    const auto same = exp_velocity_adjoint(v, 0, g);
    CHECK(std::equal(same.data().begin(), same.data().end(), g.data().begin()));
    for (const auto r = exp_velocity_adjoint(v, 7, DenseField::zeros(grid)); double x : r.data()) CHECK(x == 0.0);

    const auto adj = exp_velocity_adjoint(v, 7, g);
    const std::vector<double> v0(v.data().begin(), v.data().end());
    const auto f = [&](const std::vector<double> &p) { return dot(exp_velocity(DenseField(grid, p)).data(), g.data()); };
    for (int trial = 0; trial < 50; ++trial) {
        const auto i = static_cast<std::size_t>(gen.integer(0, 511));
        CHECK(oracle::rel_err(adj.data()[i], oracle::central_difference(f, v0, i, 1e-6), 1e-6) < 1e-4);
    }
}

TEST_CASE("jacobian: identity, linear expansion and a fold") {
    for (Extents dims : {Extents{8, 8}, Extents{6, 6, 6}}) {
        const auto grid = make_grid(dims);
        const auto nd = static_cast<int>(dims.size());
        const auto id = jacobian(DenseField::zeros(grid));
        for (double d : id.det) CHECK(d == 1.0);
        CHECK(id.folding_percent == 0.0);

        const auto coords = identity_grid(grid);
        std::vector<double> half(coords.data().begin(), coords.data().end());
        for (auto &x : half) x *= 0.5;
        const auto ex = jacobian(DenseField(grid, half));
        for (double d : ex.det) CHECK(d == doctest::Approx(std::pow(1.5, nd)));
        CHECK(ex.folding_percent == 0.0);

        std::vector<double> fold(coords.data().size(), 0.0);
        for (std::int64_t x = 0; x < grid.voxel_count(); ++x) fold[static_cast<std::size_t>(x)] = -2.0 * coords.data()[static_cast<std::size_t>(x)];
        const auto fr = jacobian(DenseField(grid, fold));
        for (double d : fr.det) CHECK(d < 0.0);
        CHECK(fr.folding_percent == 100.0);
    }
}

TEST_CASE("jacobian agrees with a direct determinant computation") {
    oracle::Gen gen(10);
    for (Extents dims : {Extents{16, 16}, Extents{8, 8, 8}}) {
        const auto grid = make_grid(dims);
        const DenseField phi(grid, gen.uniforms(static_cast<std::size_t>(grid.voxel_count() * grid.ndim()), -1.0, 1.0));
        const auto rep = jacobian(phi);
        const auto ref = oracle::jacobian_det(phi.data(), dims);
        std::int64_t neg = 0;
        for (std::size_t x = 0; x < ref.size(); ++x) {
            CHECK(rep.det[x] == doctest::Approx(ref[x]).epsilon(1e-12));
            neg += ref[x] < 0.0;
        }
        CHECK(rep.negative_count == neg);
        CHECK(rep.folding_percent == doctest::Approx(100.0 * static_cast<double>(neg) / static_cast<double>(ref.size())));
    }
}
