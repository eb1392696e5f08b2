#include "spectreg/deform.hpp"

#include "sampling.hpp"

#include <cmath>

namespace spectreg {

using detail::dispatch_ndim;
using detail::Geometry;

namespace {

void require_same_grid(const GridSpec &a, const GridSpec &b, const char *what) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(what) + ": grid " + format_extents(a.dims()) + " does not match " +
                                    format_extents(b.dims()));
    }
}

} // namespace

DenseField identity_grid(const GridSpec &grid) {
    const auto n = grid.voxel_count();
    std::vector<double> data(static_cast<std::size_t>(n * grid.ndim()));
    Extents strides(static_cast<std::size_t>(grid.ndim()));
    std::int64_t s = 1;
    for (int a = grid.ndim() - 1; a >= 0; --a) {
        strides[static_cast<std::size_t>(a)] = s;
        s *= grid.extent(a);
    }
    for (std::int64_t flat = 0; flat < n; ++flat) {
        auto rem = flat;
        for (int a = 0; a < grid.ndim(); ++a) {
            const auto q = rem / strides[static_cast<std::size_t>(a)];
            rem -= q * strides[static_cast<std::size_t>(a)];
            data[static_cast<std::size_t>(a * n + flat)] = static_cast<double>(q);
        }
    }
    return DenseField(grid, std::move(data));
}

ScalarImage warp(const ScalarImage &image, const DenseField &phi) {
    require_same_grid(image.grid(), phi.grid(), "warp");
    std::vector<double> out(image.values().size());
    dispatch_ndim(image.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(image.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto cell = detail::locate(geo, detail::sample_point(geo, phi.data(), x));
            out[static_cast<std::size_t>(x)] = detail::interpolate(image.values().data(), geo, cell);
        }
    });
    return ScalarImage(image.grid(), std::move(out));
}

DenseField warp_field(const DenseField &f, const DenseField &phi) {
    require_same_grid(f.grid(), phi.grid(), "warp_field");
    std::vector<double> out(f.data().size());
    dispatch_ndim(f.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(f.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto cell = detail::locate(geo, detail::sample_point(geo, phi.data(), x));
            for (int c = 0; c < static_cast<int>(D); ++c) {
                out[static_cast<std::size_t>(c * geo.count + x)] =
                    detail::interpolate(f.data().data() + c * geo.count, geo, cell);
            }
        }
    });
    return DenseField(f.grid(), std::move(out));
}

DenseField compose(const DenseField &outer, const DenseField &inner) {
    const auto warped = warp_field(outer, inner);
    std::vector<double> out(inner.data().begin(), inner.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += warped.data()[i];
    return DenseField(inner.grid(), std::move(out));
}

DenseField warp_gradient(const ScalarImage &image, const DenseField &phi, std::span<const double> g_out) {
    require_same_grid(image.grid(), phi.grid(), "warp_gradient");
    if (g_out.size() != image.values().size()) throw std::invalid_argument("warp_gradient: output gradient size mismatch");
    std::vector<double> out(phi.data().size(), 0.0);
    dispatch_ndim(image.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(image.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const double g = g_out[static_cast<std::size_t>(x)];
            if (g == 0.0) continue;
            const auto cell = detail::locate(geo, detail::sample_point(geo, phi.data(), x));
            const auto dv = detail::interpolate_gradient(image.values().data(), geo, cell);
            for (int d = 0; d < static_cast<int>(D); ++d) out[static_cast<std::size_t>(d * geo.count + x)] = g * dv[d];
        }
    });
    return DenseField(phi.grid(), std::move(out));
}

DenseField warp_field_gradient(const DenseField &f, const DenseField &phi, const DenseField &g_out) {
    require_same_grid(f.grid(), phi.grid(), "warp_field_gradient");
    require_same_grid(f.grid(), g_out.grid(), "warp_field_gradient");
    std::vector<double> out(phi.data().size(), 0.0);
    dispatch_ndim(f.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(f.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto cell = detail::locate(geo, detail::sample_point(geo, phi.data(), x));
            for (int c = 0; c < static_cast<int>(D); ++c) {
                const double g = g_out.data()[static_cast<std::size_t>(c * geo.count + x)];
                if (g == 0.0) continue;
                const auto dv = detail::interpolate_gradient(f.data().data() + c * geo.count, geo, cell);
                for (int d = 0; d < static_cast<int>(D); ++d) out[static_cast<std::size_t>(d * geo.count + x)] += g * dv[d];
            }
        }
    });
    return DenseField(phi.grid(), std::move(out));
}

DenseField warp_field_adjoint(const DenseField &phi, const DenseField &g_out) {
    require_same_grid(phi.grid(), g_out.grid(), "warp_field_adjoint");
    std::vector<double> out(phi.data().size(), 0.0);
    dispatch_ndim(phi.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(phi.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto cell = detail::locate(geo, detail::sample_point(geo, phi.data(), x));
            for (int c = 0; c < static_cast<int>(D); ++c) {
                detail::scatter(out.data() + c * geo.count, geo, cell,
                                g_out.data()[static_cast<std::size_t>(c * geo.count + x)]);
            }
        }
    });
    return DenseField(phi.grid(), std::move(out));
}

ExpTrace exp_velocity_trace(const DenseField &v, int steps) {
    if (steps < 0) throw std::invalid_argument("scaling and squaring needs a non-negative step count");
    const double scale = std::ldexp(1.0, -steps);
    std::vector<double> first(v.data().begin(), v.data().end());
    for (auto &x : first) x *= scale;

    ExpTrace trace;
    trace.states.reserve(static_cast<std::size_t>(steps) + 1);
    trace.states.emplace_back(v.grid(), std::move(first));
    for (int k = 0; k < steps; ++k) {
        const auto &psi = trace.states.back();
        trace.states.push_back(compose(psi, psi));
    }
    return trace;
}

DenseField exp_velocity(const DenseField &v, int steps) { return exp_velocity_trace(v, steps).result(); }

DenseField exp_velocity_adjoint(const ExpTrace &trace, const DenseField &g) {
    require_same_grid(trace.result().grid(), g.grid(), "exp_velocity_adjoint");
    std::vector<double> grad(g.data().begin(), g.data().end());
    for (int k = trace.steps() - 1; k >= 0; --k) {
        const auto &psi = trace.states[static_cast<std::size_t>(k)];
        const DenseField upstream(g.grid(), grad);
        const auto value_path = warp_field_adjoint(psi, upstream);
        const auto coord_path = warp_field_gradient(psi, psi, upstream);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += value_path.data()[i] + coord_path.data()[i];
    }
    const double scale = std::ldexp(1.0, -trace.steps());
    for (auto &x : grad) x *= scale;
    return DenseField(g.grid(), std::move(grad));
}

DenseField exp_velocity_adjoint(const DenseField &v, int steps, const DenseField &g) {
    return exp_velocity_adjoint(exp_velocity_trace(v, steps), g);
}

JacobianReport jacobian(const DenseField &phi) {
    JacobianReport report;
    report.grid = phi.grid();
    report.det.resize(static_cast<std::size_t>(phi.grid().voxel_count()));
    dispatch_ndim(phi.grid(), [&]<std::size_t D>() {
        const Geometry<D> geo(phi.grid());
        const auto data = phi.data();
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto idx = geo.unravel(x);
            std::array<std::array<double, D>, D> j{};
            for (int d = 0; d < static_cast<int>(D); ++d) {
                // forward difference, backward at the far border
                const bool last = idx[d] == geo.dims[d] - 1;
                const auto hi = last ? x : x + geo.strides[d];
                const auto lo = last ? x - geo.strides[d] : x;
                for (int c = 0; c < static_cast<int>(D); ++c) {
                    j[c][d] = (c == d ? 1.0 : 0.0) + data[static_cast<std::size_t>(c * geo.count + hi)] -
                              data[static_cast<std::size_t>(c * geo.count + lo)];
                }
            }
            double det;
            if constexpr (D == 2) {
                det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            } else {
                det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                      j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                      j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            }
            report.det[static_cast<std::size_t>(x)] = det;
            if (det < 0.0) ++report.negative_count;
        }
    });
    report.folding_percent =
        100.0 * static_cast<double>(report.negative_count) / static_cast<double>(phi.grid().voxel_count());
    return report;
}

} // namespace spectreg
