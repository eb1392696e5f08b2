// sampling.hpp - linear interpolation kernels shared by deform, metrics and io.
//
// Sample coordinates are clamped to [0, m - 1] per axis (replicate border). The cell's lower
// corner is floor(q), moved down to m - 2 at the far edge so the upper corner stays in range.

#pragma once

#include "spectreg/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spectreg::detail {

template <std::size_t D>
struct Geometry {
    std::array<std::int64_t, D> dims{};
    std::array<std::int64_t, D> strides{};
    std::int64_t count = 0;

    explicit Geometry(const GridSpec &grid) {
        count = 1;
        for (std::size_t a = D; a-- > 0;) {
            dims[a] = grid.extent(static_cast<int>(a));
            strides[a] = count;
            count *= dims[a];
        }
    }

    std::array<std::int64_t, D> unravel(std::int64_t flat) const {
        std::array<std::int64_t, D> idx{};
        for (std::size_t a = 0; a < D; ++a) {
            idx[a] = flat / strides[a];
            flat -= idx[a] * strides[a];
        }
        return idx;
    }
};

template <std::size_t D>
struct Cell {
    std::array<std::int64_t, D> lo{};
    std::array<double, D> t{};
    // False along an axis whose coordinate was clamped; the derivative there is zero.
    std::array<bool, D> inside{};
};

template <std::size_t D>
inline Cell<D> locate(const Geometry<D> &geo, const std::array<double, D> &p) {
    Cell<D> cell;
    for (std::size_t a = 0; a < D; ++a) {
        const double hi = static_cast<double>(geo.dims[a] - 1);
        const double q = p[a];
        cell.inside[a] = q >= 0.0 && q <= hi;
        const double qc = std::clamp(q, 0.0, hi);
        auto lo = static_cast<std::int64_t>(std::floor(qc));
        if (lo >= geo.dims[a] - 1) lo = geo.dims[a] - 2;
        cell.lo[a] = lo;
        cell.t[a] = qc - static_cast<double>(lo);
    }
    return cell;
}

template <std::size_t D>
inline std::int64_t corner_index(const Geometry<D> &geo, const Cell<D> &cell, int corner) {
    std::int64_t idx = 0;
    for (std::size_t a = 0; a < D; ++a) idx += (cell.lo[a] + ((corner >> (D - 1 - a)) & 1)) * geo.strides[a];
    return idx;
}

template <std::size_t D>
inline double corner_weight(const Cell<D> &cell, int corner, int skip_axis = -1) {
    double w = 1.0;
    for (std::size_t a = 0; a < D; ++a) {
        if (static_cast<int>(a) == skip_axis) continue;
        w *= ((corner >> (D - 1 - a)) & 1) ? cell.t[a] : 1.0 - cell.t[a];
    }
    return w;
}

template <std::size_t D>
inline double interpolate(const double *values, const Geometry<D> &geo, const Cell<D> &cell) {
    double sum = 0.0;
    for (int corner = 0; corner < (1 << D); ++corner) {
        sum += corner_weight(cell, corner) * values[corner_index(geo, cell, corner)];
    }
    return sum;
}

// Derivative of the interpolant with respect to each sample coordinate.
template <std::size_t D>
inline std::array<double, D> interpolate_gradient(const double *values, const Geometry<D> &geo, const Cell<D> &cell) {
    std::array<double, D> grad{};
    for (std::size_t d = 0; d < D; ++d) {
        if (!cell.inside[d]) continue;
        double g = 0.0;
        for (int corner = 0; corner < (1 << D); ++corner) {
            const double sign = ((corner >> (D - 1 - d)) & 1) ? 1.0 : -1.0;
            g += sign * corner_weight(cell, corner, static_cast<int>(d)) * values[corner_index(geo, cell, corner)];
        }
        grad[d] = g;
    }
    return grad;
}

// Transpose of interpolate: distributes `g` onto the cell corners.
template <std::size_t D>
inline void scatter(double *out, const Geometry<D> &geo, const Cell<D> &cell, double g) {
    for (int corner = 0; corner < (1 << D); ++corner) {
        out[corner_index(geo, cell, corner)] += corner_weight(cell, corner) * g;
    }
}

// Sample point x + phi(x) for voxel `flat`.
template <std::size_t D>
inline std::array<double, D> sample_point(const Geometry<D> &geo, std::span<const double> phi, std::int64_t flat) {
    const auto idx = geo.unravel(flat);
    std::array<double, D> p{};
    for (std::size_t a = 0; a < D; ++a) {
        p[a] = static_cast<double>(idx[a]) + phi[a * static_cast<std::size_t>(geo.count) + static_cast<std::size_t>(flat)];
    }
    return p;
}

// Calls fn.template operator()<std::size_t{2}>() or <3>() depending on the grid rank.
template <class Fn>
decltype(auto) dispatch_ndim(const GridSpec &grid, Fn &&fn) {
    if (grid.ndim() == 2) return fn.template operator()<std::size_t{2}>();
    return fn.template operator()<std::size_t{3}>();
}

} // namespace spectreg::detail
