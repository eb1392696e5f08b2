#include "spectreg/objective.hpp"

#include "spectreg/spectral.hpp"

#include "sampling.hpp"

#include <algorithm>
#include <cmath>

namespace spectreg {

namespace {

void require_same_grid(const ScalarImage &a, const ScalarImage &b) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("image grids differ: " + format_extents(a.grid().dims()) + " vs " +
                                    format_extents(b.grid().dims()));
    }
}

// Number of voxels in the clipped box around each voxel.
std::vector<double> box_count(const GridSpec &grid, int radius) {
    return box_sum(std::vector<double>(static_cast<std::size_t>(grid.voxel_count()), 1.0), grid, radius);
}

} // namespace

std::string to_string(Similarity s) { return s == Similarity::mse ? "mse" : "ncc"; }

Similarity parse_similarity(const std::string &name) {
    if (name == "mse" || name == "MSE") return Similarity::mse;
    if (name == "ncc" || name == "NCC") return Similarity::ncc;
    throw std::invalid_argument("unknown similarity '" + name + "' (expected mse or ncc)");
}

LossConfig LossConfig::defaults_for(Similarity s) {
    LossConfig config;
    config.similarity = s;
    config.lambda = s == Similarity::mse ? 0.01 : 5.0;
    return config;
}

void LossConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be non-negative");
    if (ncc_window < 3 || ncc_window % 2 == 0) throw std::invalid_argument("ncc window must be odd and >= 3");
    if (!(epsilon > 0.0)) throw std::invalid_argument("ncc epsilon must be positive");
}

ValueGrad mse(const ScalarImage &a, const ScalarImage &b) {
    require_same_grid(a, b);
    const auto n = a.values().size();
    ValueGrad out;
    out.grad.resize(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.values()[i] - b.values()[i];
        sum += d * d;
        out.grad[i] = 2.0 * d / static_cast<double>(n);
    }
    out.value = sum / static_cast<double>(n);
    return out;
}

std::vector<double> box_sum(std::span<const double> values, const GridSpec &grid, int radius) {
    std::vector<double> cur(values.begin(), values.end());
    std::vector<double> next(cur.size());
    const auto &dims = grid.dims();
    std::vector<double> prefix;
    for (int axis = 0; axis < grid.ndim(); ++axis) {
        const auto m = dims[static_cast<std::size_t>(axis)];
        std::int64_t stride = 1;
        for (int a = axis + 1; a < grid.ndim(); ++a) stride *= dims[static_cast<std::size_t>(a)];
        const auto outer = grid.voxel_count() / (m * stride);
        prefix.assign(static_cast<std::size_t>(m + 1), 0.0);
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t s = 0; s < stride; ++s) {
                const auto base = o * m * stride + s;
                for (std::int64_t i = 0; i < m; ++i) {
                    prefix[static_cast<std::size_t>(i + 1)] =
                        prefix[static_cast<std::size_t>(i)] + cur[static_cast<std::size_t>(base + i * stride)];
                }
                for (std::int64_t i = 0; i < m; ++i) {
                    const auto lo = std::max<std::int64_t>(0, i - radius);
                    const auto hi = std::min<std::int64_t>(m, i + radius + 1);
                    next[static_cast<std::size_t>(base + i * stride)] =
                        prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)];
                }
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

ValueGrad ncc_local(const ScalarImage &a, const ScalarImage &b, int window, double epsilon) {
    require_same_grid(a, b);
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("ncc window must be odd and >= 3");
    const auto &grid = a.grid();
    const int r = window / 2;
    const auto n = a.values().size();
    const auto av = a.values();
    const auto bv = b.values();

    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = av[i] * av[i];
        bb[i] = bv[i] * bv[i];
        ab[i] = av[i] * bv[i];
    }
    const auto cnt = box_count(grid, r);
    const auto sa = box_sum(av, grid, r);
    const auto sb = box_sum(bv, grid, r);
    const auto saa = box_sum(aa, grid, r);
    const auto sbb = box_sum(bb, grid, r);
    const auto sab = box_sum(ab, grid, r);

    // Per-window coefficients of the gradient: d cc / d a(y) = A (b(y) - bbar) - B (a(y) - abar).
    std::vector<double> coef_a(n), coef_ab(n), coef_b(n), coef_ba(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double abar = sa[i] / cnt[i];
        const double bbar = sb[i] / cnt[i];
        const double cross = sab[i] - sa[i] * bbar;
        const double va = std::max(0.0, saa[i] - sa[i] * abar) + epsilon;
        const double vb = std::max(0.0, sbb[i] - sb[i] * bbar) + epsilon;
        const double den = va * vb;
        const double cc = cross * cross / den;
        sum += cc;
        const double ca = 2.0 * cross / den;
        const double cb = 2.0 * cc / va;
        coef_a[i] = ca;
        coef_ab[i] = ca * bbar;
        coef_b[i] = cb;
        coef_ba[i] = cb * abar;
    }
    const auto box_a = box_sum(coef_a, grid, r);
    const auto box_ab = box_sum(coef_ab, grid, r);
    const auto box_b = box_sum(coef_b, grid, r);
    const auto box_ba = box_sum(coef_ba, grid, r);

    ValueGrad out;
    out.value = sum / static_cast<double>(n);
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.grad[i] = (box_a[i] * bv[i] - box_ab[i] - box_b[i] * av[i] + box_ba[i]) / static_cast<double>(n);
    }
    return out;
}

ValueGrad smoothness(const DenseField &field) {
    const auto &grid = field.grid();
    const int nd = grid.ndim();
    const auto count = grid.voxel_count();
    const double norm = static_cast<double>(count) * nd * nd;
    ValueGrad out;
    out.grad.assign(field.data().size(), 0.0);
    const auto data = field.data();
    double sum = 0.0;
    detail::dispatch_ndim(grid, [&]<std::size_t D>() {
        const detail::Geometry<D> geo(grid);
        for (int c = 0; c < static_cast<int>(D); ++c) {
            const auto off = static_cast<std::size_t>(c * count);
            for (std::int64_t x = 0; x < count; ++x) {
                const auto idx = geo.unravel(x);
                for (int d = 0; d < static_cast<int>(D); ++d) {
                    if (idx[d] == geo.dims[d] - 1) continue;
                    const auto up = x + geo.strides[d];
                    const double diff = data[off + static_cast<std::size_t>(up)] - data[off + static_cast<std::size_t>(x)];
                    sum += diff * diff;
                    const double g = 2.0 * diff / norm;
                    out.grad[off + static_cast<std::size_t>(up)] += g;
                    out.grad[off + static_cast<std::size_t>(x)] -= g;
                }
            }
        }
    });
    out.value = sum / norm;
    return out;
}

LossEvaluation total_loss(const LowResField &s, const ScalarImage &moving, const ScalarImage &fixed,
                          const LossConfig &config, bool diffeo, int steps) {
    require_same_grid(moving, fixed);
    if (!(s.window().parent() == moving.grid())) {
        throw std::invalid_argument("band window parent " + format_extents(s.window().parent().dims()) +
                                    " does not match image grid " + format_extents(moving.grid().dims()));
    }
    const auto decoded = decode(s);
    std::optional<ExpTrace> trace;
    if (diffeo) trace = exp_velocity_trace(decoded, steps);
    const DenseField &phi = diffeo ? trace->result() : decoded;

    const auto warped = warp(moving, phi);
    LossEvaluation out;
    std::vector<double> grad_warped;
    double sim_loss = 0.0;
    if (config.similarity == Similarity::mse) {
        auto vg = mse(warped, fixed);
        out.similarity = vg.value;
        sim_loss = vg.value;
        grad_warped = std::move(vg.grad);
    } else {
        auto vg = ncc_local(warped, fixed, config);
        out.similarity = vg.value;
        sim_loss = -vg.value;
        grad_warped = std::move(vg.grad);
        for (auto &g : grad_warped) g = -g;
    }
    const auto smooth = smoothness(decoded);
    out.smoothness = smooth.value;
    out.loss = sim_loss + config.lambda * smooth.value;

    auto grad_phi = warp_gradient(moving, phi, grad_warped);
    if (diffeo) grad_phi = exp_velocity_adjoint(*trace, grad_phi);
    std::vector<double> grad_field(grad_phi.data().begin(), grad_phi.data().end());
    for (std::size_t i = 0; i < grad_field.size(); ++i) grad_field[i] += config.lambda * smooth.grad[i];
    out.grad = decode_adjoint(DenseField(moving.grid(), std::move(grad_field)), s.window());
    return out;
}

} // namespace spectreg
