#include "spectreg/metrics.hpp"

#include "spectreg/deform.hpp"

#include "sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spectreg {

namespace {

void require_same_grid(const LabelMap &a, const LabelMap &b) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("label map grids differ: " + format_extents(a.grid().dims()) + " vs " +
                                    format_extents(b.grid().dims()));
    }
}

std::set<std::int32_t> present_labels(const LabelMap &m) {
    std::set<std::int32_t> out;
    for (auto v : m.values()) {
        if (v != 0) out.insert(v);
    }
    return out;
}

bool contains(const LabelMap &m, std::int32_t label) {
    return std::find(m.values().begin(), m.values().end(), label) != m.values().end();
}

// Squared distance transform along one line (Felzenszwalb and Huttenlocher lower envelope).
// Entries equal to +inf are not sites.
void edt_line(std::vector<double> &f, std::vector<double> &out, std::vector<std::int64_t> &site,
              std::vector<double> &bound) {
    const auto n = static_cast<std::int64_t>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
        if (f[static_cast<std::size_t>(q)] == inf) continue;
        const double fq = f[static_cast<std::size_t>(q)] + static_cast<double>(q * q);
        while (k >= 0) {
            const auto v = site[static_cast<std::size_t>(k)];
            const double s = (fq - (f[static_cast<std::size_t>(v)] + static_cast<double>(v * v))) /
                             static_cast<double>(2 * (q - v));
            if (s <= bound[static_cast<std::size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        site[static_cast<std::size_t>(k)] = q;
        if (k == 0) {
            bound[0] = -inf;
        } else {
            const auto v = site[static_cast<std::size_t>(k - 1)];
            bound[static_cast<std::size_t>(k)] =
                (fq - (f[static_cast<std::size_t>(v)] + static_cast<double>(v * v))) / static_cast<double>(2 * (q - v));
        }
    }
    if (k < 0) {
        std::fill(out.begin(), out.end(), inf);
        return;
    }
    std::int64_t j = 0;
    for (std::int64_t q = 0; q < n; ++q) {
        while (j < k && bound[static_cast<std::size_t>(j + 1)] < static_cast<double>(q)) ++j;
        const auto v = site[static_cast<std::size_t>(j)];
        const auto d = q - v;
        out[static_cast<std::size_t>(q)] = static_cast<double>(d * d) + f[static_cast<std::size_t>(v)];
    }
}

} // namespace

DiceResult dice(const LabelMap &a, const LabelMap &b, const std::set<std::int32_t> &labels) {
    require_same_grid(a, b);
    std::set<std::int32_t> wanted = labels;
    if (wanted.empty()) {
        wanted = present_labels(a);
        const auto pb = present_labels(b);
        wanted.insert(pb.begin(), pb.end());
    }
    std::map<std::int32_t, std::int64_t> count_a, count_b, overlap;
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        ++count_a[av[i]];
        ++count_b[bv[i]];
        if (av[i] == bv[i]) ++overlap[av[i]];
    }
    DiceResult out;
    double sum = 0.0;
    for (auto label : wanted) {
        const auto na = count_a.contains(label) ? count_a[label] : 0;
        const auto nb = count_b.contains(label) ? count_b[label] : 0;
        if (na + nb == 0) {
            out.skipped.push_back(label);
            continue;
        }
        const auto ov = overlap.contains(label) ? overlap[label] : 0;
        const double d = 2.0 * static_cast<double>(ov) / static_cast<double>(na + nb);
        out.per_label[label] = d;
        sum += d;
    }
    out.mean = out.per_label.empty() ? 0.0 : sum / static_cast<double>(out.per_label.size());
    return out;
}

LabelMap warp_labels(const LabelMap &labels, const DenseField &phi) {
    if (!(labels.grid() == phi.grid())) throw std::invalid_argument("warp_labels: field grid does not match labels");
    std::vector<std::int32_t> out(labels.values().size());
    detail::dispatch_ndim(labels.grid(), [&]<std::size_t D>() {
        const detail::Geometry<D> geo(labels.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            const auto p = detail::sample_point(geo, phi.data(), x);
            std::int64_t src = 0;
            for (int a = 0; a < static_cast<int>(D); ++a) {
                const double q = std::clamp(p[a], 0.0, static_cast<double>(geo.dims[a] - 1));
                src += static_cast<std::int64_t>(std::floor(q + 0.5)) * geo.strides[a];
            }
            out[static_cast<std::size_t>(x)] = labels.values()[static_cast<std::size_t>(src)];
        }
    });
    return LabelMap(labels.grid(), std::move(out));
}

std::vector<std::int64_t> boundary_voxels(const LabelMap &map, std::int32_t label) {
    std::vector<std::int64_t> out;
    const auto v = map.values();
    detail::dispatch_ndim(map.grid(), [&]<std::size_t D>() {
        const detail::Geometry<D> geo(map.grid());
        for (std::int64_t x = 0; x < geo.count; ++x) {
            if (v[static_cast<std::size_t>(x)] != label) continue;
            const auto idx = geo.unravel(x);
            bool edge = false;
            for (std::size_t a = 0; a < D && !edge; ++a) {
                edge = idx[a] == 0 || idx[a] == geo.dims[a] - 1 ||
                       v[static_cast<std::size_t>(x - geo.strides[a])] != label ||
                       v[static_cast<std::size_t>(x + geo.strides[a])] != label;
            }
            if (edge) out.push_back(x);
        }
    });
    return out;
}

std::vector<double> squared_distance_transform(const GridSpec &grid, std::span<const std::uint8_t> mask) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) dist[i] = mask[i] ? 0.0 : inf;
    const auto &dims = grid.dims();
    for (int axis = 0; axis < grid.ndim(); ++axis) {
        const auto m = dims[static_cast<std::size_t>(axis)];
        std::int64_t stride = 1;
        for (int a = axis + 1; a < grid.ndim(); ++a) stride *= dims[static_cast<std::size_t>(a)];
        const auto outer = grid.voxel_count() / (m * stride);
        std::vector<double> f(static_cast<std::size_t>(m)), out(static_cast<std::size_t>(m)),
            bound(static_cast<std::size_t>(m) + 1);
        std::vector<std::int64_t> site(static_cast<std::size_t>(m));
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t s = 0; s < stride; ++s) {
                const auto base = o * m * stride + s;
                for (std::int64_t i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(base + i * stride)];
                edt_line(f, out, site, bound);
                for (std::int64_t i = 0; i < m; ++i) dist[static_cast<std::size_t>(base + i * stride)] = out[static_cast<std::size_t>(i)];
            }
        }
    }
    return dist;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double hd95(const LabelMap &a, const LabelMap &b, std::int32_t label) {
    require_same_grid(a, b);
    if (!contains(a, label)) throw std::invalid_argument("label " + std::to_string(label) + " missing from the first map");
    if (!contains(b, label)) throw std::invalid_argument("label " + std::to_string(label) + " missing from the second map");
    const auto ba = boundary_voxels(a, label);
    const auto bb = boundary_voxels(b, label);
    const auto n = static_cast<std::size_t>(a.grid().voxel_count());

    auto distances_to = [&](const std::vector<std::int64_t> &targets, const std::vector<std::int64_t> &from,
                            std::vector<double> &pool) {
        std::vector<std::uint8_t> mask(n, 0);
        for (auto t : targets) mask[static_cast<std::size_t>(t)] = 1;
        const auto d2 = squared_distance_transform(a.grid(), mask);
        for (auto f : from) pool.push_back(std::sqrt(d2[static_cast<std::size_t>(f)]));
    };
    std::vector<double> pool;
    pool.reserve(ba.size() + bb.size());
    distances_to(bb, ba, pool);
    distances_to(ba, bb, pool);
    return percentile(std::move(pool), 95.0);
}

MetricReport evaluate(const LabelMap &a, const LabelMap &b, const std::set<std::int32_t> &labels,
                      const DenseField *phi) {
    MetricReport report;
    const auto d = dice(a, b, labels);
    report.dice_per_label = d.per_label;
    report.dice_mean = d.mean;
    double sum = 0.0;
    for (const auto &[label, value] : d.per_label) {
        if (!contains(a, label) || !contains(b, label)) continue;
        const double h = hd95(a, b, label);
        report.hd95_per_label[label] = h;
        sum += h;
    }
    report.hd95_mean = report.hd95_per_label.empty() ? 0.0 : sum / static_cast<double>(report.hd95_per_label.size());
    if (phi != nullptr) report.folding_percent = jacobian(*phi).folding_percent;
    return report;
}

} // namespace spectreg
