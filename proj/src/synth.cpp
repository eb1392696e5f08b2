#include "spectreg/synth.hpp"

#include "spectreg/deform.hpp"
#include "spectreg/metrics.hpp"
#include "spectreg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spectreg {

double PortableRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double PortableRng::normal() {
    // 1 - u keeps the logarithm argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthConfig::validate() const {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("amplitude must be non-negative");
    if (blob_count < 1) throw std::invalid_argument("blob count must be positive");
    if (!(spectral_sigma > 0.0)) throw std::invalid_argument("spectral sigma must be positive");
    make_window(make_grid(dims), band_dims);
}

namespace {

struct Blob {
    std::array<double, 3> center{};
    double sigma = 1.0;
    double weight = 1.0;
};

DenseField ground_truth(const CropWindow &window, const SynthConfig &config, PortableRng &rng) {
    const auto &bdims = window.band_dims();
    const int nd = window.ndim();
    const auto nb = static_cast<std::size_t>(window.band_count());

    std::vector<double> noise(nb * static_cast<std::size_t>(nd));
    for (auto &v : noise) v = rng.normal();
    auto band = band_spectrum(LowResField(window, std::move(noise)));

    // Gaussian envelope over the centered band frequency.
    std::vector<cplx> shaped(band.data().begin(), band.data().end());
    for (std::size_t flat = 0; flat < nb; ++flat) {
        auto rem = static_cast<std::int64_t>(flat);
        double f2 = 0.0;
        for (int a = nd - 1; a >= 0; --a) {
            const auto m = bdims[static_cast<std::size_t>(a)];
            const auto k = rem % m;
            rem /= m;
            const double f = static_cast<double>(k - m / 2);
            f2 += f * f;
        }
        const double env = std::exp(-f2 / (2.0 * config.spectral_sigma * config.spectral_sigma));
        for (int c = 0; c < nd; ++c) shaped[static_cast<std::size_t>(c) * nb + flat] *= env;
    }
    return decode_band(BandSpectrum(window, std::move(shaped)), window.gain()).field;
}

} // namespace

SyntheticPair make_pair(const SynthConfig &config) {
    config.validate();
    const auto grid = make_grid(config.dims);
    const auto window = make_window(grid, config.band_dims);
    const int nd = grid.ndim();
    const auto n = grid.voxel_count();
    PortableRng rng(config.seed);

    // Base image and labels.
    double min_extent = static_cast<double>(*std::min_element(config.dims.begin(), config.dims.end()));
    std::vector<Blob> blobs(static_cast<std::size_t>(config.blob_count));
    for (auto &b : blobs) {
        for (int a = 0; a < nd; ++a) b.center[static_cast<std::size_t>(a)] = rng.uniform(0.15, 0.85) * static_cast<double>(config.dims[static_cast<std::size_t>(a)]);
        b.sigma = rng.uniform(0.06, 0.12) * min_extent;
        b.weight = rng.uniform(0.4, 1.0);
    }
    std::vector<double> base(static_cast<std::size_t>(n), 0.0);
    std::vector<std::int32_t> labels(static_cast<std::size_t>(n), 0);
    const auto ident = identity_grid(grid);
    for (std::int64_t x = 0; x < n; ++x) {
        double total = 0.0, best = 0.0;
        std::int32_t best_label = 0;
        for (std::size_t bi = 0; bi < blobs.size(); ++bi) {
            double r2 = 0.0;
            for (int a = 0; a < nd; ++a) {
                const double d = ident.data()[static_cast<std::size_t>(a * n + x)] - blobs[bi].center[static_cast<std::size_t>(a)];
                r2 += d * d;
            }
            const double v = blobs[bi].weight * std::exp(-r2 / (2.0 * blobs[bi].sigma * blobs[bi].sigma));
            total += v;
            if (v > best) {
                best = v;
                best_label = static_cast<std::int32_t>(bi + 1);
            }
        }
        base[static_cast<std::size_t>(x)] = total;
        labels[static_cast<std::size_t>(x)] = best >= 0.25 ? best_label : 0;
    }
    const double peak = *std::max_element(base.begin(), base.end());
    if (peak > 0.0) {
        for (auto &v : base) v /= peak;
    }

    // Ground-truth displacement, rescaled to the requested amplitude.
    auto raw = ground_truth(window, config, rng);
    std::vector<double> phi(raw.data().begin(), raw.data().end());
    const double raw_max = raw.max_abs();
    const double scale = raw_max > 0.0 ? config.amplitude / raw_max : 0.0;
    for (auto &v : phi) v *= scale;
    auto s_gt = encode(DenseField(grid, phi), window).params;
    if (config.contaminate && config.amplitude > 0.0) {
        // Highest representable frequency along axis 0 lies far outside any band window.
        const double freq = static_cast<double>(grid.extent(0) / 2 - 1) / static_cast<double>(grid.extent(0));
        for (std::int64_t x = 0; x < n; ++x) {
            const double i = ident.data()[static_cast<std::size_t>(x)];
            phi[static_cast<std::size_t>(x)] += 0.1 * config.amplitude * std::sin(2.0 * std::numbers::pi * freq * i);
        }
    }
    DenseField phi_gt(grid, std::move(phi));
    const auto jac = jacobian(phi_gt);
    if (jac.negative_count > 0) {
        throw std::invalid_argument("ground-truth deformation folds (" + std::to_string(jac.folding_percent) +
                                    "% of voxels) at amplitude " + std::to_string(config.amplitude) +
                                    "; use a smaller amplitude");
    }

    ScalarImage moving(grid, std::move(base));
    auto fixed = warp(moving, phi_gt);
    LabelMap labels_moving(grid, std::move(labels));
    auto labels_fixed = warp_labels(labels_moving, phi_gt);
    return SyntheticPair{std::move(moving), std::move(fixed),         std::move(phi_gt),
                         std::move(s_gt),   std::move(labels_moving), std::move(labels_fixed)};
}

ScalarImage gamma_remap(const ScalarImage &image, double gamma) {
    std::vector<double> out(image.values().begin(), image.values().end());
    for (auto &v : out) v = std::pow(std::max(v, 0.0), gamma);
    return ScalarImage(image.grid(), std::move(out));
}

} // namespace spectreg
