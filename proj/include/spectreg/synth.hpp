// synth.hpp - deterministic synthetic image pairs with known band-limited deformations.
//
// Random numbers come from std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniform draws use the top 53 bits; normal draws use the Box-Muller transform on
// two uniforms. No std::*_distribution is involved, so fixtures are reproducible across
// standard libraries.

#pragma once

#include "spectreg/core.hpp"

#include <random>

namespace spectreg {

class PortableRng {
  public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

  private:
    std::mt19937_64 engine_;
};

struct SynthConfig {
    Extents dims{64, 96};
    Extents band_dims{16, 24};
    // Maximum displacement magnitude of the ground truth, voxels.
    double amplitude = 3.0;
    int blob_count = 12;
    std::uint64_t seed = 0;
    // Width, in cycles per grid, of the Gaussian envelope applied to the random band
    // coefficients; smaller values give smoother ground truth.
    double spectral_sigma = 1.5;
    // Adds an out-of-band sinusoid (10% of the amplitude) to the ground truth.
    bool contaminate = false;

    void validate() const;
};

struct SyntheticPair {
    ScalarImage moving;
    ScalarImage fixed;
    DenseField phi_gt;
    LowResField s_gt;
    LabelMap labels_moving;
    LabelMap labels_fixed;
};

// moving = smooth blob image in [0, 1]; fixed = warp(moving, phi_gt). Throws
// std::invalid_argument when the ground truth would fold.
SyntheticPair make_pair(const SynthConfig &config);

// Pointwise I^gamma of an image with values in [0, 1] (values are clamped to be non-negative).
ScalarImage gamma_remap(const ScalarImage &image, double gamma);

} // namespace spectreg
