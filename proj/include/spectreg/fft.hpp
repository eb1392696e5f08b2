// fft.hpp - thin FFTW backend for unnormalized multi-dimensional complex transforms.

#pragma once

#include "spectreg/core.hpp"

namespace spectreg::fft {

enum class Direction { forward, inverse };

// In-place unnormalized transform over row-major `dims`. Forward uses exp(-i...), inverse
// uses exp(+i...) without the 1/N factor.
void transform(std::span<cplx> data, const Extents &dims, Direction dir);

} // namespace spectreg::fft
