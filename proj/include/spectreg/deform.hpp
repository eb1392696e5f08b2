// deform.hpp - identity grid, linear-interpolation warping, scaling-and-squaring and Jacobians.
//
// A displacement field phi deforms an image by backward sampling: out(x) = I(x + phi(x)).
// Sampling is bilinear (2D) or trilinear (3D) with border clamping.

#pragma once

#include "spectreg/core.hpp"

namespace spectreg {

inline constexpr int default_squaring_steps = 7;

// Channel d holds the coordinate x_d.
DenseField identity_grid(const GridSpec &grid);

ScalarImage warp(const ScalarImage &image, const DenseField &phi);

// Every channel of f sampled at x + phi(x).
DenseField warp_field(const DenseField &f, const DenseField &phi);

// Displacement of (Id + outer) o (Id + inner): inner(x) + outer(x + inner(x)).
DenseField compose(const DenseField &outer, const DenseField &inner);

// Gradient of sum_x g_out(x) * warp(image, phi)(x) with respect to phi. Zero along any axis
// whose sample coordinate was clamped.
DenseField warp_gradient(const ScalarImage &image, const DenseField &phi, std::span<const double> g_out);

// Gradient of <g_out, warp_field(f, phi)> with respect to phi (sampling-coordinate path).
DenseField warp_field_gradient(const DenseField &f, const DenseField &phi, const DenseField &g_out);

// Gradient of <g_out, warp_field(f, phi)> with respect to f: the transpose of sampling.
DenseField warp_field_adjoint(const DenseField &phi, const DenseField &g_out);

// Forward intermediates of scaling and squaring: states[0] = v / 2^steps and
// states[k + 1] = states[k] + warp_field(states[k], states[k]).
struct ExpTrace {
    std::vector<DenseField> states;
    int steps() const { return static_cast<int>(states.size()) - 1; }
    const DenseField &result() const { return states.back(); }
};

ExpTrace exp_velocity_trace(const DenseField &v, int steps = default_squaring_steps);
DenseField exp_velocity(const DenseField &v, int steps = default_squaring_steps);

// Gradient with respect to v given the gradient g with respect to Exp(v).
DenseField exp_velocity_adjoint(const ExpTrace &trace, const DenseField &g);
DenseField exp_velocity_adjoint(const DenseField &v, int steps, const DenseField &g);

struct JacobianReport {
    GridSpec grid;
    std::vector<double> det;
    std::int64_t negative_count = 0;
    double folding_percent = 0.0;
};

// Determinant of the Jacobian of x + phi(x) using forward differences (backward at the far
// border). Folding counts voxels with det < 0.
JacobianReport jacobian(const DenseField &phi);

} // namespace spectreg
