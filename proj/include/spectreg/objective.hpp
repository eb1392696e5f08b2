// objective.hpp - similarity terms, smoothness regularizer and the registration loss.

#pragma once

#include "spectreg/core.hpp"
#include "spectreg/deform.hpp"

#include <optional>
#include <string>

namespace spectreg {

enum class Similarity { mse, ncc };

std::string to_string(Similarity s);
Similarity parse_similarity(const std::string &name);

struct LossConfig {
    Similarity similarity = Similarity::mse;
    double lambda = 0.01;
    // Odd window extent applied along every axis.
    int ncc_window = 9;
    double epsilon = 1e-5;

    // lambda 0.01 for MSE and 5 for NCC.
    static LossConfig defaults_for(Similarity s);
    void validate() const;
};

// A scalar value and its gradient with respect to the first argument (or the field).
struct ValueGrad {
    double value = 0.0;
    std::vector<double> grad;
};

ValueGrad mse(const ScalarImage &a, const ScalarImage &b);

// Mean over voxels of the squared local correlation coefficient, windows clipped at the borders.
// Gradient is of the similarity (not of the loss, which is its negative).
ValueGrad ncc_local(const ScalarImage &a, const ScalarImage &b, int window, double epsilon);
inline ValueGrad ncc_local(const ScalarImage &a, const ScalarImage &b, const LossConfig &config) {
    return ncc_local(a, b, config.ncc_window, config.epsilon);
}

// Mean over voxels, channels and axes of squared forward differences (zero at the far border).
ValueGrad smoothness(const DenseField &field);

// Sums over a clipped box of half-width `radius` along every axis.
std::vector<double> box_sum(std::span<const double> values, const GridSpec &grid, int radius);

struct LossEvaluation {
    double loss = 0.0;
    // Raw similarity metric: MSE, or the mean squared local correlation for NCC.
    double similarity = 0.0;
    double smoothness = 0.0;
    LowResField grad;
};

// decode -> [Exp when diffeo] -> warp(moving) -> similarity against fixed, plus lambda times the
// smoothness of the decoded field. The gradient is with respect to the low-resolution field.
LossEvaluation total_loss(const LowResField &s, const ScalarImage &moving, const ScalarImage &fixed,
                          const LossConfig &config, bool diffeo, int steps = default_squaring_steps);

} // namespace spectreg
