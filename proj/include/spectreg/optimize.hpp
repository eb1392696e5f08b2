// optimize.hpp - per-pair registration by Adam over the low-resolution band-limited field.

#pragma once

#include "spectreg/core.hpp"
#include "spectreg/objective.hpp"

#include <functional>

namespace spectreg {

// Loss became non-finite during optimization.
class divergence_error : public std::runtime_error {
  public:
    divergence_error(int iteration, double loss);
    int iteration() const { return iteration_; }

  private:
    int iteration_;
};

struct AdamParams {
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> u;
    std::int64_t t = 0;
};

// One bias-corrected Adam update of `params` in place. Zero-sized state is initialized on the
// first call.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState &state, const AdamParams &config);

struct OptimConfig {
    int iterations = 300;
    AdamParams adam;
    LossConfig loss;
    bool diffeo = false;
    int squaring_steps = default_squaring_steps;
    Extents band_dims;
    // Recorded for provenance; the optimization starts from zero and draws no random numbers.
    std::uint64_t seed = 0;
    // Stop when |L[t-10] - L[t]| / |L[t-10]| falls below this value.
    double convergence_tol = 1e-5;
    // 0 disables progress callbacks.
    int log_every = 0;

    void validate() const;
};

struct RegistrationReport {
    std::vector<double> loss_trace;
    double final_loss = 0.0;
    double final_similarity = 0.0;
    double final_smoothness = 0.0;
    int iterations_run = 0;
    bool converged = false;
    double folding_percent = 0.0;
    // Spectral energy of phi outside the band window; zero up to rounding in plain mode.
    double out_of_band_energy = 0.0;
    double wall_time = 0.0;
};

struct RegistrationResult {
    LowResField s_star;
    DenseField phi;
    RegistrationReport report;
};

using ProgressFn = std::function<void(int iteration, double loss)>;

// Minimizes total_loss over the low-resolution field starting from zero. Returns the iterate
// with the lowest recorded loss.
RegistrationResult register_pair(const ScalarImage &moving, const ScalarImage &fixed, const OptimConfig &config,
                                 const ProgressFn &progress = {});

} // namespace spectreg
