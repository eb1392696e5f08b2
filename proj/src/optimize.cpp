#include "spectreg/optimize.hpp"

#include "spectreg/deform.hpp"
#include "spectreg/spectral.hpp"

#include <chrono>
#include <limits>
#include <cmath>

namespace spectreg {

divergence_error::divergence_error(int iteration, double loss)
    : std::runtime_error("optimization diverged at iteration " + std::to_string(iteration) + " (loss " +
                         std::to_string(loss) + ")"),
      iteration_(iteration) {}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState &state, const AdamParams &config) {
    if (params.size() != grad.size()) throw std::invalid_argument("adam_step: parameter and gradient sizes differ");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.u.assign(params.size(), 0.0);
        state.t = 0;
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
    ++state.t;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.u[i] = config.beta2 * state.u[i] + (1.0 - config.beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double uhat = state.u[i] / c2;
        params[i] -= config.learning_rate * mhat / (std::sqrt(uhat) + config.eps);
    }
}

void OptimConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be positive");
    if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    }
    if (!(adam.eps > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
    if (!(convergence_tol >= 0.0)) throw std::invalid_argument("convergence tolerance must be non-negative");
    if (squaring_steps < 0) throw std::invalid_argument("squaring steps must be non-negative");
    loss.validate();
}

RegistrationResult register_pair(const ScalarImage &moving, const ScalarImage &fixed, const OptimConfig &config,
                                 const ProgressFn &progress) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    if (!(moving.grid() == fixed.grid())) {
        throw std::invalid_argument("moving grid " + format_extents(moving.grid().dims()) + " differs from fixed grid " +
                                    format_extents(fixed.grid().dims()));
    }
    const auto window = make_window(moving.grid(), config.band_dims);

    std::vector<double> params(static_cast<std::size_t>(window.band_count() * window.ndim()), 0.0);
    std::vector<double> best = params;
    double best_loss = std::numeric_limits<double>::infinity();
    AdamState state;
    RegistrationReport report;
    constexpr int window_len = 10;

    for (int it = 0; it < config.iterations; ++it) {
        LossEvaluation eval;
        try {
            eval = total_loss(LowResField(window, params), moving, fixed, config.loss, config.diffeo,
                              config.squaring_steps);
        } catch (const std::invalid_argument &) {
            // Shapes were checked above; only non-finite intermediates end up here.
            throw divergence_error(it, std::numeric_limits<double>::quiet_NaN());
        }
        if (!std::isfinite(eval.loss)) throw divergence_error(it, eval.loss);
        report.loss_trace.push_back(eval.loss);
        if (eval.loss < best_loss) {
            best_loss = eval.loss;
            best = params;
        }
        if (progress && config.log_every > 0 && it % config.log_every == 0) progress(it, eval.loss);
        report.iterations_run = it + 1;

        const auto &trace = report.loss_trace;
        if (trace.size() > window_len) {
            const double prev = trace[trace.size() - 1 - window_len];
            const double change = std::abs(prev - eval.loss) / std::max(std::abs(prev), 1e-300);
            if (change < config.convergence_tol) {
                report.converged = true;
                break;
            }
        }
        adam_step(params, eval.grad.data(), state, config.adam);
        for (double p : params) {
            if (!std::isfinite(p)) throw divergence_error(it, eval.loss);
        }
    }

    RegistrationResult result;
    result.s_star = LowResField(window, std::move(best));
    const auto final_eval = total_loss(result.s_star, moving, fixed, config.loss, config.diffeo, config.squaring_steps);
    const auto decoded = decode(result.s_star);
    result.phi = config.diffeo ? exp_velocity(decoded, config.squaring_steps) : decoded;

    report.final_loss = final_eval.loss;
    report.final_similarity = final_eval.similarity;
    report.final_smoothness = final_eval.smoothness;
    report.folding_percent = jacobian(result.phi).folding_percent;
    report.out_of_band_energy = out_of_band_energy_fraction(result.phi, window);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report = std::move(report);
    return result;
}

} // namespace spectreg
