#pragma once

// Independent oracles used by both the unit and acceptance suites. The
// gradient check never touches backprop: it perturbs one parameter at a
// time and differentiates the loss numerically.

#include <cmath>
#include <cstddef>
#include <vector>

#include "flowpat/mlp.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/train.hpp"

namespace oracles {

struct GradCheckResult {
    bool ok = true;
    double worst_rel = 0.0;
    std::size_t checked = 0;
};

/// Central finite differences of the MSE loss with step h, compared against
/// backprop entry by entry: relative tolerance rtol, or absolute tolerance
/// atol when the reference magnitude is below denom_floor.
inline GradCheckResult check_gradients(const flowpat::Model& model,
                                       const std::vector<double>& x,
                                       const std::vector<double>& target,
                                       double h, double rtol, double atol,
                                       double denom_floor) {
    using namespace flowpat;
    GradCheckResult result;

    ForwardTrace trace;
    const std::vector<double>& output = forward(model, x, trace);
    std::vector<double> out_grad(output.size());
    mse_loss(output, target, out_grad);
    Gradients analytic;
    backprop(model, trace, out_grad, analytic);

    Model probe = model;
    std::vector<double> grad_scratch(output.size());
    const auto loss_at = [&]() {
        return mse_loss(forward_output(probe, x), target, grad_scratch);
    };
    const auto check_one = [&](double& param, double analytic_value) {
        const double saved = param;
        param = saved + h;
        const double up = loss_at();
        param = saved - h;
        const double down = loss_at();
        param = saved;
        const double fd = (up - down) / (2.0 * h);
        result.checked += 1;
        const double diff = std::fabs(analytic_value - fd);
        if (std::fabs(fd) < denom_floor) {
            if (diff > atol) result.ok = false;
        } else {
            const double rel = diff / std::fabs(fd);
            if (rel > result.worst_rel) result.worst_rel = rel;
            if (rel > rtol) result.ok = false;
        }
    };

    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
        for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i) {
            check_one(probe.weights[l].data[i], analytic.weights[l].data[i]);
        }
        for (std::size_t i = 0; i < probe.biases[l].size(); ++i) {
            check_one(probe.biases[l][i], analytic.biases[l][i]);
        }
    }
    return result;
}

/// Draws an input whose pre-activations all stay away from the ReLU kink,
/// so finite differences see a locally smooth loss.
inline std::vector<double> smooth_input(const flowpat::Model& model,
                                        flowpat::rng::Engine& engine,
                                        double kink_margin) {
    using namespace flowpat;
    ForwardTrace trace;
    while (true) {
        std::vector<double> x(model.topology.input_size());
        for (double& v : x) v = rng::uniform(engine, -2.0, 2.0);
        forward(model, x, trace);
        bool clear = true;
        for (const auto& pre : trace.pre) {
            for (const double v : pre) {
                if (std::fabs(v) < kink_margin) clear = false;
            }
        }
        if (clear) return x;
    }
}

} // namespace oracles
